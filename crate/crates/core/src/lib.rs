//! Simulation and verification of event-triggered, intermittently actuated,
//! prescribed-performance spacecraft attitude control.
//!
//! The crate models the rigid-body attitude-error plant, the backstepping
//! controller with its performance funnel and barrier Lyapunov function, the
//! composite on/off trigger, and the analytic bounds (Lyapunov envelopes and
//! minimum inter-event times) that a closed-loop trace is checked against.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod controller;
pub mod dynamics;
pub mod math;
pub mod ppc;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod trace_io;
pub mod trigger;
