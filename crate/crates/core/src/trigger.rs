//! Composite event trigger: the input-error / dwell-time turn-off rule, the
//! evaluation-envelope turn-on rule, and the zero-order hold on the actuator.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriggerError {
    #[error("invalid trigger parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("trigger evaluated at t = {t} which does not follow t = {last}")]
    NonMonotoneTime { t: f64, last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerParams {
    pub s: f64,
    pub beta: f64,
    pub m: f64,
    /// Longest continuous actuation interval (s).
    pub t_max: f64,
    pub delta_m: f64,
}

impl TriggerParams {
    pub fn validate(&self) -> Result<(), TriggerError> {
        let fields =
            [("s", self.s), ("beta", self.beta), ("m", self.m), ("t_max", self.t_max), ("delta_m", self.delta_m)];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(TriggerError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// Turn-off threshold `s e^{−βt} + m` on `‖e_u‖²`.
    pub fn threshold(&self, t: f64) -> f64 {
        self.s * (-self.beta * t).exp() + self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    On,
    Off,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::On => "ON",
            Mode::Off => "OFF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Reason {
    /// Actuator switched on at the start of the run.
    Init,
    /// Input error crossed the turn-off threshold.
    Act,
    /// Dwell time reached `T_max`.
    Pas,
    /// Evaluation-envelope margin fell to `δ_m`.
    Envelope,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::Init => "INIT",
            Reason::Act => "ACT",
            Reason::Pas => "PAS",
            Reason::Envelope => "ENVELOPE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent {
    pub t: f64,
    /// Mode entered at `t`.
    pub mode: Mode,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState {
    pub mode: Mode,
    pub t_on_last: f64,
    pub t_off_last: Option<f64>,
    pub u_held: Vec3,
    pub events: Vec<TriggerEvent>,
    last_t: f64,
}

/// Actuator switched on at `t0` holding `u_cmd0`.
pub fn initial_state(t0: f64, u_cmd0: Vec3) -> TriggerState {
    TriggerState {
        mode: Mode::On,
        t_on_last: t0,
        t_off_last: None,
        u_held: u_cmd0,
        events: vec![TriggerEvent { t: t0, mode: Mode::On, reason: Reason::Init }],
        last_t: t0,
    }
}

impl TriggerState {
    /// Torque currently applied by the actuator.
    pub fn u_act(&self) -> Vec3 {
        match self.mode {
            Mode::On => self.u_held,
            Mode::Off => Vec3::ZERO,
        }
    }

    /// Advances the supervisor to `t`, performing at most one transition, and
    /// returns the torque to apply over the next step.
    pub fn evaluate(
        &mut self,
        t: f64,
        u_cmd_sat: Vec3,
        v2: f64,
        s2: f64,
        params: &TriggerParams,
    ) -> Result<Vec3, TriggerError> {
        if !(t > self.last_t) {
            return Err(TriggerError::NonMonotoneTime { t, last: self.last_t });
        }
        self.last_t = t;
        match self.mode {
            Mode::On => {
                let e_u2 = (u_cmd_sat - self.u_held).norm_squared();
                let dwell_done = t - self.t_on_last >= params.t_max - 1e-9 * params.t_max.max(1.0);
                let reason = if e_u2 >= params.threshold(t) {
                    Some(Reason::Act)
                } else if dwell_done {
                    Some(Reason::Pas)
                } else {
                    None
                };
                if let Some(reason) = reason {
                    self.mode = Mode::Off;
                    self.t_off_last = Some(t);
                    self.u_held = Vec3::ZERO;
                    self.events.push(TriggerEvent { t, mode: Mode::Off, reason });
                }
            }
            Mode::Off => {
                if s2 - v2 <= params.delta_m {
                    self.mode = Mode::On;
                    self.t_on_last = t;
                    self.u_held = u_cmd_sat;
                    self.events.push(TriggerEvent { t, mode: Mode::On, reason: Reason::Envelope });
                }
            }
        }
        Ok(self.u_act())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TriggerParams {
        TriggerParams { s: 1e-4, beta: 0.05, m: 1e-6, t_max: 1.0, delta_m: 1e-5 }
    }

    #[test]
    fn initial_state_contract() {
        let u = Vec3::new(0.01, -0.02, 0.03);
        let st = initial_state(0.0, u);
        assert_eq!(st.mode, Mode::On);
        assert_eq!(st.u_held, u);
        assert_eq!(st.u_act() - u, Vec3::ZERO);
        assert_eq!(st.events.len(), 1);
        assert_eq!(st.events[0].mode, Mode::On);
    }

    #[test]
    fn act_turn_off() {
        let p = params();
        let mut st = initial_state(0.0, Vec3::ZERO);
        let small = Vec3::new(1e-4, 0.0, 0.0);
        assert_eq!(st.evaluate(0.001, small, 0.0, 1.0, &p).unwrap(), Vec3::ZERO);
        assert_eq!(st.mode, Mode::On);
        let big = Vec3::new(0.02, 0.0, 0.0);
        assert_eq!(st.evaluate(0.002, big, 0.0, 1.0, &p).unwrap(), Vec3::ZERO);
        assert_eq!(st.mode, Mode::Off);
        assert_eq!(st.events.last().unwrap().reason, Reason::Act);
    }

    #[test]
    fn pas_turn_off_after_dwell() {
        let p = params();
        let u = Vec3::new(0.01, 0.0, 0.0);
        let mut st = initial_state(0.0, u);
        let dt = 1e-3;
        let mut k = 1;
        while st.mode == Mode::On {
            st.evaluate(k as f64 * dt, u, 0.0, 1.0, &p).unwrap();
            k += 1;
        }
        let ev = st.events.last().unwrap();
        assert_eq!(ev.reason, Reason::Pas);
        assert!((ev.t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn act_wins_tie() {
        let p = params();
        let mut st = initial_state(0.0, Vec3::ZERO);
        st.evaluate(1.0, Vec3::splat(1.0), 0.0, 1.0, &p).unwrap();
        assert_eq!(st.events.last().unwrap().reason, Reason::Act);
    }

    #[test]
    fn envelope_turn_on_resets_error() {
        let p = params();
        let mut st = initial_state(0.0, Vec3::ZERO);
        st.evaluate(0.1, Vec3::splat(1.0), 0.0, 1.0, &p).unwrap();
        assert_eq!(st.mode, Mode::Off);
        let u = Vec3::new(0.01, 0.02, -0.03);
        assert_eq!(st.evaluate(0.2, u, 0.5, 1.0, &p).unwrap(), Vec3::ZERO);
        let applied = st.evaluate(0.3, u, 1.0 - 5e-6, 1.0, &p).unwrap();
        assert_eq!(st.mode, Mode::On);
        assert_eq!(applied, u);
        assert_eq!(u - st.u_held, Vec3::ZERO);
        assert_eq!(st.events.last().unwrap().reason, Reason::Envelope);
    }

    #[test]
    fn rejects_non_monotone_time() {
        let mut st = initial_state(1.0, Vec3::ZERO);
        assert!(st.evaluate(1.0, Vec3::ZERO, 0.0, 1.0, &params()).is_err());
        assert!(st.evaluate(0.5, Vec3::ZERO, 0.0, 1.0, &params()).is_err());
    }
}
