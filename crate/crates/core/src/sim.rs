//! Fixed-step closed-loop simulation with RK4 plant integration under a
//! zero-order-held actuator.

use serde::Serialize;
use thiserror::Error;

use crate::controller::{control_command, saturate, virtual_control, AlphaHistory, ControllerError};
use crate::dynamics::{disturbance_at, state_derivative, SpacecraftState};
use crate::math::{jacobian_fs, UnitQuaternion, Vec3};
use crate::ppc::{blf_value_and_gradient, eval_value};
use crate::scenario::Scenario;
use crate::trigger::{initial_state, Mode, Reason, TriggerError, TriggerEvent, TriggerState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("controller failure at t = {t}: {source}")]
    Controller { t: f64, source: ControllerError },
    #[error("trigger failure at t = {t}: {source}")]
    Trigger { t: f64, source: TriggerError },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

impl SimError {
    pub fn is_singularity(&self) -> bool {
        matches!(self, SimError::Controller { source: ControllerError::Math(_), .. })
    }
}

/// One logged sample. Actuator values are those applied over `[t, t + dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub q_e: UnitQuaternion,
    pub omega: Vec3,
    pub omega_norm: f64,
    /// Saturated command.
    pub u_cmd: Vec3,
    pub u_act: Vec3,
    /// `u_cmd − u_act`.
    pub e_u: Vec3,
    pub mode: Mode,
    pub rho: Vec3,
    pub eps: Vec3,
    pub alpha: Vec3,
    pub v1: f64,
    pub v2: f64,
    pub s2: f64,
    pub saturated: [bool; 3],
}

impl TraceRecord {
    pub fn v(&self) -> f64 {
        self.v1 + self.v2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub completed: bool,
    /// First time after which every `|q_ei|` stays within tolerance.
    pub settling_time: Option<f64>,
    pub terminal_error_deg: f64,
    pub terminal_q_ev_max: f64,
    pub max_omega_norm: f64,
    pub max_alpha_norm: f64,
    /// `max ‖α‖ / (k_m M_ω max_i ρ_i(t))` over all samples.
    pub max_alpha_bound_ratio: f64,
    pub max_abs_eps: f64,
    /// Samples with some `|ε_i| > k_u`.
    pub eps_bound_violations: usize,
    pub min_abs_q0: f64,
    pub max_quaternion_norm_error: f64,
    pub turn_on_events: usize,
    pub turn_off_act: usize,
    pub turn_off_pas: usize,
    pub saturated_samples: usize,
    /// End of the maneuver window (settling time, or the run end).
    pub maneuver_window: f64,
    /// Actuator updates per second per axis within the maneuver window.
    pub actuation_rate_hz: f64,
    /// Fraction of the maneuver window with the actuator on.
    pub on_fraction: f64,
    pub on_fraction_total: f64,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub events: Vec<TriggerEvent>,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct SimFailure {
    pub error: SimError,
    /// Everything recorded up to and including the failing step.
    pub trace: Trace,
}

/// Mutable loop state of one run.
struct Runner<'a> {
    sc: &'a Scenario,
    state: SpacecraftState,
    trigger: Option<TriggerState>,
    hist: AlphaHistory,
}

impl Runner<'_> {
    fn sample(&mut self, t: f64, first: bool) -> Result<TraceRecord, SimError> {
        let sc = self.sc;
        let cfg = &sc.config;
        let q = self.state.q_e;
        let w = self.state.omega;
        let fun = sc.funnel.sample(t);
        let psi = fun.psi();
        let eps = fun.transform(q.v);
        let (v1, _) = blf_value_and_gradient(eps, &cfg.blf);
        let (s2, _) = eval_value(t, &sc.eval);

        let (alpha, u_cmd, saturated) = if cfg.simulation.controller_enabled {
            let alpha =
                virtual_control(q, eps, &psi, &cfg.controller).map_err(|source| SimError::Controller { t, source })?;
            self.hist.push(t, alpha).map_err(|source| SimError::Controller { t, source })?;
            let fs = jacobian_fs(q);
            let terms = control_command(
                w,
                alpha,
                self.hist.derivative(),
                eps,
                &psi,
                &fs,
                &sc.inertia,
                &cfg.controller,
                &cfg.blf,
            );
            let (u, flags) = saturate(terms.u, cfg.controller.u_max);
            (alpha, u, flags)
        } else {
            (Vec3::ZERO, Vec3::ZERO, [false; 3])
        };
        let z2 = w - alpha;
        let v2 = 0.5 * z2.dot(sc.inertia.matrix().mul_vec(z2));

        let (u_act, mode) = if cfg.simulation.controller_enabled {
            if first {
                let st = initial_state(t, u_cmd);
                let u = st.u_act();
                self.trigger = Some(st);
                (u, Mode::On)
            } else {
                let st = self.trigger.as_mut().expect("trigger initialized on first sample");
                let u =
                    st.evaluate(t, u_cmd, v2, s2, &cfg.trigger).map_err(|source| SimError::Trigger { t, source })?;
                (u, st.mode)
            }
        } else {
            (Vec3::ZERO, Mode::Off)
        };

        Ok(TraceRecord {
            t,
            q_e: q,
            omega: w,
            omega_norm: w.norm(),
            u_cmd,
            u_act,
            e_u: u_cmd - u_act,
            mode,
            rho: fun.rho,
            eps,
            alpha,
            v1,
            v2,
            s2,
            saturated,
        })
    }

    /// Classical RK4 over `[t, t + dt]` with `u_act` held and `d` evaluated at substeps.
    fn advance(&mut self, t: f64, dt: f64, u_act: Vec3) {
        let sc = self.sc;
        let dist = &sc.config.disturbance;
        let x0 = self.state;
        let rate = |x: &SpacecraftState, tau: f64| state_derivative(x, u_act, disturbance_at(tau, dist), &sc.inertia);
        let shift = |k: &crate::dynamics::StateRate, h: f64| SpacecraftState {
            q_e: UnitQuaternion::from_raw(x0.q_e.v + k.q_v_dot * h, x0.q_e.s + k.q0_dot * h),
            omega: x0.omega + k.omega_dot * h,
        };
        let k1 = rate(&x0, t);
        let k2 = rate(&shift(&k1, 0.5 * dt), t + 0.5 * dt);
        let k3 = rate(&shift(&k2, 0.5 * dt), t + 0.5 * dt);
        let k4 = rate(&shift(&k3, dt), t + dt);
        let c = dt / 6.0;
        let qv = x0.q_e.v + (k1.q_v_dot + k2.q_v_dot * 2.0 + k3.q_v_dot * 2.0 + k4.q_v_dot) * c;
        let q0 = x0.q_e.s + (k1.q0_dot + 2.0 * k2.q0_dot + 2.0 * k3.q0_dot + k4.q0_dot) * c;
        let w = x0.omega + (k1.omega_dot + k2.omega_dot * 2.0 + k3.omega_dot * 2.0 + k4.omega_dot) * c;
        self.state = SpacecraftState { q_e: UnitQuaternion::from_raw(qv, q0).renormalized(), omega: w };
    }
}

/// Number of integration steps for the configured horizon.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    (t_end / dt).round() as usize
}

/// Runs the scenario to `t_end`, producing `steps + 1` records.
#[allow(clippy::result_large_err)]
pub fn run(sc: &Scenario) -> Result<Trace, SimFailure> {
    let dt = sc.config.simulation.dt;
    let n = step_count(dt, sc.config.simulation.t_end);
    let mut runner = Runner {
        sc,
        state: SpacecraftState { q_e: sc.q_e0, omega: sc.omega0 },
        trigger: None,
        hist: AlphaHistory::default(),
    };
    let mut records = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        let rec = match runner.sample(t, k == 0) {
            Ok(r) => r,
            Err(error) => return Err(failure(sc, &runner, records, error)),
        };
        records.push(rec);
        if k < n {
            runner.advance(t, dt, rec.u_act);
            let s = runner.state;
            if !(s.q_e.v.is_finite() && s.q_e.s.is_finite() && s.omega.is_finite()) {
                let error = SimError::NonFinite { t: t + dt };
                return Err(failure(sc, &runner, records, error));
            }
        }
    }
    let events = runner.trigger.map(|t| t.events).unwrap_or_default();
    let summary = summarize(sc, &records, &events, true);
    Ok(Trace { records, events, summary })
}

fn failure(sc: &Scenario, runner: &Runner<'_>, records: Vec<TraceRecord>, error: SimError) -> SimFailure {
    let events = runner.trigger.as_ref().map(|t| t.events.clone()).unwrap_or_default();
    let summary = summarize(sc, &records, &events, false);
    SimFailure { error, trace: Trace { records, events, summary } }
}

/// Builds the run summary from records and events alone.
pub fn summarize(sc: &Scenario, records: &[TraceRecord], events: &[TriggerEvent], completed: bool) -> Summary {
    let cfg = &sc.config;
    let ctl = &cfg.controller;
    let tol = cfg.analysis.settle_tolerance;
    let dt = cfg.simulation.dt;

    let mut settling_time = None;
    for r in records {
        if r.q_e.v.max_abs() <= tol {
            settling_time.get_or_insert(r.t);
        } else {
            settling_time = None;
        }
    }
    let last = records.last();
    let t_last = last.map_or(0.0, |r| r.t);
    let fold = |f: &dyn Fn(&TraceRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let max_alpha_bound_ratio = fold(&|r| r.alpha.norm() / (ctl.k_m * ctl.m_omega * r.rho.max()));
    let window = settling_time.filter(|&t| t > 0.0).unwrap_or(t_last + dt);

    let on_in = |end: f64| -> f64 {
        let on_samples = records.iter().filter(|r| r.t < end && r.mode == Mode::On).count();
        on_samples as f64 * dt / end
    };
    let updates = events.iter().filter(|e| e.mode == Mode::On && e.t < window).count();

    Summary {
        config_hash: sc.hash.clone(),
        dt,
        t_end: cfg.simulation.t_end,
        steps: records.len().saturating_sub(1),
        completed,
        settling_time,
        terminal_error_deg: last.map_or(0.0, |r| r.q_e.angle().to_degrees()),
        terminal_q_ev_max: last.map_or(0.0, |r| r.q_e.v.max_abs()),
        max_omega_norm: fold(&|r| r.omega_norm),
        max_alpha_norm: fold(&|r| r.alpha.norm()),
        max_alpha_bound_ratio,
        max_abs_eps: fold(&|r| r.eps.max_abs()),
        eps_bound_violations: records.iter().filter(|r| r.eps.max_abs() > ctl.k_u).count(),
        min_abs_q0: records.iter().map(|r| r.q_e.s.abs()).fold(f64::INFINITY, f64::min),
        max_quaternion_norm_error: fold(&|r| (r.q_e.norm() - 1.0).abs()),
        turn_on_events: events.iter().filter(|e| e.reason == Reason::Envelope).count(),
        turn_off_act: events.iter().filter(|e| e.reason == Reason::Act).count(),
        turn_off_pas: events.iter().filter(|e| e.reason == Reason::Pas).count(),
        saturated_samples: records.iter().filter(|r| r.saturated.iter().any(|&s| s)).count(),
        maneuver_window: window,
        actuation_rate_hz: updates as f64 / window,
        on_fraction: on_in(window),
        on_fraction_total: on_in(t_last + dt),
    }
}
