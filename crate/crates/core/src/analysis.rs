//! Derived stability constants, a-priori feasibility, Lyapunov-envelope checks
//! and minimum inter-event-time bounds, all evaluated against recorded traces.

use serde::Serialize;
use thiserror::Error;

use crate::controller::{virtual_control, AlphaHistory};
use crate::math::Vec3;
use crate::ppc::{blf_value_and_gradient, eval_value};
use crate::scenario::Scenario;
use crate::sim::TraceRecord;
use crate::trigger::{Mode, TriggerEvent};

/// Dense-sampling resolution for funnel extrema.
pub const FUNNEL_SAMPLES: usize = 10_000;
/// Agreement required between logged and recomputed Lyapunov values.
pub const RECOMPUTE_TOLERANCE: f64 = 1e-10;
/// `z₂ᵀd̃ ≤ Σ 0.2785 p D_m` per axis, summed over three axes.
pub const TANH_LEMMA_FACTOR: f64 = 0.8355;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("infeasible: {inequality} violated ({detail})")]
    Infeasible { inequality: &'static str, detail: String },
    #[error("logged {column} disagrees with recomputation at t = {t}: logged {logged:e}, recomputed {recomputed:e}")]
    Inconsistent { column: &'static str, t: f64, logged: f64, recomputed: f64 },
    #[error("trace is empty")]
    EmptyTrace,
}

impl AnalysisError {
    pub fn inequality(&self) -> Option<&'static str> {
        match self {
            AnalysisError::Infeasible { inequality, .. } => Some(inequality),
            _ => None,
        }
    }
}

fn infeasible(inequality: &'static str, detail: String) -> AnalysisError {
    AnalysisError::Infeasible { inequality, detail }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub q0_floor: f64,
    pub b: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub abs_rate_ratio_max: f64,
    pub rate_ratio_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub j_inv_norm: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c_eps: f64,
    pub d0: f64,
    pub v_inf: f64,
    pub b_omega: f64,
    pub b_alpha: f64,
    pub b_2alpha: f64,
    pub b_q: f64,
    pub u_z: f64,
    pub a0: f64,
    pub g_s: f64,
    pub g_m: f64,
    pub b_c: f64,
    pub r1: f64,
    pub r2: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub s: f64,
    pub beta: f64,
    pub m: f64,
    pub delta_m: f64,
    pub s2_0: f64,
    pub s2_inf: f64,
    pub eval_rate: f64,
    /// `V₁(0)`, `V₂(0)` of the scenario's initial state.
    pub v1_0: f64,
    pub v2_0: f64,
    /// `V₀` at `t_on = 0`.
    pub v0: f64,
    /// Turn-off MIET bound using `G₁ = S₂(0) − V∞` and the vanishing-exponential limit.
    pub miet_off_apriori: f64,
    /// `N_k` built from [`Self::miet_off_apriori`].
    pub n_k_apriori: f64,
}

fn funnel_extremes(sc: &Scenario) -> crate::ppc::FunnelExtremes {
    sc.funnel.extremes(sc.config.simulation.t_end, FUNNEL_SAMPLES)
}

/// Initial `(V₁, V₂)` from the scenario's starting state.
pub fn initial_lyapunov(sc: &Scenario) -> (f64, f64) {
    let cfg = &sc.config;
    let fun = sc.funnel.sample(0.0);
    let eps = fun.transform(sc.q_e0.v);
    let (v1, _) = blf_value_and_gradient(eps, &cfg.blf);
    let alpha = if cfg.simulation.controller_enabled {
        virtual_control(sc.q_e0, eps, &fun.psi(), &cfg.controller).unwrap_or(Vec3::ZERO)
    } else {
        Vec3::ZERO
    };
    let z2 = sc.omega0 - alpha;
    (v1, 0.5 * z2.dot(sc.inertia.matrix().mul_vec(z2)))
}

/// Evaluates every constant with `|q_e0|` replaced by `q0_floor`, without
/// checking any inequality.
pub fn evaluate_constants(sc: &Scenario, q0_floor: f64) -> DerivedConstants {
    let cfg = &sc.config;
    let ctl = &cfg.controller;
    let trg = &cfg.trigger;
    let a = &cfg.analysis;
    let ex = funnel_extremes(sc);
    let lmin = sc.inertia.lambda_min();
    let lmax = sc.inertia.lambda_max();
    let jinv = sc.inertia.inverse_norm();
    let b = sc.b;
    let sqrt3 = 3f64.sqrt();

    let b1 = q0_floor * ctl.m_omega - 4.0 * ex.abs_rate_ratio_max;
    let b2 = 2.0 * (ctl.k2 - 0.5 * b) / lmax;
    let c1 = b1.min(b2);
    let c_eps = q0_floor * ctl.m_omega - 4.0 * ex.rate_ratio_max;
    let d0 = TANH_LEMMA_FACTOR * ctl.p * ctl.d_m;
    let v_inf = (d0 + trg.m / (2.0 * b)) / c1;
    let b_omega = ctl.k_m * ctl.m_omega * ex.rho_max;
    let b_q = sqrt3 * cfg.blf.k1 * ctl.k_u / ex.rho_min;
    let u_z = lmax * b_omega * b_omega + ctl.d_m + lmax * a.b_alpha;
    let a0 = u_z * (2.0 / lmin).sqrt();
    let eval = sc.eval;
    let g_s = b_q * (2.0 / lmin).sqrt() * (eval.s0 - eval.s_inf).sqrt();
    let g_m = b_q * (2.0 / lmin).sqrt() * eval.s_inf.sqrt();
    let b_c = (1.0 + sqrt3) * ctl.d_m + lmax * a.b_alpha + sqrt3 * cfg.blf.k1 * ctl.k_u / ex.rho_min;
    let kd = ctl.k2 + ctl.d_m / ctl.p;
    let r1 = lmax * b_omega * jinv + b_omega + kd * jinv;
    let r2 = kd * a.b_alpha + lmax * a.b_2alpha + b_c * lmax * b_omega * jinv + b_c * b_omega + b_c * kd * jinv + b_q;
    let q1 = r1 * ctl.k2 + 2.0 * r1 + 1.0;
    let q2 = 2.0 * r1 * ctl.k2 / lmax;
    let q3 = r2 * r2;
    let (v1_0, v2_0) = initial_lyapunov(sc);
    let v0 = v1_0 + v2_0 - trg.s / (2.0 * b * (c1 - trg.beta)) - v_inf;

    let mut k = DerivedConstants {
        q0_floor,
        b,
        rho_min: ex.rho_min,
        rho_max: ex.rho_max,
        abs_rate_ratio_max: ex.abs_rate_ratio_max,
        rate_ratio_max: ex.rate_ratio_max,
        lambda_min: lmin,
        lambda_max: lmax,
        j_inv_norm: jinv,
        b1,
        b2,
        c1,
        c_eps,
        d0,
        v_inf,
        b_omega,
        b_alpha: a.b_alpha,
        b_2alpha: a.b_2alpha,
        b_q,
        u_z,
        a0,
        g_s,
        g_m,
        b_c,
        r1,
        r2,
        q1,
        q2,
        q3,
        s: trg.s,
        beta: trg.beta,
        m: trg.m,
        delta_m: trg.delta_m,
        s2_0: eval.s0,
        s2_inf: eval.s_inf,
        eval_rate: eval.rate,
        v1_0,
        v2_0,
        v0,
        miet_off_apriori: 0.0,
        n_k_apriori: 0.0,
    };
    let g1 = eval.s0 - v_inf;
    let (m1, m2) = k.m_terms(g1);
    k.miet_off_apriori = trg.m / (trg.s * trg.beta + m1 + m2);
    k.n_k_apriori = k.n_k(k.miet_off_apriori);
    k
}

impl DerivedConstants {
    /// `(M₁, M₂)` for a given `G₁`, with `G₂ = V∞`.
    pub fn m_terms(&self, g1: f64) -> (f64, f64) {
        let m1 = self.q1 * self.s + self.q2 * g1;
        let m2 = self.q1 * self.m + self.q2 * self.v_inf + self.q3;
        (m1, m2)
    }

    /// `N_k = (S₂∞ − V∞)(1 − e^{−βΔτ})`.
    pub fn n_k(&self, delta_tau: f64) -> f64 {
        (self.s2_inf - self.v_inf) * -(-self.beta * delta_tau).exp_m1()
    }

    /// Each inequality the proofs rely on, in evaluation order, as `(name, holds, detail)`.
    pub fn inequalities(&self) -> Vec<(&'static str, bool, String)> {
        vec![
            ("b > 0", self.b > 0.0, format!("b = {:e}", self.b)),
            ("B1 > 0", self.b1 > 0.0, format!("B1 = {:e}", self.b1)),
            ("B2 > 0", self.b2 > 0.0, format!("B2 = {:e}", self.b2)),
            ("C1 > beta", self.c1 > self.beta, format!("C1 = {:e}, beta = {:e}", self.c1, self.beta)),
            (
                "C_eps > beta/2",
                self.c_eps > 0.5 * self.beta,
                format!("C_eps = {:e}, beta/2 = {:e}", self.c_eps, 0.5 * self.beta),
            ),
            ("S2(0) > V2(0)", self.s2_0 > self.v2_0, format!("S2(0) = {:e}, V2(0) = {:e}", self.s2_0, self.v2_0)),
            (
                "S2_inf > V_inf",
                self.s2_inf > self.v_inf,
                format!("S2_inf = {:e}, V_inf = {:e}", self.s2_inf, self.v_inf),
            ),
            ("V0 > 0", self.v0 > 0.0, format!("V0 = {:e}", self.v0)),
            (
                "delta_m < N_k",
                self.delta_m < self.n_k_apriori,
                format!("delta_m = {:e}, N_k = {:e}", self.delta_m, self.n_k_apriori),
            ),
        ]
    }

    /// The printed selection-rule direction (`C₁ < β`, `C_ε < β/2`), reported separately.
    pub fn printed_selection_rule(&self) -> (bool, bool) {
        (self.c1 < self.beta, self.c_eps < 0.5 * self.beta)
    }

    /// First failing inequality, if any.
    pub fn check(&self) -> Result<(), AnalysisError> {
        match self.inequalities().into_iter().find(|(_, ok, _)| !ok) {
            Some((name, _, detail)) => Err(infeasible(name, detail)),
            None => Ok(()),
        }
    }
}

/// A-priori constants at the configured `|q_e0|` floor, with every inequality enforced.
pub fn derive_constants(sc: &Scenario) -> Result<DerivedConstants, AnalysisError> {
    let k = evaluate_constants(sc, sc.config.analysis.q0_floor);
    k.check()?;
    Ok(k)
}

/// Constants for trace analysis, with `|q_e0|` floored at the trace minimum.
pub fn trace_constants(sc: &Scenario, records: &[TraceRecord]) -> DerivedConstants {
    let floor = records.iter().map(|r| r.q_e.s.abs()).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { sc.config.analysis.q0_floor };
    evaluate_constants(sc, floor)
}

/// Turn-off MIET: `Δτ ≥ (s e^{−βt_on} + m)/(sβ e^{−βt_on} + M₁ + M₂)`.
pub fn miet_turnoff_bound(k: &DerivedConstants, t_on: f64, g1: f64) -> f64 {
    let e = (-k.beta * t_on).exp();
    let (m1, m2) = k.m_terms(g1);
    (k.s * e + k.m) / (k.s * k.beta * e + m1 + m2)
}

/// Positive root of `(a₀²/4)x² + (|Ṡ₂(t_off)| + (a₀²/2)W₁)x + (δ_m − N_k) = 0`.
pub fn miet_turnon_bound(
    k: &DerivedConstants,
    s2_slope_at_toff: f64,
    s2_at_toff: f64,
    n_k: f64,
) -> Result<f64, AnalysisError> {
    if k.delta_m >= n_k {
        return Err(infeasible("delta_m < N_k", format!("delta_m = {:e}, N_k = {:e}", k.delta_m, n_k)));
    }
    let a0sq = k.a0 * k.a0;
    let w1 = (2.0 / k.a0) * (s2_at_toff - n_k).max(0.0).sqrt();
    Ok(positive_quadratic_root(0.25 * a0sq, s2_slope_at_toff.abs() + 0.5 * a0sq * w1, k.delta_m - n_k))
}

/// Positive root of `a x² + b x + c` for `a ≥ 0`, `b ≥ 0`, `c < 0`, in the
/// cancellation-free form `2|c| / (b + √(b² + 4a|c|))`.
pub fn positive_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let cc = -c;
    2.0 * cc / (b + (b * b + 4.0 * a * cc).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalVerdict {
    pub start: f64,
    pub end: f64,
    pub passed: bool,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub name: String,
    pub skipped: Option<String>,
    pub intervals: Vec<IntervalVerdict>,
    pub max_violation: f64,
    /// First violating samples (capped).
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

const MAX_LISTED_VIOLATIONS: usize = 50;

impl EnvelopeReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            skipped: None,
            intervals: Vec::new(),
            max_violation: 0.0,
            violations: Vec::new(),
            violation_count: 0,
        }
    }

    fn skipped(name: &str, why: String) -> Self {
        Self { skipped: Some(why), ..Self::new(name) }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, t: f64, excess: f64) {
        if excess > 0.0 {
            self.violation_count += 1;
            self.max_violation = self.max_violation.max(excess);
            if self.violations.len() < MAX_LISTED_VIOLATIONS {
                self.violations.push(Violation { t, excess });
            }
        }
    }

    fn push_interval(&mut self, start: f64, end: f64, worst: f64) {
        self.intervals.push(IntervalVerdict { start, end, passed: worst <= 0.0, max_violation: worst.max(0.0) });
    }
}

/// Relative slack granted to envelope comparisons for floating-point round-off.
fn slack(bound: f64) -> f64 {
    1e-12 * bound.abs().max(1e-300)
}

/// Maximal runs of one mode as index ranges `[start, end]`, inclusive of the sample
/// where the next mode begins (the interval's closing instant).
pub fn mode_intervals(records: &[TraceRecord], mode: Mode) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < records.len() {
        if records[i].mode != mode {
            i += 1;
            continue;
        }
        let start = i;
        while i < records.len() && records[i].mode == mode {
            i += 1;
        }
        let end = if i < records.len() { i } else { i - 1 };
        out.push((start, end));
    }
    out
}

/// `V(t) ≤ (V(t_on) − V∞)e^{−β(t−t_on)} + V∞` over every ON interval.
pub fn check_on_envelope(records: &[TraceRecord], k: &DerivedConstants) -> EnvelopeReport {
    let mut rep = EnvelopeReport::new("on_envelope");
    for (s, e) in mode_intervals(records, Mode::On) {
        let t_on = records[s].t;
        let v_on = records[s].v();
        let mut worst = f64::NEG_INFINITY;
        for r in &records[s..=e] {
            let bound = (v_on - k.v_inf) * (-k.beta * (r.t - t_on)).exp() + k.v_inf;
            let excess = r.v() - bound - slack(bound);
            worst = worst.max(excess);
            rep.record(r.t, excess);
        }
        rep.push_interval(t_on, records[e].t, worst);
    }
    rep
}

/// Quadratic growth bound of `V₂` from each turn-off instant.
pub fn off_bound(v2_off: f64, a0: f64, elapsed: f64) -> f64 {
    let c_m = (2.0 / a0) * v2_off.sqrt();
    v2_off + 0.25 * a0 * a0 * elapsed * elapsed + 0.5 * a0 * a0 * elapsed * c_m
}

/// `V₂(t) ≤ V₂(t_off) + (a₀²/4)(t−t_off)² + (a₀²/2)(t−t_off)C_m` over every OFF interval.
pub fn check_off_bound(records: &[TraceRecord], k: &DerivedConstants) -> EnvelopeReport {
    let mut rep = EnvelopeReport::new("off_bound");
    for (s, e) in mode_intervals(records, Mode::Off) {
        let t_off = records[s].t;
        let v2_off = records[s].v2;
        let mut worst = f64::NEG_INFINITY;
        for r in &records[s..=e] {
            let bound = off_bound(v2_off, k.a0, r.t - t_off);
            let excess = r.v2 - bound - slack(bound);
            worst = worst.max(excess);
            rep.record(r.t, excess);
        }
        rep.push_interval(t_off, records[e].t, worst);
    }
    rep
}

/// `V₁(t) ≤ (V₁(0) − G_m/C_ε)e^{−βt/2} + G_m/C_ε` over the whole run.
pub fn check_off_layer1(records: &[TraceRecord], k: &DerivedConstants) -> EnvelopeReport {
    let name = "layer1_envelope";
    if !(k.c_eps > 0.5 * k.beta) {
        return EnvelopeReport::skipped(name, format!("C_eps = {:e} <= beta/2 = {:e}", k.c_eps, 0.5 * k.beta));
    }
    let Some(first) = records.first() else {
        return EnvelopeReport::skipped(name, "empty trace".into());
    };
    let mut rep = EnvelopeReport::new(name);
    let asym = k.g_m / k.c_eps;
    let mut worst = f64::NEG_INFINITY;
    for r in records {
        let bound = (first.v1 - asym) * (-0.5 * k.beta * (r.t - first.t)).exp() + asym;
        let excess = r.v1 - bound - slack(bound);
        worst = worst.max(excess);
        rep.record(r.t, excess);
    }
    rep.push_interval(first.t, records.last().map_or(first.t, |r| r.t), worst);
    rep
}

/// `V₂ < S₂` at every sample.
pub fn check_evaluation_margin(records: &[TraceRecord]) -> EnvelopeReport {
    let mut rep = EnvelopeReport::new("v2_below_s2");
    let mut worst = f64::NEG_INFINITY;
    for r in records {
        let excess = if r.v2 < r.s2 { r.v2 - r.s2 } else { (r.v2 - r.s2).max(f64::MIN_POSITIVE) };
        worst = worst.max(excess);
        rep.record(r.t, excess);
    }
    if let (Some(f), Some(l)) = (records.first(), records.last()) {
        rep.push_interval(f.t, l.t, worst);
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapVerdict {
    /// `"on->off"` or `"off->on"`.
    pub kind: &'static str,
    pub start: f64,
    pub end: f64,
    pub observed: f64,
    pub bound: Option<f64>,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MietReport {
    pub gaps: Vec<GapVerdict>,
    pub min_margin: Option<f64>,
    pub failures: usize,
}

impl MietReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn record_at(records: &[TraceRecord], t: f64) -> Option<&TraceRecord> {
    let i = records.partition_point(|r| r.t < t - 1e-9);
    records.get(i)
}

/// Compares every observed inter-event gap with the analytic MIET bounds.
pub fn verify_inter_event_times(records: &[TraceRecord], events: &[TriggerEvent], k: &DerivedConstants) -> MietReport {
    let mut gaps = Vec::new();
    let mut n_k_current: Option<f64> = None;
    for w in events.windows(2) {
        let (a, b) = (w[0], w[1]);
        let observed = b.t - a.t;
        match (a.mode, b.mode) {
            (Mode::On, Mode::Off) => {
                let v2_on = record_at(records, a.t).map_or(k.s2_0, |r| r.v2);
                let bound = miet_turnoff_bound(k, a.t, v2_on - k.v_inf);
                n_k_current = Some(k.n_k(bound));
                gaps.push(GapVerdict {
                    kind: "on->off",
                    start: a.t,
                    end: b.t,
                    observed,
                    bound: Some(bound),
                    passed: bound > 0.0 && observed >= bound,
                    note: None,
                });
            }
            (Mode::Off, Mode::On) => {
                let (s2, s2_dot) =
                    eval_value(a.t, &crate::ppc::EvalFunctionParams { s0: k.s2_0, s_inf: k.s2_inf, rate: k.eval_rate });
                let n_k = n_k_current.unwrap_or(k.n_k_apriori);
                let (bound, note) = match miet_turnon_bound(k, s2_dot, s2, n_k) {
                    Ok(b) => (Some(b), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                gaps.push(GapVerdict {
                    kind: "off->on",
                    start: a.t,
                    end: b.t,
                    observed,
                    bound,
                    passed: bound.is_some_and(|b| b > 0.0 && observed >= b),
                    note,
                });
            }
            _ => {}
        }
    }
    let failures = gaps.iter().filter(|g| !g.passed).count();
    let min_margin = gaps.iter().filter_map(|g| g.bound.map(|b| g.observed - b)).reduce(f64::min);
    MietReport { gaps, min_margin, failures }
}

/// Recomputes `V₁`, `V₂`, `S₂` from the raw state columns and compares with the log.
pub fn lyapunov_trajectories(records: &[TraceRecord], sc: &Scenario) -> Result<Vec<(f64, f64, f64)>, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    let cfg = &sc.config;
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let fun = sc.funnel.sample(r.t);
        let eps = fun.transform(r.q_e.v);
        let (v1, _) = blf_value_and_gradient(eps, &cfg.blf);
        let alpha = if cfg.simulation.controller_enabled {
            virtual_control(r.q_e, eps, &fun.psi(), &cfg.controller).unwrap_or(r.alpha)
        } else {
            Vec3::ZERO
        };
        let z2 = r.omega - alpha;
        let v2 = 0.5 * z2.dot(sc.inertia.matrix().mul_vec(z2));
        let (s2, _) = eval_value(r.t, &sc.eval);
        for (column, logged, recomputed) in [("V1", r.v1, v1), ("V2", r.v2, v2), ("S2", r.s2, s2)] {
            let tol = RECOMPUTE_TOLERANCE * logged.abs().max(1.0);
            if !((logged - recomputed).abs() <= tol) {
                return Err(AnalysisError::Inconsistent { column, t: r.t, logged, recomputed });
            }
        }
        out.push((v1, v2, s2));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRateCheck {
    pub max_alpha_dot: f64,
    pub max_alpha_ddot: f64,
    pub b_alpha: f64,
    pub b_2alpha: f64,
    pub alpha_dot_within: bool,
    pub alpha_ddot_within: bool,
}

/// Observed maxima of the finite-difference `α̇`, `α̈` against the assumed bounds.
pub fn alpha_rate_check(records: &[TraceRecord], k: &DerivedConstants) -> AlphaRateCheck {
    let mut hist = AlphaHistory::default();
    let (mut d1, mut d2) = (0.0_f64, 0.0_f64);
    for r in records {
        if hist.push(r.t, r.alpha).is_err() {
            continue;
        }
        d1 = d1.max(hist.derivative().norm());
        d2 = d2.max(hist.second_derivative().norm());
    }
    AlphaRateCheck {
        max_alpha_dot: d1,
        max_alpha_ddot: d2,
        b_alpha: k.b_alpha,
        b_2alpha: k.b_2alpha,
        alpha_dot_within: d1 <= k.b_alpha,
        alpha_ddot_within: d2 <= k.b_2alpha,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub constants: DerivedConstants,
    /// First violated inequality of the a-priori constants, if any.
    pub a_priori_infeasible: Option<String>,
    /// Whether the printed `C₁ < β`, `C_ε < β/2` selection-rule direction holds.
    pub printed_rule: (bool, bool),
    pub on_envelope: EnvelopeReport,
    pub off_bound: EnvelopeReport,
    pub layer1: EnvelopeReport,
    pub v2_below_s2: EnvelopeReport,
    pub miet: MietReport,
    pub alpha_rates: AlphaRateCheck,
}

impl AnalysisReport {
    pub fn all_passed(&self) -> bool {
        self.on_envelope.passed()
            && self.off_bound.passed()
            && self.layer1.passed()
            && self.v2_below_s2.passed()
            && self.miet.passed()
    }
}

/// Runs every trace check with constants floored at the trace's `|q_e0|` minimum.
pub fn analyze_trace(
    sc: &Scenario,
    records: &[TraceRecord],
    events: &[TriggerEvent],
) -> Result<AnalysisReport, AnalysisError> {
    lyapunov_trajectories(records, sc)?;
    let k = trace_constants(sc, records);
    let a_priori = evaluate_constants(sc, sc.config.analysis.q0_floor);
    Ok(AnalysisReport {
        a_priori_infeasible: a_priori.check().err().map(|e| e.to_string()),
        printed_rule: k.printed_selection_rule(),
        on_envelope: check_on_envelope(records, &k),
        off_bound: check_off_bound(records, &k),
        layer1: check_off_layer1(records, &k),
        v2_below_s2: check_evaluation_margin(records),
        miet: verify_inter_event_times(records, events, &k),
        alpha_rates: alpha_rate_check(records, &k),
        constants: k,
    })
}
