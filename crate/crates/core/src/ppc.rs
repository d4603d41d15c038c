//! Prescribed-performance scaffolding: the tanh performance funnel, the error
//! transformation, the log-cosh barrier Lyapunov function and the exponential
//! performance-evaluation envelope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PpcError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
}

fn require(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<(), PpcError> {
    if cond && value.is_finite() {
        Ok(())
    } else {
        Err(PpcError::InvalidParameter { name, value, reason })
    }
}

/// Parameters of `ρ(t) = (ρ₀+ρ∞)/2 − (ρ₀−ρ∞)/2 · tanh((t − T_s)/f_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerfFunctionParams {
    pub rho0: f64,
    pub rho_inf: f64,
    pub t_s: f64,
    pub f_s: f64,
}

impl PerfFunctionParams {
    pub fn validate(&self) -> Result<(), PpcError> {
        require(self.rho_inf > 0.0, "rho_inf", self.rho_inf, "must be positive")?;
        require(self.rho0 > self.rho_inf, "rho0", self.rho0, "must exceed rho_inf")?;
        require(self.f_s > 0.0, "f_s", self.f_s, "must be positive")?;
        require(true, "t_s", self.t_s, "must be finite")
    }
}

/// Returns `(ρ, ρ̇)`.
pub fn perf_value(t: f64, p: &PerfFunctionParams) -> (f64, f64) {
    let mid = 0.5 * (p.rho0 + p.rho_inf);
    let half = 0.5 * (p.rho0 - p.rho_inf);
    let th = ((t - p.t_s) / p.f_s).tanh();
    let rho = mid - half * th;
    let rho_dot = -half * (1.0 - th * th) / p.f_s;
    (rho, rho_dot)
}

/// One funnel per attitude axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Funnel {
    pub axes: [PerfFunctionParams; 3],
}

/// Funnel quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelSample {
    pub rho: Vec3,
    pub rho_dot: Vec3,
}

impl FunnelSample {
    /// `ψ_q = (1/ρ_i)_d`.
    pub fn psi(&self) -> Mat3 {
        Mat3::diag(self.rho.map(|r| 1.0 / r))
    }

    /// `ψ_q⁻¹ = (ρ_i)_d`.
    pub fn psi_inverse(&self) -> Mat3 {
        Mat3::diag(self.rho)
    }

    /// `η_q = (ρ̇_i/ρ_i)_d`.
    pub fn eta(&self) -> Mat3 {
        Mat3::diag(self.rho_dot.zip_map(self.rho, |d, r| d / r))
    }

    /// `ε = ψ_q e`.
    pub fn transform(&self, e: Vec3) -> Vec3 {
        e.zip_map(self.rho, |e, r| e / r)
    }
}

impl Funnel {
    pub fn shared(p: PerfFunctionParams) -> Self {
        Self { axes: [p; 3] }
    }

    pub fn validate(&self) -> Result<(), PpcError> {
        self.axes.iter().try_for_each(PerfFunctionParams::validate)
    }

    pub fn sample(&self, t: f64) -> FunnelSample {
        let v: [(f64, f64); 3] = std::array::from_fn(|i| perf_value(t, &self.axes[i]));
        FunnelSample { rho: Vec3::new(v[0].0, v[1].0, v[2].0), rho_dot: Vec3::new(v[0].1, v[1].1, v[2].1) }
    }

    /// Extremes of the funnel over `[0, t_end]` from `samples` uniform points.
    pub fn extremes(&self, t_end: f64, samples: usize) -> FunnelExtremes {
        let n = samples.max(2);
        let mut ex = FunnelExtremes {
            rho_min: f64::INFINITY,
            rho_max: f64::NEG_INFINITY,
            abs_rate_ratio_max: 0.0,
            rate_ratio_max: f64::NEG_INFINITY,
        };
        for k in 0..n {
            let s = self.sample(t_end * k as f64 / (n - 1) as f64);
            for i in 0..3 {
                let ratio = s.rho_dot[i] / s.rho[i];
                ex.rho_min = ex.rho_min.min(s.rho[i]);
                ex.rho_max = ex.rho_max.max(s.rho[i]);
                ex.abs_rate_ratio_max = ex.abs_rate_ratio_max.max(ratio.abs());
                ex.rate_ratio_max = ex.rate_ratio_max.max(ratio);
            }
        }
        ex
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunnelExtremes {
    pub rho_min: f64,
    pub rho_max: f64,
    /// `(|ρ̇_i|/ρ_i)_max`
    pub abs_rate_ratio_max: f64,
    /// `(ρ̇_i/ρ_i)_max` (signed)
    pub rate_ratio_max: f64,
}

/// `ε_i = e_i/ρ_i`; the constraint holds iff `|ε_i| < 1`.
pub fn transform_error(e: f64, rho: f64) -> Result<f64, PpcError> {
    require(rho > 0.0, "rho", rho, "must be positive")?;
    Ok(e / rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlfParams {
    pub k1: f64,
    pub f1: f64,
}

impl BlfParams {
    pub fn validate(&self) -> Result<(), PpcError> {
        require(self.k1 > 0.0, "k1", self.k1, "must be positive")?;
        require(self.f1 > 0.0, "f1", self.f1, "must be positive")
    }
}

/// `ln cosh x` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `V = (k₁/2) F₁ ln cosh(‖ε‖²/F₁)` and `∂V/∂ε = k₁ tanh(‖ε‖²/F₁) ε`.
pub fn blf_value_and_gradient(eps: Vec3, p: &BlfParams) -> (f64, Vec3) {
    let x = eps.norm_squared() / p.f1;
    let v = 0.5 * p.k1 * p.f1 * ln_cosh(x);
    (v, eps * (p.k1 * x.tanh()))
}

/// `S(t) = (S₀ − S∞) e^{−k t} + S∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFunctionParams {
    pub s0: f64,
    pub s_inf: f64,
    pub rate: f64,
}

impl EvalFunctionParams {
    pub fn validate(&self) -> Result<(), PpcError> {
        require(self.s_inf > 0.0, "s_inf", self.s_inf, "must be positive")?;
        require(self.s0 > self.s_inf, "s0", self.s0, "must exceed s_inf")?;
        require(self.rate > 0.0, "rate", self.rate, "must be positive")
    }
}

/// Returns `(S, Ṡ)`.
pub fn eval_value(t: f64, p: &EvalFunctionParams) -> (f64, f64) {
    let e = (-p.rate * t).exp();
    let span = p.s0 - p.s_inf;
    (span * e + p.s_inf, -p.rate * span * e)
}

/// Number of grid points used by [`tanh_dominance_margin`].
pub const DOMINANCE_GRID: usize = 10_000;

/// `min_{x∈[0,k_u]} (k_m tanh(γx) − x)` on a uniform grid. A nonnegative result
/// certifies `k_m tanh(γ x) ≥ x` over the practical range of `ε`.
pub fn tanh_dominance_margin(k_m: f64, gamma: f64, k_u: f64) -> f64 {
    (0..=DOMINANCE_GRID)
        .map(|k| {
            let x = k_u * k as f64 / DOMINANCE_GRID as f64;
            k_m * (gamma * x).tanh() - x
        })
        .fold(f64::INFINITY, f64::min)
}
