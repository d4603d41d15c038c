//! Backstepping control stack: virtual rate law, its numerical derivative,
//! disturbance compensation, attitude-layer coupling term and the torque law.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::InertiaModel;
use crate::math::{cross_matrix, jacobian_fs_inverse, Mat3, MathError, UnitQuaternion, Vec3};
use crate::ppc::{tanh_dominance_margin, BlfParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("invalid controller parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("tanh dominance margin {margin:e} < 0 for k_m = {k_m}, gamma = {gamma}, k_u = {k_u}")]
    DominanceMargin { margin: f64, k_m: f64, gamma: f64, k_u: f64 },
    #[error(transparent)]
    Math(#[from] MathError),
    #[error("alpha history timestamps must increase (got {t} after {last})")]
    NonMonotoneTime { t: f64, last: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    pub k_m: f64,
    pub gamma: f64,
    /// Scale of the commanded rate magnitude (rad/s).
    pub m_omega: f64,
    /// Practical bound on each transformed error component.
    pub k_u: f64,
    pub k2: f64,
    /// Disturbance bound (N·m).
    pub d_m: f64,
    pub p: f64,
    pub q0_min: f64,
    /// Per-axis actuator limit (N·m).
    pub u_max: f64,
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.k2.is_finite() && self.k2 >= 0.0) {
            return Err(ControllerError::InvalidParameter { name: "k2", value: self.k2 });
        }
        let fields = [
            ("k_m", self.k_m),
            ("gamma", self.gamma),
            ("m_omega", self.m_omega),
            ("k_u", self.k_u),
            ("d_m", self.d_m),
            ("p", self.p),
            ("q0_min", self.q0_min),
            ("u_max", self.u_max),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ControllerError::InvalidParameter { name, value });
            }
        }
        let margin = tanh_dominance_margin(self.k_m, self.gamma, self.k_u);
        if margin < 0.0 {
            return Err(ControllerError::DominanceMargin { margin, k_m: self.k_m, gamma: self.gamma, k_u: self.k_u });
        }
        Ok(())
    }
}

/// `α = −(|q_e0|/2) k_m M_ω F_s⁻¹ ψ_q⁻¹ (tanh γε_i)_v`.
pub fn virtual_control(
    q_e: UnitQuaternion,
    eps: Vec3,
    psi: &Mat3,
    params: &ControllerParams,
) -> Result<Vec3, ControllerError> {
    let fs_inv = jacobian_fs_inverse(q_e, params.q0_min)?;
    let psi_inv = psi.inverse()?;
    let shaped = eps.map(|e| (params.gamma * e).tanh());
    let gain = -0.5 * q_e.s.abs() * params.k_m * params.m_omega;
    Ok(fs_inv.mul_vec(psi_inv.mul_vec(shaped)) * gain)
}

/// Short history of `(t, α)` samples for backward differencing.
#[derive(Debug, Clone)]
pub struct AlphaHistory {
    samples: VecDeque<(f64, Vec3)>,
    capacity: usize,
}

impl Default for AlphaHistory {
    fn default() -> Self {
        Self::with_capacity(3)
    }
}

impl AlphaHistory {
    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(3);
        Self { samples: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, t: f64, alpha: Vec3) -> Result<(), ControllerError> {
        if let Some(&(last, _)) = self.samples.back() {
            if !(t > last) {
                return Err(ControllerError::NonMonotoneTime { t, last });
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((t, alpha));
        Ok(())
    }

    fn last(&self, back: usize) -> (f64, Vec3) {
        self.samples[self.samples.len() - 1 - back]
    }

    /// Backward difference over the two newest samples; zero with fewer than two.
    pub fn derivative(&self) -> Vec3 {
        if self.samples.len() < 2 {
            return Vec3::ZERO;
        }
        let (t1, a1) = self.last(0);
        let (t0, a0) = self.last(1);
        (a1 - a0) * (1.0 / (t1 - t0))
    }

    /// Second backward difference over the three newest samples; zero with fewer than three.
    pub fn second_derivative(&self) -> Vec3 {
        if self.samples.len() < 3 {
            return Vec3::ZERO;
        }
        let (t2, a2) = self.last(0);
        let (t1, a1) = self.last(1);
        let (t0, a0) = self.last(2);
        let d1 = (a2 - a1) * (1.0 / (t2 - t1));
        let d0 = (a1 - a0) * (1.0 / (t1 - t0));
        (d1 - d0) * (2.0 / (t2 - t0))
    }
}

/// Backward-difference `α̇` at the newest stored sample.
pub fn alpha_derivative(hist: &AlphaHistory) -> Vec3 {
    hist.derivative()
}

/// `d̂ = D_m (tanh(z_2i/p))_v`.
pub fn disturbance_compensation(z2: Vec3, params: &ControllerParams) -> Vec3 {
    z2.map(|z| params.d_m * (z / params.p).tanh())
}

/// Attitude-layer coupling `P_q = F_sᵀ ψ_q ∂V₁/∂ε`, so that `P_qᵀ z₂` is exactly the
/// cross term `∂V₁/∂ε · ψ_q F_s z₂` appearing in `V̇₁`.
pub fn pq_term(eps: Vec3, psi: &Mat3, fs: &Mat3, blf: &BlfParams) -> Vec3 {
    let grad = eps * (blf.k1 * (eps.norm_squared() / blf.f1).tanh());
    fs.transpose().mul_vec(psi.mul_vec(grad))
}

/// Everything the torque law needs beyond the plant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandTerms {
    pub z2: Vec3,
    pub d_hat: Vec3,
    pub p_q: Vec3,
    pub u: Vec3,
}

/// `u = ω^×Jω − K₂z₂ + Jα̇ − d̂ − P_q` with `z₂ = ω − α` (unsaturated).
#[allow(clippy::too_many_arguments)]
pub fn control_command(
    omega: Vec3,
    alpha: Vec3,
    alpha_dot: Vec3,
    eps: Vec3,
    psi: &Mat3,
    fs: &Mat3,
    inertia: &InertiaModel,
    params: &ControllerParams,
    blf: &BlfParams,
) -> CommandTerms {
    let j = inertia.matrix();
    let z2 = omega - alpha;
    let d_hat = disturbance_compensation(z2, params);
    let p_q = pq_term(eps, psi, fs, blf);
    let gyro = cross_matrix(omega).mul_vec(j.mul_vec(omega));
    let u = gyro - z2 * params.k2 + j.mul_vec(alpha_dot) - d_hat - p_q;
    CommandTerms { z2, d_hat, p_q, u }
}

/// Componentwise clamp to `±u_max`, with per-axis saturation flags.
pub fn saturate(u: Vec3, u_max: f64) -> (Vec3, [bool; 3]) {
    let a = u.to_array();
    let flags = a.map(|x| x.abs() > u_max);
    (Vec3::from_array(a.map(|x| x.clamp(-u_max, u_max))), flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::jacobian_fs;

    fn params() -> ControllerParams {
        ControllerParams {
            k_m: 1.6,
            gamma: 2.0,
            m_omega: 0.0524,
            k_u: 1.5,
            k2: 1.0,
            d_m: 1.5e-3,
            p: 0.1,
            q0_min: 1e-6,
            u_max: 0.05,
        }
    }

    #[test]
    fn zero_error_gives_zero_alpha() {
        let q = UnitQuaternion::normalize_from([0.1, 0.2, 0.3, 0.9]).unwrap();
        let a = virtual_control(q, Vec3::ZERO, &Mat3::IDENTITY, &params()).unwrap();
        assert_eq!(a, Vec3::ZERO);
    }

    #[test]
    fn alpha_singularity_guard() {
        let q = UnitQuaternion::new(Vec3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert!(virtual_control(q, Vec3::splat(0.1), &Mat3::IDENTITY, &params()).is_err());
    }

    #[test]
    fn history_ramp_and_constant() {
        let mut h = AlphaHistory::default();
        assert_eq!(alpha_derivative(&h), Vec3::ZERO);
        let dt = 1e-3;
        for k in 0..10 {
            let t = k as f64 * dt;
            h.push(t, Vec3::new(t, 2.0 * t, 3.0 * t)).unwrap();
        }
        assert!((alpha_derivative(&h) - Vec3::new(1.0, 2.0, 3.0)).max_abs() < 1e-9);
        assert!(h.second_derivative().max_abs() < 1e-6);
        assert_eq!(h.len(), 3);
        let mut c = AlphaHistory::default();
        c.push(0.0, Vec3::splat(0.4)).unwrap();
        c.push(0.1, Vec3::splat(0.4)).unwrap();
        assert_eq!(alpha_derivative(&c), Vec3::ZERO);
        assert!(c.push(0.1, Vec3::ZERO).is_err());
    }

    #[test]
    fn compensation_cases() {
        let p = params();
        assert_eq!(disturbance_compensation(Vec3::ZERO, &p), Vec3::ZERO);
        let z = Vec3::splat(10.0 * p.p);
        let d = disturbance_compensation(z, &p);
        assert!((d.x - p.d_m * 10f64.tanh()).abs() < 1e-18);
        let z = Vec3::new(0.01, -0.3, 0.2);
        assert_eq!(disturbance_compensation(-z, &p), -disturbance_compensation(z, &p));
    }

    #[test]
    fn pq_matches_gradient_pullback() {
        let q = UnitQuaternion::normalize_from([0.2, -0.4, 0.1, 0.8]).unwrap();
        let fs = jacobian_fs(q);
        let psi = Mat3::diag(Vec3::new(2.0, 3.0, 4.0));
        let blf = BlfParams { k1: 0.5, f1: 1.0 };
        let eps = psi.mul_vec(q.v);
        let (_, grad) = crate::ppc::blf_value_and_gradient(eps, &blf);
        let z2 = Vec3::new(0.3, -0.1, 0.7);
        let lhs = pq_term(eps, &psi, &fs, &blf).dot(z2);
        let rhs = grad.dot(psi.mul_vec(fs.mul_vec(z2)));
        assert!((lhs - rhs).abs() < 1e-12);
        assert_eq!(pq_term(Vec3::ZERO, &psi, &fs, &blf), Vec3::ZERO);
    }

    #[test]
    fn equilibrium_command_is_zero() {
        let inertia = InertiaModel::diagonal(Vec3::new(2.8, 2.5, 1.9)).unwrap();
        let fs = jacobian_fs(UnitQuaternion::IDENTITY);
        let t = control_command(
            Vec3::ZERO,
            Vec3::ZERO,
            Vec3::ZERO,
            Vec3::ZERO,
            &Mat3::IDENTITY,
            &fs,
            &inertia,
            &params(),
            &BlfParams { k1: 0.5, f1: 1.0 },
        );
        assert_eq!(t.u, Vec3::ZERO);
    }

    #[test]
    fn saturation_flags() {
        let (u, f) = saturate(Vec3::new(0.1, -0.01, -0.2), 0.05);
        assert_eq!(u, Vec3::new(0.05, -0.01, -0.05));
        assert_eq!(f, [true, false, true]);
    }

    #[test]
    fn default_gains_certified() {
        assert!(params().validate().is_ok());
        let bad = ControllerParams { k_m: 0.5, ..params() };
        assert!(matches!(bad.validate(), Err(ControllerError::DominanceMargin { .. })));
    }
}
