//! Rigid-body attitude-error model and the periodic disturbance generator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{cross_matrix, jacobian_fs, Mat3, MathError, UnitQuaternion, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InertiaError {
    #[error("inertia matrix has non-finite entries")]
    NonFinite,
    #[error("inertia matrix is not symmetric")]
    NotSymmetric,
    #[error("inertia matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Inertia tensor `J` with cached extreme eigenvalues and inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaModel {
    j: Mat3,
    j_inv: Mat3,
    lambda_min: f64,
    lambda_max: f64,
}

impl InertiaModel {
    pub fn new(j: Mat3) -> Result<Self, InertiaError> {
        if !j.is_finite() {
            return Err(InertiaError::NonFinite);
        }
        if !j.is_symmetric(1e-12 * j.max_abs().max(1.0)) {
            return Err(InertiaError::NotSymmetric);
        }
        let eig = j.symmetric_eigenvalues();
        if eig[0] <= 0.0 {
            return Err(InertiaError::NotPositiveDefinite(eig[0]));
        }
        let j_inv = j.inverse()?;
        Ok(Self { j, j_inv, lambda_min: eig[0], lambda_max: eig[2] })
    }

    pub fn diagonal(d: Vec3) -> Result<Self, InertiaError> {
        Self::new(Mat3::diag(d))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.j
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.j_inv
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `‖J⁻¹‖ = 1/λ_min(J)` for symmetric positive-definite `J`.
    pub fn inverse_norm(&self) -> f64 {
        1.0 / self.lambda_min
    }
}

/// Three-component sinusoidal disturbance
/// `d_i(t) = scale·[A_i sin(h_i ω t) + B_i cos(g_i ω t) + c_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceModel {
    pub enabled: bool,
    /// Base angular frequency (rad/s).
    pub omega_dis: f64,
    pub scale: f64,
    pub sin_amplitude: [f64; 3],
    pub sin_harmonic: [f64; 3],
    pub cos_amplitude: [f64; 3],
    pub cos_harmonic: [f64; 3],
    pub bias: [f64; 3],
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        Self {
            enabled: true,
            omega_dis: 0.01,
            scale: 1e-4,
            sin_amplitude: [4.0, -1.5, 3.0],
            sin_harmonic: [3.0, 2.0, 10.0],
            cos_amplitude: [3.0, 3.0, -8.0],
            cos_harmonic: [10.0, 5.0, 4.0],
            bias: [-2.0, 2.0, 2.0],
        }
    }
}

impl DisturbanceModel {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    /// Period of the slowest harmonic pattern, `2π/ω_dis`.
    pub fn base_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_dis
    }

    /// Largest `‖d(t)‖` over `samples` uniform points of one base period.
    pub fn sampled_peak_norm(&self, samples: usize) -> f64 {
        let period = self.base_period();
        (0..samples).map(|k| disturbance_at(period * k as f64 / samples as f64, self).norm()).fold(0.0, f64::max)
    }
}

pub fn disturbance_at(t: f64, model: &DisturbanceModel) -> Vec3 {
    if !model.enabled {
        return Vec3::ZERO;
    }
    let w = model.omega_dis;
    let comp = |i: usize| {
        model.scale
            * (model.sin_amplitude[i] * (model.sin_harmonic[i] * w * t).sin()
                + model.cos_amplitude[i] * (model.cos_harmonic[i] * w * t).cos()
                + model.bias[i])
    };
    Vec3::new(comp(0), comp(1), comp(2))
}

/// Error-quaternion attitude plus body rate. The desired rate is zero, so `ω_e = ω_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacecraftState {
    pub q_e: UnitQuaternion,
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub q_v_dot: Vec3,
    pub q0_dot: f64,
    pub omega_dot: Vec3,
}

/// Right-hand side of the error kinematics and Euler's equation under the held input.
pub fn state_derivative(state: &SpacecraftState, u_act: Vec3, d: Vec3, inertia: &InertiaModel) -> StateRate {
    let w = state.omega;
    let fs = jacobian_fs(state.q_e);
    let gyro = cross_matrix(w).mul_vec(inertia.matrix().mul_vec(w));
    StateRate {
        q_v_dot: fs.mul_vec(w),
        q0_dot: -0.5 * state.q_e.v.dot(w),
        omega_dot: inertia.inverse().mul_vec(-gyro + u_act + d),
    }
}

/// `e_u = u(t) − u(t_k)`.
pub fn input_error(u_cmd: Vec3, u_held: Vec3) -> Vec3 {
    u_cmd - u_held
}
