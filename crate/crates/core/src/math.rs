//! Dense 3-vector / 3×3-matrix algebra and Hamilton quaternions (scalar-last).

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed departure from unit norm before a quaternion is rejected.
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Drift above which quaternion-returning operations renormalize.
pub const RENORM_THRESHOLD: f64 = 1e-12;
/// Default guard on `|q_e0|` for inverting the kinematic Jacobian.
pub const DEFAULT_Q0_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("quaternion norm {norm} departs from 1 by more than {UNIT_TOLERANCE:e}")]
    NonUnitQuaternion { norm: f64 },
    #[error("Jacobian is singular: |q_e0| = {q0:e} is not above the guard {guard:e}")]
    Singular { q0: f64, guard: f64 },
    #[error("matrix is not invertible (determinant {det:e})")]
    NotInvertible { det: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self { x: v, y: v, z: v }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn zip_map(self, o: Vec3, f: impl Fn(f64, f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x, o.x), f(self.y, o.y), f(self.z, o.z))
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn max(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn min(self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { m: [[0.0; 3]; 3] };
    pub const IDENTITY: Mat3 = Mat3 { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    /// The spanned diagonal matrix `(a_i)_d`.
    pub fn diag(a: Vec3) -> Self {
        Self::from_rows([[a.x, 0.0, 0.0], [0.0, a.y, 0.0], [0.0, 0.0, a.z]])
    }

    pub fn scaled_identity(k: f64) -> Self {
        Self::diag(Vec3::splat(k))
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.m[i])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3::from_rows([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Mat3::from_rows(out)
    }

    pub fn add(&self, o: &Mat3) -> Mat3 {
        let mut out = self.m;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += o.m[i][j];
            }
        }
        Mat3::from_rows(out)
    }

    pub fn scale(&self, k: f64) -> Mat3 {
        let mut out = self.m;
        out.iter_mut().flatten().for_each(|c| *c *= k);
        Mat3::from_rows(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate.
    pub fn inverse(&self) -> Result<Mat3, MathError> {
        let det = self.determinant();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(3) {
            return Err(MathError::NotInvertible { det });
        }
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Ok(Mat3::from_rows(adj).scale(1.0 / det))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|c| c.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (self.m[i][j] - self.m[j][i]).abs() <= tol))
    }

    /// Eigenvalues of a symmetric matrix in ascending order (closed-form trigonometric solution).
    pub fn symmetric_eigenvalues(&self) -> [f64; 3] {
        let m = &self.m;
        let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let tr = m[0][0] + m[1][1] + m[2][2];
        if p1 == 0.0 {
            let mut e = [m[0][0], m[1][1], m[2][2]];
            e.sort_by(f64::total_cmp);
            return e;
        }
        let q = tr / 3.0;
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = self.add(&Mat3::scaled_identity(-q)).scale(1.0 / p);
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let mid = tr - hi - lo;
        [lo, mid, hi]
    }

    /// Induced 2-norm (largest singular value).
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.transpose().mul_mat(self);
        gram.symmetric_eigenvalues()[2].max(0.0).sqrt()
    }
}

/// The cross-product matrix `a^×` with `a^× b = a × b`.
pub fn cross_matrix(a: Vec3) -> Mat3 {
    Mat3::from_rows([[0.0, -a.z, a.y], [a.z, 0.0, -a.x], [-a.y, a.x, 0.0]])
}

/// Unit quaternion stored scalar-last: `q = [qv, q0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub v: Vec3,
    pub s: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { v: Vec3::ZERO, s: 1.0 };

    /// Validates the norm against [`UNIT_TOLERANCE`]; tiny drift is renormalized away.
    pub fn new(v: Vec3, s: f64) -> Result<Self, MathError> {
        let n = (v.norm_squared() + s * s).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MathError::NonUnitQuaternion { norm: n });
        }
        Ok(Self { v, s }.renormalized())
    }

    /// Normalizes an arbitrary non-zero 4-vector `[x, y, z, w]`.
    pub fn normalize_from(xyzw: [f64; 4]) -> Result<Self, MathError> {
        let n = xyzw.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(MathError::NonUnitQuaternion { norm: n });
        }
        Ok(Self { v: Vec3::new(xyzw[0] / n, xyzw[1] / n, xyzw[2] / n), s: xyzw[3] / n })
    }

    /// Builds from raw components without any check; callers must renormalize.
    pub(crate) fn from_raw(v: Vec3, s: f64) -> Self {
        Self { v, s }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.v.x, self.v.y, self.v.z, self.s]
    }

    pub fn norm(self) -> f64 {
        (self.v.norm_squared() + self.s * self.s).sqrt()
    }

    pub fn renormalized(self) -> Self {
        let n = self.norm();
        if (n - 1.0).abs() > RENORM_THRESHOLD {
            Self { v: self.v * (1.0 / n), s: self.s / n }
        } else {
            self
        }
    }

    pub fn conjugate(self) -> Self {
        Self { v: -self.v, s: self.s }
    }

    pub fn negated(self) -> Self {
        Self { v: -self.v, s: -self.s }
    }

    /// Hamilton product `self ⊗ rhs`.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        let v = rhs.v * self.s + self.v * rhs.s + self.v.cross(rhs.v);
        let s = self.s * rhs.s - self.v.dot(rhs.v);
        Self { v, s }.renormalized()
    }

    /// Principal rotation angle in radians, in `[0, π]`.
    pub fn angle(self) -> f64 {
        2.0 * self.v.norm().atan2(self.s.abs())
    }
}

/// Attitude error `q_e = q_d⁻¹ ⊗ q_s`.
pub fn quat_error(q_s: UnitQuaternion, q_d: UnitQuaternion) -> Result<UnitQuaternion, MathError> {
    for q in [q_s, q_d] {
        let n = q.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MathError::NonUnitQuaternion { norm: n });
        }
    }
    Ok(q_d.conjugate().mul(q_s))
}

/// Kinematic Jacobian `F_s = ½[q_e0 I₃ + q_ev^×]`.
pub fn jacobian_fs(q_e: UnitQuaternion) -> Mat3 {
    Mat3::scaled_identity(q_e.s).add(&cross_matrix(q_e.v)).scale(0.5)
}

/// Closed-form `F_s⁻¹ = 2 (q0² I + qv qvᵀ − q0 qv^×) / q0` for unit `q_e`.
pub fn jacobian_fs_inverse(q_e: UnitQuaternion, q0_min: f64) -> Result<Mat3, MathError> {
    let q0 = q_e.s;
    if q0.abs() <= q0_min {
        return Err(MathError::Singular { q0, guard: q0_min });
    }
    let v = q_e.v;
    let outer = Mat3::from_rows([
        [v.x * v.x, v.x * v.y, v.x * v.z],
        [v.y * v.x, v.y * v.y, v.y * v.z],
        [v.z * v.x, v.z * v.y, v.z * v.z],
    ]);
    let num = Mat3::scaled_identity(q0 * q0).add(&outer).add(&cross_matrix(v).scale(-q0));
    Ok(num.scale(2.0 / q0))
}
