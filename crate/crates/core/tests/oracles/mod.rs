//! Brute-force and closed-form reference computations used only by tests.
//! Nothing here calls into the modules being checked beyond plain `f64` data.

#![allow(dead_code)]

/// Result of comparing one oracle against the code under test.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub name: &'static str,
    pub expected: Vec<f64>,
    pub actual: Vec<f64>,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn max_error(&self) -> f64 {
        self.expected.iter().zip(&self.actual).map(|(e, a)| (e - a).abs()).fold(0.0, f64::max)
    }

    pub fn agrees(&self) -> bool {
        self.expected.len() == self.actual.len() && self.max_error() <= self.tolerance
    }
}

/// Hamilton product written out component by component, scalar-last `[x, y, z, w]`.
pub fn quaternion_product(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let [ax, ay, az, aw] = a;
    let [bx, by, bz, bw] = b;
    [
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    ]
}

pub fn quaternion_conjugate(q: [f64; 4]) -> [f64; 4] {
    [-q[0], -q[1], -q[2], q[3]]
}

pub fn normalized(q: [f64; 4]) -> [f64; 4] {
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    q.map(|c| c / n)
}

/// `q_d⁻¹ ⊗ q_s` with the sign chosen so the scalar part is non-negative.
pub fn error_quaternion(q_s: [f64; 4], q_d: [f64; 4]) -> [f64; 4] {
    let e = quaternion_product(quaternion_conjugate(normalized(q_d)), normalized(q_s));
    if e[3] < 0.0 {
        e.map(|c| -c)
    } else {
        e
    }
}

/// Largest deviation of `‖J ω‖` from its first value along a sequence of body
/// rates. Only meaningful for torque-free motion, so callers must state that the
/// trace was unactuated.
pub fn momentum_drift(inertia_diag: [f64; 3], omegas: &[[f64; 3]], unactuated: bool) -> Result<f64, &'static str> {
    if !unactuated {
        return Err("momentum oracle requires a torque-free trace");
    }
    let h = |w: &[f64; 3]| (0..3).map(|i| (inertia_diag[i] * w[i]).powi(2)).sum::<f64>().sqrt();
    let Some(first) = omegas.first() else {
        return Ok(0.0);
    };
    let h0 = h(first);
    Ok(omegas.iter().map(|w| (h(w) - h0).abs()).fold(0.0, f64::max))
}

/// Positive root of `a x² + b x + c` (with `c < 0 ≤ a, b`) by bisection.
pub fn quadratic_root_bisection(a: f64, b: f64, c: f64) -> f64 {
    let f = |x: f64| (a * x + b) * x + c;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central difference of a scalar function.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Gradient of a function of three variables by central differences.
pub fn gradient3(f: impl Fn([f64; 3]) -> f64, x: [f64; 3], h: f64) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        let mut p = x;
        let mut m = x;
        p[i] += h;
        m[i] -= h;
        g[i] = (f(p) - f(m)) / (2.0 * h);
    }
    g
}

/// Dense 3×3 product `A B`.
pub fn mat_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// `(1/2)(q₀ I + q_v^×)` assembled entry by entry.
pub fn kinematic_jacobian(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [x, y, z, w] = q;
    [[0.5 * w, -0.5 * z, 0.5 * y], [0.5 * z, 0.5 * w, -0.5 * x], [-0.5 * y, 0.5 * x, 0.5 * w]]
}

/// `(k₁/2) F₁ ln cosh(‖ε‖²/F₁)` evaluated from the definition of `cosh`.
pub fn blf_direct(eps: [f64; 3], k1: f64, f1: f64) -> f64 {
    let x = eps.iter().map(|e| e * e).sum::<f64>() / f1;
    0.5 * k1 * f1 * ((x.exp() + (-x).exp()) / 2.0).ln()
}
