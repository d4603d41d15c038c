#![allow(clippy::needless_range_loop)]

mod oracles;

use etppc_core::controller::ControllerParams;
use etppc_core::math::{jacobian_fs, jacobian_fs_inverse, quat_error, UnitQuaternion, Vec3};
use etppc_core::ppc::{blf_value_and_gradient, ln_cosh, tanh_dominance_margin, BlfParams};
use etppc_core::scenario::default_scenario;
use proptest::prelude::*;

fn unit_quaternion() -> impl Strategy<Value = UnitQuaternion> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("non-degenerate", |q| q.iter().map(|c| c * c).sum::<f64>() > 1e-3)
        .prop_map(|q| UnitQuaternion::normalize_from(q).unwrap())
}

fn to_rows(m: etppc_core::math::Mat3) -> [[f64; 3]; 3] {
    m.m
}

#[test]
fn log_cosh_sandwich_on_dense_grid() {
    for k in 0..1000 {
        let x = 50.0 * k as f64 / 999.0;
        let lc = ln_cosh(x);
        let upper = x * x.tanh();
        assert!(0.5 * upper <= lc + 1e-15, "lower side fails at x = {x}");
        assert!(lc <= upper + 1e-15, "upper side fails at x = {x}");
    }
}

#[test]
fn default_gains_satisfy_tanh_dominance() {
    let c = &default_scenario().config.controller;
    assert!(tanh_dominance_margin(c.k_m, c.gamma, c.k_u) >= 0.0);
    let loose = ControllerParams { k_m: 1.4, ..*c };
    assert!(loose.validate().is_err());
}

#[test]
fn golden_initial_error_quaternion() {
    let text = include_str!("golden/q_e0.json");
    let golden: serde_json::Value = serde_json::from_str(text).unwrap();
    let arr = |k: &str| -> [f64; 4] {
        let v: Vec<f64> = golden[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        [v[0], v[1], v[2], v[3]]
    };
    let expected = arr("q_e0");
    let oracle = oracles::error_quaternion(arr("q_s0"), arr("q_d"));
    for i in 0..4 {
        assert!((oracle[i] - expected[i]).abs() < 1e-15);
    }
    let sc = default_scenario();
    let got = sc.q_e0.to_array();
    let report = oracles::OracleReport {
        name: "initial error quaternion",
        expected: expected.to_vec(),
        actual: got.to_vec(),
        tolerance: 1e-12,
    };
    assert!(report.agrees(), "{report:?}");
    let angle = golden["angle_deg"].as_f64().unwrap();
    assert!((sc.q_e0.angle().to_degrees() - angle).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hamilton_product_matches_oracle(a in unit_quaternion(), b in unit_quaternion()) {
        let got = a.mul(b).to_array();
        let want = oracles::quaternion_product(a.to_array(), b.to_array());
        for i in 0..4 {
            prop_assert!((got[i] - want[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn products_stay_unit(a in unit_quaternion(), b in unit_quaternion(), c in unit_quaternion()) {
        let p = a.mul(b).mul(c.conjugate());
        prop_assert!((p.norm() - 1.0).abs() <= 1e-12);
        let e = quat_error(a, b).unwrap();
        prop_assert!((e.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn jacobian_inverse_round_trip(q in unit_quaternion()) {
        prop_assume!(q.s.abs() > 0.05);
        let fs = jacobian_fs(q);
        let inv = jacobian_fs_inverse(q, 1e-6).unwrap();
        let id = oracles::mat_mul(to_rows(inv), to_rows(fs));
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((id[i][j] - want).abs() <= 1e-10, "entry ({i},{j}) = {}", id[i][j]);
            }
        }
        let hand = oracles::kinematic_jacobian(q.to_array());
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((fs.m[i][j] - hand[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blf_gradient_matches_finite_differences(
        dir in prop::array::uniform3(-1.0f64..1.0),
        r in 0.0f64..2.0,
        k1 in 0.01f64..2.0,
        f1 in 0.5f64..5.0,
    ) {
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        prop_assume!(n > 1e-3);
        let e = dir.map(|c| c * r / n);
        let p = BlfParams { k1, f1 };
        let (v, grad) = blf_value_and_gradient(Vec3::from_array(e), &p);
        prop_assert!((v - oracles::blf_direct(e, k1, f1)).abs() <= 1e-12 * v.max(1.0));
        let fd = oracles::gradient3(|x| blf_value_and_gradient(Vec3::from_array(x), &p).0, e, 1e-5);
        for i in 0..3 {
            prop_assert!((grad[i] - fd[i]).abs() <= 1e-6, "component {i}: {} vs {}", grad[i], fd[i]);
        }
    }

    #[test]
    fn blf_depends_on_norm_only(e in prop::array::uniform3(-2.0f64..2.0), flip in 0usize..3) {
        let p = BlfParams { k1: 0.7, f1: 1.3 };
        let mut mirrored = e;
        mirrored[flip] = -mirrored[flip];
        let a = blf_value_and_gradient(Vec3::from_array(e), &p).0;
        let b = blf_value_and_gradient(Vec3::from_array(mirrored), &p).0;
        prop_assert_eq!(a, b);
    }
}
