use std::sync::Arc;

use dancing_core::curves::*;
use dancing_core::linalg::{numeric_rank, Vec3};
use dancing_core::mates::*;
use dancing_core::projective::{lf_normalize, proj_curvature};
use proptest::prelude::*;

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

#[test]
fn circle_mate_passes_every_check() {
    let ms = circle_mates([1.0, 0.0, 1.0], (-2.6, 6.0)).unwrap();
    let r = mate_verify(&ms, &grid(-2.4, 5.8, 40));
    assert!(r.dancing < 1e-7, "{r:?}");
    assert!(r.involute_constant < 1e-6 && r.shared_a1 < 1e-6 && r.parallel_sd < 1e-6);
    assert!(r.b_triple < 1e-6 && r.torsion.unwrap() < 1e-6);
    assert!(r.passes(1e-6));
}

#[test]
fn mate_equation_has_the_first_integral() {
    // 4th-order integration; y‴y² is not imposed
    let ms = circle_mates([0.8, 0.3, -0.5], (-1.0, 8.0)).unwrap();
    assert!(ms.first_integral_drift() < 1e-10, "{}", ms.first_integral_drift());
    assert!((ms.first_integral - 1.0).abs() < 1e-15);
}

#[test]
fn full_jet_is_rescaled_to_unit_first_integral() {
    let ms = circle_mates_from_jet([2.0, 0.5, 1.0, 0.1], (0.0, 1.0), &MateOptions::default()).unwrap();
    let lam = ms.normalization;
    assert!((lam.powi(3) * 0.1 * 4.0 - 1.0).abs() < 1e-12);
    assert!((ms.first_integral - 1.0).abs() < 1e-12);
    // the mate curve does not see the rescaling
    let raw = conic_involute(0.0, [2.0, 0.5, 1.0, 0.1], (0.0, 1.0), &MateOptions::default()).unwrap();
    for th in [0.2, 0.7] {
        let (a, b) = (ms.involute_point(th).unwrap(), raw.involute_point(th).unwrap());
        assert!((a.normalized() - b.normalized() * (a.0[0] * b.0[0]).signum()).norm() < 1e-10);
    }
}

#[test]
fn quadratic_data_is_the_straight_line_branch() {
    let e = circle_mates_from_jet([1.0, 0.2, 0.4, 0.0], (0.0, 1.0), &MateOptions::default()).unwrap_err();
    assert!(e.to_string().contains("straight line"));
    // the quadratic solution itself stays in the plane, across chart changes
    let (a, b, c) = (0.3, -0.4, 1.1);
    let ms = conic_involute(0.0, [c, b, 2.0 * a, 0.0], (-1.2, 2.5), &MateOptions::default()).unwrap();
    let plane = straight_line_involute(a, b, c);
    for th in grid(-1.2, 2.5, 37) {
        let bp = ms.involute_point(th).unwrap();
        assert!(plane.pair(&bp).abs() < 1e-10 * bp.norm() * plane.norm(), "θ = {th}");
    }
}

#[test]
fn vanishing_y_is_reported_or_truncated() {
    let e = circle_mates([1.0, 0.0, 1.0], (-10.0, 1.0)).unwrap_err();
    assert!(e.to_string().starts_with("singular: y vanishes"), "{e}");
    let o = MateOptions { h: 0.01, truncate: true };
    let ms = circle_mates_with([1.0, 0.0, 1.0], (-10.0, 1.0), &o).unwrap();
    let (lo, hi) = ms.stop.unwrap();
    assert!(hi - lo < 1e-9 && ms.theta_range().0 > lo);
    // y‴ = 1/y² in the plain chart: independent event at t = tan(θ/2)
    let y = ms.state(ms.theta_range().0).unwrap().2[0];
    assert!(y > 0.0 && y < 0.2);
    assert!(circle_mates([0.0, 1.0, 1.0], (0.0, 1.0)).is_err());
}

#[test]
fn envelope_matches_the_chart_formula() {
    // (X, Y) = (2(t − z), 1 − t² + 2tz)/(1 + t² − 2tz), z = y/y′, chart 0
    let ms = circle_mates([1.0, 0.4, 0.2], (-1.0, 1.0)).unwrap();
    for th in grid(-1.0, 1.0, 9) {
        let (_, t, s) = ms.state(th).unwrap();
        let z = s[0] / s[1];
        let den = 1.0 + t * t - 2.0 * t * z;
        let want = (2.0 * (t - z) / den, (1.0 - t * t + 2.0 * t * z) / den);
        let got = ms.envelope_xy(th).unwrap();
        assert!((got.0 - want.0).abs() < 1e-10 && (got.1 - want.1).abs() < 1e-10);
    }
}

#[test]
fn chart_changes_are_seamless() {
    let ms = circle_mates([1.0, 0.0, 1.0], (0.0, 11.0)).unwrap();
    let e = 1e-7;
    for k in 0..4 {
        let th = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI;
        let a = ms.involute_point(th - e).unwrap().normalized();
        let b = ms.involute_point(th + e).unwrap().normalized();
        assert!((a - b).norm() < 1e-6, "θ = {th}");
        let ja = ms.p_curve().jet(th - 0.004, 3);
        let jb = ms.p_curve().jet(th + 0.004, 3);
        assert!((ja[0].normalized() - jb[0].normalized()).norm() < 1e-2);
    }
}

#[test]
fn involute_with_constant_is_not_a_mate() {
    let c = 0.3;
    let ms = conic_involute(c, [1.0, 0.0, 1.0, 1.0], (-1.0, 1.0), &MateOptions::default()).unwrap();
    let r = mate_verify(&ms, &grid(-0.8, 0.8, 10));
    assert!(r.dancing < 1e-10 && r.b_triple < 1e-10);
    assert!(r.involute_constant > 1e-2 && r.parallel_sd > 1e-2, "{r:?}");
    assert!(r.torsion.is_none() && !r.passes(1e-6));
}

#[test]
fn general_involute_solver() {
    // r = 0, quadratic y is exact; C = 0 agrees with the conic solver in chart 0
    let zero = |_t: f64| (0.0, 0.0);
    let s = involute_solve(&zero, 0.0, [1.0, 0.5, 0.4, 0.0], 0.0, 1.0, 100).unwrap();
    for (t, y) in s.t.iter().zip(&s.y) {
        assert!((y[0] - (1.0 + 0.5 * t + 0.2 * t * t)).abs() < 1e-12);
    }
    let s = involute_solve(&zero, 0.0, [1.0, 0.0, 1.0, 1.0], 0.0, 1.0, 100).unwrap();
    assert!(s.residual < 1e-8);
    let ms = circle_mates([1.0, 0.0, 1.0], (0.0, 1.6)).unwrap();
    let th = 2.0 * 1f64.atan();
    let (_, _, y) = ms.state(th).unwrap();
    assert!((y[0] - s.y[100][0]).abs() < 1e-10);
    // non-constant r
    let r = |t: f64| (0.3 + 0.1 * t, 0.1);
    let s = involute_solve(&r, 0.2, [1.2, -0.1, 0.3, 0.5], -0.5, 0.5, 200).unwrap();
    assert!(s.residual < 1e-8, "{}", s.residual);
    assert!(involute_solve(&zero, 0.0, [0.0, 1.0, 0.0, 0.0], 0.0, 1.0, 10).is_err());
}

#[test]
fn mates_form_a_three_parameter_family() {
    let base = [1.0, 0.2, 0.5];
    let ths = [0.3, 0.9, 1.7, 2.4, 3.1];
    let sample = |init: [f64; 3]| -> Vec<f64> {
        let ms = circle_mates(init, (0.0, 3.2)).unwrap();
        ths.iter()
            .flat_map(|&th| {
                let b = ms.involute_point(th).unwrap();
                let b = b * (1.0 / b.0[0]);
                [b.0[1], b.0[2]]
            })
            .collect()
    };
    let f0 = sample(base);
    let h = 1e-6;
    let mut rows = Vec::new();
    for i in 0..3 {
        let mut x = base;
        x[i] += h;
        let f = sample(x);
        rows.push(f.iter().zip(&f0).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>());
    }
    assert_eq!(numeric_rank(&rows, 1e-6), 3);
}

#[test]
fn concentric_circles_fail_the_involute_constant() {
    let q: CurveRef = Arc::new(Circle::unit());
    let big: CurveRef = Arc::new(Circle {
        r: 2f64.sqrt(),
        phase: std::f64::consts::FRAC_PI_4,
    });
    let p: CurveRef = Arc::new(DualCurve { inner: big });
    let r = mate_verify_pair(q, p, &grid(0.0, 3.0, 12));
    assert!(r.dancing < 1e-12);
    assert!(r.involute_constant > 1e-2 && r.parallel_sd > 1e-2, "{r:?}");
}

#[test]
fn q5_lift_of_a_circle_mate_is_integral() {
    let ms = circle_mates([1.0, -0.5, 0.3], (-0.5, 4.0)).unwrap();
    let tr = ms.q5_trajectory(&grid(-0.4, 3.9, 430)).unwrap();
    assert!(tr.max_constraint < 1e-12);
    assert!(tr.integral_residual() < 1e-8, "{:e}", tr.integral_residual());
    assert!((ms.lift_scale() - 2.0).abs() < 1e-12);
}

#[test]
fn w_curve_table() {
    let cases = [
        (WFamily::Y1, Some(1.0), (-1.0, -2.0), -(32f64.cbrt()).recip()),
        (WFamily::Y2, Some(1.0), (1.0, -1.0), 0.5),
        (WFamily::Y3, None, (0.0, -1.0), 0.0),
    ];
    for (f, a, (a1, a0), kappa) in cases {
        let s = wcurve_make(f, a).unwrap();
        assert_eq!((s.a1, s.a0), (a1, a0));
        assert!((s.kappa - kappa).abs() < 1e-15);
        assert_eq!(s.y.trace(), 0.0);
        assert_eq!(horizontality_defect(&s.y), 0.0);
        assert!(s.trajectory(-1.0, 1.0, 200).integral_residual() < 1e-9);
        let (q, p) = s.pair();
        assert!(mate_verify_pair(q, p, &grid(-1.0, 1.0, 8)).passes(1e-8));
    }
    let s = wcurve_make(WFamily::Y2, Some(2.0)).unwrap();
    assert!((s.kappa - 0.5 * 2f64.powf(-4.0 / 3.0)).abs() < 1e-15);
    let s = wcurve_make(WFamily::Y1, Some(0.5)).unwrap();
    assert!((s.kappa + (32.0f64 * 0.25).cbrt().recip()).abs() < 1e-15);
    assert!((KAPPA0 + 3.0 / 32f64.cbrt()).abs() < 1e-15);
    assert!(wcurve_make(WFamily::Y1, Some(-1.0)).is_err());
    assert!(wcurve_make(WFamily::Y2, None).is_err());
    assert!(wcurve_make(WFamily::Y3, Some(1.0)).is_err());
    assert!("y4".parse::<WFamily>().is_err());
}

#[test]
fn w_curve_kappa_is_constant_and_matches() {
    for (f, a) in [(WFamily::Y1, Some(1.0)), (WFamily::Y2, Some(1.0)), (WFamily::Y3, None)] {
        let s = wcurve_make(f, a).unwrap();
        let (q, _) = s.pair();
        let lf = lf_normalize(q, 0.0, 1.0).unwrap();
        for t in [0.2, 0.5, 0.8] {
            let k = proj_curvature(&lf, t).unwrap();
            assert!((k - s.kappa).abs() < 1e-4, "{f:?}: {k} vs {}", s.kappa);
        }
    }
}

#[test]
fn horizontality_rejects_generic_matrices() {
    let y = dancing_core::linalg::Mat3([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    assert_eq!(horizontality_defect(&y), 0.0);
    let y = dancing_core::linalg::Mat3([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    assert!(horizontality_defect(&y) > 0.5);
    let _ = Vec3::ZERO;
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_circle_mates_are_dancing(y0 in 0.5f64..2.0, y1 in -1.0f64..1.0, y2 in -1.0f64..1.0) {
        let o = MateOptions { h: 0.02, truncate: true };
        let ms = circle_mates_with([y0, y1, y2], (-1.0, 1.0), &o).unwrap();
        let (a, b) = ms.theta_range();
        prop_assume!(b - a > 0.5);
        let ts = grid(a + 0.1, b - 0.1, 6);
        let r = mate_verify(&ms, &ts);
        prop_assert!(r.dancing < 1e-7, "{:?}", r);
        prop_assert!(r.parallel_sd < 1e-6 && r.torsion.unwrap() < 1e-6, "{:?}", r);
    }

    #[test]
    fn chart_switch_round_trip(t in 0.2f64..3.0, y in prop::array::uniform4(-2.0f64..2.0)) {
        let z = switch_chart(-1.0 / t, &switch_chart(t, &y));
        for i in 0..4 {
            prop_assert!((z[i] - y[i]).abs() < 1e-9 * (1.0 + y[i].abs()));
        }
    }
}
