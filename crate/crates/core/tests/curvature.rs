use std::sync::Arc;

use dancing_core::cartan_engel::{integrate, Q5Point, TrigControl};
use dancing_core::curvature::*;
use dancing_core::curves::*;
use dancing_core::linalg::{mat_exp, Covec3, Mat3, Vec3};
use dancing_core::metric::*;
use dancing_core::sample::{self, SampleRng};

fn random_chart(rng: &mut SampleRng) -> ChartPoint {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| sample::uniform(rng, -1.0, 1.0));
        let cp = ChartPoint { x: v[0], y: v[1], a: v[2], b: v[3] };
        if cp.denom().abs() > 0.2 {
            return cp;
        }
    }
}

fn y1(a: f64) -> Mat3 {
    Mat3([[1.0, 0.0, 1.0], [0.0, -1.0, a], [a, -1.0, 0.0]])
}
fn y2(b: f64) -> Mat3 {
    Mat3([[0.0, 1.0, b], [-1.0, 0.0, 0.0], [0.0, -b, 0.0]])
}
fn y3() -> Mat3 {
    Mat3([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
}

fn orbit_pair(y: Mat3) -> NullCurve {
    let q: CurveRef = Arc::new(OrbitCurve { y, v0: Vec3::basis(2), dual: false });
    let p: CurveRef = Arc::new(OrbitCurve { y, v0: Vec3::basis(2), dual: true });
    NullCurve::new(q, p, -1.0, 1.0)
}

fn concentric_pair() -> NullCurve {
    let q: CurveRef = Arc::new(Circle::unit());
    let big: CurveRef = Arc::new(Circle {
        r: 2f64.sqrt(),
        phase: std::f64::consts::FRAC_PI_4,
    });
    NullCurve::new(q, Arc::new(DualCurve { inner: big }), 0.0, 3.0)
}

fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
}

#[test]
fn group_section_is_a_unimodular_lift() {
    let mut rng = sample::rng(11);
    for _ in 0..100 {
        let pt = M4Point::random(&mut rng);
        let g = group_section(&pt);
        assert!((g.det() - 1.0).abs() < 1e-12);
        let gi = g.inverse().unwrap();
        let (e3, e3d) = (g.col(2), gi.row(2));
        assert!(pt.q.distance(&dancing_core::linalg::ProjPoint::new(e3).unwrap()) < 1e-12);
        assert!(pt.p.distance(&dancing_core::linalg::ProjLine::new(e3d).unwrap()) < 1e-12);
        assert!((e3d.pair(&e3) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn coframe_reproduces_the_metric() {
    let mut rng = sample::rng(12);
    for _ in 0..50 {
        let cp = random_chart(&mut rng);
        let f = coframe_chart(&cp).unwrap();
        // 2η_aη^a in chart components
        let g = metric_chart(&cp).unwrap();
        let e = &f.coframe;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let two: f64 = (0..2).map(|a| e[a][i] * e[a + 2][j] + e[a + 2][i] * e[a][j]).sum();
                worst = worst.max((two - g[i][j]).abs());
                scale = scale.max(g[i][j].abs());
            }
        }
        assert!(worst < 1e-6 * scale, "{worst}");
        assert!(f.gram_defect() < 1e-8);
    }
}

#[test]
fn coframe_is_positively_oriented() {
    // orientation of (u₁, u₂, w₁, w₂): u a basis of T_q, w the 𝐠-dual basis of T_p
    let mut rng = sample::rng(13);
    for _ in 0..50 {
        let cp = random_chart(&mut rng);
        let f = coframe_chart(&cp).unwrap();
        let g = metric_chart(&cp).unwrap();
        let gqp = g[0][2] * g[1][3] - g[0][3] * g[1][2];
        // with u = (∂x, ∂y), w = (∂a, ∂b)·G_qp⁻ᵀ, so vol(u, w) = 1/det G_qp
        assert!(f.volume / gqp > 0.0);
        // the same basis expressed as a frame is (e₁, e₂, e¹, e²) up to GL₂ on each factor
        assert!(f.volume.abs() > 1e-6);
    }
}

#[test]
fn factor_planes_are_coordinate_planes_of_the_coframe() {
    let mut rng = sample::rng(14);
    for _ in 0..20 {
        let cp = random_chart(&mut rng);
        let f = coframe_chart(&cp).unwrap();
        let e = &f.coframe;
        // η₁ = η₂ = 0 on ∂x, ∂y and η¹ = η² = 0 on ∂a, ∂b
        for dir in 0..2 {
            assert!(e[2][dir].abs() < 1e-9 && e[3][dir].abs() < 1e-9);
            assert!(e[0][dir + 2].abs() < 1e-9 && e[1][dir + 2].abs() < 1e-9);
        }
    }
}

#[test]
fn curvature_is_einstein_self_dual_type_d() {
    let mut rng = sample::rng(15);
    for _ in 0..10 {
        let cp = random_chart(&mut rng);
        let r = curvature_report(&cp).unwrap();
        assert!((r.scalar + 12.0).abs() < 1e-3, "scalar {}", r.scalar);
        assert!(r.ricci0_norm < 1e-4);
        assert!(r.weyl_minus_norm < 1e-3 * r.weyl_plus_norm);
        let e = r.weyl_plus_eigs;
        let unit = e[2];
        for (got, want) in e.iter().zip([-2.0, 1.0, 1.0]) {
            assert!((got / unit - want).abs() < 1e-3, "{e:?}");
        }
        assert!((e.iter().sum::<f64>()).abs() < 1e-6);
        assert_eq!(r.petrov, "D");
        let mut factors: Vec<_> = r.principal_planes.iter().map(|p| p.factor).collect();
        factors.sort_by_key(|f| format!("{f:?}"));
        assert_eq!(factors, vec![Some(Factor::Line), Some(Factor::Point)]);
        assert!(r.self_adjoint_defect < 1e-4);
        assert!(r.connection_defect < 1e-5);
    }
}

#[test]
fn curvature_operator_is_diagonal_in_the_eta_bases() {
    let mut rng = sample::rng(16);
    for _ in 0..5 {
        let r = curvature_report(&random_chart(&mut rng)).unwrap();
        let want_p = [-3.0, 0.0, 0.0];
        for i in 0..3 {
            for j in 0..3 {
                let wp = if i == j { want_p[i] } else { 0.0 };
                let wm = if i == j { -1.0 } else { 0.0 };
                assert!((r.a_plus[i][j] - wp).abs() < 1e-5);
                assert!((r.a_minus[i][j] - wm).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn curvature_holds_up_near_incidence() {
    // the difference step scales with |D|
    let cp = ChartPoint::new(0.3, 1e-4, 0.2, 0.0).unwrap();
    let r = curvature_report(&cp).unwrap();
    assert!((r.scalar + 12.0).abs() < 1e-3, "{}", r.scalar);
    assert!(ChartPoint::new(0.0, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn report_serializes() {
    let r = curvature_report(&ChartPoint::new(0.1, 0.2, 0.3, 1.0).unwrap()).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    assert!(s.contains("\"petrov\":\"D\""));
}

#[test]
fn contact_graph_is_self_dual_and_not_principal() {
    let mut rng = sample::rng(17);
    for _ in 0..10 {
        let pt = loop {
            let pt = M4Point::random(&mut rng);
            if pt.to_chart().is_ok() {
                break pt;
            }
        };
        let ce = contact_psi(&pt, sample::uniform(&mut rng, 0.5, 2.0)).unwrap();
        let v = psi_graph_vector(&ce, &sample::vec3(&mut rng));
        let w = psi_graph_vector(&ce, &sample::vec3(&mut rng));
        let c = sd_classify(&pt, &v, &w).unwrap();
        assert_eq!(c.kind, PlaneKind::SelfDual);
        assert!(c.principal_defect > 1e-2, "{}", c.principal_defect);
    }
}

#[test]
fn factor_planes_are_principal_self_dual() {
    let mut rng = sample::rng(18);
    let pt = loop {
        let pt = M4Point::random(&mut rng);
        if pt.to_chart().is_ok() {
            break pt;
        }
    };
    let (q, p) = (pt.q.rep(), pt.p.rep());
    let v = M4Tangent { q, p, dq: sample::vec3(&mut rng), dp: Covec3::ZERO };
    let w = M4Tangent { q, p, dq: sample::vec3(&mut rng), dp: Covec3::ZERO };
    let c = sd_classify(&pt, &v, &w).unwrap();
    assert_eq!(c.kind, PlaneKind::SelfDual);
    assert!(c.principal_defect < 1e-6);
    let v = M4Tangent { q, p, dq: Vec3::ZERO, dp: sample::covec3(&mut rng) };
    let w = M4Tangent { q, p, dq: Vec3::ZERO, dp: sample::covec3(&mut rng) };
    let c = sd_classify(&pt, &v, &w).unwrap();
    assert_eq!(c.kind, PlaneKind::SelfDual);
    assert!(c.principal_defect < 1e-6);
}

#[test]
fn generic_and_dependent_planes() {
    let mut rng = sample::rng(19);
    let pt = M4Point::new(Vec3::new(0.2, -0.1, 1.0), Covec3::new(0.3, -1.0, 0.7)).unwrap();
    let v = M4Tangent::random(&pt, &mut rng);
    let w = M4Tangent::random(&pt, &mut rng);
    assert_eq!(sd_classify(&pt, &v, &w).unwrap().kind, PlaneKind::NotNull);
    assert!(sd_classify(&pt, &v, &v.rescaled(1.0, 1.0)).is_err());
}

#[test]
fn every_null_line_lies_in_one_sd_and_one_asd_plane() {
    let mut rng = sample::rng(20);
    for _ in 0..20 {
        let cp = random_chart(&mut rng);
        let f = coframe_chart(&cp).unwrap();
        // null in the frame: x¹y₁ + x²y₂ = 0
        let (x1, x2, y1) = (
            sample::uniform(&mut rng, -1.0, 1.0),
            sample::uniform(&mut rng, 0.5, 1.0),
            sample::uniform(&mut rng, -1.0, 1.0),
        );
        let n = f.vector(&[x1, x2, y1, -x1 * y1 / x2]);
        let planes = null_planes_through(&cp, &n).unwrap();
        let mut kinds: Vec<_> = planes.iter().map(|(k, _)| format!("{k:?}")).collect();
        kinds.sort();
        assert_eq!(kinds, vec!["AntiSelfDual", "SelfDual"]);
    }
}

#[test]
fn w_curve_adapted_lift_has_the_normal_form() {
    for y in [y1(1.0), y2(0.5), y3()] {
        let c = orbit_pair(y);
        for t in grid(-1.0, 1.0, 8) {
            let f = adapted_frame(&c, t).unwrap();
            assert!(f.pattern_defect() < 1e-8, "{}", f.pattern_defect());
            assert!((f.sigma.det() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn w_curve_lift_is_the_group_orbit() {
    for y in [y1(1.0), y2(0.5), y2(2.0), y3()] {
        let c = orbit_pair(y);
        let ts = grid(-1.0, 1.0, 20);
        let traj = lift_to_q5(&c, &ts).unwrap();
        for (t, pt) in ts.iter().zip(&traj.points) {
            let e = mat_exp(&y, *t);
            let ei = mat_exp(&y, -*t);
            let q = e.col(2);
            let p = ei.row(2);
            assert!((pt.q - q).norm() < 1e-8 && (pt.p - p).norm() < 1e-8);
        }
    }
}

#[test]
fn frozen_line_is_degenerate() {
    let q: CurveRef = Arc::new(PolyCurve::graph(&[0.0, 0.0, 1.0]));
    let p: CurveRef = Arc::new(PolyCurve {
        coeffs: [vec![0.3], vec![-1.0], vec![2.0]],
    });
    let c = NullCurve::new(q, p, 0.0, 1.0);
    let err = adapted_frame(&c, 0.5).unwrap_err();
    assert!(err.to_string().contains("degenerate"));
}

#[test]
fn non_null_curve_has_no_adapted_gauge() {
    let q: CurveRef = Arc::new(Circle::unit());
    let p: CurveRef = Arc::new(DualCurve {
        inner: Arc::new(Circle { r: 1.7, phase: 0.3 }),
    });
    let c = NullCurve::new(q, p, 0.0, 1.0);
    let err = adapted_frame(&c, 0.5).unwrap_err();
    assert!(err.to_string().contains("not null"));
}

#[test]
fn reparametrized_lift_traces_the_same_path() {
    let y = y1(0.7);
    let c = orbit_pair(y);
    let (alpha, beta) = (0.6, 0.2);
    let re = |inner: &CurveRef| -> CurveRef {
        Arc::new(AffineReparam {
            inner: inner.clone(),
            alpha,
            beta,
        })
    };
    let cr = NullCurve::new(re(&c.q), re(&c.p), -1.0, 1.0);
    for s in grid(-1.0, 1.0, 10) {
        let a = adapted_frame(&cr, s).unwrap();
        let b = adapted_frame(&c, alpha * s + beta).unwrap();
        // same Q⁵ point (σe₃, e³σ⁻¹); the gauge differs by an element of H
        assert!((a.sigma.col(2) - b.sigma.col(2)).norm() < 1e-9);
        let h = b.sigma.inverse().unwrap() * a.sigma;
        assert!(h.0[0][2].abs() + h.0[1][2].abs() + h.0[2][0].abs() + h.0[2][1].abs() < 1e-9);
        assert!((a.phi - alpha * b.phi).abs() < 1e-9);
    }
}

#[test]
fn round_trip_through_q5() {
    let mut rng = sample::rng(21);
    for _ in 0..3 {
        let ctl = TrigControl::random(&mut rng);
        let pt0 = Q5Point::random(&mut rng);
        let traj = integrate(&pt0, &|t| ctl.eval(t), 0.0, 2.0, 200, 1e-12).unwrap();
        let qs = SampledCurve::new(&traj.t, traj.points.iter().map(|p| p.q).collect()).unwrap();
        let ps = SampledCurve::new(&traj.t, traj.points.iter().map(|p| p.p.transpose()).collect()).unwrap();
        let c = NullCurve::new(Arc::new(qs), Arc::new(ps), 0.0, 2.0);
        let ts: Vec<f64> = traj.t[3..traj.t.len() - 3].to_vec();
        let res = parallel_sd_residual(&c, &ts).unwrap();
        assert!(res.iter().all(|r| *r < 1e-7), "{:e}", res.iter().fold(0.0f64, |m, r| m.max(*r)));
        let lifted = lift_to_q5(&c, &ts).unwrap();
        let mut worst = 0.0f64;
        for (pt, orig) in lifted.points.iter().zip(&traj.points[3..]) {
            worst = worst.max((pt.q - orig.q).norm() + (pt.p - orig.p).norm());
        }
        assert!(worst < 1e-7, "{worst:e}");
        assert!(lifted.integral_residual() < 1e-6);
    }
}

#[test]
fn rescaled_lift_is_not_integral() {
    let c = orbit_pair(y2(1.0));
    let ts = grid(-1.0, 1.0, 200);
    let lifted = lift_to_q5(&c, &ts).unwrap();
    assert!(lifted.integral_residual() < 1e-8);
    for lam in [0.9, 1.05, -1.0] {
        let moved = dancing_core::cartan_engel::Q5Trajectory::new(
            ts.clone(),
            lifted.points.iter().map(|p| p.fiber(lam)).collect(),
            "rescaled",
        );
        assert!(moved.integral_residual() > 1e-2);
    }
}

#[test]
fn concentric_circles_are_null_but_not_half_geodesic() {
    let c = concentric_pair();
    assert!(c.null_residual(40).unwrap() < 1e-12);
    let ts = grid(0.0, 3.0, 30);
    let res = parallel_sd_residual(&c, &ts).unwrap();
    assert!(res.iter().all(|r| *r > 1e-2), "{res:?}");
    let err = lift_to_q5(&c, &ts).unwrap_err();
    assert!(err.to_string().contains("not a dancing pair"));
}

#[test]
fn straight_line_pair_reports_a_value() {
    // q runs along the x-axis, p turns about (−1, 0)
    let q: CurveRef = Arc::new(PolyCurve {
        coeffs: [vec![0.0, 1.0], vec![0.0], vec![1.0]],
    });
    let p: CurveRef = Arc::new(PolyCurve {
        coeffs: [vec![0.0, 1.0], vec![-1.0], vec![0.0, 1.0]],
    });
    let c = NullCurve::new(q, p, 0.5, 1.5);
    assert!(c.null_residual(10).unwrap() < 1e-12);
    let res = parallel_sd_residual(&c, &grid(0.5, 1.5, 4)).unwrap();
    assert!(res.iter().all(|r| r.is_finite()));
}
