use std::sync::Arc;

use dancing_core::cartan_engel::{integrate, q5_jet, Q5Point, TrigControl};
use dancing_core::curves::*;
use dancing_core::linalg::{cross_ratio_raw, Mat3, Vec3};
use dancing_core::projective::*;
use dancing_core::sample;

fn y1(a: f64) -> Mat3 {
    Mat3([[1.0, 0.0, 1.0], [0.0, -1.0, a], [a, -1.0, 0.0]])
}
fn y2(b: f64) -> Mat3 {
    Mat3([[0.0, 1.0, b], [-1.0, 0.0, 0.0], [0.0, -b, 0.0]])
}
fn y3() -> Mat3 {
    Mat3([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
}

fn orbit(y: Mat3, dual: bool) -> CurveRef {
    Arc::new(OrbitCurve {
        y,
        v0: Vec3::basis(2),
        dual,
    })
}

/// (cos t, sin t, 1 + ε cos 3t): an oval that is not a conic.
struct Wobbly(f64);
impl PlaneCurve for Wobbly {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        (0..=n)
            .map(|k| {
                let s = k as f64 * std::f64::consts::FRAC_PI_2;
                let z = self.0 * 3f64.powi(k as i32) * (3.0 * t + s).cos();
                Vec3::new((t + s).cos(), (t + s).sin(), if k == 0 { 1.0 + z } else { z })
            })
            .collect()
    }
}

/// Cross-ratio of four reals.
fn cr4(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let v = |x: f64| Vec3::new(x, 1.0, 0.0);
    cross_ratio_raw(&v(a), &v(b), &v(c), &v(d))
}

/// Cross-ratio of four points of ℝP¹ in homogeneous form.
fn cr4h(p: &[LFPoint]) -> f64 {
    let v = |x: &LFPoint| Vec3::new(x.tbar_h[0], x.tbar_h[1], 0.0);
    cross_ratio_raw(&v(&p[0]), &v(&p[1]), &v(&p[2]), &v(&p[3]))
}

#[test]
fn schwarzian_kernel_and_chain_rule() {
    let mob = |t: f64| (2.0 * t + 1.0) / (0.5 * t + 3.0);
    for t in [-1.0, 0.0, 2.0] {
        assert!(schwarzian(&mob, t, 1e-2).unwrap().abs() < 1e-8);
    }
    // S(f∘g) = S(f)∘g · g′² + S(g)
    let f = |x: f64| x.exp() + x;
    let g = |t: f64| t * t + 0.3 * t;
    let fg = |t: f64| f(g(t));
    for t in [0.2, 0.9] {
        let h = 1e-2;
        let dg = (g(t + h) - g(t - h)) / (2.0 * h);
        let lhs = schwarzian(&fg, t, h).unwrap();
        let rhs = schwarzian(&f, g(t), h).unwrap() * dg * dg + schwarzian(&g, t, h).unwrap();
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} {rhs}");
    }
    assert!(schwarzian(&|_| 1.0, 0.0, 1e-2).is_err());
}

#[test]
fn taut_consistency_on_wobbly_curve() {
    let c = Wobbly(0.1);
    for t in [0.1, 1.0, 2.5] {
        let tc = taut_coeffs(&c, t).unwrap();
        let a = c.jet(t, 3);
        let res = a[3] + a[2] * tc.a2 + a[1] * tc.a1 + a[0] * tc.a0;
        assert!(res.norm() < 1e-12 * a[3].norm().max(1.0));
        // I′ against differences
        let h = 1e-5;
        let ip = (taut_coeffs(&c, t + h).unwrap().i - taut_coeffs(&c, t - h).unwrap().i) / (2.0 * h);
        assert!((ip - tc.di).abs() < 1e-8);
        // P′ against differences
        let pp = (taut_coeffs(&c, t + h).unwrap().p - taut_coeffs(&c, t - h).unwrap().p) / (2.0 * h);
        assert!((pp - tc.dp).abs() < 1e-7 * (1.0 + pp.abs()), "{pp} {}", tc.dp);
    }
}

#[test]
fn rescaling_and_reparametrization_covariance() {
    let base: CurveRef = Arc::new(Wobbly(0.15));
    let lam = vec![2.0, 0.3, 0.1];
    let scaled = ScaledCurve {
        inner: base.clone(),
        lambda: lam.clone(),
    };
    let (alpha, beta) = (1.7, 0.4);
    let rep = AffineReparam {
        inner: base.clone(),
        alpha,
        beta,
    };
    for t in [0.0, 0.7, 1.9] {
        let i0 = taut_coeffs(base.as_ref(), t).unwrap();
        let l = lam[0] + lam[1] * t + lam[2] * t * t;
        let i1 = taut_coeffs(&scaled, t).unwrap();
        assert!((i1.i - l.powi(3) * i0.i).abs() < 1e-12 * i1.i.abs());
        // P and Q do not see the gauge
        assert!((i1.p - i0.p).abs() < 1e-10 * (1.0 + i0.p.abs()), "{} {}", i1.p, i0.p);
        assert!((i1.q - i0.q).abs() < 1e-10 * (1.0 + i0.q.abs()), "{} {}", i1.q, i0.q);
        let s = (t - beta) / alpha;
        let i2 = taut_coeffs(&rep, s).unwrap();
        assert!((i2.i - alpha.powi(3) * i0.i).abs() < 1e-12 * i2.i.abs());
    }
}

#[test]
fn circle_lf_matches_half_tangent() {
    let c: CurveRef = Arc::new(Circle::unit());
    let lf = lf_normalize(c, -1.0, 1.0).unwrap();
    assert!(lf.max_certificate < 1e-7, "{}", lf.max_certificate);
    assert!(lf.max_i_defect < 1e-7);
    let ts = [-0.8, -0.1, 0.4, 0.9];
    let tb: Vec<LFPoint> = ts.iter().map(|t| lf.at(*t).unwrap()).collect();
    let tan: Vec<f64> = ts.iter().map(|t| (t / 2.0).tan()).collect();
    let (a, b) = (cr4h(&tb), cr4(tan[0], tan[1], tan[2], tan[3]));
    assert!((a - b).abs() < 1e-9, "{a} {b}");
    // a circle is a conic: r = 0
    for t in ts {
        assert!(lf.at(t).unwrap().r.abs() < 1e-9);
    }
}

#[test]
fn lf_is_unique_up_to_mobius() {
    let c: CurveRef = Arc::new(Wobbly(0.1));
    let a = lf_normalize(c.clone(), 0.0, 3.0).unwrap();
    let b = lf_normalize_with(c, 0.0, 3.0, [1.0, 0.5, -0.3, 2.0]).unwrap();
    assert!(a.max_certificate < 1e-7 && b.max_certificate < 1e-7);
    assert!(a.max_i_defect < 1e-7 && b.max_i_defect < 1e-7);
    let ts = [0.3, 1.1, 1.7, 2.6];
    let pa: Vec<LFPoint> = ts.iter().map(|t| a.at(*t).unwrap()).collect();
    let pb: Vec<LFPoint> = ts.iter().map(|t| b.at(*t).unwrap()).collect();
    let (ca, cb) = (cr4h(&pa), cr4h(&pb));
    assert!((ca - cb).abs() < 1e-7);
    // r dt̄³ is a cubic differential on the curve
    for (x, y) in pa.iter().zip(&pb) {
        let (u, v) = (x.r * x.fprime.powi(3), y.r * y.fprime.powi(3));
        assert!((u - v).abs() < 1e-7 * (1.0 + u.abs()));
    }
}

#[test]
fn conic_is_already_lf() {
    let c: CurveRef = Arc::new(PolyCurve::conic());
    let lf = lf_normalize(c.clone(), -2.0, 2.0).unwrap();
    for t in [-1.5, 0.0, 1.2] {
        let p = lf.at(t).unwrap();
        assert!(p.r.abs() < 1e-12);
        assert!(p.certificate() < 1e-7);
        // t̄ is an affine function of t: [u₁ : u₂] = [t + 2 : 1]
        assert!((p.tbar_h[0] - (t + 2.0)).abs() < 1e-9 && (p.tbar_h[1] - 1.0).abs() < 1e-12);
        assert_eq!(arc_density(c.as_ref(), t).unwrap(), 0.0);
        assert!(lf.curvature(t).is_err());
    }
}

#[test]
fn y3_density_is_constant_and_dual_flips_it() {
    let q = orbit(y3(), false);
    let p = orbit(y3(), true);
    let lq = lf_normalize(q, 0.0, 2.0).unwrap();
    let lp = lf_normalize(p, 0.0, 2.0).unwrap();
    for t in [0.2, 0.9, 1.7] {
        let (a, b) = (lq.at(t).unwrap(), lp.at(t).unwrap());
        assert!((a.arc_density() + 1.0).abs() < 1e-9, "{}", a.arc_density());
        assert!((b.arc_density() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn duality_reverses_r() {
    let c: CurveRef = Arc::new(Wobbly(0.12));
    let d: CurveRef = Arc::new(DualCurve { inner: c.clone() });
    let a = lf_normalize(c, 0.0, 2.0).unwrap();
    let b = lf_normalize(d, 0.0, 2.0).unwrap();
    for t in [0.3, 1.0, 1.6] {
        let (x, y) = (a.at(t).unwrap(), b.at(t).unwrap());
        assert!((x.tbar - y.tbar).abs() < 1e-9);
        assert!((x.r + y.r).abs() < 1e-7 * (1.0 + x.r.abs()), "{} {}", x.r, y.r);
    }
}

#[test]
fn w_curve_curvatures() {
    let cases = [
        (y3(), 0.0),
        (y2(1.0), 0.5),
        (y2(2.0), 0.5 * 2f64.powf(-4.0 / 3.0)),
        (y1(1.0), -(32f64).powf(-1.0 / 3.0)),
        (y1(0.5), -(32f64 * 0.25).powf(-1.0 / 3.0)),
    ];
    for (y, kappa) in cases {
        for dual in [false, true] {
            let lf = lf_normalize(orbit(y, dual), 0.0, 1.5).unwrap();
            for t in [0.3, 0.75, 1.2] {
                let k = proj_curvature(&lf, t).unwrap();
                assert!((k - kappa).abs() < 1e-4, "κ = {k}, want {kappa}");
            }
        }
    }
}

/// A curve known only through one jet (evaluation ignores t).
struct FixedJet(Vec<Vec3>);
impl PlaneCurve for FixedJet {
    fn jet(&self, _t: f64, n: usize) -> Vec<Vec3> {
        (0..=n).map(|k| self.0.get(k).copied().unwrap_or(Vec3::ZERO)).collect()
    }
}

#[test]
fn torsion_and_frame_dual_along_integrated_solution() {
    let mut rng = sample::rng(41);
    let pt0 = Q5Point::random(&mut rng);
    let ctl = TrigControl::random(&mut rng);
    let tr = integrate(&pt0, &|t| ctl.eval(t), 0.0, 4.0, 200, 1e-12).unwrap();
    let qs = SampledCurve::new(&tr.t, tr.points.iter().map(|p| p.q).collect()).unwrap();
    for i in (3..tr.t.len() - 3).step_by(7) {
        let t = tr.t[i];
        // exact jets through the integrated state
        let (qj, _) = q5_jet(&tr.points[i], &ctl.taylor(t, 3), 3);
        let jc = FixedJet(qj);
        let tau = centro_affine_torsion(&jc, t).unwrap();
        assert!((tau + 1.0).abs() < 1e-9, "{tau}");
        let p = frame_dual(&jc, t).unwrap();
        assert!((p - tr.points[i].p).norm() < 1e-9);
        assert!(frame_dual_residual(&jc, t).unwrap() < 1e-9);
        // the same from stencils on the output grid
        let st = centro_affine_torsion(&qs, t).unwrap();
        assert!((st + 1.0).abs() < 1e-4, "{st}");
        let p = frame_dual(&qs, t).unwrap();
        assert!((p - tr.points[i].p).norm() < 1e-7);
        assert!((p.pair(&qs.eval(t)) - 1.0).abs() < 1e-14);
        assert!(frame_dual_residual(&qs, t).unwrap() < 1e-4);
    }
}

#[test]
fn torsion_of_planar_conics_vanishes() {
    assert_eq!(centro_affine_torsion(&PolyCurve::conic(), 0.4).unwrap(), 0.0);
    assert!(centro_affine_torsion(&Circle::unit(), 0.4).unwrap().abs() < 1e-16);
    // a generic curve does not satisfy p′ = q×q′ with its frame dual
    assert!(frame_dual_residual(&Wobbly(0.2), 0.5).unwrap() > 1e-2);
}

#[test]
fn mucho_on_w_curve() {
    let (q, p) = (orbit(y2(1.0), false), orbit(y2(1.0), true));
    let ts: Vec<f64> = (0..20).map(|i| 0.1 * i as f64).collect();
    let rep = mucho_check_curves(q.as_ref(), p.as_ref(), &ts).unwrap();
    assert!(rep.max < 1e-8, "{rep:?}");
}

#[test]
fn mucho_on_integrated_solutions() {
    let mut rng = sample::rng(42);
    for _ in 0..3 {
        let pt0 = Q5Point::random(&mut rng);
        let ctl = TrigControl::random(&mut rng);
        let tr = integrate(&pt0, &|t| ctl.eval(t), 0.0, 3.0, 150, 1e-12).unwrap();
        let rep = mucho_check_control(&tr, &|t, n| ctl.taylor(t, n)).unwrap();
        assert!(rep.items[0] < 1e-9, "{rep:?}");
        assert!(rep.max < 1e-6, "{rep:?}");
        // stencil derivatives on the output grid: orthogonality items still hold
        let rep = mucho_check(&tr).unwrap();
        assert!(rep.items[0] < 1e-9, "{rep:?}");
    }
}

#[test]
fn dancing_pair_shares_projective_parameter() {
    let mut rng = sample::rng(43);
    let pt0 = Q5Point::random(&mut rng);
    let ctl = TrigControl::random(&mut rng);
    let tr = integrate(&pt0, &|t| ctl.eval(t), 0.0, 3.0, 300, 1e-12).unwrap();
    let qs = SampledCurve::new(&tr.t, tr.points.iter().map(|p| p.q).collect()).unwrap();
    let ps = SampledCurve::new(&tr.t, tr.points.iter().map(|p| p.p.transpose()).collect()).unwrap();
    for i in (10..tr.t.len() - 10).step_by(20) {
        let t = tr.t[i];
        let (a, b) = (taut_coeffs(&qs, t).unwrap(), taut_coeffs(&ps, t).unwrap());
        assert!((a.p - b.p).abs() < 1e-6 * (1.0 + a.p.abs()), "{} {}", a.p, b.p);
    }
    // closed-form orbit, and through the LF solutions
    let (q, p) = (orbit(y1(0.7), false), orbit(y1(0.7), true));
    let (lq, lp) = (lf_normalize(q, 0.0, 1.0).unwrap(), lf_normalize(p, 0.0, 1.0).unwrap());
    for t in [0.2, 0.6] {
        let (a, b) = (lq.at(t).unwrap(), lp.at(t).unwrap());
        assert!((a.p - b.p).abs() < 1e-9 && (a.tbar - b.tbar).abs() < 1e-9);
    }
}

#[test]
fn inflection_inside_window_rejected() {
    let cubic: CurveRef = Arc::new(PolyCurve::graph(&[0.0, 0.0, 0.0, 1.0]));
    let e = lf_normalize(cubic, -1.0, 1.0).err().unwrap();
    assert!(e.to_string().contains("inflection"));
}
