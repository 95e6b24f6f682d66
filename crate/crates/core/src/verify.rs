//! Named verification suites: each check reports a residual against a
//! threshold. Reports are deterministic for a given seed.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::cartan_engel::{
    algebra_dimension, bracket_consistency, field_symmetry_residual, growth_vector, integrate, random_points,
    symmetry_residual, QScaling, Q5Point, TrajectoryCurve, TrigControl,
};
use crate::curvature::{curvature_report, lift_to_q5, NullCurve};
use crate::curves::{Circle, CurveRef, DualCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::linalg::{cross_vv, det3c, Covec3, Vec3};
use crate::mates::{circle_mates, mate_verify, mate_verify_pair, wcurve_make, WFamily};
use crate::metric::{
    cross_ratio_metric_extrapolated, metric_eval, q5_to_contact, ChartPoint, M4Point, M4Tangent,
};
use crate::octonion::{
    equivariance_residual, g2_bracket, iota_pullback, leibniz_residual, omega_kernel_dim, random_cone_point,
    random_g2, random_zorn, rho_antisymmetry_residual, zorn_conj, zorn_mul, zorn_norm, G2Param, ZornOctonion,
};
use crate::projective::{lf_normalize, mucho_check_control, proj_curvature};
use crate::rolling::{contact_order_fit, parallel_transport_line, psi_acceleration_residual, no_slip_residual, RollingPair};
use crate::sample::{self, SampleRng};

pub const SCHEMA: u32 = 1;

/// Amplitude factor for random controls integrated over long windows.
pub const BOUNDED_CONTROL: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// residual ≤ threshold
    Max,
    /// residual ≥ threshold
    Min,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn max(name: &str, residual: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            residual,
            threshold,
            bound: Bound::Max,
            pass: residual.is_finite() && residual <= threshold,
            note: None,
        }
    }

    pub fn min(name: &str, residual: f64, threshold: f64) -> Check {
        Check {
            name: name.to_string(),
            residual,
            threshold,
            bound: Bound::Min,
            pass: residual.is_finite() && residual >= threshold,
            note: None,
        }
    }

    /// Integer-valued check; residual = |got − want|.
    pub fn exact(name: &str, got: usize, want: usize) -> Check {
        let mut c = Check::max(name, got.abs_diff(want) as f64, 0.0);
        c.note = Some(format!("got {got}, want {want}"));
        c
    }

    pub fn failed(name: &str, err: &Error) -> Check {
        Check {
            name: name.to_string(),
            residual: f64::NAN,
            threshold: 0.0,
            bound: Bound::Max,
            pass: false,
            note: Some(err.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }

    fn scaled(mut self, tol: f64) -> Check {
        if self.note.as_deref().is_some_and(|n| n.starts_with("got ")) {
            return self;
        }
        self.threshold = match self.bound {
            Bound::Max => self.threshold * tol,
            Bound::Min => self.threshold / tol,
        };
        self.pass = self.residual.is_finite()
            && match self.bound {
                Bound::Max => self.residual <= self.threshold,
                Bound::Min => self.residual >= self.threshold,
            };
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Octonion,
    Distribution,
    Symmetry,
    Metric,
    Curvature,
    Mates,
    Rolling,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] =
        ["octonion", "distribution", "symmetry", "metric", "curvature", "mates", "rolling", "all"];

    fn members(self) -> Vec<Suite> {
        use Suite::*;
        match self {
            All => vec![Octonion, Distribution, Symmetry, Metric, Curvature, Mates, Rolling],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        use Suite::*;
        Ok(match s {
            "octonion" => Octonion,
            "distribution" => Distribution,
            "symmetry" => Symmetry,
            "metric" => Metric,
            "curvature" => Curvature,
            "mates" => Mates,
            "rolling" => Rolling,
            "all" => All,
            _ => {
                return Err(Error::Parse(format!(
                    "unknown suite '{s}' (expected one of {})",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub suite: Suite,
    pub seed: u64,
    /// Multiplier applied to every continuous threshold.
    pub tol: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Run a suite. `tol` multiplies every continuous threshold (divides lower
/// bounds); integer checks are unaffected.
pub fn run_suite(suite: Suite, seed: u64, tol: f64) -> Result<Report> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::domain(format!("tolerance multiplier must be positive, got {tol}")));
    }
    type Job = fn(u64) -> Vec<Check>;
    let mut jobs: Vec<Job> = Vec::new();
    for s in suite.members() {
        let part: &[Job] = match s {
            Suite::Octonion => &[octonion_algebra as Job, octonion_geometry][..],
            Suite::Distribution => &[distribution_growth as Job, distribution_integration][..],
            Suite::Symmetry => &[symmetry_fields as Job, symmetry_algebra][..],
            Suite::Metric => &[metric_checks as Job][..],
            Suite::Curvature => &[curvature_constants as Job, curvature_round_trip][..],
            Suite::Mates => &[mates_circle as Job, mates_counterexample, mates_wcurves, mates_lemma][..],
            Suite::Rolling => &[rolling_conics as Job, rolling_pairs][..],
            Suite::All => unreachable!(),
        };
        jobs.extend_from_slice(part);
    }
    let mut checks: Vec<Check> = jobs
        .par_iter()
        .flat_map_iter(|job| job(seed))
        .map(|c| c.scaled(tol))
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = checks.iter().all(|c| c.pass);
    Ok(Report {
        schema: SCHEMA,
        suite,
        seed,
        tol,
        passed,
        checks,
    })
}

fn rng_for(seed: u64, stream: u64) -> SampleRng {
    sample::rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(stream))
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn octonion_algebra(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 1);
    let mut leib = 0.0f64;
    let mut conj = 0.0f64;
    let mut norm = 0.0f64;
    for _ in 0..100 {
        let g = random_g2(&mut r);
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        leib = leib.max(leibniz_residual(&g, &a, &b));
        let lhs = zorn_conj(&zorn_mul(&a, &b));
        let rhs = zorn_mul(&zorn_conj(&b), &zorn_conj(&a));
        conj = conj.max(lhs.sub(&rhs).norm_inf());
        let w = zorn_mul(&a, &zorn_conj(&a));
        norm = norm.max(w.sub(&ZornOctonion::one().scale(zorn_norm(&a))).norm_inf());
    }
    let basis = G2Param::basis();
    let anti = max_of(basis.iter().map(rho_antisymmetry_residual));
    let mut closure = Check::max("octonion.bracket_closure", 0.0, 1e-12);
    for a in &basis {
        for b in &basis {
            if let Err(e) = g2_bracket(a, b) {
                closure = Check::failed("octonion.bracket_closure", &e);
            }
        }
    }
    vec![
        Check::max("octonion.leibniz", leib, 1e-11),
        Check::max("octonion.conj_reverses_products", conj, 1e-12),
        Check::max("octonion.times_conjugate_is_norm", norm, 1e-12),
        Check::max("octonion.rho_antisymmetry", anti, 1e-12),
        closure,
    ]
}

fn octonion_geometry(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 2);
    let mut bad_rank = 0usize;
    for _ in 0..100 {
        if omega_kernel_dim(&random_cone_point(&mut r)) != 3 {
            bad_rank += 1;
        }
    }
    let mut on_d = 0.0f64;
    let mut off_d = f64::INFINITY;
    for pt in random_points(seed ^ 0x0c7a, 100) {
        match crate::cartan_engel::dist_frame(&pt) {
            Ok((f1, f2)) => {
                for f in [f1, f2] {
                    on_d = on_d.max(iota_pullback(&pt.q, &pt.p, &f.dq, &f.dp).norm_inf());
                }
            }
            Err(_) => on_d = f64::NAN,
        }
        let dq = sample::vec3(&mut r);
        let dp0 = sample::covec3(&mut r);
        let dp = dp0 - pt.p * (dp0.pair(&pt.q) + pt.p.pair(&dq));
        let v = iota_pullback(&pt.q, &pt.p, &dq, &dp).norm_inf() / (dq.norm() + dp.norm());
        off_d = off_d.min(v);
    }
    let mut equi = 0.0f64;
    for _ in 0..50 {
        let g = sample::sl3_group(&mut r);
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        equi = equi.max(equivariance_residual(&g, &a, &b).unwrap_or(f64::NAN));
    }
    vec![
        Check::exact("octonion.omega_kernel_rank_off_3", bad_rank, 0),
        Check::max("octonion.pullback_kills_distribution", on_d, 1e-12),
        Check::min("octonion.pullback_detects_generic_tangent", off_d, 1e-3),
        Check::max("octonion.sl3_equivariance", equi, 1e-11),
    ]
}

fn distribution_growth(seed: u64) -> Vec<Check> {
    let mut pts = vec![Q5Point::base()];
    pts.extend(random_points(seed ^ 0x6a0, 100));
    let bad = pts.iter().filter(|p| growth_vector(p) != (2, 3, 5)).count();
    vec![Check::exact("distribution.growth_vector_235", bad, 0)]
}

fn distribution_integration(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 3);
    let mut constraint = 0.0f64;
    let mut integral = 0.0f64;
    for _ in 0..3 {
        let pt0 = Q5Point::random(&mut r);
        let ctl = TrigControl::random(&mut r).scaled(BOUNDED_CONTROL);
        match integrate(&pt0, &|t| ctl.eval(t), 0.0, 10.0, 2000, 1e-10) {
            Ok(tr) => {
                constraint = constraint.max(tr.max_constraint);
                integral = integral.max(tr.integral_residual());
            }
            Err(e) => return vec![Check::failed("distribution.quadric_conserved", &e)],
        }
    }
    vec![
        Check::max("distribution.quadric_conserved", constraint, 1e-9),
        Check::max("distribution.integral_curve", integral, 1e-8),
    ]
}

fn symmetry_fields(_seed: u64) -> Vec<Check> {
    let basis = G2Param::basis();
    let worst = max_of(basis.iter().map(symmetry_residual));
    let scaling = field_symmetry_residual(&QScaling, &random_points(0x5ca1e, 20));
    vec![
        Check::max("symmetry.basis_fields", worst, 1e-9),
        Check::min("symmetry.q_scaling_is_not_a_symmetry", scaling, 1e-3),
    ]
}

fn symmetry_algebra(seed: u64) -> Vec<Check> {
    let basis = G2Param::basis();
    let dim = algebra_dimension(&basis);
    let pts = random_points(seed ^ 0xb4, 5);
    let mut worst = 0.0f64;
    let mut r = rng_for(seed, 4);
    for _ in 0..10 {
        let (a, b) = (random_g2(&mut r), random_g2(&mut r));
        match bracket_consistency(&a, &b, &pts) {
            Ok(v) => worst = worst.max(v / (1.0 + a.norm() * b.norm())),
            Err(e) => return vec![Check::exact("symmetry.dimension", dim, 14), Check::failed("symmetry.bracket_consistency", &e)],
        }
    }
    vec![
        Check::exact("symmetry.dimension", dim, 14),
        Check::max("symmetry.bracket_consistency", worst, 1e-8),
    ]
}

fn metric_checks(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 5);
    let mut cr = 0.0f64;
    let mut inv = 0.0f64;
    let mut gauge = 0.0f64;
    let mut n = 0;
    while n < 20 {
        let pt = M4Point::random(&mut r);
        let v = M4Tangent::random(&pt, &mut r);
        let g = metric_eval(&v, &v).unwrap_or(f64::NAN);
        if g.abs() < 1e-3 {
            continue;
        }
        n += 1;
        let est = cross_ratio_metric_extrapolated(&v, 1e-2).unwrap_or(f64::NAN);
        cr = cr.max((est - g).abs() / g.abs());
        let s = sample::sl3_group(&mut r);
        let si = s.inverse().expect("det 1");
        let moved = M4Tangent {
            q: s.mul_vec(&v.q),
            p: v.p.mul_mat(&si),
            dq: s.mul_vec(&v.dq),
            dp: v.dp.mul_mat(&si),
        };
        let gm = metric_eval(&moved, &moved).unwrap_or(f64::NAN);
        inv = inv.max((gm - g).abs() / g.abs());
        let (a, b) = (sample::uniform(&mut r, -3.0, 3.0), sample::uniform(&mut r, -3.0, 3.0));
        let gg = metric_eval(&v.gauge(a, b), &v.gauge(a, b)).unwrap_or(f64::NAN);
        gauge = gauge.max((gg - g).abs() / (1.0 + g.abs()));
    }
    let (q, p) = concentric_pair();
    let dancing = max_of(
        grid(0.0, 6.0, 24)
            .iter()
            .map(|t| crate::metric::dancing_residual(q.as_ref(), p.as_ref(), *t).unwrap_or(f64::NAN)),
    );
    vec![
        Check::max("metric.cross_ratio_relative", cr, 1e-5),
        Check::max("metric.sl3_invariance", inv, 1e-10),
        Check::max("metric.gauge_invariance", gauge, 1e-10),
        Check::max("metric.concentric_circles_dance", dancing, 1e-12),
    ]
}

fn random_chart(r: &mut SampleRng) -> ChartPoint {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| sample::uniform(r, -1.0, 1.0));
        if let Ok(cp) = ChartPoint::new(v[0], v[1], v[2], v[3]) {
            if cp.denom().abs() > 0.2 {
                return cp;
            }
        }
    }
}

fn curvature_constants(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 6);
    let pts: Vec<ChartPoint> = (0..20).map(|_| random_chart(&mut r)).collect();
    let reps: Vec<_> = pts.par_iter().map(curvature_report).collect();
    let mut scalar = 0.0f64;
    let mut ric = 0.0f64;
    let mut wminus = 0.0f64;
    let mut ratio = 0.0f64;
    let mut not_d = 0usize;
    for rep in &reps {
        match rep {
            Ok(c) => {
                scalar = scalar.max((c.scalar + 12.0).abs());
                ric = ric.max(c.ricci0_norm);
                wminus = wminus.max(c.weyl_minus_norm / c.weyl_plus_norm);
                let e = c.weyl_plus_eigs;
                let unit = -e[0] / 2.0;
                ratio = ratio.max(((e[1] / unit) - 1.0).abs()).max(((e[2] / unit) - 1.0).abs());
                if c.petrov != "D" {
                    not_d += 1;
                }
            }
            Err(e) => return vec![Check::failed("curvature.report", e)],
        }
    }
    vec![
        Check::max("curvature.scalar_minus_12", scalar, 1e-3),
        Check::max("curvature.traceless_ricci", ric, 1e-3),
        Check::max("curvature.weyl_minus_over_plus", wminus, 1e-3),
        Check::max("curvature.weyl_plus_ratio_211", ratio, 1e-3),
        Check::exact("curvature.petrov_not_d", not_d, 0),
    ]
}

fn curvature_round_trip(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 7);
    let pt0 = Q5Point::random(&mut r);
    let ctl = TrigControl::random(&mut r);
    let traj = match integrate(&pt0, &|t| ctl.eval(t), 0.0, 2.0, 200, 1e-12) {
        Ok(t) => t,
        Err(e) => return vec![Check::failed("curvature.q5_round_trip", &e)],
    };
    let build = || -> Result<(f64, f64)> {
        let qs = SampledCurve::new(&traj.t, traj.points.iter().map(|p| p.q).collect())?;
        let ps = SampledCurve::new(&traj.t, traj.points.iter().map(|p| p.p.transpose()).collect())?;
        let c = NullCurve::new(Arc::new(qs), Arc::new(ps), 0.0, 2.0);
        let ts: Vec<f64> = traj.t[3..traj.t.len() - 3].to_vec();
        let lifted = lift_to_q5(&c, &ts)?;
        let dist = max_of(
            lifted
                .points
                .iter()
                .zip(&traj.points[3..])
                .map(|(a, b)| (a.q - b.q).norm() + (a.p - b.p).norm()),
        );
        // a rescaled lift along the same projection is not integral
        let moved = crate::cartan_engel::Q5Trajectory::new(
            lifted.t.clone(),
            lifted.points.iter().map(|p| p.fiber(1.05)).collect(),
            "rescaled",
        );
        Ok((dist, moved.integral_residual()))
    };
    match build() {
        Ok((d, m)) => vec![
            Check::max("curvature.q5_round_trip", d, 1e-7),
            Check::min("curvature.rescaled_lift_not_integral", m, 1e-3),
        ],
        Err(e) => vec![Check::failed("curvature.q5_round_trip", &e)],
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn concentric_pair() -> (CurveRef, CurveRef) {
    let q: CurveRef = Arc::new(Circle::unit());
    let big: CurveRef = Arc::new(Circle {
        r: 2f64.sqrt(),
        phase: std::f64::consts::FRAC_PI_4,
    });
    (q, Arc::new(DualCurve { inner: big }))
}

fn mates_circle(_seed: u64) -> Vec<Check> {
    let ms = match circle_mates([1.0, 0.0, 1.0], (-2.6, 6.0)) {
        Ok(m) => m,
        Err(e) => return vec![Check::failed("mates.circle.solve", &e)],
    };
    let rep = mate_verify(&ms, &grid(-2.4, 5.8, 40));
    vec![
        Check::max("mates.circle.dancing", rep.dancing, 1e-7),
        Check::max("mates.circle.involute_constant", rep.involute_constant, 1e-6),
        Check::max("mates.circle.shared_a1", rep.shared_a1, 1e-6),
        Check::max("mates.circle.parallel_sd", rep.parallel_sd, 1e-6),
        Check::max("mates.circle.b_triple", rep.b_triple, 1e-6),
        Check::max("mates.circle.torsion", rep.torsion.unwrap_or(f64::NAN), 1e-6),
        Check::max("mates.circle.first_integral_drift", ms.first_integral_drift(), 1e-8),
    ]
}

fn mates_counterexample(_seed: u64) -> Vec<Check> {
    let (q, p) = concentric_pair();
    let ts = grid(0.0, 3.0, 12);
    let rep = mate_verify_pair(q.clone(), p.clone(), &ts);
    let c = NullCurve::new(q, p, 0.0, 3.0);
    let rejected = match lift_to_q5(&c, &ts) {
        Ok(_) => Check::exact("mates.counterexample.lift_rejected", 0, 1),
        Err(e) => Check::exact("mates.counterexample.lift_rejected", 1, 1).with_note(e.to_string()),
    };
    vec![
        Check::max("mates.counterexample.dancing", rep.dancing, 1e-12),
        Check::min("mates.counterexample.involute_constant", rep.involute_constant, 1e-2),
        Check::min("mates.counterexample.parallel_sd", rep.parallel_sd, 1e-2),
        rejected,
    ]
}

fn mates_wcurves(_seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let want = [-(32f64.cbrt()).recip(), 0.5, 0.0];
    for ((f, a), k_want) in [(WFamily::Y1, Some(1.0)), (WFamily::Y2, Some(1.0)), (WFamily::Y3, None)]
        .into_iter()
        .zip(want)
    {
        let name = format!("{f:?}").to_lowercase();
        let s = match wcurve_make(f, a) {
            Ok(s) => s,
            Err(e) => {
                out.push(Check::failed(&format!("mates.wcurve.{name}"), &e));
                continue;
            }
        };
        out.push(Check::max(
            &format!("mates.wcurve.{name}.integral"),
            s.trajectory(-1.0, 1.0, 400).integral_residual(),
            1e-9,
        ));
        out.push(Check::max(&format!("mates.wcurve.{name}.kappa_closed_form"), (s.kappa - k_want).abs(), 1e-12));
        let (q, _) = s.pair();
        let ks: Result<Vec<f64>> = lf_normalize(q, 0.0, 1.0)
            .and_then(|lf| [0.2, 0.5, 0.8].iter().map(|t| proj_curvature(&lf, *t)).collect());
        match ks {
            Ok(ks) => {
                let dev = max_of(ks.iter().map(|k| (k - s.kappa).abs()));
                out.push(Check::max(&format!("mates.wcurve.{name}.kappa_numeric"), dev, 1e-4));
            }
            Err(e) => out.push(Check::failed(&format!("mates.wcurve.{name}.kappa_numeric"), &e)),
        }
    }
    out
}

fn mates_lemma(seed: u64) -> Vec<Check> {
    let mut r = rng_for(seed, 8);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let pt0 = Q5Point::random(&mut r);
        let ctl = TrigControl::random(&mut r);
        let rep = integrate(&pt0, &|t| ctl.eval(t), 0.0, 3.0, 150, 1e-12)
            .and_then(|tr| mucho_check_control(&tr, &|t, n| ctl.taylor(t, n)));
        match rep {
            Ok(rep) => worst = worst.max(rep.max),
            Err(e) => return vec![Check::failed("mates.lemma_items", &e)],
        }
    }
    vec![Check::max("mates.lemma_items", worst, 1e-6)]
}

fn rolling_conics(_seed: u64) -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let c: CurveRef = Arc::new(crate::curves::PolyCurve::graph(&[0.0, 0.0, 1.0, 0.3, 0.1]));
        let lf = lf_normalize(c, -0.5, 0.8)?;
        let hs: Vec<f64> = (0..=10).map(|i| 10f64.powf(-2.0 - 0.1 * i as f64)).collect();
        let mut slope = f64::INFINITY;
        for t in [-0.3, 0.0, 0.2] {
            slope = slope.min(contact_order_fit(&lf, t, &hs)?);
        }
        let circle = lf_normalize(Arc::new(Circle::unit()), 0.0, 6.0)?;
        let q0 = circle.base.eval(0.0);
        let ell0 = cross_vv(&q0, &Vec3::new(0.3, 2.0, 1.0));
        let lines = grid(0.0, 6.0, 12)
            .iter()
            .map(|t| parallel_transport_line(&circle, &ell0, 0.0, *t))
            .collect::<Result<Vec<Covec3>>>()?;
        let conc = max_of(lines.windows(3).map(|w| det3c(&w[0], &w[1], &w[2]).abs()));
        Ok(vec![
            Check::min("rolling.contact_order", slope, 4.8),
            Check::max("rolling.conic_concurrency", conc, 1e-8),
        ])
    };
    run().unwrap_or_else(|e| vec![Check::failed("rolling.conics", &e)])
}

fn rolling_pairs(seed: u64) -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let ms = circle_mates([1.0, -0.5, 0.3], (-0.5, 4.0))?;
        let rp = RollingPair::new(ms.q_curve(), ms.p_curve(), -0.4, 3.9)?;
        let twist_mates = rp.no_twist_max(&grid(-0.3, 3.8, 20))?;
        let mut r = rng_for(seed, 9);
        let pt0 = Q5Point::random(&mut r);
        let ctl = TrigControl::random(&mut r);
        let traj = integrate(&pt0, &|t| ctl.eval(t), 0.0, 2.0, 200, 1e-12)?;
        let (q, p) = TrajectoryCurve::pair(&traj, &ctl);
        let mut slip = 0.0f64;
        let mut acc = 0.0f64;
        for t in grid(0.1, 1.9, 18) {
            let ce = q5_to_contact(&Q5Point {
                q: q.eval(t),
                p: p.eval(t).transpose(),
            });
            slip = slip.max(no_slip_residual(q.as_ref(), p.as_ref(), &ce, t)?);
            acc = acc.max(psi_acceleration_residual(q.as_ref(), p.as_ref(), &ce, t)?);
        }
        let (cq, cp) = concentric_pair();
        let twist_counter = RollingPair::new(cq, cp, 0.0, 3.0)?.no_twist_max(&grid(0.1, 2.9, 14))?;
        Ok(vec![
            Check::max("rolling.no_twist_mates", twist_mates, 1e-6),
            Check::max("rolling.no_slip_integral_curve", slip, 1e-6),
            Check::max("rolling.psi_acceleration", acc, 1e-6),
            Check::min("rolling.counterexample_twists", twist_counter, 1e-2),
        ])
    };
    run().unwrap_or_else(|e| vec![Check::failed("rolling.pairs", &e)])
}
