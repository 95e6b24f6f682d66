//! Projective differential geometry of locally convex plane curves.
//!
//! For a lift A(t) the tautological ODE is A‴ + a₂A″ + a₁A′ + a₀A = 0 with
//! a₀ = −J/I, a₁ = K/I, a₂ = −I′/I where I = det(A,A′,A″),
//! J = det(A′,A″,A‴), K = det(A,A″,A‴). Rescaling to I = 1 removes a₂ and
//! leaves Â‴ + PÂ′ + QÂ = 0.
//!
//! Laguerre–Forsyth form: t̄ = f(t) with S(f) = P/4 (half-convention
//! Schwarzian ½f‴/f′ − ¾(f″/f′)²), realized as f = u₁/u₂ for solutions of
//! u″ + (P/4)u = 0, and Ā(t̄) = f′Â. Then Ā‴ + rĀ = 0 with
//! r = (Q − P′/2)/f′³, and dσ = r^{1/3} dt̄ (real cube root).
//!
//! Projective curvature: κ is the classical Schwarzian {t̄, σ} of the LF
//! parameter with respect to arc length, i.e. twice the half-convention
//! Schwarzian of σ ↦ t̄. This is the normalization for which W-curves give
//! κ = a₁a₀^{−2/3}/2 (Y₃: 0, Y₂(b): b^{−4/3}/2, Y₁(a): −(32a²)^{−1/3}).

use serde::Serialize;

use crate::cartan_engel::{q5_jet, Q5Trajectory};
use crate::curves::{CurveRef, PlaneCurve, SampledCurve};
use crate::error::{Error, Result};
use crate::fd;
use crate::linalg::{cross_vv, det3, Covec3, Vec3};
use crate::ode::{Integrator, OdeOptions};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TautCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
    /// I′ = det(A, A′, A‴).
    pub di: f64,
    /// Coefficients after rescaling to I = 1: Â‴ + PÂ′ + QÂ = 0.
    pub p: f64,
    pub q: f64,
    /// P′.
    pub dp: f64,
    /// a₂′ and a₂″.
    pub da2: f64,
    pub dda2: f64,
}

fn inflection_scale(a: &[Vec3]) -> f64 {
    a[0].norm() * a[1].norm() * (a[2].norm() + a[1].norm2() / a[0].norm())
}

pub fn taut_coeffs(c: &dyn PlaneCurve, t: f64) -> Result<TautCoeffs> {
    let a = c.jet(t, 5);
    taut_from_jet(&a)
}

/// Tautological data from A, A′, …, A⁽⁵⁾.
pub fn taut_from_jet(a: &[Vec3]) -> Result<TautCoeffs> {
    let d = |x: usize, y: usize, z: usize| det3(&a[x], &a[y], &a[z]);
    let i = d(0, 1, 2);
    if !(i.abs() >= 1e-10 * inflection_scale(a)) {
        return Err(Error::domain("inflection point"));
    }
    let j = d(1, 2, 3);
    let k = d(0, 2, 3);
    let i1 = d(0, 1, 3);
    let i2 = k + d(0, 1, 4);
    let i3 = j + 2.0 * d(0, 2, 4) + d(0, 1, 5);
    let k1 = j + d(0, 2, 4);
    let (a0, a1, a2) = (-j / i, k / i, -i1 / i);
    let da2 = -i2 / i + i1 * i1 / (i * i);
    let dda2 = -i3 / i + 3.0 * i1 * i2 / (i * i) - 2.0 * i1.powi(3) / i.powi(3);
    let da1 = k1 / i - k * i1 / (i * i);
    let p = a1 - da2 - a2 * a2 / 3.0;
    let q = a0 - a1 * a2 / 3.0 + 2.0 * a2.powi(3) / 27.0 - dda2 / 3.0;
    let dp = da1 - dda2 - 2.0 * a2 * da2 / 3.0;
    Ok(TautCoeffs {
        a0,
        a1,
        a2,
        i,
        j,
        k,
        di: i1,
        p,
        q,
        dp,
        da2,
        dda2,
    })
}

/// Half-convention Schwarzian from f′, f″, f‴.
pub fn schwarzian_jet(f1: f64, f2: f64, f3: f64) -> Result<f64> {
    if f1.abs() < 1e-14 {
        return Err(Error::domain("Schwarzian undefined: f′ = 0"));
    }
    Ok(0.5 * f3 / f1 - 0.75 * (f2 / f1).powi(2))
}

/// Half-convention Schwarzian of a callable, derivatives by 7-point stencils.
pub fn schwarzian(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> Result<f64> {
    let s: Vec<f64> = (0..7).map(|i| f(t + (i as f64 - 3.0) * h)).collect();
    let d = |k| fd::stencil7(&s, 3, k, h);
    schwarzian_jet(d(1), d(2), d(3))
}

/// The I = 1 rescaled lift Â = I^{−1/3}A and its derivatives up to order 3.
pub fn unimodular_jet(a: &[Vec3], tc: &TautCoeffs) -> [Vec3; 4] {
    let lam = tc.i.cbrt().recip();
    let l = tc.a2 / 3.0;
    let (l1, l2) = (tc.da2 / 3.0, tc.dda2 / 3.0);
    [
        a[0] * lam,
        (a[1] + a[0] * l) * lam,
        (a[2] + a[1] * (2.0 * l) + a[0] * (l1 + l * l)) * lam,
        (a[3] + a[2] * (3.0 * l) + a[1] * (3.0 * (l1 + l * l)) + a[0] * (l2 + 3.0 * l * l1 + l.powi(3)))
            * lam,
    ]
}

/// dσ/dt = (Q − P′/2)^{1/3} in the curve's own parameter.
pub fn arc_density(c: &dyn PlaneCurve, t: f64) -> Result<f64> {
    let tc = taut_coeffs(c, t)?;
    Ok((tc.q - 0.5 * tc.dp).cbrt())
}

/// Laguerre–Forsyth data at one parameter value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LFPoint {
    pub t: f64,
    pub tbar: f64,
    /// Chart-free homogeneous coordinate [u₁ : u₂] of t̄.
    pub tbar_h: [f64; 2],
    pub fprime: f64,
    /// 0: f = u₁/u₂, 1: f = −u₂/u₁ (charts differ by t̄ ↦ −1/t̄).
    pub chart: usize,
    /// Ā, dĀ/dt̄, d²Ā/dt̄².
    pub frame: [Vec3; 3],
    /// d³Ā/dt̄³ from the curve's own third derivative.
    pub third: Vec3,
    pub r: f64,
    /// g = f″/f′.
    pub g: f64,
    pub p: f64,
}

impl LFPoint {
    /// ‖Ā‴ + rĀ‖ relative to ‖Ā‴‖ (or ‖Ā‖ when Ā‴ is small).
    pub fn certificate(&self) -> f64 {
        let a = self.frame[0];
        let scale = self.third.norm().max(a.norm() * 1e-3);
        (self.third + a * self.r).norm() / scale
    }
    pub fn i_defect(&self) -> f64 {
        (det3(&self.frame[0], &self.frame[1], &self.frame[2]) - 1.0).abs()
    }
    /// dσ/dt̄ = r^{1/3}.
    pub fn arc_density(&self) -> f64 {
        self.r.cbrt()
    }
}

/// A curve with its Laguerre–Forsyth parameter on a window [t0, t1].
pub struct LFCurve {
    pub base: CurveRef,
    pub t0: f64,
    pub t1: f64,
    /// (u₁, u₁′, u₂, u₂′) at t0.
    pub init: [f64; 4],
    grid: Vec<f64>,
    states: Vec<[f64; 4]>,
    /// Chart switch points: chart `k` is used on [switch[k-1], switch[k]).
    switches: Vec<(f64, usize)>,
    pub max_certificate: f64,
    pub max_i_defect: f64,
}

fn companion_rhs(base: &CurveRef) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    move |t, y, d| {
        let p = taut_coeffs(base.as_ref(), t).map(|tc| tc.p).unwrap_or(f64::NAN);
        d[0] = y[1];
        d[1] = -0.25 * p * y[0];
        d[2] = y[3];
        d[3] = -0.25 * p * y[2];
    }
}

fn ode_opts() -> OdeOptions {
    let mut o = OdeOptions::with_tol(1e-13);
    o.h_init = 1e-2;
    o
}

/// LF normalization with the standard companion data u₁ = 0, u₁′ = 1,
/// u₂ = 1, u₂′ = 0 at t0.
pub fn lf_normalize(c: CurveRef, t0: f64, t1: f64) -> Result<LFCurve> {
    lf_normalize_with(c, t0, t1, [0.0, 1.0, 1.0, 0.0])
}

/// LF normalization with arbitrary independent companion data (u₁, u₁′, u₂, u₂′).
pub fn lf_normalize_with(c: CurveRef, t0: f64, t1: f64, init: [f64; 4]) -> Result<LFCurve> {
    if !(t1 > t0) {
        return Err(Error::domain("empty window"));
    }
    if (init[0] * init[3] - init[1] * init[2]).abs() < 1e-12 {
        return Err(Error::domain("companion solutions are dependent"));
    }
    let n = 200;
    let grid: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
    for t in &grid {
        taut_coeffs(c.as_ref(), *t).map_err(|e| Error::domain(format!("{e} near t = {t:.6}")))?;
    }
    let ys = {
        let mut it = Integrator::new(companion_rhs(&c), ode_opts());
        it.run_grid(&grid, &init)?
    };
    let states: Vec<[f64; 4]> = ys.iter().map(|y| [y[0], y[1], y[2], y[3]]).collect();
    // chart selection with hysteresis: swap when the denominator falls below
    // half of the numerator
    let mut switches = Vec::new();
    let mut chart = if states[0][2].abs() >= states[0][0].abs() { 0 } else { 1 };
    switches.push((t0, chart));
    for (t, s) in grid.iter().zip(&states) {
        let (den, num) = if chart == 0 { (s[2], s[0]) } else { (s[0], s[2]) };
        if den.abs() < 0.5 * num.abs() {
            chart = 1 - chart;
            switches.push((*t, chart));
        }
    }
    let mut lf = LFCurve {
        base: c,
        t0,
        t1,
        init,
        grid,
        states,
        switches,
        max_certificate: 0.0,
        max_i_defect: 0.0,
    };
    let mut cert = 0.0f64;
    let mut idef = 0.0f64;
    for k in 0..lf.grid.len() {
        let pt = lf.at_node(k)?;
        cert = cert.max(pt.certificate());
        idef = idef.max(pt.i_defect());
    }
    lf.max_certificate = cert;
    lf.max_i_defect = idef;
    Ok(lf)
}

impl LFCurve {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn charts(&self) -> &[(f64, usize)] {
        &self.switches
    }

    fn chart_at(&self, t: f64) -> usize {
        self.switches
            .iter()
            .take_while(|(s, _)| *s <= t)
            .last()
            .map(|x| x.1)
            .unwrap_or(self.switches[0].1)
    }

    /// Companion state at t (integrated from the nearest grid node).
    pub fn state(&self, t: f64) -> Result<[f64; 4]> {
        if t < self.t0 - 1e-12 || t > self.t1 + 1e-12 {
            return Err(Error::domain("outside the LF window"));
        }
        let h = (self.t1 - self.t0) / (self.grid.len() - 1) as f64;
        let k = (((t - self.t0) / h).round() as usize).min(self.grid.len() - 1);
        let mut y = self.states[k].to_vec();
        let mut it = Integrator::new(companion_rhs(&self.base), ode_opts());
        it.advance(self.grid[k], t, &mut y)?;
        Ok([y[0], y[1], y[2], y[3]])
    }

    fn at_node(&self, k: usize) -> Result<LFPoint> {
        self.point_from_state(self.grid[k], self.states[k])
    }

    pub fn at(&self, t: f64) -> Result<LFPoint> {
        let s = self.state(t)?;
        self.point_from_state(t, s)
    }

    fn point_from_state(&self, t: f64, s: [f64; 4]) -> Result<LFPoint> {
        let chart = self.chart_at(t);
        let (num, dnum, den, dden) = if chart == 0 {
            (s[0], s[1], s[2], s[3])
        } else {
            (-s[2], -s[3], s[0], s[1])
        };
        if den.abs() < 1e-300 {
            return Err(Error::numerical("LF chart denominator vanished"));
        }
        let a = self.base.jet(t, 5);
        let tc = taut_from_jet(&a)?;
        let w = dnum * den - num * dden;
        let fp = w / (den * den);
        let g = -2.0 * dden / den;
        let g1 = 0.5 * tc.p + 0.5 * g * g;
        let g2 = 0.5 * tc.dp + g * g1;
        let h = unimodular_jet(&a, &tc);
        let frame = [
            h[0] * fp,
            h[1] + h[0] * g,
            (h[2] + h[1] * g + h[0] * g1) * (1.0 / fp),
        ];
        let third = (h[3] + h[1] * (2.0 * g1 - g * g) + h[0] * (g2 - g * g1)) * (1.0 / (fp * fp));
        let r = (tc.q - 0.5 * tc.dp) / fp.powi(3);
        Ok(LFPoint {
            t,
            tbar: num / den,
            tbar_h: [s[0], s[2]],
            fprime: fp,
            chart,
            frame,
            third,
            r,
            g,
            p: tc.p,
        })
    }

    /// t̄(t) in a fixed chart.
    fn tbar_in_chart(&self, t: f64, chart: usize) -> Result<f64> {
        let s = self.state(t)?;
        Ok(if chart == 0 { s[0] / s[2] } else { -s[2] / s[0] })
    }

    /// Projective curvature at t: {t̄, σ} = [{t̄, t} − {σ, t}]/(dσ/dt)² with
    /// classical Schwarzians {f, t} = f‴/f′ − (3/2)(f″/f′)², both evaluated
    /// by 7-point stencils in t.
    pub fn curvature(&self, t: f64) -> Result<f64> {
        let chart = self.chart_at(t);
        let r0 = arc_density(self.base.as_ref(), t)?;
        if r0.abs() < 1e-8 {
            return Err(Error::domain(format!("κ undefined: sextactic point at t = {t}")));
        }
        let h = 2e-3 * (self.t1 - self.t0).min(1.0);
        let lo = self.t0 + 3.0 * h;
        let hi = self.t1 - 3.0 * h;
        if t < lo || t > hi {
            return Err(Error::domain("κ needs t away from the window ends"));
        }
        let mut tb = [0.0; 7];
        let mut sg = [0.0; 7];
        for i in 0..7 {
            let s = t + (i as f64 - 3.0) * h;
            tb[i] = self.tbar_in_chart(s, chart)?;
            sg[i] = arc_density(self.base.as_ref(), s)?;
        }
        let d = |v: &[f64; 7], k| fd::stencil7(v, 3, k, h);
        let s_tbar = 2.0 * schwarzian_jet(d(&tb, 1), d(&tb, 2), d(&tb, 3))?;
        // σ′ = ρ is known pointwise, so {σ, t} = ρ″/ρ − (3/2)(ρ′/ρ)²
        let (r1, r2) = (d(&sg, 1), d(&sg, 2));
        let s_sigma = r2 / r0 - 1.5 * (r1 / r0).powi(2);
        Ok((s_tbar - s_sigma) / (r0 * r0))
    }
}

/// Projective curvature along an LF curve (see [`LFCurve::curvature`]).
pub fn proj_curvature(lf: &LFCurve, t: f64) -> Result<f64> {
    lf.curvature(t)
}

/// Centro-affine torsion J/I² of a space curve.
pub fn centro_affine_torsion(c: &dyn PlaneCurve, t: f64) -> Result<f64> {
    let a = c.jet(t, 3);
    let i = det3(&a[0], &a[1], &a[2]);
    if !(i.abs() >= 1e-10 * inflection_scale(&a)) {
        return Err(Error::domain("inflection point"));
    }
    Ok(det3(&a[1], &a[2], &a[3]) / (i * i))
}

/// The covector p with pq = 1, pq′ = 0, pq″ = 0, i.e. p = (q′×q″)/I.
pub fn frame_dual(c: &dyn PlaneCurve, t: f64) -> Result<Covec3> {
    let a = c.jet(t, 2);
    let i = det3(&a[0], &a[1], &a[2]);
    if !(i.abs() >= 1e-10 * inflection_scale(&a)) {
        return Err(Error::domain("singular frame: inflection point"));
    }
    Ok(cross_vv(&a[1], &a[2]) * (1.0 / i))
}

/// |p′ − q×q′| / |q×q′| for p = frame_dual(q).
pub fn frame_dual_residual(c: &dyn PlaneCurve, t: f64) -> Result<f64> {
    let a = c.jet(t, 3);
    let i = det3(&a[0], &a[1], &a[2]);
    if !(i.abs() >= 1e-10 * inflection_scale(&a)) {
        return Err(Error::domain("singular frame: inflection point"));
    }
    let di = det3(&a[0], &a[1], &a[3]);
    let dp = cross_vv(&a[1], &a[3]) * (1.0 / i) - cross_vv(&a[1], &a[2]) * (di / (i * i));
    let qq = cross_vv(&a[0], &a[1]);
    Ok((dp - qq).norm() / qq.norm())
}

/// Residuals of the six items relating a solution's two components.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MuchoReport {
    pub items: [f64; 6],
    pub max: f64,
    pub samples: usize,
}

fn rel(a: f64, scale: f64) -> f64 {
    a.abs() / scale.max(1e-300)
}

/// Item residuals at one parameter value, from jets of q and p (p as a Vec3
/// of covector components).
pub fn mucho_at(q: &[Vec3], p: &[Vec3]) -> Result<[f64; 6]> {
    let dot = |a: &Vec3, b: &Vec3| a.edot(b);
    let n = |a: &Vec3| a.norm();
    let mut it = [0.0; 6];
    // (1) orthogonality
    it[0] = [
        rel(dot(&p[1], &q[0]), n(&p[1]) * n(&q[0])),
        rel(dot(&p[0], &q[1]), n(&p[0]) * n(&q[1])),
        rel(dot(&p[1], &q[1]), n(&p[1]) * n(&q[1])),
        rel(dot(&p[0], &q[2]), n(&p[0]) * n(&q[2])),
        rel(dot(&p[2], &q[0]), n(&p[2]) * n(&q[0])),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let i = det3(&q[0], &q[1], &q[2]);
    let ib = det3(&p[0], &p[1], &p[2]);
    if i.abs() < 1e-10 * inflection_scale(q) || ib.abs() < 1e-10 * inflection_scale(p) {
        return Err(Error::domain("degenerate trajectory: I or Ī vanishes"));
    }
    // (2) Ip = q′×q″, Īq = p′×p″
    let c1 = cross_vv(&q[1], &q[2]).transpose();
    let c2 = cross_vv(&p[1], &p[2]).transpose();
    it[1] = ((p[0] * i - c1).norm() / c1.norm()).max((q[0] * ib - c2).norm() / c2.norm());
    // (3) q′ = −p×p′
    let pp = cross_vv(&p[0], &p[1]).transpose();
    it[2] = (q[1] + pp).norm() / q[1].norm();
    // (4) I² + J = Ī² − J̄ = 0, residuals against the size of the factors
    let m = |a: &Vec3, b: &Vec3, c: &Vec3| n(a) * n(b) * n(c);
    let (si, sib) = (m(&q[0], &q[1], &q[2]), m(&p[0], &p[1], &p[2]));
    let j = det3(&q[1], &q[2], &q[3]);
    let jb = det3(&p[1], &p[2], &p[3]);
    let (sj, sjb) = (m(&q[1], &q[2], &q[3]), m(&p[1], &p[2], &p[3]));
    it[3] = rel(i * i + j, si * si + sj).max(rel(ib * ib - jb, sib * sib + sjb));
    // (5) Ī = I, J̄ = −J, K̄ = K
    let k = det3(&q[0], &q[2], &q[3]);
    let kb = det3(&p[0], &p[2], &p[3]);
    let sk = m(&q[0], &q[2], &q[3]) + m(&p[0], &p[2], &p[3]);
    it[4] = rel(ib - i, si + sib)
        .max(rel(jb + j, sj + sjb))
        .max(rel(kb - k, sk));
    // (6) ā₂ = a₂, ā₁ = a₁, ā₀ = −a₀
    let i1 = det3(&q[0], &q[1], &q[3]);
    let ib1 = det3(&p[0], &p[1], &p[3]);
    let (a2, a1, a0) = (-i1 / i, k / i, -j / i);
    let (b2, b1, b0) = (-ib1 / ib, kb / ib, -jb / ib);
    it[5] = rel(b2 - a2, 1.0 + a2.abs())
        .max(rel(b1 - a1, 1.0 + a1.abs()))
        .max(rel(b0 + a0, 1.0 + a0.abs()));
    Ok(it)
}

/// Items of the lemma along a pair of curves (q, p) at the given parameters.
pub fn mucho_check_curves(q: &dyn PlaneCurve, p: &dyn PlaneCurve, ts: &[f64]) -> Result<MuchoReport> {
    let mut rep = MuchoReport::default();
    for t in ts {
        let it = mucho_at(&q.jet(*t, 3), &p.jet(*t, 3))?;
        for k in 0..6 {
            rep.items[k] = rep.items[k].max(it[k]);
        }
        rep.samples += 1;
    }
    rep.max = rep.items.iter().cloned().fold(0.0, f64::max);
    Ok(rep)
}

/// Items of the lemma along an integrated solution, with derivatives at each
/// stored state obtained from the control's Taylor coefficients.
pub fn mucho_check_control(
    sol: &Q5Trajectory,
    control_taylor: &dyn Fn(f64, usize) -> Vec<Vec3>,
) -> Result<MuchoReport> {
    let mut rep = MuchoReport::default();
    for (t, pt) in sol.t.iter().zip(&sol.points) {
        let (q, p) = q5_jet(pt, &control_taylor(*t, 3), 3);
        let p: Vec<Vec3> = p.iter().map(|c| c.transpose()).collect();
        let it = mucho_at(&q, &p)?;
        for k in 0..6 {
            rep.items[k] = rep.items[k].max(it[k]);
        }
        rep.samples += 1;
    }
    rep.max = rep.items.iter().cloned().fold(0.0, f64::max);
    Ok(rep)
}

/// Items of the lemma along a sampled solution, derivatives from stencils
/// at interior grid nodes (4th-order accurate in the grid step for q‴, p‴).
pub fn mucho_check(sol: &Q5Trajectory) -> Result<MuchoReport> {
    if sol.t.len() < 9 {
        return Err(Error::domain("trajectory too short"));
    }
    let qs = SampledCurve::new(&sol.t, sol.points.iter().map(|pt| pt.q).collect())?;
    let ps = SampledCurve::new(&sol.t, sol.points.iter().map(|pt| pt.p.transpose()).collect())?;
    let ts: Vec<f64> = sol.t[3..sol.t.len() - 3].to_vec();
    mucho_check_curves(&qs, &ps, &ts)
}
