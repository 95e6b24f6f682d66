//! The quadric Q⁵ = {pq = 1} with the rank-2 distribution 𝒟 = ker(dp − q×dq).
//!
//! Vector fields are polynomial on ℝ⁶ = {(q, p)} and implement [`Field6`], so
//! Lie brackets are exact (nested dual numbers) rather than finite differences.
//! Brackets use [X, Y] = DY·X − DX·Y; with this convention g ↦ X_g is an
//! anti-homomorphism: [X_g, X_h] = −X_[g,h].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ad::{cross, dot, jet, Bracket, Field6, Scalar};
use crate::curves::{CurveRef, PlaneCurve};
use crate::error::{Error, Result};
use crate::fd::stencil7;
use crate::linalg::{cross_cc, cross_vv, numeric_rank, Covec3, Vec3};
use crate::ode::{linspace, Integrator, OdeOptions};
use crate::octonion::G2Param;
use crate::sample::{self, SampleRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q5Point {
    pub q: Vec3,
    pub p: Covec3,
}

impl Q5Point {
    pub fn new(q: Vec3, p: Covec3) -> Result<Self> {
        let c = p.pair(&q);
        if !((c - 1.0).abs() < 1e-10) {
            return Err(Error::domain(format!("not on the quadric: pq = {c}")));
        }
        Ok(Q5Point { q, p })
    }
    /// Rescale p so that pq = 1.
    pub fn normalized(q: Vec3, p: Covec3) -> Result<Self> {
        let c = p.pair(&q);
        if c.abs() < 1e-12 {
            return Err(Error::domain("incident pair: pq = 0"));
        }
        Ok(Q5Point { q, p: p * (1.0 / c) })
    }
    pub fn base() -> Self {
        Q5Point {
            q: Vec3::basis(2),
            p: Covec3::basis(2),
        }
    }
    pub fn to_array(&self) -> [f64; 6] {
        [self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2]]
    }
    pub fn from_array(a: &[f64]) -> Self {
        Q5Point {
            q: Vec3::new(a[0], a[1], a[2]),
            p: Covec3::new(a[3], a[4], a[5]),
        }
    }
    /// The ℝ* fiber action (q, p) ↦ (λq, p/λ).
    pub fn fiber(&self, lambda: f64) -> Self {
        Q5Point {
            q: self.q * lambda,
            p: self.p * (1.0 / lambda),
        }
    }
    pub fn random(rng: &mut SampleRng) -> Self {
        let q = sample::vec3(rng) + Vec3::new(0.0, 0.0, 0.5);
        let r = sample::covec3(rng);
        let n2 = q.norm2();
        let qt = q.transpose() * (1.0 / n2);
        let p = qt + (r - qt * r.pair(&q)) * 0.7;
        Q5Point { q, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q5Tangent {
    pub dq: Vec3,
    pub dp: Covec3,
}

impl Q5Tangent {
    pub fn from_array(a: &[f64]) -> Self {
        Q5Tangent {
            dq: Vec3::new(a[0], a[1], a[2]),
            dp: Covec3::new(a[3], a[4], a[5]),
        }
    }
    pub fn to_array(&self) -> [f64; 6] {
        [self.dq[0], self.dq[1], self.dq[2], self.dp[0], self.dp[1], self.dp[2]]
    }
    /// d(pq)(v) = dp·q + p·dq.
    pub fn tangency(&self, pt: &Q5Point) -> f64 {
        self.dp.pair(&pt.q) + pt.p.pair(&self.dq)
    }
    /// ω(v) = dp − q×dq.
    pub fn omega(&self, pt: &Q5Point) -> Covec3 {
        self.dp - cross_vv(&pt.q, &self.dq)
    }
    /// dq + p×dp, the dual description of 𝒟.
    pub fn omega_dual(&self, pt: &Q5Point) -> Vec3 {
        self.dq + cross_cc(&pt.p, &self.dp)
    }
    /// Distance from 𝒟 inside TQ⁵: |ω(v)| + |d(pq)(v)|.
    pub fn defect(&self, pt: &Q5Point) -> f64 {
        self.omega(pt).norm() + self.tangency(pt).abs()
    }
}

/// Frame field (p×w, q×(p×w)) for a fixed covector w.
#[derive(Debug, Clone, Copy)]
pub struct FrameField {
    pub w: [f64; 3],
}

impl Field6 for FrameField {
    fn eval<T: Scalar>(&self, z: &[T; 6]) -> [T; 6] {
        let q = [z[0], z[1], z[2]];
        let p = [z[3], z[4], z[5]];
        let w = self.w.map(T::cst);
        let v = cross(&p, &w);
        let u = cross(&q, &v);
        [v[0], v[1], v[2], u[0], u[1], u[2]]
    }
}

/// The infinitesimal symmetry X_{A,b,c}.
#[derive(Debug, Clone, Copy)]
pub struct SymField {
    pub g: G2Param,
}

impl Field6 for SymField {
    fn eval<T: Scalar>(&self, z: &[T; 6]) -> [T; 6] {
        let q = [z[0], z[1], z[2]];
        let p = [z[3], z[4], z[5]];
        let a = self.g.a.0;
        let b = self.g.b.0.map(T::cst);
        let c = self.g.c.0.map(T::cst);
        let s = dot(&p, &b) + dot(&c, &q);
        let pc = cross(&p, &c);
        let bq = cross(&b, &q);
        let two = T::cst(2.0);
        let mut out = [T::cst(0.0); 6];
        for i in 0..3 {
            let aq = q[0] * T::cst(a[i][0]) + q[1] * T::cst(a[i][1]) + q[2] * T::cst(a[i][2]);
            let pa = p[0] * T::cst(a[0][i]) + p[1] * T::cst(a[1][i]) + p[2] * T::cst(a[2][i]);
            out[i] = two * b[i] + aq + pc[i] - s * q[i];
            out[3 + i] = two * c[i] - pa + bq[i] - s * p[i];
        }
        out
    }
}

/// The pure Euler-type field (q, 0), which is not tangent to Q⁵.
#[derive(Debug, Clone, Copy)]
pub struct QScaling;

impl Field6 for QScaling {
    fn eval<T: Scalar>(&self, z: &[T; 6]) -> [T; 6] {
        let zero = T::cst(0.0);
        [z[0], z[1], z[2], zero, zero, zero]
    }
}

/// Pick the two covectors among e¹, e², e³ giving the most independent p×w.
pub fn frame_choice(p: &Covec3) -> ([f64; 3], [f64; 3]) {
    let vs: Vec<Vec3> = (0..3).map(|k| cross_cc(p, &Covec3::basis(k))).collect();
    let mut best = (0, 1);
    let mut best_val = -1.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let v = cross_vv(&vs[i], &vs[j]).norm();
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    (Covec3::basis(best.0).0, Covec3::basis(best.1).0)
}

pub fn dist_frame(pt: &Q5Point) -> Result<(Q5Tangent, Q5Tangent)> {
    let (w1, w2) = frame_choice(&pt.p);
    let z = pt.to_array();
    let f1 = Q5Tangent::from_array(&FrameField { w: w1 }.eval(&z));
    let f2 = Q5Tangent::from_array(&FrameField { w: w2 }.eval(&z));
    if numeric_rank(&[f1.to_array().to_vec(), f2.to_array().to_vec()], 1e-8) < 2 {
        return Err(Error::numerical("frame degenerate"));
    }
    Ok((f1, f2))
}

/// Ranks of 𝒟, 𝒟 + [𝒟,𝒟], 𝒟 + [𝒟,[𝒟,𝒟]] at a point.
pub fn growth_vector(pt: &Q5Point) -> (usize, usize, usize) {
    let (w1, w2) = frame_choice(&pt.p);
    let f1 = FrameField { w: w1 };
    let f2 = FrameField { w: w2 };
    let f3 = Bracket(&f1, &f2);
    let f4 = Bracket(&f1, &f3);
    let f5 = Bracket(&f2, &f3);
    let z = pt.to_array();
    let mut rows = vec![f1.eval(&z).to_vec(), f2.eval(&z).to_vec()];
    let r1 = numeric_rank(&rows, 1e-8);
    rows.push(f3.eval(&z).to_vec());
    let r2 = numeric_rank(&rows, 1e-8);
    rows.push(f4.eval(&z).to_vec());
    rows.push(f5.eval(&z).to_vec());
    let r3 = numeric_rank(&rows, 1e-8);
    (r1, r2, r3)
}

pub fn symmetry_field(g: &G2Param, pt: &Q5Point) -> Q5Tangent {
    Q5Tangent::from_array(&SymField { g: *g }.eval(&pt.to_array()))
}

/// Max over the points and both frame fields of the 𝒟-defect of [X, F_i].
pub fn field_symmetry_residual<F: Field6>(x: &F, pts: &[Q5Point]) -> f64 {
    let mut worst = 0.0f64;
    for pt in pts {
        let (w1, w2) = frame_choice(&pt.p);
        let z = pt.to_array();
        for w in [w1, w2] {
            let f = FrameField { w };
            let b = Q5Tangent::from_array(&Bracket(x, &f).eval(&z));
            worst = worst.max(b.defect(pt));
        }
    }
    worst
}

pub fn random_points(seed: u64, n: usize) -> Vec<Q5Point> {
    let mut rng = sample::rng(seed);
    (0..n).map(|_| Q5Point::random(&mut rng)).collect()
}

/// Symmetry residual of X_g at 50 seeded random points.
pub fn symmetry_residual(g: &G2Param) -> f64 {
    field_symmetry_residual(&SymField { g: *g }, &random_points(0x5eed, 50))
}

fn jet_points() -> Vec<[f64; 6]> {
    random_points(0x1e7, 3).iter().map(|p| p.to_array()).collect()
}

/// Rank of the span of the fields X_g and all pairwise brackets, measured in
/// (value, Jacobian) jets at three generic points.
pub fn algebra_dimension(params: &[G2Param]) -> usize {
    let pts = jet_points();
    let fields: Vec<SymField> = params.iter().map(|g| SymField { g: *g }).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let collect = |f: &dyn Fn(&[f64; 6]) -> Vec<f64>| -> Vec<f64> {
        pts.iter().flat_map(|z| f(z)).collect()
    };
    for f in &fields {
        rows.push(collect(&|z| jet(f, z)));
    }
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let b = Bracket(&fields[i], &fields[j]);
            rows.push(collect(&|z| jet(&b, z)));
        }
    }
    numeric_rank(&rows, 1e-8)
}

/// Max jet difference between [X_g1, X_g2] and −X_[g1,g2] at the given points.
pub fn bracket_consistency(g1: &G2Param, g2: &G2Param, pts: &[Q5Point]) -> Result<f64> {
    let g12 = crate::octonion::g2_bracket(g1, g2)?;
    let (x1, x2, x12) = (SymField { g: *g1 }, SymField { g: *g2 }, SymField { g: g12 });
    let b = Bracket(&x1, &x2);
    let mut worst = 0.0f64;
    for pt in pts {
        let z = pt.to_array();
        let (j1, j2) = (jet(&b, &z), jet(&x12, &z));
        for (a, c) in j1.iter().zip(&j2) {
            worst = worst.max((a + c).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Q5Trajectory {
    pub t: Vec<f64>,
    pub points: Vec<Q5Point>,
    /// max |pq − 1| over the samples.
    pub max_constraint: f64,
    pub control: String,
}

impl Q5Trajectory {
    pub fn new(t: Vec<f64>, points: Vec<Q5Point>, control: impl Into<String>) -> Self {
        let max_constraint = points
            .iter()
            .map(|pt| (pt.p.pair(&pt.q) - 1.0).abs())
            .fold(0.0, f64::max);
        Q5Trajectory {
            t,
            points,
            max_constraint,
            control: control.into(),
        }
    }

    /// Max of |p′ − q×q′| at interior nodes, derivatives from 7-point
    /// stencils on the (uniform) sample grid.
    pub fn integral_residual(&self) -> f64 {
        let n = self.t.len();
        if n < 7 {
            return f64::NAN;
        }
        let h = (self.t[n - 1] - self.t[0]) / (n - 1) as f64;
        let comp = |k: usize| -> Vec<f64> { self.points.iter().map(|pt| pt.to_array()[k]).collect() };
        let cols: Vec<Vec<f64>> = (0..6).map(comp).collect();
        let mut worst = 0.0f64;
        for i in 3..n - 3 {
            let d: Vec<f64> = (0..6).map(|k| stencil7(&cols[k], i, 1, h)).collect();
            let dq = Vec3::new(d[0], d[1], d[2]);
            let dp = Covec3::new(d[3], d[4], d[5]);
            let r = (dp - cross_vv(&self.points[i].q, &dq)).norm();
            worst = worst.max(r);
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,q1,q2,q3,p1,p2,p3\n");
        for (t, pt) in self.t.iter().zip(&self.points) {
            let a = pt.to_array();
            s.push_str(&format!(
                "{t},{},{},{},{},{},{}\n",
                a[0], a[1], a[2], a[3], a[4], a[5]
            ));
        }
        s
    }
}

/// Integrate q′ = u − (p·u)q, p′ = q×q′ on a uniform output grid with `n`
/// intervals, renormalizing p ↦ p/(pq) after each accepted step.
pub fn integrate(
    pt0: &Q5Point,
    control: &dyn Fn(f64) -> Vec3,
    t0: f64,
    t1: f64,
    n: usize,
    tol: f64,
) -> Result<Q5Trajectory> {
    let rhs = |t: f64, y: &[f64], d: &mut [f64]| {
        let pt = Q5Point::from_array(y);
        let u = control(t);
        let dq = u - pt.q * pt.p.pair(&u);
        let dp = cross_vv(&pt.q, &dq);
        d[..3].copy_from_slice(&dq.0);
        d[3..].copy_from_slice(&dp.0);
    };
    let project = |y: &mut [f64]| {
        let c = y[3] * y[0] + y[4] * y[1] + y[5] * y[2];
        for v in &mut y[3..] {
            *v /= c;
        }
    };
    let mut opts = OdeOptions::with_tol(tol.min(1e-10) * 1e-2);
    opts.h_init = ((t1 - t0).abs() / n as f64).min(0.05);
    let mut it = Integrator::new(rhs, opts);
    it.project = Some(&project);
    let grid = linspace(t0, t1, n);
    let ys = it.run_grid(&grid, &pt0.to_array())?;
    let pts = ys.iter().map(|y| Q5Point::from_array(y)).collect();
    Ok(Q5Trajectory::new(grid, pts, "custom"))
}

/// A random smooth control: a short trigonometric sum with random coefficients.
#[derive(Debug, Clone)]
pub struct TrigControl {
    terms: Vec<(Vec3, f64, f64)>,
}

impl TrigControl {
    pub fn random(rng: &mut SampleRng) -> Self {
        let terms = (0..4)
            .map(|_| {
                (
                    sample::vec3(rng) * 0.25,
                    sample::uniform(rng, 0.2, 2.0),
                    sample::uniform(rng, 0.0, std::f64::consts::TAU),
                )
            })
            .collect();
        TrigControl { terms }
    }
    /// Multiply every amplitude by `s`. Large controls can push the lift to
    /// infinity in finite time; `random(..).scaled(0.6)` stays bounded on [0, 10].
    pub fn scaled(mut self, s: f64) -> Self {
        for (v, _, _) in &mut self.terms {
            *v = *v * s;
        }
        self
    }
    pub fn eval(&self, t: f64) -> Vec3 {
        self.terms
            .iter()
            .fold(Vec3::ZERO, |acc, (v, w, ph)| acc + *v * (w * t + ph).sin())
    }
    /// Taylor coefficients u⁽ᵏ⁾(t)/k! for k < n.
    pub fn taylor(&self, t: f64, n: usize) -> Vec<Vec3> {
        let mut fact = 1.0;
        (0..n)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                let s = k as f64 * std::f64::consts::FRAC_PI_2;
                self.terms.iter().fold(Vec3::ZERO, |acc, (v, w, ph)| {
                    acc + *v * (w.powi(k as i32) * (w * t + ph + s).sin() / fact)
                })
            })
            .collect()
    }
}

/// Derivatives q⁽ᵏ⁾, p⁽ᵏ⁾ (k ≤ n) of the solution of q′ = u − (pu)q,
/// p′ = q×q′ through `pt`, from the control's Taylor coefficients
/// (at least n of them), by power-series recursion.
pub fn q5_jet(pt: &Q5Point, u: &[Vec3], n: usize) -> (Vec<Vec3>, Vec<Covec3>) {
    let mut q = vec![pt.q];
    let mut p = vec![pt.p];
    let mut qd: Vec<Vec3> = Vec::with_capacity(n);
    let mut s: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        s.push((0..=k).map(|i| p[i].pair(&u[k - i])).sum());
        let c = (0..=k).fold(u[k], |acc, i| acc - q[k - i] * s[i]);
        qd.push(c);
        let pd = (0..=k).fold(Covec3::ZERO, |acc, i| acc + cross_vv(&q[i], &qd[k - i]));
        q.push(c * (1.0 / (k + 1) as f64));
        p.push(pd * (1.0 / (k + 1) as f64));
    }
    let mut fact = 1.0;
    for k in 0..=n {
        if k > 0 {
            fact *= k as f64;
        }
        q[k] = q[k] * fact;
        p[k] = p[k] * fact;
    }
    (q, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat3;

    #[test]
    fn frame_at_base_point() {
        let pt = Q5Point::base();
        let (f1, f2) = dist_frame(&pt).unwrap();
        for f in [f1, f2] {
            assert!(f.omega(&pt).norm() < 1e-13);
            assert!(f.omega_dual(&pt).norm() < 1e-12);
            // dp₁ + dq² = dp₂ − dq¹ = dp₃ = 0
            assert_eq!(f.dp[0] + f.dq[1], 0.0);
            assert_eq!(f.dp[1] - f.dq[0], 0.0);
            assert_eq!(f.dp[2], 0.0);
        }
    }

    #[test]
    fn growth_at_base() {
        assert_eq!(growth_vector(&Q5Point::base()), (2, 3, 5));
    }

    #[test]
    fn linear_action_field() {
        let mut r = sample::rng(9);
        let a = sample::sl3_algebra(&mut r);
        let g = G2Param::new(a, Vec3::ZERO, Covec3::ZERO).unwrap();
        let pt = Q5Point::random(&mut r);
        let x = symmetry_field(&g, &pt);
        assert!((x.dq - a.mul_vec(&pt.q)).norm() < 1e-14);
        assert!((x.dp + pt.p.mul_mat(&a)).norm() < 1e-14);
    }

    #[test]
    fn b_field_at_base() {
        let g = G2Param {
            a: Mat3::ZERO,
            b: Vec3::basis(0),
            c: Covec3::ZERO,
        };
        let x = symmetry_field(&g, &Q5Point::base());
        assert_eq!(x.dq, Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(x.dp, Covec3::new(0.0, -1.0, 0.0));
        assert_eq!(x.tangency(&Q5Point::base()), 0.0);
    }

    #[test]
    fn brackets_agree_with_finite_differences() {
        let pt = Q5Point::random(&mut sample::rng(4));
        let z = pt.to_array();
        let g = G2Param::basis()[9];
        let x = SymField { g };
        let f = FrameField { w: [0.3, -1.0, 0.5] };
        let exact = Bracket(&x, &f).eval(&z);
        let h = 1e-5;
        let dirder = |fld: &dyn Fn(&[f64; 6]) -> [f64; 6], v: &[f64; 6]| -> [f64; 6] {
            let zp: [f64; 6] = std::array::from_fn(|i| z[i] + h * v[i]);
            let zm: [f64; 6] = std::array::from_fn(|i| z[i] - h * v[i]);
            let (a, b) = (fld(&zp), fld(&zm));
            std::array::from_fn(|i| (a[i] - b[i]) / (2.0 * h))
        };
        let xv = x.eval(&z);
        let fv = f.eval(&z);
        let a = dirder(&|w| f.eval(w), &xv);
        let b = dirder(&|w| x.eval(w), &fv);
        for i in 0..6 {
            assert!((exact[i] - (a[i] - b[i])).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_field_is_trivially_symmetric() {
        assert_eq!(symmetry_residual(&G2Param::zero()), 0.0);
    }

    #[test]
    fn constant_control_gives_constant_curve() {
        let pt = Q5Point::random(&mut sample::rng(8));
        let tr = integrate(&pt, &|_| Vec3::ZERO, 0.0, 1.0, 10, 1e-10).unwrap();
        for p in &tr.points {
            assert!((p.q - pt.q).norm() < 1e-15);
        }
    }
}

/// One member (q, or p in line coordinates) of an integrated trajectory as a
/// plane curve with exact jets: the power series of the solution about the
/// nearest stored state.
#[derive(Debug, Clone)]
pub struct TrajectoryCurve {
    pub traj: Q5Trajectory,
    pub control: TrigControl,
    pub dual: bool,
}

impl TrajectoryCurve {
    const ORDER: usize = 16;

    pub fn pair(traj: &Q5Trajectory, control: &TrigControl) -> (CurveRef, CurveRef) {
        let q = TrajectoryCurve { traj: traj.clone(), control: control.clone(), dual: false };
        let p = TrajectoryCurve { traj: traj.clone(), control: control.clone(), dual: true };
        (Arc::new(q), Arc::new(p))
    }
}

impl PlaneCurve for TrajectoryCurve {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        let ts = &self.traj.t;
        let h = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
        let k = (((t - ts[0]) / h).round().max(0.0) as usize).min(ts.len() - 1);
        let s = t - ts[k];
        let m = Self::ORDER;
        let (q, p) = q5_jet(&self.traj.points[k], &self.control.taylor(ts[k], m), m);
        let d: Vec<Vec3> = if self.dual { p.iter().map(|c| c.transpose()).collect() } else { q };
        (0..=n)
            .map(|j| {
                let mut acc = Vec3::ZERO;
                let mut f = 1.0;
                for i in 0..m.saturating_sub(j) {
                    if i > 0 {
                        f *= s / i as f64;
                    }
                    acc = acc + d[j + i] * f;
                }
                acc
            })
            .collect()
    }
    fn domain(&self) -> (f64, f64) {
        (self.traj.t[0], self.traj.t[self.traj.t.len() - 1])
    }
}
