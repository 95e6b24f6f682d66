//! Projective involutes and dancing mates of a curve in Laguerre–Forsyth
//! form A‴ + rA = 0, and the constant-curvature (W-curve) dancing pairs.
//!
//! An involute is B = (C − y′)A + yA′ with
//! y⁗ + 2y‴(y′ − C)/y + 3ry′ + r′y = 0; it is a dancing mate iff C = 0.
//! Around the conic A = (1 + t², 2t, 1 − t²) (r = 0) the mate equation has
//! the first integral y‴y², normalized to 1.
//!
//! Conic solutions are stored on a uniform grid in the angle θ of the point
//! (1, sin θ, cos θ) = [A(t)], t = tan((θ − jπ)/2) in chart j. Neighbouring
//! charts are related by s = −1/t and the lift D·A(s), D = diag(1, −1, −1),
//! under which (y, y′, y″, y‴) ↦ (y/t², y′ − 2y/t, t²y″ − 2ty′ + 2y, t⁴y‴).

use std::sync::Arc;

use serde::Serialize;

use crate::cartan_engel::{Q5Point, Q5Trajectory};
use crate::curvature::{parallel_sd_residual, NullCurve};
use crate::curves::{CurveRef, DualCurve, OrbitCurve, PlaneCurve};
use crate::error::{Error, Result};
use crate::fd;
use crate::linalg::{cross_vv, det3, mat_exp, Covec3, Mat3, Vec3};
use crate::metric::dancing_residual;
use crate::ode::{Integrator, OdeOptions};
use crate::projective::{centro_affine_torsion, frame_dual, taut_coeffs};

/// Borderline projective curvature −3·32^{−1/3} of the Y₁ family.
pub const KAPPA0: f64 = -0.944_940_787_421_155_6;

/// Order of the power series used for dense output.
const SERIES_ORDER: usize = 28;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

// truncated power series

fn s_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            (0..=k)
                .filter(|&i| i < a.len() && k - i < b.len())
                .map(|i| a[i] * b[k - i])
                .sum()
        })
        .collect()
}

/// f(g(ε)) for g(0) = 0.
fn s_compose(f: &[f64], g: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for c in f.iter().take(n + 1).rev() {
        out = s_mul(&out, g, n);
        out[0] += c;
    }
    out
}

fn s_deriv(a: &[f64]) -> Vec<f64> {
    (1..a.len()).map(|k| k as f64 * a[k]).collect()
}

/// First n + 1 coefficients of a(d + δ).
fn s_shift(a: &[f64], d: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let mut s = 0.0;
            let mut binom = 1.0;
            let mut pw = 1.0;
            for k in j..a.len() {
                s += binom * a[k] * pw;
                // C(k+1, j)·d^{k+1−j}
                binom *= (k + 1) as f64 / (k + 1 - j) as f64;
                pw *= d;
            }
            s
        })
        .collect()
}

fn s_recip(a: &[f64], n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n + 1];
    r[0] = 1.0 / a[0];
    for k in 1..=n {
        let s: f64 = (1..=k.min(a.len() - 1)).map(|i| a[i] * r[k - i]).sum();
        r[k] = -s / a[0];
    }
    r
}

/// Taylor coefficients of tan(u₀ + ε/2).
fn tan_half_series(u0: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    t[0] = u0.tan();
    for k in 0..n {
        let sq: f64 = (0..=k).map(|i| t[i] * t[k - i]).sum();
        t[k + 1] = 0.5 * (if k == 0 { 1.0 } else { 0.0 } + sq) / (k + 1) as f64;
    }
    t
}

fn jets_from_series(s: &[[f64; 3]], n: usize) -> Vec<Vec3> {
    (0..=n)
        .map(|k| Vec3(s[k]) * factorial(k))
        .collect()
}

/// Taylor coefficients of y at a state of y·y⁗ = 2y‴(C − y′) (r = 0).
fn y_series(state: &[f64; 4], c: f64, m: usize) -> Vec<f64> {
    let mut a = vec![0.0; m + 1];
    a[0] = state[0];
    a[1] = state[1];
    a[2] = state[2] / 2.0;
    a[3] = state[3] / 6.0;
    let ff = |k: usize, d: usize| -> f64 { (1..=d).map(|i| (k + i) as f64).product() };
    let mut u = vec![0.0; m + 1];
    for k in 0..=m - 4 {
        let mut rhs = 0.0;
        for i in 0..=k {
            let v = ff(i, 3) * a[i + 3];
            let j = k - i;
            let w = if j == 0 { c } else { 0.0 } - (j + 1) as f64 * a[j + 1];
            rhs += 2.0 * v * w;
        }
        for i in 1..=k {
            rhs -= a[i] * u[k - i];
        }
        u[k] = rhs / a[0];
        a[k + 4] = u[k] / ff(k, 4);
    }
    a
}

/// Chart change s = −1/t of a conic state (an involution).
pub fn switch_chart(t: f64, y: &[f64; 4]) -> [f64; 4] {
    let t2 = t * t;
    [
        y[0] / t2,
        y[1] - 2.0 * y[0] / t,
        t2 * y[2] - 2.0 * t * y[1] + 2.0 * y[0],
        t2 * t2 * y[3],
    ]
}

/// A general involute y(t) over a base curve with LF coefficient r.
#[derive(Debug, Clone, Serialize)]
pub struct InvoluteSolution {
    pub c: f64,
    pub t: Vec<f64>,
    /// (y, y′, y″, y‴) at each grid node.
    pub y: Vec<[f64; 4]>,
    /// max |y⁗ − rhs| over interior nodes, y⁗ from 7-point stencils of y‴,
    /// relative to 1 + |rhs|.
    pub residual: f64,
}

fn involute_rhs(r: f64, dr: f64, c: f64, y: &[f64]) -> f64 {
    (2.0 * y[3] * (c - y[1]) - 3.0 * r * y[0] * y[1] - dr * y[0] * y[0]) / y[0]
}

fn opts() -> OdeOptions {
    let mut o = OdeOptions::with_tol(1e-13);
    o.h_init = 1e-3;
    o
}

/// Integrates y⁗ = 2y‴(C − y′)/y − 3ry′ − r′y on [t0, t1] (n intervals);
/// `r` returns (r, r′).
pub fn involute_solve(
    r: &dyn Fn(f64) -> (f64, f64),
    c: f64,
    init: [f64; 4],
    t0: f64,
    t1: f64,
    n: usize,
) -> Result<InvoluteSolution> {
    if init[0] == 0.0 || !init.iter().all(|v| v.is_finite()) {
        return Err(Error::domain("singular: y vanishes at the initial point"));
    }
    if n < 8 || !(t1 != t0) {
        return Err(Error::domain("empty span"));
    }
    let grid: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
    let ev = |y: &[f64]| y[0];
    let mut it = Integrator::new(
        |t: f64, y: &[f64], d: &mut [f64]| {
            let (rv, drv) = r(t);
            d[0] = y[1];
            d[1] = y[2];
            d[2] = y[3];
            d[3] = involute_rhs(rv, drv, c, y);
        },
        opts(),
    );
    it.event = Some(&ev);
    let ys = it.run_grid(&grid, &init)?;
    let y: Vec<[f64; 4]> = ys.iter().map(|v| [v[0], v[1], v[2], v[3]]).collect();
    let h = (t1 - t0) / n as f64;
    let y3: Vec<f64> = y.iter().map(|s| s[3]).collect();
    let mut residual = 0.0f64;
    for i in 3..=n - 3 {
        let d4 = fd::stencil7(&y3[i - 3..i + 4], 3, 1, h);
        let (rv, drv) = r(grid[i]);
        let rhs = involute_rhs(rv, drv, c, &y[i]);
        residual = residual.max((d4 - rhs).abs() / (1.0 + rhs.abs()));
    }
    Ok(InvoluteSolution { c, t: grid, y, residual })
}

/// Plane (a + c)x + by + (c − a)z = 0 containing the straight-line involute
/// of the conic given by y = at² + bt + c.
pub fn straight_line_involute(a: f64, b: f64, c: f64) -> Covec3 {
    Covec3::new(a + c, b, c - a)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MateNode {
    pub theta: f64,
    pub chart: i64,
    pub t: f64,
    /// (y, y′, y″, y‴) in the chart.
    pub y: [f64; 4],
}

/// Grid spacing and behaviour at y = 0.
#[derive(Debug, Clone, Copy)]
pub struct MateOptions {
    pub h: f64,
    /// Stop at the last node before y vanishes instead of failing.
    pub truncate: bool,
}

impl Default for MateOptions {
    fn default() -> Self {
        MateOptions { h: 0.01, truncate: false }
    }
}

/// An involute (mate when C = 0) of the conic, integrated over a θ window.
#[derive(Debug, Clone, Serialize)]
pub struct MateSolution {
    pub c: f64,
    /// Factor applied to the initial y to reach y‴y² = 1 (1 for raw involutes).
    pub normalization: f64,
    /// y‴y² at θ = 0 after normalization.
    pub first_integral: f64,
    /// θ where y vanishes, if the window was truncated there.
    pub stop: Option<(f64, f64)>,
    pub h: f64,
    nodes: Vec<MateNode>,
    /// index of θ = 0
    origin: usize,
}

fn chart_of(theta: f64) -> i64 {
    (theta / std::f64::consts::PI).round() as i64
}

fn chart_t(theta: f64, j: i64) -> f64 {
    (0.5 * (theta - j as f64 * std::f64::consts::PI)).tan()
}

fn conic_rhs(c: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
    move |_t, y, d| {
        d[0] = y[1];
        d[1] = y[2];
        d[2] = y[3];
        d[3] = 2.0 * y[3] * (c - y[1]) / y[0];
    }
}

#[derive(Clone, Copy)]
struct State {
    j: i64,
    t: f64,
    y: [f64; 4],
}

/// Advances a chart state to angle `theta`, switching charts at |t| = 1.
fn advance_to(c: f64, s: State, theta: f64) -> Result<State> {
    let target = chart_of(theta);
    let ev = |y: &[f64]| y[0];
    let mut it = Integrator::new(conic_rhs(c), opts());
    it.event = Some(&ev);
    let mut st = s;
    let mut y = st.y.to_vec();
    while st.j != target {
        let dir = if target > st.j { 1.0 } else { -1.0 };
        it.advance(st.t, dir, &mut y)?;
        let sw = switch_chart(dir, &[y[0], y[1], y[2], y[3]]);
        y = sw.to_vec();
        st.t = -dir;
        st.j += dir as i64;
    }
    let tt = chart_t(theta, st.j);
    it.advance(st.t, tt, &mut y)?;
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::numerical("non-finite state"));
    }
    Ok(State {
        j: st.j,
        t: tt,
        y: [y[0], y[1], y[2], y[3]],
    })
}

/// Integrates an involute of the conic from chart data at θ = 0 (t = 0)
/// over `span` = (θ₀, θ₁) with θ₀ ≤ 0 ≤ θ₁.
pub fn conic_involute(c: f64, init: [f64; 4], span: (f64, f64), o: &MateOptions) -> Result<MateSolution> {
    let (th0, th1) = span;
    if !(th0 <= 0.0 && th1 >= 0.0 && th1 > th0) {
        return Err(Error::domain("span must contain θ = 0"));
    }
    if init[0] == 0.0 || !init.iter().all(|v| v.is_finite()) {
        return Err(Error::domain("singular: y vanishes at the initial point"));
    }
    if !(o.h > 0.0) {
        return Err(Error::domain("grid step must be positive"));
    }
    let kmin = -((-th0 / o.h).round() as i64);
    let kmax = (th1 / o.h).round() as i64;
    let s0 = State { j: 0, t: 0.0, y: init };
    let mut stop = None;
    let mut sweep = |dir: i64, kend: i64| -> Result<Vec<MateNode>> {
        let mut out = Vec::new();
        let mut st = s0;
        let mut k = 0;
        while k != kend {
            let th = (k + dir) as f64 * o.h;
            match advance_to(c, st, th) {
                Ok(next) if next.y[0].signum() == init[0].signum() => {
                    st = next;
                    k += dir;
                    out.push(MateNode { theta: th, chart: st.j, t: st.t, y: st.y });
                }
                _ => {
                    let (lo, hi) = bisect_zero(c, st, k as f64 * o.h, th);
                    if o.truncate {
                        stop = Some((lo, hi));
                        break;
                    }
                    return Err(Error::domain(format!(
                        "singular: y vanishes near θ = {:.9}",
                        0.5 * (lo + hi)
                    )));
                }
            }
        }
        Ok(out)
    };
    let fwd = sweep(1, kmax)?;
    let mut bwd = sweep(-1, kmin)?;
    bwd.reverse();
    let origin = bwd.len();
    let mut nodes = bwd;
    nodes.push(MateNode { theta: 0.0, chart: 0, t: 0.0, y: init });
    nodes.extend(fwd);
    Ok(MateSolution {
        c,
        normalization: 1.0,
        first_integral: init[3] * init[0] * init[0],
        stop,
        h: o.h,
        nodes,
        origin,
    })
}

/// Brackets the angle where y vanishes between a good state at θa and θb.
fn bisect_zero(c: f64, good: State, tha: f64, thb: f64) -> (f64, f64) {
    let sign = good.y[0].signum();
    let (mut lo, mut hi) = (tha, thb);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        match advance_to(c, good, mid) {
            Ok(s) if s.y[0].signum() == sign => lo = mid,
            _ => hi = mid,
        }
    }
    (lo, hi)
}

/// Dancing mates around the circle: y‴y² = 1 with (y, y′, y″) at θ = 0.
pub fn circle_mates(init: [f64; 3], span: (f64, f64)) -> Result<MateSolution> {
    circle_mates_with(init, span, &MateOptions::default())
}

pub fn circle_mates_with(init: [f64; 3], span: (f64, f64), o: &MateOptions) -> Result<MateSolution> {
    if init[0] == 0.0 {
        return Err(Error::domain("singular: y vanishes at the initial point"));
    }
    circle_mates_from_jet([init[0], init[1], init[2], 1.0 / (init[0] * init[0])], span, o)
}

/// Dancing mates from a full 3-jet of y at θ = 0; y is rescaled so that
/// y‴y² = 1 and the factor is recorded.
pub fn circle_mates_from_jet(init: [f64; 4], span: (f64, f64), o: &MateOptions) -> Result<MateSolution> {
    if init[0] == 0.0 {
        return Err(Error::domain("singular: y vanishes at the initial point"));
    }
    let k = init[3] * init[0] * init[0];
    let scale = init[0].abs().powi(3) + init[1].abs().powi(3) + init[2].abs().powi(3);
    if k.abs() <= 1e-12 * scale {
        return Err(Error::domain(
            "quadratic data: y‴ = 0, the involute is a straight line",
        ));
    }
    let lam = k.cbrt().recip();
    let y = init.map(|v| v * lam);
    let mut ms = conic_involute(0.0, y, span, o)?;
    ms.normalization = lam;
    Ok(ms)
}

/// D^j = diag(1, −1, −1)^j.
fn chart_sign(j: i64, v: [f64; 3]) -> [f64; 3] {
    if j.rem_euclid(2) == 1 {
        [v[0], -v[1], -v[2]]
    } else {
        v
    }
}

/// Series of A = (1 + t², 2t, 1 − t²) and B = (C − y′)A + yA′ given series
/// of t, y(t) and y′(t) in a common variable.
fn conic_ab(c: f64, t: &[f64], y: &[f64], dy: &[f64], n: usize) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let t2 = s_mul(t, t, n);
    let one = |k: usize| if k == 0 { 1.0 } else { 0.0 };
    let a: Vec<[f64; 3]> = (0..=n).map(|k| [one(k) + t2[k], 2.0 * t[k], one(k) - t2[k]]).collect();
    let ap: Vec<[f64; 3]> = (0..=n).map(|k| [2.0 * t[k], 2.0 * one(k), -2.0 * t[k]]).collect();
    let b = (0..=n)
        .map(|k| {
            let mut bk = [0.0; 3];
            for m in 0..=k {
                let x = c * one(m) - dy[m];
                for i in 0..3 {
                    bk[i] += x * a[k - m][i] + y[m] * ap[k - m][i];
                }
            }
            bk
        })
        .collect();
    (a, b)
}

impl MateSolution {
    pub fn nodes(&self) -> &[MateNode] {
        &self.nodes
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.nodes[0].theta, self.nodes[self.nodes.len() - 1].theta)
    }

    pub fn initial(&self) -> &MateNode {
        &self.nodes[self.origin]
    }

    fn node_near(&self, theta: f64) -> Result<&MateNode> {
        let (a, b) = self.theta_range();
        if theta < a - 1e-12 || theta > b + 1e-12 {
            return Err(Error::domain(format!("θ = {theta} outside the solution window")));
        }
        let k = ((theta - a) / self.h).round() as usize;
        Ok(&self.nodes[k.min(self.nodes.len() - 1)])
    }

    /// Series in ε = θ − θ₀ of t(θ) − t(θ₀) and of y(t(θ)), y′(t(θ)), and the
    /// chart, all to order n.
    fn local(&self, theta: f64, n: usize) -> Result<(i64, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let node = self.node_near(theta)?;
        let j = node.chart;
        let ys = y_series(&node.y, self.c, SERIES_ORDER);
        let tser = tan_half_series(0.5 * (theta - j as f64 * std::f64::consts::PI), n);
        let yl = s_shift(&ys, tser[0] - node.t, n + 1);
        let dyl = s_deriv(&yl);
        let mut g = tser.clone();
        g[0] = 0.0;
        let y = s_compose(&yl[..=n], &g, n);
        let dy = s_compose(&dyl, &g, n);
        Ok((j, tser, y, dy))
    }

    /// (y, y′, y″, y‴) in the chart containing θ, with the chart index.
    pub fn state(&self, theta: f64) -> Result<(i64, f64, [f64; 4])> {
        let node = self.node_near(theta)?;
        let j = node.chart;
        let t = chart_t(theta, j);
        let ys = y_series(&node.y, self.c, SERIES_ORDER);
        let a = s_shift(&ys, t - node.t, 3);
        Ok((j, t, [a[0], a[1], 2.0 * a[2], 6.0 * a[3]]))
    }

    /// Series (standard coordinates) of A(t(θ)), B(t(θ)) and y(t(θ)).
    fn ab_series(&self, theta: f64, n: usize) -> Result<(Vec<[f64; 3]>, Vec<[f64; 3]>, Vec<f64>)> {
        let (j, t, y, dy) = self.local(theta, n)?;
        let (a, b) = conic_ab(self.c, &t, &y, &dy, n);
        Ok((a.into_iter().map(|v| chart_sign(j, v)).collect(), b.into_iter().map(|v| chart_sign(j, v)).collect(), y))
    }

    /// The involute point B(θ) in standard coordinates (scale of the chart).
    pub fn involute_point(&self, theta: f64) -> Result<Vec3> {
        Ok(Vec3(self.ab_series(theta, 0)?.1[0]))
    }

    /// Affine chart (X, Y) = (B₂/B₁, B₃/B₁), in which the conic is X² + Y² = 1.
    pub fn envelope_xy(&self, theta: f64) -> Result<(f64, f64)> {
        let b = self.involute_point(theta)?;
        if b.0[0].abs() < 1e-12 * b.norm() {
            return Err(Error::domain("involute point at infinity of the chart"));
        }
        Ok((b.0[1] / b.0[0], b.0[2] / b.0[0]))
    }

    /// The base conic θ ↦ (1, sin θ, cos θ).
    pub fn q_curve(&self) -> CurveRef {
        Arc::new(ConicAngle)
    }

    /// θ ↦ B(θ), the involute as a point curve.
    pub fn involute_curve(&self) -> CurveRef {
        Arc::new(InvoluteCurve { ms: self.clone() })
    }

    /// θ ↦ b = B × B′, the mate as a curve of lines.
    pub fn p_curve(&self) -> CurveRef {
        Arc::new(DualCurve { inner: self.involute_curve() })
    }

    /// λ with y‴(λy)² = −I_A (I_A = −8 for the conic): the scale for which
    /// q̂ = −A/(λy) has centro-affine torsion −1.
    pub fn lift_scale(&self) -> f64 {
        (8.0 / self.first_integral).cbrt()
    }

    /// θ ↦ q̂ = −A/(λy), the point component of the integral curve in Q⁵.
    pub fn q5_curve(&self) -> Result<CurveRef> {
        if self.c != 0.0 {
            return Err(Error::domain("not a dancing mate: involute constant C ≠ 0"));
        }
        Ok(Arc::new(LiftCurve { ms: self.clone(), lam: self.lift_scale() }))
    }

    /// Samples of the integral curve (q̂, p̂) with p̂ the osculating-plane dual.
    pub fn q5_trajectory(&self, thetas: &[f64]) -> Result<Q5Trajectory> {
        let q = self.q5_curve()?;
        let mut pts = Vec::with_capacity(thetas.len());
        for &th in thetas {
            let qv = q.eval(th);
            let p = frame_dual(q.as_ref(), th)?;
            pts.push(Q5Point { q: qv, p });
        }
        Ok(Q5Trajectory::new(thetas.to_vec(), pts, "circle mate"))
    }

    /// max |y‴y² − 1|·… relative drift of the first integral over the nodes,
    /// using the chart-invariant value y‴y².
    pub fn first_integral_drift(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n.y[3] * n.y[0] * n.y[0] - self.first_integral).abs())
            .fold(0.0, f64::max)
            / self.first_integral.abs().max(1e-300)
    }

    /// max |B × B‴| / (|B|·|B‴|) at the given angles, derivatives in the
    /// chart parameter t (where A is in LF form).
    pub fn b_triple_residual(&self, thetas: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &th in thetas {
            let node = self.node_near(th)?;
            let t = chart_t(th, node.chart);
            let ys = y_series(&node.y, self.c, SERIES_ORDER);
            let y = s_shift(&ys, t - node.t, 4);
            let dy = s_deriv(&y);
            let (_, bs) = conic_ab(self.c, &[t, 1.0, 0.0, 0.0], &y, &dy, 3);
            let b0 = Vec3(bs[0]);
            let b3 = Vec3(bs[3]) * 6.0;
            let scale = b0.norm() * b3.norm().max(1e-300);
            worst = worst.max(cross_vv(&b0, &b3).transpose().norm() / scale);
        }
        Ok(worst)
    }
}

/// θ ↦ (1, sin θ, cos θ).
struct ConicAngle;

impl PlaneCurve for ConicAngle {
    fn jet(&self, th: f64, n: usize) -> Vec<Vec3> {
        (0..=n)
            .map(|k| {
                let a = th + k as f64 * std::f64::consts::FRAC_PI_2;
                Vec3::new(if k == 0 { 1.0 } else { 0.0 }, a.sin(), a.cos())
            })
            .collect()
    }
}

struct InvoluteCurve {
    ms: MateSolution,
}

impl PlaneCurve for InvoluteCurve {
    fn jet(&self, th: f64, n: usize) -> Vec<Vec3> {
        match self.ms.ab_series(th, n) {
            Ok((_, b, _)) => jets_from_series(&b, n),
            Err(_) => vec![Vec3::new(f64::NAN, f64::NAN, f64::NAN); n + 1],
        }
    }
    fn domain(&self) -> (f64, f64) {
        self.ms.theta_range()
    }
}

struct LiftCurve {
    ms: MateSolution,
    lam: f64,
}

impl PlaneCurve for LiftCurve {
    fn jet(&self, th: f64, n: usize) -> Vec<Vec3> {
        match self.ms.ab_series(th, n) {
            Ok((a, _, y)) => {
                let ry = s_recip(&y, n);
                let s: Vec<[f64; 3]> = (0..=n)
                    .map(|k| {
                        let mut v = [0.0; 3];
                        for i in 0..3 {
                            for m in 0..=k {
                                v[i] -= a[k - m][i] * ry[m] / self.lam;
                            }
                        }
                        v
                    })
                    .collect();
                jets_from_series(&s, n)
            }
            Err(_) => vec![Vec3::new(f64::NAN, f64::NAN, f64::NAN); n + 1],
        }
    }
    fn domain(&self) -> (f64, f64) {
        self.ms.theta_range()
    }
}

/// Residuals certifying a dancing mate; the maxima over the sample points.
#[derive(Debug, Clone, Serialize)]
pub struct MateReport {
    /// (i) dancing (null) condition.
    pub dancing: f64,
    /// (ii) |x + y′| for B = xÂ + yÂ′ built from unimodular lifts.
    pub involute_constant: f64,
    /// (iii) |P_q − P_p|/(1 + |P_q|), the a₁ of the unimodular lifts.
    pub shared_a1: f64,
    /// (iv) |σ*φ(∂)| of the adapted lift.
    pub parallel_sd: f64,
    /// (v) B × B‴ = 0 in the LF parameter.
    pub b_triple: f64,
    /// max |J/I² + 1| of the integral-curve lift, when available.
    pub torsion: Option<f64>,
    pub samples: usize,
}

impl MateReport {
    pub fn passes(&self, tol: f64) -> bool {
        let ok = |v: f64| v.is_finite() && v < tol;
        ok(self.dancing)
            && ok(self.involute_constant)
            && ok(self.shared_a1)
            && ok(self.parallel_sd)
            && ok(self.b_triple)
            && self.torsion.map(ok).unwrap_or(true)
    }
}

/// x + y′ at t for the pair (q, p): with Â = I_q^{−1/3}q, b̂ = I_p^{−1/3}p and
/// B = b̂ × b̂′, this is the Â′-coefficient of B′ (B lies on the tangent
/// line of q for dancing pairs).
pub fn involute_constant(q: &dyn PlaneCurve, p: &dyn PlaneCurve, t: f64) -> Result<f64> {
    let qa = q.jet(t, 4);
    let pa = p.jet(t, 4);
    let uni = |a: &[Vec3]| -> Result<Vec<Vec3>> {
        // λ = I^{−1/3}: λ′ = −(I′/3I)λ, λ″ from I″
        let i = det3(&a[0], &a[1], &a[2]);
        if i.abs() < 1e-14 * a[0].norm().powi(3).max(1e-300) {
            return Err(Error::domain("inflection point"));
        }
        let di = det3(&a[0], &a[1], &a[3]);
        let ddi = det3(&a[1], &a[1], &a[3]) + det3(&a[0], &a[2], &a[3]) + det3(&a[0], &a[1], &a[4]);
        let l = i.cbrt().recip();
        let u = -di / (3.0 * i);
        let du = -ddi / (3.0 * i) + di * di / (3.0 * i * i);
        let l1 = u * l;
        let l2 = (du + u * u) * l;
        Ok(vec![
            a[0] * l,
            a[1] * l + a[0] * l1,
            a[2] * l + a[1] * (2.0 * l1) + a[0] * l2,
        ])
    };
    let ah = uni(&qa)?;
    let bh = uni(&pa)?;
    // B = b̂ × b̂′, B′ = b̂ × b̂″
    let b = cross_vv(&bh[0], &bh[1]).transpose();
    let db = cross_vv(&bh[0], &bh[2]).transpose();
    let m = Mat3::from_cols(&ah[0], &ah[1], &ah[2]);
    let mi = m
        .inverse()
        .ok_or_else(|| Error::domain("degenerate frame"))?;
    let xb = mi.mul_vec(&b);
    let xdb = mi.mul_vec(&db);
    // off the tangent line B has a z·Â″ part; B′ then picks up −zPÂ′
    let p_q = taut_coeffs(q, t)?.p;
    Ok(xdb.0[1] + xb.0[2] * p_q)
}

fn p_coefficient(c: &dyn PlaneCurve, t: f64) -> Result<f64> {
    Ok(taut_coeffs(c, t)?.p)
}

/// Mate checks (i)–(v) for a pair of curves sharing a parameter.
pub fn mate_verify_pair(q: CurveRef, p: CurveRef, ts: &[f64]) -> MateReport {
    let mut r = MateReport {
        dancing: 0.0,
        involute_constant: 0.0,
        shared_a1: 0.0,
        parallel_sd: 0.0,
        b_triple: 0.0,
        torsion: None,
        samples: ts.len(),
    };
    let bad = f64::INFINITY;
    let pstar: CurveRef = Arc::new(DualCurve { inner: p.clone() });
    let acc = |slot: &mut f64, v: Result<f64>| {
        let v = v.map(f64::abs).unwrap_or(bad);
        *slot = if v.is_nan() { bad } else { slot.max(v) };
    };
    for &t in ts {
        acc(&mut r.dancing, dancing_residual(q.as_ref(), p.as_ref(), t));
        acc(&mut r.involute_constant, involute_constant(q.as_ref(), p.as_ref(), t));
        let pq = p_coefficient(q.as_ref(), t);
        let rel = |o: Result<f64>| -> Result<f64> {
            let a = *pq.as_ref().map_err(|e| e.clone())?;
            Ok((a - o?) / (1.0 + a.abs()))
        };
        acc(&mut r.shared_a1, rel(p_coefficient(p.as_ref(), t)));
        acc(&mut r.b_triple, rel(p_coefficient(pstar.as_ref(), t)));
    }
    let (t0, t1) = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let nc = NullCurve::new(q, p, t0, t1);
    match parallel_sd_residual(&nc, ts) {
        Ok(v) => r.parallel_sd = v.into_iter().fold(0.0, f64::max),
        Err(_) => r.parallel_sd = bad,
    }
    r
}

/// Mate checks for a stored conic involute, with the chart-level B × B‴
/// test and (for C = 0) the torsion of the integral-curve lift.
pub fn mate_verify(ms: &MateSolution, thetas: &[f64]) -> MateReport {
    let mut r = mate_verify_pair(ms.q_curve(), ms.p_curve(), thetas);
    r.b_triple = r.b_triple.max(ms.b_triple_residual(thetas).unwrap_or(f64::INFINITY));
    if let Ok(q) = ms.q5_curve() {
        let tor = thetas
            .iter()
            .map(|&th| centro_affine_torsion(q.as_ref(), th).map(|v| (v + 1.0).abs()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        r.torsion = Some(tor);
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WFamily {
    Y1,
    Y2,
    Y3,
}

impl std::str::FromStr for WFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "Y1" => Ok(WFamily::Y1),
            "Y2" => Ok(WFamily::Y2),
            "Y3" => Ok(WFamily::Y3),
            _ => Err(Error::Parse(format!("unknown family {s:?} (expected Y1, Y2 or Y3)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WCurveSpec {
    pub family: WFamily,
    pub param: Option<f64>,
    pub y: Mat3,
    /// λ³ + a₁λ + a₀ is the characteristic polynomial of Y.
    pub a1: f64,
    pub a0: f64,
    pub kappa: f64,
}

/// |Y·(e₃, e³)| against 𝒟: the defects of p₀dq = 0 and dp = q₀ × dq.
pub fn horizontality_defect(y: &Mat3) -> f64 {
    let m = &y.0;
    m[2][2].abs() + (m[2][0] - m[1][2]).abs() + (m[2][1] + m[0][2]).abs()
}

/// Characteristic polynomial λ³ + a₁λ + a₀ of a traceless Y.
pub fn char_poly(y: &Mat3) -> (f64, f64) {
    let m = &y.0;
    let a1 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    (a1, -y.det())
}

pub fn wcurve_make(family: WFamily, param: Option<f64>) -> Result<WCurveSpec> {
    let need = |name: &str| -> Result<f64> {
        match param {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(Error::domain(format!("{name} must be positive, got {v}"))),
            None => Err(Error::domain(format!("{name} is required"))),
        }
    };
    let y = match family {
        WFamily::Y1 => {
            let a = need("a")?;
            Mat3([[1.0, 0.0, 1.0], [0.0, -1.0, a], [a, -1.0, 0.0]])
        }
        WFamily::Y2 => {
            let b = need("b")?;
            Mat3([[0.0, 1.0, b], [-1.0, 0.0, 0.0], [0.0, -b, 0.0]])
        }
        WFamily::Y3 => {
            if param.is_some() {
                return Err(Error::domain("Y3 takes no parameter"));
            }
            Mat3([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        }
    };
    debug_assert!(y.trace() == 0.0 && horizontality_defect(&y) == 0.0);
    let (a1, a0) = char_poly(&y);
    if a0 == 0.0 {
        return Err(Error::domain("κ undefined: det Y = 0"));
    }
    let kappa = 0.5 * a1 * (a0 * a0).cbrt().recip();
    Ok(WCurveSpec { family, param, y, a1, a0, kappa })
}

impl WCurveSpec {
    /// (exp(tY)e₃, e³exp(−tY)) as point and line curves.
    pub fn pair(&self) -> (CurveRef, CurveRef) {
        let q = OrbitCurve { y: self.y, v0: Vec3::basis(2), dual: false };
        let p = OrbitCurve { y: self.y, v0: Vec3::basis(2), dual: true };
        (Arc::new(q), Arc::new(p))
    }

    pub fn trajectory(&self, t0: f64, t1: f64, n: usize) -> Q5Trajectory {
        let ts: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        let pts = ts
            .iter()
            .map(|&t| Q5Point {
                q: mat_exp(&self.y, t).mul_vec(&Vec3::basis(2)),
                p: Vec3::basis(2).transpose().mul_mat(&mat_exp(&self.y, -t)),
            })
            .collect();
        Q5Trajectory::new(ts, pts, format!("{:?} orbit", self.family))
    }
}

pub fn wcurve_pair(spec: &WCurveSpec) -> (CurveRef, CurveRef) {
    spec.pair()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_arithmetic() {
        // 1/(1 − ε) and exp∘(ε + ε²) at order 4
        let r = s_recip(&[1.0, -1.0], 4);
        assert!(r.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let e: Vec<f64> = (0..6).map(|k| 1.0 / factorial(k)).collect();
        let c = s_compose(&e, &[0.0, 1.0, 1.0], 3);
        // e^{ε+ε²} = 1 + ε + 3ε²/2 + 7ε³/6
        for (got, want) in c.iter().zip([1.0, 1.0, 1.5, 7.0 / 6.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let s = s_shift(&[1.0, 2.0, 3.0], 0.5, 2);
        assert_eq!(s, vec![1.0 + 1.0 + 0.75, 2.0 + 3.0, 3.0]);
        let t = tan_half_series(0.3, 3);
        let h = 1e-4;
        let d = ((0.3f64 + h / 2.0).tan() - (0.3f64 - h / 2.0).tan()) / (2.0 * h);
        assert!((t[1] - d).abs() < 1e-8);
    }

    #[test]
    fn y_series_solves_the_mate_equation() {
        let st = [1.3, 0.4, -0.2, 0.7];
        let a = y_series(&st, 0.25, 12);
        let ev = |k: usize, x: f64| -> f64 {
            (k..a.len())
                .map(|i| a[i] * (0..k).map(|j| (i - j) as f64).product::<f64>() * x.powi((i - k) as i32))
                .sum()
        };
        for x in [0.0, 0.05, -0.1] {
            let lhs = ev(0, x) * ev(4, x);
            let rhs = 2.0 * ev(3, x) * (0.25 - ev(1, x));
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} {rhs}");
        }
    }

    #[test]
    fn chart_switch_is_an_involution() {
        let y = [0.7, -0.3, 1.1, 2.0];
        let t = 0.9;
        let z = switch_chart(-1.0 / t, &switch_chart(t, &y));
        for i in 0..4 {
            assert!((z[i] - y[i]).abs() < 1e-13);
        }
        // y‴y² is chart-invariant
        let w = switch_chart(t, &y);
        assert!((w[3] * w[0] * w[0] - y[3] * y[0] * y[0]).abs() < 1e-13);
    }

    #[test]
    fn kappa0_constant() {
        assert!((KAPPA0 + 3.0 * 32f64.cbrt().recip()).abs() < 1e-15);
    }
}
