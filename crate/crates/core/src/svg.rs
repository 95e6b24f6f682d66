//! Static SVG figures and CSV tables built from computed data. Plot
//! coordinates are the affine chart (x/z, y/z) unless stated otherwise.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::curves::{CurveRef, DualCurve, PlaneCurve, PolyCurve};
use crate::error::{Error, Result};
use crate::linalg::{cross_vv, Covec3, Mat3, Vec3};
use crate::mates::{circle_mates_with, wcurve_make, MateOptions, MateSolution, WFamily};
use crate::metric::dancing_residual;
use crate::projective::lf_normalize;
use crate::rolling::{development, osculating_conic, parallel_transport_line, Branch};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// An SVG canvas over the box [x0, x1] × [y0, y1] (y up).
#[derive(Debug, Clone)]
pub struct Figure {
    bounds: [f64; 4],
    px: f64,
    body: String,
    curves: usize,
}

impl Figure {
    /// `px` is the width in pixels; the height keeps the aspect ratio.
    pub fn new(bounds: [f64; 4], px: f64) -> Figure {
        Figure { bounds, px, body: String::new(), curves: 0 }
    }

    fn scale(&self) -> f64 {
        self.px / (self.bounds[1] - self.bounds[0])
    }

    fn height(&self) -> f64 {
        (self.bounds[3] - self.bounds[2]) * self.scale()
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let s = self.scale();
        ((x - self.bounds[0]) * s, (self.bounds[3] - y) * s)
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        let [x0, x1, y0, y1] = self.bounds;
        let (mx, my) = (0.5 * (x1 - x0), 0.5 * (y1 - y0));
        x.is_finite() && y.is_finite() && x > x0 - mx && x < x1 + mx && y > y0 - my && y < y1 + my
    }

    /// Number of polylines drawn so far (each unbroken run counts once).
    pub fn curve_count(&self) -> usize {
        self.curves
    }

    /// Draw a sampled curve, breaking it where it leaves the (padded) box or
    /// jumps by more than the box size (passing through infinity).
    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        let jump = (self.bounds[1] - self.bounds[0]).max(self.bounds[3] - self.bounds[2]);
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for &(x, y) in pts {
            let ok = self.inside(x, y);
            let cont = prev.is_some_and(|(a, b)| ((x - a).powi(2) + (y - b).powi(2)).sqrt() < jump);
            if !ok || !cont {
                self.flush(&mut run, color, width);
            }
            if ok {
                run.push((x, y));
                prev = Some((x, y));
            } else {
                prev = None;
            }
        }
        self.flush(&mut run, color, width);
    }

    fn flush(&mut self, run: &mut Vec<(f64, f64)>, color: &str, width: f64) {
        if run.len() >= 2 {
            let pts: Vec<String> = run
                .iter()
                .map(|&(x, y)| {
                    let (u, v) = self.map(x, y);
                    format!("{u:.2},{v:.2}")
                })
                .collect();
            let _ = writeln!(
                self.body,
                r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
                pts.join(" ")
            );
            self.curves += 1;
        }
        run.clear();
    }

    /// Sample a plane curve in the affine chart.
    pub fn curve(&mut self, c: &dyn PlaneCurve, t0: f64, t1: f64, n: usize, color: &str, width: f64) {
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|i| chart_xy(&c.eval(t0 + (t1 - t0) * i as f64 / n as f64)))
            .collect();
        self.polyline(&pts, color, width);
    }

    /// The line ℓ·(x, y, 1) = 0 clipped to the box.
    pub fn line(&mut self, ell: &Covec3, color: &str, width: f64) {
        let [x0, x1, y0, y1] = self.bounds;
        let (a, b, c) = (ell[0], ell[1], ell[2]);
        let mut hits: Vec<(f64, f64)> = Vec::new();
        if b.abs() > 1e-14 {
            for x in [x0, x1] {
                let y = -(a * x + c) / b;
                if y >= y0 && y <= y1 {
                    hits.push((x, y));
                }
            }
        }
        if a.abs() > 1e-14 {
            for y in [y0, y1] {
                let x = -(b * y + c) / a;
                if x >= x0 && x <= x1 {
                    hits.push((x, y));
                }
            }
        }
        if hits.len() >= 2 {
            let (u0, v0) = self.map(hits[0].0, hits[0].1);
            let (u1, v1) = self.map(hits[1].0, hits[1].1);
            let _ = writeln!(
                self.body,
                r#"<line x1="{u0:.2}" y1="{v0:.2}" x2="{u1:.2}" y2="{v1:.2}" stroke="{color}" stroke-width="{width}"/>"#
            );
        }
    }

    /// Open a `<g>` element; close it with [`Figure::end_group`].
    pub fn group(&mut self, class: &str) {
        let _ = writeln!(self.body, r#"<g class="{class}">"#);
    }

    pub fn end_group(&mut self) {
        self.body.push_str("</g>\n");
    }

    pub fn dot(&mut self, x: f64, y: f64, r: f64, color: &str) {
        if self.inside(x, y) {
            let (u, v) = self.map(x, y);
            let _ = writeln!(self.body, r#"<circle cx="{u:.2}" cy="{v:.2}" r="{r}" fill="{color}"/>"#);
        }
    }

    pub fn finish(&self, title: &str) -> String {
        let (w, h) = (self.px, self.height());
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n\
             <title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// (x/z, y/z), NaN at infinity.
pub fn chart_xy(v: &Vec3) -> (f64, f64) {
    if v[2].abs() < 1e-300 {
        return (f64::NAN, f64::NAN);
    }
    (v[0] / v[2], v[1] / v[2])
}

fn theta_grid(ms: &MateSolution, n: usize) -> Vec<f64> {
    let (a, b) = ms.theta_range();
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Mates of the unit circle starting at the north pole with a vertical
/// line whose contact point is (x0, 1): initial jet (1, −2/x0, 2) at θ = 0.
/// Each is integrated over θ ∈ span and truncated where y vanishes.
pub fn circle_mate_family(x0s: &[f64], span: (f64, f64)) -> Result<Vec<MateSolution>> {
    let o = MateOptions { truncate: true, ..MateOptions::default() };
    x0s.par_iter().map(|&x0| circle_mates_with([1.0, -2.0 / x0, 2.0], span, &o)).collect()
}

/// The unit circle and `n` mate envelopes around it, contact points spread
/// over ±x0 with x0 ∈ [1.1, 4].
pub fn circle_mates_svg(n: usize, span: (f64, f64)) -> Result<(String, usize)> {
    if n == 0 {
        return Err(Error::domain("need at least one envelope"));
    }
    // alternate sides of the circle
    let x0s: Vec<f64> = (0..n)
        .map(|k| {
            let m = (n / 2).max(1);
            let x = 1.1 + 2.9 * (k / 2) as f64 / m.saturating_sub(1).max(1) as f64;
            if k % 2 == 0 { x } else { -x }
        })
        .collect();
    let family = circle_mate_family(&x0s, span)?;
    let mut fig = Figure::new([-4.0, 4.0, -4.0, 4.0], 600.0);
    let circle: Vec<(f64, f64)> = (0..=360).map(|i| (i as f64).to_radians()).map(|a| (a.cos(), a.sin())).collect();
    fig.polyline(&circle, "black", 2.0);
    fig.polyline(&[(-0.6, 1.0), (0.6, 1.0)], "black", 1.0);
    let mut drawn = 0;
    for (k, ms) in family.iter().enumerate() {
        let pts: Vec<(f64, f64)> = theta_grid(ms, 4000)
            .iter()
            .map(|&th| ms.envelope_xy(th).unwrap_or((f64::NAN, f64::NAN)))
            .collect();
        let before = fig.curve_count();
        fig.group("envelope");
        fig.polyline(&pts, PALETTE[k % PALETTE.len()], 1.2);
        fig.end_group();
        if fig.curve_count() > before {
            drawn += 1;
        }
    }
    Ok((fig.finish("mates of the unit circle"), drawn))
}

/// CSV of a circle mate: θ, chart, t, y, y′, y″, y‴, the envelope point
/// and the dancing residual of (circle, mate) at θ.
pub fn mates_csv(ms: &MateSolution, n: usize) -> Result<String> {
    let q = ms.q_curve();
    let p = ms.p_curve();
    let mut s = String::from("theta,chart,t,y,y1,y2,y3,X,Y,dancing\n");
    for th in theta_grid(ms, n) {
        let (j, t, y) = ms.state(th)?;
        let (x, yy) = ms.envelope_xy(th).unwrap_or((f64::NAN, f64::NAN));
        let d = dancing_residual(q.as_ref(), p.as_ref(), th)?;
        let _ = writeln!(s, "{th},{j},{t},{},{},{},{},{x},{yy},{d:e}", y[0], y[1], y[2], y[3]);
    }
    Ok(s)
}

/// A single mate envelope over the unit circle.
pub fn mate_svg(ms: &MateSolution) -> String {
    let mut fig = Figure::new([-4.0, 4.0, -4.0, 4.0], 600.0);
    let circle: Vec<(f64, f64)> = (0..=360).map(|i| (i as f64).to_radians()).map(|a| (a.cos(), a.sin())).collect();
    fig.polyline(&circle, "black", 2.0);
    let pts: Vec<(f64, f64)> = theta_grid(ms, 2000)
        .iter()
        .map(|&th| ms.envelope_xy(th).unwrap_or((f64::NAN, f64::NAN)))
        .collect();
    fig.polyline(&pts, PALETTE[0], 1.2);
    fig.finish("mate of the unit circle")
}

/// Real roots of λ³ + a₁λ + a₀, ascending.
fn cubic_roots(a1: f64, a0: f64) -> Vec<f64> {
    let disc = a0 * a0 / 4.0 + a1 * a1 * a1 / 27.0;
    if disc > 0.0 {
        let s = disc.sqrt();
        return vec![(-a0 / 2.0 + s).cbrt() + (-a0 / 2.0 - s).cbrt()];
    }
    let m = 2.0 * (-a1 / 3.0).sqrt();
    let phi = if m == 0.0 { 0.0 } else { (3.0 * a0 / (a1 * m)).clamp(-1.0, 1.0).acos() / 3.0 };
    let mut r: Vec<f64> = (0..3)
        .map(|k| m * (phi - std::f64::consts::TAU * k as f64 / 3.0).cos())
        .collect();
    r.sort_by(f64::total_cmp);
    r
}

/// A null vector of a rank-2 matrix: the largest cross product of two rows.
fn kernel(m: &Mat3) -> Vec3 {
    let r = [m.row(0), m.row(1), m.row(2)];
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| crate::linalg::cross_cc(&r[i], &r[j]))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("three pairs")
}

/// Coordinates in which exp(tY) acts by diagonal scalings, or by a
/// rotation-dilation of the first two coordinates when Y has complex
/// eigenvalues: W-curves become power curves or logarithmic spirals.
pub fn adapted_chart(y: &Mat3, a1: f64, a0: f64) -> Result<Mat3> {
    let roots = cubic_roots(a1, a0);
    let shift = |l: f64| *y - Mat3::identity() * l;
    let basis = if roots.len() == 1 {
        let l0 = roots[0];
        let v0 = kernel(&shift(l0));
        let w0 = kernel(&shift(l0).transpose());
        let (alpha, beta2) = (-l0 / 2.0, -a0 / l0 - l0 * l0 / 4.0);
        if !(beta2 > 0.0) {
            return Err(Error::domain("no complex eigenvalue pair"));
        }
        let r = (0..3)
            .map(|k| crate::linalg::cross_cc(&w0.transpose(), &Vec3::basis(k).transpose()))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("three axes");
        let s = (*y - Mat3::identity() * alpha).mul_vec(&r) * beta2.sqrt().recip();
        Mat3::from_cols(&r, &s, &v0)
    } else {
        let v: Vec<Vec3> = roots.iter().map(|&l| kernel(&shift(l))).collect();
        Mat3::from_cols(&v[2], &v[0], &v[1])
    };
    basis.inverse().ok_or_else(|| Error::domain("degenerate eigenbasis"))
}

/// The orbit curve q and the envelope of the line curve p of a W-curve
/// pair, drawn in the chart adapted to Y.
pub fn wcurve_svg(family: WFamily, param: Option<f64>, t0: f64, t1: f64) -> Result<String> {
    let spec = wcurve_make(family, param)?;
    let chart = adapted_chart(&spec.y, spec.a1, spec.a0)?;
    let (q, p) = spec.pair();
    let env: CurveRef = Arc::new(DualCurve { inner: p });
    let n = 4000;
    let sample = |c: &CurveRef| -> Vec<(f64, f64)> {
        (0..=n)
            .map(|i| chart_xy(&chart.mul_vec(&c.eval(t0 + (t1 - t0) * i as f64 / n as f64))))
            .collect()
    };
    let (qs, es) = (sample(&q), sample(&env));
    let finite: Vec<&(f64, f64)> = qs.iter().chain(&es).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    // frame the bulk of the points
    let mut r: Vec<f64> = finite.iter().map(|(x, y)| x.abs().max(y.abs())).collect();
    r.sort_by(f64::total_cmp);
    let half = r.get(r.len() * 3 / 4).copied().unwrap_or(1.0).clamp(1e-3, 1e3) * 1.1;
    let mut fig = Figure::new([-half, half, -half, half], 600.0);
    fig.polyline(&qs, PALETTE[0], 1.5);
    fig.polyline(&es, PALETTE[1], 1.5);
    let k = spec.kappa;
    Ok(fig.finish(&format!("{family:?} pair, kappa = {k}")))
}

/// Curve, osculating conic at `t`, a development, and a parallel family of
/// lines along the default test curve y = x² + 0.3x³ + 0.1x⁴.
pub fn rolling_svg(t: f64, lines: usize) -> Result<String> {
    let c: CurveRef = Arc::new(PolyCurve::graph(&[0.0, 0.0, 1.0, 0.3, 0.1]));
    let (a, b) = (-0.5, 0.8);
    if !(t > a && t < b) {
        return Err(Error::domain(format!("t = {t} outside ({a}, {b})")));
    }
    let lf = lf_normalize(c.clone(), a, b)?;
    let mut fig = Figure::new([-1.0, 1.0, -0.5, 1.5], 600.0);
    fig.curve(c.as_ref(), -0.9, 0.9, 600, "black", 2.0);
    let conic = osculating_conic(&lf, t)?;
    let f = lf.at(t)?.frame;
    let cpts: Vec<(f64, f64)> = (0..=720)
        .map(|i| {
            let phi = std::f64::consts::PI * i as f64 / 720.0;
            let (s, co) = phi.sin_cos();
            chart_xy(&(f[0] * (co * co) + f[1] * (co * s) + f[2] * (0.5 * s * s)))
        })
        .collect();
    debug_assert!(conic.det().abs() > 0.0);
    fig.polyline(&cpts, PALETTE[2], 1.5);
    let dev = development(&lf, Branch::Second)?;
    let dpts: Vec<(f64, f64)> = (0..=400)
        .map(|i| a + (b - a) * i as f64 / 400.0)
        .map(|s| dev.point(s).map(|v| chart_xy(&v)).unwrap_or((f64::NAN, f64::NAN)))
        .collect();
    fig.polyline(&dpts, PALETTE[3], 1.2);
    let q0 = c.eval(t);
    let ell0 = cross_vv(&q0, &Vec3::new(0.0, 1.5, 1.0));
    for k in 0..lines {
        let s = a + 0.05 + (b - a - 0.1) * k as f64 / lines.max(2).saturating_sub(1) as f64;
        let ell = parallel_transport_line(&lf, &ell0, t, s)?;
        fig.line(&ell, PALETTE[1], 0.8);
        let (x, y) = chart_xy(&c.eval(s));
        fig.dot(x, y, 2.5, PALETTE[1]);
    }
    let (x, y) = chart_xy(&q0);
    fig.dot(x, y, 4.0, "black");
    Ok(fig.finish(&format!("osculating conic, development and parallel lines at t = {t}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_breaks_at_infinity() {
        let mut f = Figure::new([-1.0, 1.0, -1.0, 1.0], 100.0);
        let pts: Vec<(f64, f64)> = (-10..=10).map(|i| i as f64 / 10.0).map(|x| (x, 0.1 / x)).collect();
        f.polyline(&pts, "red", 1.0);
        assert_eq!(f.curve_count(), 2);
    }

    #[test]
    fn cubic_roots_match_vieta() {
        for (a1, a0) in [(-1.0, -2.0), (1.0, -1.0), (0.0, -1.0), (-1.0, -0.1)] {
            for l in cubic_roots(a1, a0) {
                assert!((l * l * l + a1 * l + a0).abs() < 1e-12);
            }
        }
        assert_eq!(cubic_roots(-1.0, -0.1).len(), 3);
    }

    #[test]
    fn adapted_chart_turns_the_flow_into_a_rotation_dilation() {
        let spec = wcurve_make(WFamily::Y3, None).unwrap();
        let c = adapted_chart(&spec.y, spec.a1, spec.a0).unwrap();
        let m = c * spec.y * c.inverse().unwrap();
        let m = m.0;
        assert!(m[2][0].abs() + m[2][1].abs() + m[0][2].abs() + m[1][2].abs() < 1e-12);
        assert!((m[0][0] - m[1][1]).abs() < 1e-12 && (m[0][1] + m[1][0]).abs() < 1e-12);
    }

    #[test]
    fn line_is_clipped_to_the_box() {
        let mut f = Figure::new([0.0, 1.0, 0.0, 1.0], 100.0);
        f.line(&Covec3::new(1.0, -1.0, 0.0), "k", 1.0);
        assert!(f.finish("t").contains(r#"x1="0.00" y1="100.00" x2="100.00" y2="0.00""#));
    }
}
