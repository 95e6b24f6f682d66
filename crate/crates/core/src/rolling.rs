//! Osculating conics, developments and the projective rolling residuals.
//!
//! Developments along an LF-normalized curve are indexed by a homogeneous
//! branch c = [c₁ : c₂] ∈ ℝP¹ (in chart 0 of the LF parameter):
//! P_c = c₂²Ā + c₂u Ā′ + (u²/2)Ā″ with u = c₁ − c₂t̄. The branch c = ∞ is
//! [Ā″]; the branch c = t̄₀ has its cusp at q(t₀).

use serde::Serialize;

use crate::curves::{CurveRef, PlaneCurve};
use crate::error::{Error, Result};
use crate::fd::STENCIL7;
use crate::linalg::{cross_cc, cross_vv, det3, proj_distance, Covec3, Mat3, Vec3};
use crate::metric::{ContactElement, M4Point};
use crate::projective::{lf_normalize, LFCurve, LFPoint};

/// A point conic vᵀMv = 0, M symmetric with unit Frobenius norm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Conic {
    pub m: Mat3,
}

impl Conic {
    pub fn new(m: Mat3) -> Result<Self> {
        let s = (m + m.transpose()) * 0.5;
        let n = s.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("zero conic"));
        }
        Ok(Conic { m: s * (1.0 / n) })
    }

    /// vᵀMv / |v|².
    pub fn eval(&self, v: &Vec3) -> f64 {
        v.edot(&self.m.mul_vec(v)) / v.norm2()
    }

    pub fn det(&self) -> f64 {
        self.m.det()
    }

    /// Frobenius distance up to sign.
    pub fn distance(&self, o: &Conic) -> f64 {
        (self.m - o.m).norm().min((self.m + o.m).norm())
    }
}

fn lf_frame_matrix(pt: &LFPoint) -> Mat3 {
    Mat3::from_cols(&pt.frame[0], &pt.frame[1], &pt.frame[2])
}

/// The conic y² = 2xz in the frame (Ā, Ā′, Ā″) at t.
pub fn osculating_conic(lf: &LFCurve, t: f64) -> Result<Conic> {
    let pt = lf.at(t)?;
    let finv = lf_frame_matrix(&pt)
        .inverse()
        .ok_or_else(|| Error::numerical("singular LF frame"))?;
    let q0 = Mat3([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]);
    Conic::new(finv.transpose() * q0 * finv)
}

/// (y² − 2xz)/x² at q(t+h) in frame coordinates at t; O(h⁵).
pub fn contact_defect(lf: &LFCurve, t: f64, h: f64) -> Result<f64> {
    let pt = lf.at(t)?;
    let finv = lf_frame_matrix(&pt)
        .inverse()
        .ok_or_else(|| Error::numerical("singular LF frame"))?;
    let c = finv.mul_vec(&lf.base.eval(t + h));
    Ok((c[1] * c[1] - 2.0 * c[0] * c[2]) / (c[0] * c[0]))
}

/// Least-squares slope of log|contact_defect| against log h.
pub fn contact_order_fit(lf: &LFCurve, t: f64, hs: &[f64]) -> Result<f64> {
    let pts = hs
        .iter()
        .map(|h| Ok((h.ln(), contact_defect(lf, t, *h)?.abs().max(1e-300).ln())))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(num / den)
}

/// Branch in the chart of `pt` from a chart-0 branch.
fn branch_in_chart(c: [f64; 2], chart: usize) -> [f64; 2] {
    if chart == 0 {
        c
    } else {
        [-c[1], c[0]]
    }
}

fn branch_to_chart0(c: [f64; 2], chart: usize) -> [f64; 2] {
    if chart == 0 {
        c
    } else {
        [c[1], -c[0]]
    }
}

fn normalize2(c: [f64; 2]) -> [f64; 2] {
    let n = c[0].hypot(c[1]);
    [c[0] / n, c[1] / n]
}

/// A Cartan development of an LF-normalized curve.
pub struct Development<'a> {
    pub lf: &'a LFCurve,
    /// Homogeneous branch [c₁ : c₂] in chart 0; [1 : 0] is the [Ā″] branch.
    pub branch: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// x(t) = [Ā″(t)].
    Second,
    /// P_c with cusp where t̄ = c (chart 0).
    Cusp(f64),
    Homogeneous([f64; 2]),
}

pub fn development(lf: &LFCurve, branch: Branch) -> Result<Development<'_>> {
    let c = match branch {
        Branch::Second => [1.0, 0.0],
        Branch::Cusp(c) => [c, 1.0],
        Branch::Homogeneous(c) => c,
    };
    if !(c[0].hypot(c[1]) > 0.0) {
        return Err(Error::domain("branch [0 : 0]"));
    }
    Ok(Development {
        lf,
        branch: normalize2(c),
    })
}

impl Development<'_> {
    /// u = c₁ − c₂t̄ in the chart used at t.
    pub fn u(&self, t: f64) -> Result<f64> {
        let pt = self.lf.at(t)?;
        let c = branch_in_chart(self.branch, pt.chart);
        Ok(c[0] - c[1] * pt.tbar)
    }

    fn parts(&self, pt: &LFPoint) -> (Vec3, Vec3) {
        let c = branch_in_chart(self.branch, pt.chart);
        let u = c[0] - c[1] * pt.tbar;
        let [a, a1, a2] = pt.frame;
        let x = a * (c[1] * c[1]) + a1 * (c[1] * u) + a2 * (0.5 * u * u);
        (x, pt.third * (0.5 * u * u))
    }

    pub fn point(&self, t: f64) -> Result<Vec3> {
        Ok(self.parts(&self.lf.at(t)?).0)
    }

    /// d/dt̄ of the homogeneous point: (u²/2)Ā‴.
    pub fn velocity(&self, t: f64) -> Result<Vec3> {
        Ok(self.parts(&self.lf.at(t)?).1)
    }

    /// |dx̂/dt̄| for the unit representative x̂; vanishes at the cusp.
    pub fn speed(&self, t: f64) -> Result<f64> {
        let (x, v) = self.parts(&self.lf.at(t)?);
        let xn = x.norm();
        let perp = v - x * (v.edot(&x) / (xn * xn));
        Ok(perp.norm() / xn)
    }

    /// |det(x, dx/dt, q)| with dx/dt from a 7-point stencil of the unit
    /// representative, normalized.
    pub fn horizontality(&self, t: f64) -> Result<f64> {
        let span = self.lf.t1 - self.lf.t0;
        let h = 1e-3 * span;
        let x0 = self.point(t)?.normalized();
        let mut d = Vec3::ZERO;
        for (k, w) in STENCIL7[0].iter().enumerate() {
            let s = (t + (k as f64 - 3.0) * h).clamp(self.lf.t0, self.lf.t1);
            let mut x = self.point(s)?.normalized();
            if x.edot(&x0) < 0.0 {
                x = -x;
            }
            d = d + x * (*w / h);
        }
        let q = self.lf.base.eval(t).normalized();
        let dn = d.norm();
        if dn < 1e-12 {
            return Ok(0.0);
        }
        Ok(det3(&x0, &d, &q).abs() / dn)
    }

    /// Parameter of the cusp (q(t) = x(t)) inside the LF window, if any.
    pub fn cusp(&self) -> Option<f64> {
        let f = |t: f64| -> Option<f64> {
            let s = self.lf.state(t).ok()?;
            Some(self.branch[0] * s[2] - self.branch[1] * s[0])
        };
        let g = self.lf.grid();
        let mut prev = (g[0], f(g[0])?);
        for &t in &g[1..] {
            let v = f(t)?;
            if v == 0.0 {
                return Some(t);
            }
            if v.signum() != prev.1.signum() {
                let (mut a, mut b, mut fa) = (prev.0, t, prev.1);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    let fm = f(m)?;
                    if fm.signum() == fa.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                return Some(0.5 * (a + b));
            }
            prev = (t, v);
        }
        None
    }
}

/// Second intersection of a line through q(t₀) with the osculating conic, in
/// frame coordinates (x, y, z) of (Ā, Ā′, Ā″).
fn frame_coords(pt: &LFPoint, ell: &Covec3) -> [f64; 3] {
    [ell.pair(&pt.frame[0]), ell.pair(&pt.frame[1]), ell.pair(&pt.frame[2])]
}

fn check_through(pt: &LFPoint, ell: &Covec3) -> Result<()> {
    let a = pt.frame[0];
    if ell.pair(&a).abs() > 1e-8 * ell.norm() * a.norm() {
        return Err(Error::domain(format!("line does not pass through q(t0) at t0 = {}", pt.t)));
    }
    Ok(())
}

/// Branch of the development through the second intersection of `ell` (a
/// line through q(t0)) with the osculating conic at t0. The tangent line
/// gives the branch with its cusp at t0.
pub fn branch_of_line(lf: &LFCurve, ell: &Covec3, t0: f64) -> Result<[f64; 2]> {
    let pt = lf.at(t0)?;
    check_through(&pt, ell)?;
    let [_, l1, l2] = frame_coords(&pt, ell);
    let c = [l2 * pt.tbar - 2.0 * l1, l2];
    Ok(normalize2(branch_to_chart0(c, pt.chart)))
}

/// Branch through a point x of the osculating conic at t0 (x ≠ q(t0)).
pub fn branch_through(lf: &LFCurve, x: &Vec3, t0: f64) -> Result<[f64; 2]> {
    let pt = lf.at(t0)?;
    let conic = osculating_conic(lf, t0)?;
    if conic.eval(x).abs() > 1e-8 {
        return Err(Error::domain("point is not on the osculating conic"));
    }
    let ell = cross_vv(&pt.frame[0], x);
    if ell.norm() < 1e-10 * x.norm() * pt.frame[0].norm() {
        return Err(Error::domain("point coincides with q(t0): every cusp branch meets it"));
    }
    branch_of_line(lf, &ell, t0)
}

/// Parallel transport of a line through q(t0) to t1.
pub fn parallel_transport_line(lf: &LFCurve, ell0: &Covec3, t0: f64, t1: f64) -> Result<Covec3> {
    let c = branch_of_line(lf, ell0, t0)?;
    let dev = development(lf, Branch::Homogeneous(c))?;
    let pt = lf.at(t1)?;
    let (x, _) = dev.parts(&pt);
    let l = cross_vv(&pt.frame[0], &x);
    if l.norm() > 1e-10 * x.norm() * pt.frame[0].norm() {
        return Ok(l.normalized());
    }
    // at the cusp the transported line is the tangent
    Ok(cross_vv(&pt.frame[0], &pt.frame[1]).normalized())
}

/// Normal acceleration at the unit representative: T_[q]ℝP² ≅ q̂^⊥.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalAcceleration {
    pub q: Vec3,
    /// dπ(q′).
    pub tangent: Vec3,
    /// dπ(q″) with its tangent component removed.
    pub normal: Vec3,
    /// Component along the transversal q̂ × τ̂.
    pub value: f64,
}

fn dpi(q: &Vec3, v: &Vec3) -> Vec3 {
    let qn = q.norm();
    let u = *q * (1.0 / qn);
    (*v - u * v.edot(&u)) * (1.0 / qn)
}

pub fn normal_acceleration(c: &dyn PlaneCurve, t: f64) -> Result<NormalAcceleration> {
    let j = c.jet(t, 2);
    let tau = dpi(&j[0], &j[1]);
    if tau.norm() < 1e-12 {
        return Err(Error::domain(format!("q′ = 0 at t = {t}")));
    }
    let acc = dpi(&j[0], &j[2]);
    let normal = acc - tau * (acc.edot(&tau) / tau.norm2());
    let q = j[0].normalized();
    let nu = cross_vv(&q, &tau.normalized()).transpose();
    Ok(NormalAcceleration {
        q,
        tangent: tau,
        normal,
        value: normal.edot(&nu),
    })
}

/// (x″, y″) minus its projection on (x′, y′) in the chart z = 1.
pub fn normal_acceleration_chart(c: &dyn PlaneCurve, t: f64) -> Result<[f64; 2]> {
    let j = c.jet(t, 2);
    let (w, w1, w2) = (j[0][2], j[1][2], j[2][2]);
    if w.abs() < 1e-12 {
        return Err(Error::domain("outside the affine chart"));
    }
    let comp = |i: usize| {
        let (f, f1, f2) = (j[0][i], j[1][i], j[2][i]);
        let x = f / w;
        let x1 = (f1 - x * w1) / w;
        let x2 = (f2 - 2.0 * x1 * w1 - x * w2) / w;
        (x1, x2)
    };
    let ((x1, x2), (y1, y2)) = (comp(0), comp(1));
    let n2 = x1 * x1 + y1 * y1;
    if n2 < 1e-24 {
        return Err(Error::domain(format!("q′ = 0 at t = {t}")));
    }
    let k = (x2 * x1 + y2 * y1) / n2;
    Ok([x2 - k * x1, y2 - k * y1])
}

/// Curve jets at the normalized representatives of `ce`, as classes:
/// (q̂′ mod q̂, q̂″ mod (q̂, q̂′)) and the same for p̂.
struct NormalizedJets {
    q: Vec3,
    p: Covec3,
    dq: Vec3,
    ddq: Vec3,
    dp: Covec3,
    ddp: Covec3,
}

fn normalized_jets(q: &dyn PlaneCurve, p: &dyn PlaneCurve, ce: &ContactElement, t: f64) -> Result<NormalizedJets> {
    let (qn, pn) = ce.base.normalized_reps();
    let jq = q.jet(t, 2);
    let jp = p.jet(t, 2);
    if proj_distance(&jq[0].0, &qn.0) > 1e-6 || proj_distance(&jp[0].0, &pn.0) > 1e-6 {
        return Err(Error::domain(format!("contact element is not based at (q(t), p(t)) at t = {t}")));
    }
    let mu = jq[0].edot(&qn);
    let nu = jp[0].edot(&pn.transpose()) / pn.norm2();
    Ok(NormalizedJets {
        q: qn,
        p: pn,
        dq: jq[1] * (1.0 / mu),
        ddq: jq[2] * (1.0 / mu),
        dp: (jp[1] * (1.0 / nu)).transpose(),
        ddp: (jp[2] * (1.0 / nu)).transpose(),
    })
}

/// v modulo the span of `basis` (Gram–Schmidt).
fn modulo(v: Vec3, basis: &[Vec3]) -> Vec3 {
    let mut ortho: Vec<Vec3> = Vec::new();
    for b in basis {
        let mut w = *b;
        for o in &ortho {
            w = w - *o * w.edot(o);
        }
        if w.norm() > 1e-14 * b.norm().max(1e-300) {
            ortho.push(w.normalized());
        }
    }
    let mut r = v;
    for o in &ortho {
        r = r - *o * r.edot(o);
    }
    r
}

/// Contact element at (q(t), p(t)) whose scale best matches ψq′ = p′.
pub fn induced_contact(q: &dyn PlaneCurve, p: &dyn PlaneCurve, t: f64) -> Result<ContactElement> {
    let base = M4Point::new(q.eval(t), p.eval(t).transpose())?;
    let trial = ContactElement { base, scale: 1.0 };
    let j = normalized_jets(q, p, &trial, t)?;
    let pv = j.p.transpose();
    let a = modulo(cross_vv(&j.q, &j.dq).transpose(), &[pv]);
    let b = modulo(j.dp.transpose(), &[pv]);
    if a.norm2() < 1e-24 {
        return Err(Error::domain(format!("q′ = 0 at t = {t}")));
    }
    let scale = a.edot(&b) / a.norm2();
    if scale.abs() < 1e-14 {
        return Err(Error::domain(format!("p′ ≡ 0 mod p at t = {t}: no contact element matches")));
    }
    Ok(ContactElement { base, scale })
}

/// |ψq′ − p′| / |p′| at the normalized representatives, modulo p.
pub fn no_slip_residual(q: &dyn PlaneCurve, p: &dyn PlaneCurve, ce: &ContactElement, t: f64) -> Result<f64> {
    let j = normalized_jets(q, p, ce, t)?;
    let pv = j.p.transpose();
    let lhs = modulo((cross_vv(&j.q, &j.dq) * ce.scale).transpose(), &[pv]);
    let rhs = modulo(j.dp.transpose(), &[pv]);
    let scale = rhs.norm().max(lhs.norm());
    if scale < 1e-14 {
        return Err(Error::domain(format!("stationary pair at t = {t}")));
    }
    Ok((lhs - rhs).norm() / scale)
}

/// |ψq″ − p″| / |p″| modulo (p, p′); meaningful along no-slip curves.
pub fn psi_acceleration_residual(q: &dyn PlaneCurve, p: &dyn PlaneCurve, ce: &ContactElement, t: f64) -> Result<f64> {
    let j = normalized_jets(q, p, ce, t)?;
    let (pv, dpv) = (j.p.transpose(), j.dp.transpose());
    let lhs = modulo((cross_vv(&j.q, &j.ddq) * ce.scale).transpose(), &[pv, dpv]);
    let rhs = modulo(j.ddp.transpose(), &[pv, dpv]);
    let scale = rhs.norm().max(lhs.norm()).max(1e-3 * j.ddp.norm());
    if scale < 1e-14 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

/// A point-line curve pair with LF normalizations of both members.
pub struct RollingPair {
    pub lq: LFCurve,
    pub lp: LFCurve,
    t_ref: f64,
    branch_ref: [f64; 2],
}

impl RollingPair {
    /// `p` is the line curve in line coordinates; t_ref = t0 fixes the
    /// parallel reference.
    pub fn new(q: CurveRef, p: CurveRef, t0: f64, t1: f64) -> Result<Self> {
        let lq = lf_normalize(q, t0, t1)?;
        let lp = lf_normalize(p, t0, t1)?;
        let mut rp = RollingPair {
            lq,
            lp,
            t_ref: t0,
            branch_ref: [1.0, 0.0],
        };
        rp.branch_ref = rp.rolled_branch(t0)?;
        Ok(rp)
    }

    /// ψℓ = ℓ ∩ p with ℓ = line(Ā, Ā″) of q, Ā″ taken in chart 0 of the
    /// LF parameter throughout.
    pub fn rolled_point(&self, t: f64) -> Result<Vec3> {
        let a = self.lq.at(t)?;
        let x = development(&self.lq, Branch::Second)?.parts(&a).0;
        let ell = cross_vv(&a.frame[0], &x);
        let p = self.lp.at(t)?.frame[0].transpose();
        let x = cross_cc(&ell, &p);
        if x.norm() < 1e-10 * ell.norm() * p.norm() {
            return Err(Error::domain(format!("degenerate intersection ℓ ∩ p at t = {t}")));
        }
        Ok(x)
    }

    /// Parallel point along p through X: X = b×P_c for the LF lift b of p.
    fn branch_of_point(pt: &LFPoint, x: &Vec3) -> [f64; 2] {
        let b = pt.frame[0].transpose();
        let w1 = cross_cc(&b, &pt.frame[1].transpose());
        let w2 = cross_cc(&b, &pt.frame[2].transpose());
        let n = cross_vv(&w1, &w2).transpose();
        let n2 = n.norm2();
        let alpha = cross_vv(x, &w2).transpose().edot(&n) / n2;
        let beta = cross_vv(&w1, x).transpose().edot(&n) / n2;
        normalize2(branch_to_chart0([2.0 * beta + alpha * pt.tbar, alpha], pt.chart))
    }

    fn parallel_point(pt: &LFPoint, c0: [f64; 2]) -> Vec3 {
        let c = branch_in_chart(c0, pt.chart);
        let u = c[0] - c[1] * pt.tbar;
        let b = pt.frame[0].transpose();
        let w1 = cross_cc(&b, &pt.frame[1].transpose());
        let w2 = cross_cc(&b, &pt.frame[2].transpose());
        w1 * (c[1] * u) + w2 * (0.5 * u * u)
    }

    fn rolled_branch(&self, t: f64) -> Result<[f64; 2]> {
        let x = self.rolled_point(t)?;
        Ok(Self::branch_of_point(&self.lp.at(t)?, &x))
    }

    pub fn reference(&self) -> (f64, [f64; 2]) {
        (self.t_ref, self.branch_ref)
    }

    /// Projective distance between ψℓ(t) and the parallel point along p
    /// that agrees with it at the reference parameter.
    pub fn no_twist_residual(&self, t: f64) -> Result<f64> {
        let x = self.rolled_point(t)?;
        let y = Self::parallel_point(&self.lp.at(t)?, self.branch_ref);
        Ok(proj_distance(&x.0, &y.0))
    }

    pub fn no_twist_max(&self, ts: &[f64]) -> Result<f64> {
        ts.iter().try_fold(0.0f64, |m, t| Ok(m.max(self.no_twist_residual(*t)?)))
    }
}
