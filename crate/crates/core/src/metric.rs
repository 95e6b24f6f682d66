//! M⁴ = non-incident point–line pairs with the dancing metric
//! 𝐠 = −2 (q×dq)(p×dp) / (pq)², charts, the dancing condition and
//! projective contact elements.

use serde::{Deserialize, Serialize};

use crate::cartan_engel::Q5Point;
use crate::curves::{DualCurve, PlaneCurve};
use crate::error::{Error, Result};
use crate::linalg::{cross_cc, cross_ratio_raw, cross_vv, det3, Covec3, ProjLine, ProjPoint, Vec3};
use crate::sample::{self, SampleRng};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct M4Point {
    pub q: ProjPoint,
    pub p: ProjLine,
}

impl M4Point {
    pub fn new(q: Vec3, p: Covec3) -> Result<Self> {
        let (q, p) = (ProjPoint::new(q)?, ProjLine::new(p)?);
        if p.incident(&q) <= 1e-10 {
            return Err(Error::domain("incident pair"));
        }
        Ok(M4Point { q, p })
    }

    /// Representatives (q̂, p̂) with |q̂| = 1 and p̂q̂ = 1.
    pub fn normalized_reps(&self) -> (Vec3, Covec3) {
        let (q, p) = (self.q.rep(), self.p.rep());
        (q, p * (1.0 / p.pair(&q)))
    }

    pub fn to_chart(&self) -> Result<ChartPoint> {
        let (q, p) = (self.q.rep(), self.p.rep());
        if q[2].abs() < 1e-12 || p[1].abs() < 1e-12 {
            return Err(Error::domain("outside the affine chart"));
        }
        ChartPoint::new(q[0] / q[2], q[1] / q[2], -p[0] / p[1], -p[2] / p[1])
    }

    pub fn random(rng: &mut SampleRng) -> Self {
        loop {
            let (q, p) = (sample::vec3(rng), sample::covec3(rng));
            if q.norm() > 0.2 && p.norm() > 0.2 && p.pair(&q).abs() > 0.2 * q.norm() * p.norm() {
                return M4Point::new(q, p).expect("checked non-incident");
            }
        }
    }
}

/// Point (x, y) and line y = ax + b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

impl ChartPoint {
    pub fn new(x: f64, y: f64, a: f64, b: f64) -> Result<Self> {
        let cp = ChartPoint { x, y, a, b };
        if cp.denom().abs() <= 1e-10 {
            return Err(Error::domain("incident pair"));
        }
        Ok(cp)
    }
    /// y − ax − b.
    pub fn denom(&self) -> f64 {
        self.y - self.a * self.x - self.b
    }
    /// Lifts q̂ = (x, y, 1), p̂ = (a, −1, b).
    pub fn lifts(&self) -> (Vec3, Covec3) {
        (Vec3::new(self.x, self.y, 1.0), Covec3::new(self.a, -1.0, self.b))
    }
    pub fn to_m4(&self) -> Result<M4Point> {
        let (q, p) = self.lifts();
        M4Point::new(q, p)
    }
    /// Chart tangent (dx, dy, da, db) as a homogeneous tangent at the lifts.
    pub fn tangent(&self, v: [f64; 4]) -> M4Tangent {
        let (q, p) = self.lifts();
        M4Tangent {
            q,
            p,
            dq: Vec3::new(v[0], v[1], 0.0),
            dp: Covec3::new(v[2], 0.0, v[3]),
        }
    }
}

/// Tangent vector at [q], [p] carried by representatives; dq is defined
/// modulo q and dp modulo p.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct M4Tangent {
    pub q: Vec3,
    pub p: Covec3,
    pub dq: Vec3,
    pub dp: Covec3,
}

impl M4Tangent {
    pub fn new(pt: &M4Point, dq: Vec3, dp: Covec3) -> Self {
        M4Tangent {
            q: pt.q.rep(),
            p: pt.p.rep(),
            dq,
            dp,
        }
    }
    pub fn gauge(&self, alpha: f64, beta: f64) -> Self {
        M4Tangent {
            dq: self.dq + self.q * alpha,
            dp: self.dp + self.p * beta,
            ..*self
        }
    }
    /// Express at other representatives λq, μp (dq ↦ λdq, dp ↦ μdp).
    pub fn rescaled(&self, lambda: f64, mu: f64) -> Self {
        M4Tangent {
            q: self.q * lambda,
            p: self.p * mu,
            dq: self.dq * lambda,
            dp: self.dp * mu,
        }
    }
    pub fn random(pt: &M4Point, rng: &mut SampleRng) -> Self {
        M4Tangent::new(pt, sample::vec3(rng), sample::covec3(rng))
    }
    /// Components (dx, dy, da, db) in the affine chart.
    pub fn chart_coords(&self) -> Result<[f64; 4]> {
        let (q, p, dq, dp) = (self.q, self.p, self.dq, self.dp);
        if q[2].abs() < 1e-12 * q.norm() || p[1].abs() < 1e-12 * p.norm() {
            return Err(Error::domain("outside the affine chart"));
        }
        let (q2, p1) = (q[2] * q[2], p[1] * p[1]);
        Ok([
            (dq[0] * q[2] - q[0] * dq[2]) / q2,
            (dq[1] * q[2] - q[1] * dq[2]) / q2,
            -(dp[0] * p[1] - p[0] * dp[1]) / p1,
            -(dp[2] * p[1] - p[2] * dp[1]) / p1,
        ])
    }
}

/// Express v at u's representatives; errors if the base points differ.
fn align(u: &M4Tangent, v: &M4Tangent) -> Result<(Vec3, Covec3)> {
    let dq = crate::linalg::proj_distance(&u.q.0, &v.q.0);
    let dp = crate::linalg::proj_distance(&u.p.0, &v.p.0);
    if dq > 1e-9 || dp > 1e-9 {
        return Err(Error::domain("tangents at different base points"));
    }
    let lam = v.q.edot(&u.q) / u.q.norm2();
    let mu = v.p.edot(&u.p) / u.p.norm2();
    Ok((v.dq * (1.0 / lam), v.dp * (1.0 / mu)))
}

/// 𝐠(u, v), polarized from −2 (q×dq)(p×dp) / (pq)².
pub fn metric_eval(u: &M4Tangent, v: &M4Tangent) -> Result<f64> {
    let (vdq, vdp) = align(u, v)?;
    let pq = u.p.pair(&u.q);
    let a = cross_vv(&u.q, &u.dq).pair(&cross_cc(&u.p, &vdp));
    let b = cross_vv(&u.q, &vdq).pair(&cross_cc(&u.p, &u.dp));
    Ok(-(a + b) / (pq * pq))
}

/// Same quadratic form written as (pq)(dp dq) − (p dq)(dp q).
pub fn metric_eval_eq10(u: &M4Tangent) -> f64 {
    let pq = u.p.pair(&u.q);
    let val = pq * u.dp.pair(&u.dq) - u.p.pair(&u.dq) * u.dp.pair(&u.q);
    -2.0 * val / (pq * pq)
}

/// 𝐠 in chart coordinates ordered (x, y, a, b).
pub fn metric_chart(cp: &ChartPoint) -> Result<[[f64; 4]; 4]> {
    let d = cp.denom();
    if d.abs() <= 1e-10 {
        return Err(Error::domain("incident pair"));
    }
    let d2 = d * d;
    let mut g = [[0.0; 4]; 4];
    let set = |g: &mut [[f64; 4]; 4], i: usize, j: usize, v: f64| {
        g[i][j] = v;
        g[j][i] = v;
    };
    set(&mut g, 0, 2, (cp.y - cp.b) / d2);
    set(&mut g, 1, 2, -cp.x / d2);
    set(&mut g, 0, 3, cp.a / d2);
    set(&mut g, 1, 3, -1.0 / d2);
    Ok(g)
}

/// Normalized incidence defect between the tangent line of q and the
/// turning point of p at t; zero iff the pair's velocity is null.
pub fn dancing_residual(qc: &dyn PlaneCurve, pc: &dyn PlaneCurve, t: f64) -> Result<f64> {
    let (qj, pj) = (qc.jet(t, 1), pc.jet(t, 1));
    let qs = cross_vv(&qj[0], &qj[1]);
    let ps = cross_cc(&pj[0].transpose(), &pj[1].transpose());
    let vq = qs.norm() / qj[0].norm2();
    let vp = ps.norm() / pj[0].norm2();
    if vq < 1e-12 || vp < 1e-12 {
        return Err(Error::domain(format!("degenerate at t = {t}")));
    }
    Ok(qs.pair(&ps).abs() / (qs.norm() * ps.norm()))
}

/// Velocity of the pair curve t ↦ ([q(t)], [p(t)]).
pub fn curve_velocity(qc: &dyn PlaneCurve, pc: &dyn PlaneCurve, t: f64) -> M4Tangent {
    let (qj, pj) = (qc.jet(t, 1), pc.jet(t, 1));
    M4Tangent {
        q: qj[0],
        p: pj[0].transpose(),
        dq: qj[1],
        dp: pj[1].transpose(),
    }
}

/// Cross-ratio of (q, q̄, q_ε, q̄_ε) where q̄, q̄_ε are the intersections of
/// p, p_ε with the line through q and q_ε. Vanishes when q̄ = q̄_ε.
pub fn cross_ratio_metric(v: &M4Tangent, eps: f64) -> Result<f64> {
    let qe = v.q + v.dq * eps;
    let pe = v.p + v.dp * eps;
    let l = cross_vv(&v.q, &qe);
    if l.norm() < 1e-14 * v.q.norm() * qe.norm() {
        return Err(Error::domain("degenerate tangent: q does not move"));
    }
    let qb = cross_cc(&l, &v.p);
    let qbe = cross_cc(&l, &pe);
    let far = |a: &Vec3, b: &Vec3| crate::linalg::proj_distance(&a.0, &b.0) > 1e-12;
    let general = qb.norm() > 0.0
        && qbe.norm() > 0.0
        && far(&v.q, &qb)
        && far(&v.q, &qe)
        && far(&v.q, &qbe)
        && far(&qb, &qe)
        && far(&qe, &qbe);
    if !general {
        return Err(Error::domain("eps out of range: points not in general position"));
    }
    Ok(cross_ratio_raw(&v.q, &qb, &qe, &qbe))
}

/// 𝐠(v, v) recovered from 2·CR(ε)/ε²: the ±ε average removes odd orders,
/// then two Richardson levels in ε² over ε, ε/2, ε/4.
pub fn cross_ratio_metric_extrapolated(v: &M4Tangent, eps: f64) -> Result<f64> {
    let e: Vec<f64> = [eps, eps / 2.0, eps / 4.0]
        .iter()
        .map(|h| Ok((cross_ratio_metric(v, *h)? + cross_ratio_metric(v, -*h)?) / (h * h)))
        .collect::<Result<_>>()?;
    let r1 = [(4.0 * e[1] - e[0]) / 3.0, (4.0 * e[2] - e[1]) / 3.0];
    Ok((16.0 * r1[1] - r1[0]) / 15.0)
}

/// t ↦ q(t)×q′(t). Fails on straight lines.
pub fn dual_curve(curve: std::sync::Arc<dyn PlaneCurve>) -> Result<DualCurve> {
    let (lo, hi) = curve.domain();
    let (lo, hi) = (lo.max(-1.0), hi.min(1.0));
    let degenerate = (0..=8).all(|i| {
        let t = lo + (hi - lo) * i as f64 / 8.0;
        let j = curve.jet(t, 2);
        let scale = j[0].norm() * j[1].norm() * (j[2].norm() + j[1].norm2() / j[0].norm());
        det3(&j[0], &j[1], &j[2]).abs() <= 1e-12 * scale
    });
    if degenerate {
        return Err(Error::domain("dual degenerates to a point"));
    }
    Ok(DualCurve { inner: curve })
}

/// True where the dual curve is singular, i.e. at inflections of the curve.
pub fn dual_singular(curve: &dyn PlaneCurve, t: f64, tol: f64) -> bool {
    let j = curve.jet(t, 2);
    let scale = j[0].norm() * j[1].norm() * (j[2].norm() + j[1].norm2() / j[0].norm());
    det3(&j[0], &j[1], &j[2]).abs() <= tol * scale
}

/// A projective contact element: ψ(v) = λ·(q̂×v) at the representatives
/// with |q̂| = 1, p̂q̂ = 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContactElement {
    pub base: M4Point,
    pub scale: f64,
}

pub fn contact_psi(pt: &M4Point, scale: f64) -> Result<ContactElement> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::domain("contact scale must be nonzero"));
    }
    Ok(ContactElement { base: *pt, scale })
}

pub fn psi_apply(ce: &ContactElement, v: &Vec3) -> Covec3 {
    let (q, _) = ce.base.normalized_reps();
    cross_vv(&q, v) * ce.scale
}

/// The tangent (v, ψv) at the normalized representatives.
pub fn psi_graph_vector(ce: &ContactElement, v: &Vec3) -> M4Tangent {
    let (q, p) = ce.base.normalized_reps();
    M4Tangent {
        q,
        p,
        dq: *v,
        dp: psi_apply(ce, v),
    }
}

/// Center of rotation of the line p moving in direction ψ(v): the point p ∩ (p + εψv).
pub fn psi_point(ce: &ContactElement, v: &Vec3) -> Vec3 {
    let (_, p) = ce.base.normalized_reps();
    cross_cc(&p, &psi_apply(ce, v))
}

/// Q⁵ → contact elements: (q, p) ↦ ([q], [p]) with ψ(v) = q×v.
pub fn q5_to_contact(pt: &Q5Point) -> ContactElement {
    let base = M4Point::new(pt.q, pt.p).expect("pq = 1 is non-incident");
    let (qn, _) = base.normalized_reps();
    // q = α q̂ and p = p̂/α; tangents rescale as v = αv̂, dp = dp̂/α
    let alpha = pt.q.edot(&qn);
    ContactElement {
        base,
        scale: alpha.powi(3),
    }
}
