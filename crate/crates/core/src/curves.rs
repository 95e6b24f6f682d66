//! Parametrized homogeneous lifts t ↦ A(t) ∈ ℝ³∖0 with derivative jets.
//!
//! Curves in the dual plane use the same trait; their `Vec3` components are
//! line coordinates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::STENCIL7;
use crate::linalg::{cross_vv, mat_exp, Mat3, Vec3};

pub trait PlaneCurve: Send + Sync {
    /// A(t), A′(t), …, A⁽ⁿ⁾(t) (n + 1 entries).
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3>;

    fn eval(&self, t: f64) -> Vec3 {
        self.jet(t, 0)[0]
    }

    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Highest derivative order that is exact (or declared accurate).
    fn max_order(&self) -> usize {
        usize::MAX
    }
}

pub type CurveRef = Arc<dyn PlaneCurve>;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// r·(cos(t+φ), sin(t+φ), 1): a circle of radius r centred at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub r: f64,
    pub phase: f64,
}

impl Circle {
    pub fn unit() -> Self {
        Circle { r: 1.0, phase: 0.0 }
    }
}

impl PlaneCurve for Circle {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        let s = t + self.phase;
        (0..=n)
            .map(|k| {
                let a = s + k as f64 * std::f64::consts::FRAC_PI_2;
                Vec3::new(self.r * a.cos(), self.r * a.sin(), if k == 0 { 1.0 } else { 0.0 })
            })
            .collect()
    }
}

/// Polynomial components, coefficients in increasing degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyCurve {
    pub coeffs: [Vec<f64>; 3],
}

impl PolyCurve {
    /// The conic (1 + t², 2t, 1 − t²).
    pub fn conic() -> Self {
        PolyCurve {
            coeffs: [vec![1.0, 0.0, 1.0], vec![0.0, 2.0], vec![1.0, 0.0, -1.0]],
        }
    }
    /// Affine graph y = f(x) with f polynomial, lifted as (t, f(t), 1).
    pub fn graph(f: &[f64]) -> Self {
        PolyCurve {
            coeffs: [vec![0.0, 1.0], f.to_vec(), vec![1.0]],
        }
    }
}

fn poly_deriv(c: &[f64], t: f64, k: usize) -> f64 {
    let mut s = 0.0;
    for (d, a) in c.iter().enumerate().skip(k) {
        let fall: f64 = (0..k).map(|i| (d - i) as f64).product();
        s += a * fall * t.powi((d - k) as i32);
    }
    s
}

impl PlaneCurve for PolyCurve {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        (0..=n)
            .map(|k| {
                Vec3::new(
                    poly_deriv(&self.coeffs[0], t, k),
                    poly_deriv(&self.coeffs[1], t, k),
                    poly_deriv(&self.coeffs[2], t, k),
                )
            })
            .collect()
    }
}

/// Orbit exp(tY)v₀, or the dual orbit (w₀exp(−tY))ᵀ when `dual` is set.
#[derive(Debug, Clone, Copy)]
pub struct OrbitCurve {
    pub y: Mat3,
    pub v0: Vec3,
    pub dual: bool,
}

impl PlaneCurve for OrbitCurve {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        if self.dual {
            // p(t) = w₀ exp(−tY);  p⁽ᵏ⁾ = (−1)ᵏ p Yᵏ
            let mut p = self.v0.transpose().mul_mat(&mat_exp(&self.y, -t));
            let mut out = Vec::with_capacity(n + 1);
            for _ in 0..=n {
                out.push(p.transpose());
                p = -p.mul_mat(&self.y);
            }
            out
        } else {
            let mut q = mat_exp(&self.y, t).mul_vec(&self.v0);
            let mut out = Vec::with_capacity(n + 1);
            for _ in 0..=n {
                out.push(q);
                q = self.y.mul_vec(&q);
            }
            out
        }
    }
}

/// t ↦ A(t) × A′(t), the dual curve (tangent lines).
pub struct DualCurve {
    pub inner: CurveRef,
}

impl PlaneCurve for DualCurve {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        let a = self.inner.jet(t, n + 1);
        (0..=n)
            .map(|m| {
                (0..=m).fold(Vec3::ZERO, |acc, k| {
                    acc + cross_vv(&a[k], &a[m - k + 1]).transpose() * binom(m, k)
                })
            })
            .collect()
    }
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(1)
    }
}

/// λ(t)·A(t) with λ a polynomial (a gauge change of the lift).
pub struct ScaledCurve {
    pub inner: CurveRef,
    pub lambda: Vec<f64>,
}

impl PlaneCurve for ScaledCurve {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        let a = self.inner.jet(t, n);
        (0..=n)
            .map(|m| {
                (0..=m).fold(Vec3::ZERO, |acc, k| {
                    acc + a[m - k] * (binom(m, k) * poly_deriv(&self.lambda, t, k))
                })
            })
            .collect()
    }
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
}

/// A(αs + β) as a curve in s.
pub struct AffineReparam {
    pub inner: CurveRef,
    pub alpha: f64,
    pub beta: f64,
}

impl PlaneCurve for AffineReparam {
    fn jet(&self, s: f64, n: usize) -> Vec<Vec3> {
        let a = self.inner.jet(self.alpha * s + self.beta, n);
        a.iter()
            .enumerate()
            .map(|(k, v)| *v * self.alpha.powi(k as i32))
            .collect()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
}

/// A curve known only through samples on a uniform grid. Derivatives up to
/// order 6 at the nearest node come from 7-point central stencils and are
/// shifted to off-grid t by a Taylor polynomial. Orders 1–2 are 6th-order
/// accurate in h, orders 3–4 4th-order, orders 5–6 2nd-order; higher orders
/// are zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledCurve {
    pub t0: f64,
    pub h: f64,
    pub values: Vec<Vec3>,
}

#[derive(Debug, Deserialize, Serialize)]
struct SampledJson {
    t: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<[f64; 3]>,
}

impl SampledCurve {
    pub fn new(t: &[f64], values: Vec<Vec3>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::Parse("t and A lengths differ".into()));
        }
        if t.len() < 7 {
            return Err(Error::Parse("need at least 7 samples".into()));
        }
        let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Parse("t must be increasing".into()));
        }
        for (i, ti) in t.iter().enumerate() {
            if (ti - (t[0] + h * i as f64)).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::Parse("t grid must be uniform".into()));
            }
        }
        if values.iter().any(|v| v.norm() == 0.0) {
            return Err(Error::Parse("A(t) must be nonzero".into()));
        }
        Ok(SampledCurve {
            t0: t[0],
            h,
            values,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SampledJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        SampledCurve::new(&j.t, j.a.into_iter().map(Vec3).collect())
    }

    pub fn to_json(&self) -> String {
        let j = SampledJson {
            t: (0..self.values.len()).map(|i| self.t_at(i)).collect(),
            a: self.values.iter().map(|v| v.0).collect(),
        };
        serde_json::to_string(&j).expect("serializable")
    }

    /// Sample `curve` at n + 1 uniform nodes on [t0, t1].
    pub fn sample(curve: &dyn PlaneCurve, t0: f64, t1: f64, n: usize) -> Self {
        let h = (t1 - t0) / n as f64;
        SampledCurve {
            t0,
            h,
            values: (0..=n).map(|i| curve.eval(t0 + h * i as f64)).collect(),
        }
    }

    pub fn t_at(&self, i: usize) -> f64 {
        self.t0 + self.h * i as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Derivatives 0..=6 at node i (3 ≤ i ≤ len − 4).
    pub fn node_jet(&self, i: usize) -> [Vec3; 7] {
        let mut out = [self.values[i]; 7];
        for (k, w) in STENCIL7.iter().enumerate() {
            let mut acc = Vec3::ZERO;
            for (j, wj) in w.iter().enumerate() {
                acc += self.values[i + j - 3] * *wj;
            }
            out[k + 1] = acc * (1.0 / self.h.powi(k as i32 + 1));
        }
        out
    }
}

impl PlaneCurve for SampledCurve {
    fn jet(&self, t: f64, n: usize) -> Vec<Vec3> {
        let m = self.values.len();
        let x = (t - self.t0) / self.h;
        let i = (x.round().max(3.0) as usize).min(m - 4);
        let d = t - self.t_at(i);
        let nj = self.node_jet(i);
        (0..=n)
            .map(|k| {
                if k > 6 {
                    return Vec3::ZERO;
                }
                let mut acc = Vec3::ZERO;
                let mut fact = 1.0;
                for (j, v) in nj.iter().enumerate().skip(k) {
                    acc += *v * (d.powi((j - k) as i32) / fact);
                    fact *= (j - k + 1) as f64;
                }
                acc
            })
            .collect()
    }
    fn domain(&self) -> (f64, f64) {
        (self.t0, self.t_at(self.values.len() - 1))
    }
    fn max_order(&self) -> usize {
        4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_jet() {
        let c = Circle::unit();
        let j = c.jet(0.3, 3);
        assert!((j[1] - Vec3::new(-0.3f64.sin(), 0.3f64.cos(), 0.0)).norm() < 1e-15);
        assert!((j[3] - Vec3::new(0.3f64.sin(), -0.3f64.cos(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conic_third_derivative_vanishes() {
        let j = PolyCurve::conic().jet(1.7, 3);
        assert_eq!(j[3], Vec3::ZERO);
        assert_eq!(j[2], Vec3::new(2.0, 0.0, -2.0));
    }

    #[test]
    fn dual_curve_is_incident() {
        let c: CurveRef = Arc::new(Circle::unit());
        let d = DualCurve { inner: c.clone() };
        let (a, b) = (c.jet(0.4, 1), d.jet(0.4, 1));
        assert!(b[0].transpose().pair(&a[0]).abs() < 1e-15);
        assert!(b[0].transpose().pair(&a[1]).abs() < 1e-15);
        // derivative of the dual, checked by differences
        let h = 1e-6;
        let fd = (d.eval(0.4 + h) - d.eval(0.4 - h)) * (0.5 / h);
        assert!((fd - b[1]).norm() < 1e-8);
    }

    #[test]
    fn sampled_matches_closed_form() {
        let c = Circle { r: 1.3, phase: 0.2 };
        let s = SampledCurve::sample(&c, 0.0, 2.0, 200);
        let (a, b) = (s.jet(1.003, 4), c.jet(1.003, 4));
        for k in 0..=4 {
            assert!((a[k] - b[k]).norm() < 1e-5, "k={k}");
        }
        let back = SampledCurve::from_json(&s.to_json()).unwrap();
        assert_eq!(back.values.len(), 201);
    }

    #[test]
    fn json_rejects_bad_grid() {
        let bad = r#"{"t":[0,1,2,4,5,6,7],"A":[[1,0,0],[1,0,0],[1,0,0],[1,0,0],[1,0,0],[1,0,0],[1,0,0]]}"#;
        assert!(SampledCurve::from_json(bad).is_err());
    }
}
