//! Fixed-size linear algebra for the projective plane.
//!
//! `Vec3` is a column (point coordinates), `Covec3` a row (line coordinates).
//! The two never convert implicitly; `Vec3::transpose` / `Covec3::transpose`
//! exist for the few places where Euclidean identification is intended.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! triple {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name(pub [f64; 3]);

        impl $name {
            pub const ZERO: $name = $name([0.0; 3]);

            pub fn new(a: f64, b: f64, c: f64) -> Self {
                $name([a, b, c])
            }
            pub fn basis(i: usize) -> Self {
                let mut v = [0.0; 3];
                v[i] = 1.0;
                $name(v)
            }
            pub fn norm(&self) -> f64 {
                self.norm2().sqrt()
            }
            pub fn norm2(&self) -> f64 {
                self.0.iter().map(|x| x * x).sum()
            }
            pub fn normalized(&self) -> Self {
                *self * (1.0 / self.norm())
            }
            /// Euclidean dot product of components (not the duality pairing).
            pub fn edot(&self, o: &Self) -> f64 {
                self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
            }
            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, o: $name) -> $name {
                $name([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
            }
        }
        impl Sub for $name {
            type Output = $name;
            fn sub(self, o: $name) -> $name {
                $name([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
            }
        }
        impl AddAssign for $name {
            fn add_assign(&mut self, o: $name) {
                *self = *self + o;
            }
        }
        impl SubAssign for $name {
            fn sub_assign(&mut self, o: $name) {
                *self = *self - o;
            }
        }
        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name([-self.0[0], -self.0[1], -self.0[2]])
            }
        }
        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                $name([self.0[0] * s, self.0[1] * s, self.0[2] * s])
            }
        }
        impl Mul<$name> for f64 {
            type Output = $name;
            fn mul(self, v: $name) -> $name {
                v * self
            }
        }
        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

triple!(Vec3);
triple!(Covec3);

impl Vec3 {
    pub fn transpose(&self) -> Covec3 {
        Covec3(self.0)
    }
}

impl Covec3 {
    pub fn transpose(&self) -> Vec3 {
        Vec3(self.0)
    }
    /// The duality pairing p·v.
    pub fn pair(&self, v: &Vec3) -> f64 {
        self.0[0] * v.0[0] + self.0[1] * v.0[1] + self.0[2] * v.0[2]
    }
    /// Row vector times matrix.
    pub fn mul_mat(&self, m: &Mat3) -> Covec3 {
        let mut r = [0.0; 3];
        for (j, rj) in r.iter_mut().enumerate() {
            *rj = (0..3).map(|i| self.0[i] * m.0[i][j]).sum();
        }
        Covec3(r)
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// vol(v, w, ·): the covector (v×w)_i = ε_ijk v^j w^k.
pub fn cross_vv(v: &Vec3, w: &Vec3) -> Covec3 {
    Covec3(cross(&v.0, &w.0))
}

/// vol*(p, r, ·): the vector (p×r)^i = ε^ijk p_j r_k.
pub fn cross_cc(p: &Covec3, r: &Covec3) -> Vec3 {
    Vec3(cross(&p.0, &r.0))
}

/// det of the matrix with columns a, b, c.
pub fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    cross_vv(a, b).pair(c)
}

/// det of the matrix with rows a, b, c.
pub fn det3c(a: &Covec3, b: &Covec3, c: &Covec3) -> f64 {
    cross_cc(a, b).edot(&c.transpose())
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Mat3(m)
    }
    pub fn from_cols(a: &Vec3, b: &Vec3, c: &Vec3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            *row = [a.0[i], b.0[i], c.0[i]];
        }
        Mat3(m)
    }
    pub fn from_rows(a: &Covec3, b: &Covec3, c: &Covec3) -> Self {
        Mat3([a.0, b.0, c.0])
    }
    pub fn col(&self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }
    pub fn row(&self, i: usize) -> Covec3 {
        Covec3(self.0[i])
    }
    pub fn transpose(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[j][i];
            }
        }
        Mat3(m)
    }
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }
    pub fn det(&self) -> f64 {
        det3(&self.col(0), &self.col(1), &self.col(2))
    }
    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let mut r = [0.0; 3];
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = (0..3).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        Vec3(r)
    }
    pub fn commutator(&self, o: &Mat3) -> Mat3 {
        *self * *o - *o * *self
    }
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
    pub fn norm1(&self) -> f64 {
        (0..3)
            .map(|j| (0..3).map(|i| self.0[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
    /// Inverse via the adjugate; `None` when singular.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        // rows of the inverse are cross products of columns
        let (c0, c1, c2) = (self.col(0), self.col(1), self.col(2));
        let r0 = cross_vv(&c1, &c2) * (1.0 / d);
        let r1 = cross_vv(&c2, &c0) * (1.0 / d);
        let r2 = cross_vv(&c0, &c1) * (1.0 / d);
        Some(Mat3::from_rows(&r0, &r1, &r2))
    }
    pub fn to_na(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.0[i][j])
    }
    pub fn from_na(m: &Matrix3<f64>) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[(i, j)];
            }
        }
        Mat3(r)
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut m = self.0;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += o.0[i][j];
            }
        }
        Mat3(m)
    }
}
impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        self + o * -1.0
    }
}
impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}
impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|x| *x *= s);
        Mat3(m)
    }
}
impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(m)
    }
}
impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.mul_vec(&v)
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// exp(tY) by scaling and squaring with the degree-13 Padé approximant.
pub fn mat_exp(y: &Mat3, t: f64) -> Mat3 {
    let a0 = *y * t;
    let n1 = a0.norm1();
    let s = if n1 > THETA13 {
        (n1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a0 * 0.5f64.powi(s);
    let b = &PADE13;
    let id = Mat3::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9])
        + a6 * b[7]
        + a4 * b[5]
        + a2 * b[3]
        + id * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + id * b[0];
    let lu = (v - u).to_na().lu();
    let mut x = Mat3::from_na(&lu.solve(&(v + u).to_na()).expect("Padé denominator singular"));
    for _ in 0..s {
        x = x * x;
    }
    x
}

/// Unit representative with the first non-negligible component positive.
fn canonical(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut u = [v[0] / n, v[1] / n, v[2] / n];
    if let Some(x) = u.iter().find(|x| x.abs() > 1e-12) {
        if *x < 0.0 {
            u.iter_mut().for_each(|c| *c = -*c);
        }
    }
    u
}

/// Sine of the angle between two lines through the origin of ℝ³.
pub fn proj_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    let c = cross(a, b);
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() / (na * nb)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProjPoint(Vec3);

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProjLine(Covec3);

impl ProjPoint {
    pub fn new(v: Vec3) -> Result<Self> {
        if !(v.norm() > 0.0) || !v.norm().is_finite() {
            return Err(Error::domain("zero vector has no projective class"));
        }
        Ok(ProjPoint(Vec3(canonical(v.0))))
    }
    pub fn rep(&self) -> Vec3 {
        self.0
    }
    pub fn distance(&self, o: &ProjPoint) -> f64 {
        proj_distance(&self.0 .0, &o.0 .0)
    }
    pub fn approx_eq(&self, o: &ProjPoint, tol: f64) -> bool {
        self.distance(o) < tol
    }
}

impl ProjLine {
    pub fn new(p: Covec3) -> Result<Self> {
        if !(p.norm() > 0.0) || !p.norm().is_finite() {
            return Err(Error::domain("zero covector has no projective class"));
        }
        Ok(ProjLine(Covec3(canonical(p.0))))
    }
    pub fn rep(&self) -> Covec3 {
        self.0
    }
    pub fn through(a: &ProjPoint, b: &ProjPoint) -> Result<Self> {
        ProjLine::new(cross_vv(&a.0, &b.0))
    }
    pub fn meet(&self, o: &ProjLine) -> Result<ProjPoint> {
        ProjPoint::new(cross_cc(&self.0, &o.0))
    }
    pub fn incident(&self, q: &ProjPoint) -> f64 {
        self.0.pair(&q.0).abs()
    }
    pub fn distance(&self, o: &ProjLine) -> f64 {
        proj_distance(&self.0 .0, &o.0 .0)
    }
}

/// Four distinct collinear points.
#[derive(Debug, Clone, Copy)]
pub struct Quadruple {
    pts: [ProjPoint; 4],
    line: ProjLine,
}

impl Quadruple {
    pub fn new(pts: [ProjPoint; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in i + 1..4 {
                if pts[i].distance(&pts[j]) < 1e-12 {
                    return Err(Error::domain("degenerate quadruple"));
                }
            }
        }
        let line = ProjLine::through(&pts[0], &pts[1])?;
        if pts.iter().any(|p| line.incident(p) > 1e-10) {
            return Err(Error::domain("not collinear"));
        }
        Ok(Quadruple { pts, line })
    }
    pub fn from_vecs(v: [Vec3; 4]) -> Result<Self> {
        Quadruple::new([
            ProjPoint::new(v[0])?,
            ProjPoint::new(v[1])?,
            ProjPoint::new(v[2])?,
            ProjPoint::new(v[3])?,
        ])
    }
    pub fn points(&self) -> &[ProjPoint; 4] {
        &self.pts
    }
    pub fn line(&self) -> ProjLine {
        self.line
    }
}

/// Cross-ratio k with a₃ = a₁+a₂, a₄ = k a₁ + a₂ for suitable representatives.
pub fn cross_ratio(qd: &Quadruple) -> f64 {
    let [a1, a2, a3, a4] = qd.pts.map(|p| p.rep());
    cross_ratio_raw(&a1, &a2, &a3, &a4)
}

/// Same as [`cross_ratio`] on raw representatives, without validation.
pub fn cross_ratio_raw(a1: &Vec3, a2: &Vec3, a3: &Vec3, a4: &Vec3) -> f64 {
    let w = cross_vv(a1, a2);
    let coords = |a: &Vec3| {
        let c1 = cross_vv(a, a2).edot(&w);
        let c2 = cross_vv(a1, a).edot(&w);
        (c1, c2)
    };
    let (al1, al2) = coords(a3);
    let (be1, be2) = coords(a4);
    be1 * al2 / (al1 * be2)
}

/// Numeric rank: singular values above `rel`·σ_max.
pub fn numeric_rank(rows: &[Vec<f64>], rel: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel * smax).count()
}

/// Orthonormal basis of the null space (singular values below `rel`·σ_max).
pub fn null_space(rows: &[Vec<f64>], ncols: usize, rel: f64) -> Vec<Vec<f64>> {
    let mut padded: Vec<Vec<f64>> = rows.to_vec();
    while padded.len() < ncols {
        padded.push(vec![0.0; ncols]);
    }
    let m = DMatrix::from_fn(padded.len(), ncols, |i, j| padded[i][j]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= rel * smax.max(f64::MIN_POSITIVE) {
            out.push((0..ncols).map(|j| vt[(k, j)]).collect());
        }
    }
    out
}
