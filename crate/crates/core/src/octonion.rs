//! Split octonions as Zorn vector matrices (x, q; p, y).
//!
//! The product follows the convention
//! ζ∗ζ′ = (xx′ − p′q, xq′ + y′q + p×p′; x′p + yp′ + q×q′, yy′ − pq′),
//! which differs from some references by p ↦ −p.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cross_cc, cross_vv, numeric_rank, Covec3, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ZornOctonion {
    pub x: f64,
    pub y: f64,
    pub q: Vec3,
    pub p: Covec3,
}

/// Imaginary octonion: y = −x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImOctonion {
    pub x: f64,
    pub q: Vec3,
    pub p: Covec3,
}

impl ImOctonion {
    pub fn to_zorn(&self) -> ZornOctonion {
        ZornOctonion {
            x: self.x,
            y: -self.x,
            q: self.q,
            p: self.p,
        }
    }
    /// Components in the ordered basis (q₁..q₃, p₁..p₃, x).
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2], self.x,
        ]
    }
    pub fn from_array(a: &[f64; 7]) -> Self {
        ImOctonion {
            x: a[6],
            q: Vec3::new(a[0], a[1], a[2]),
            p: Covec3::new(a[3], a[4], a[5]),
        }
    }
    /// Quadratic form x² − pq restricted from ⟨·,·⟩ (up to sign).
    pub fn form(&self) -> f64 {
        self.x * self.x - self.p.pair(&self.q)
    }
}

impl ZornOctonion {
    pub fn new(x: f64, q: Vec3, p: Covec3, y: f64) -> Self {
        ZornOctonion { x, y, q, p }
    }
    pub fn one() -> Self {
        ZornOctonion::new(1.0, Vec3::ZERO, Covec3::ZERO, 1.0)
    }
    pub fn scale(&self, s: f64) -> Self {
        ZornOctonion::new(self.x * s, self.q * s, self.p * s, self.y * s)
    }
    pub fn add(&self, o: &Self) -> Self {
        ZornOctonion::new(self.x + o.x, self.q + o.q, self.p + o.p, self.y + o.y)
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }
    pub fn norm_inf(&self) -> f64 {
        self.x
            .abs()
            .max(self.y.abs())
            .max(self.q.max_abs())
            .max(self.p.max_abs())
    }
    pub fn re(&self) -> f64 {
        0.5 * (self.x + self.y)
    }
    pub fn im(&self) -> ImOctonion {
        let h = 0.5 * (self.x - self.y);
        ImOctonion {
            x: h,
            q: self.q,
            p: self.p,
        }
    }
    /// Act by g ∈ SL₃: (x, q; p, y) ↦ (x, gq; pg⁻¹, y).
    pub fn act(&self, g: &Mat3, g_inv: &Mat3) -> Self {
        ZornOctonion::new(self.x, g.mul_vec(&self.q), self.p.mul_mat(g_inv), self.y)
    }
}

pub fn zorn_mul(a: &ZornOctonion, b: &ZornOctonion) -> ZornOctonion {
    ZornOctonion {
        x: a.x * b.x - b.p.pair(&a.q),
        q: b.q * a.x + a.q * b.y + cross_cc(&a.p, &b.p),
        p: a.p * b.x + b.p * a.y + cross_vv(&a.q, &b.q),
        y: a.y * b.y - a.p.pair(&b.q),
    }
}

pub fn zorn_conj(z: &ZornOctonion) -> ZornOctonion {
    ZornOctonion::new(z.y, -z.q, -z.p, z.x)
}

pub fn zorn_norm(z: &ZornOctonion) -> f64 {
    z.x * z.y + z.p.pair(&z.q)
}

/// (A, b, c) ∈ sl₃ ⊕ ℝ³ ⊕ ℝ³*.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct G2Param {
    pub a: Mat3,
    pub b: Vec3,
    pub c: Covec3,
}

impl G2Param {
    pub fn new(a: Mat3, b: Vec3, c: Covec3) -> Result<Self> {
        if a.trace().abs() >= 1e-12 {
            return Err(Error::domain("A must be trace-free"));
        }
        Ok(G2Param { a, b, c })
    }
    pub fn zero() -> Self {
        G2Param::default()
    }
    pub fn scale(&self, s: f64) -> Self {
        G2Param {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        G2Param {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
        }
    }
    pub fn norm(&self) -> f64 {
        (self.a.norm().powi(2) + self.b.norm2() + self.c.norm2()).sqrt()
    }

    /// The 14 standard generators: E_ij (i≠j), two diagonal Cartan elements,
    /// then e₁, e₂, e₃ in the b-slot and e¹, e², e³ in the c-slot.
    pub fn basis() -> Vec<G2Param> {
        let mut out = Vec::with_capacity(14);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let mut m = Mat3::ZERO;
                    m.0[i][j] = 1.0;
                    out.push(G2Param { a: m, ..Default::default() });
                }
            }
        }
        for k in 0..2 {
            let mut m = Mat3::ZERO;
            m.0[k][k] = 1.0;
            m.0[k + 1][k + 1] = -1.0;
            out.push(G2Param { a: m, ..Default::default() });
        }
        for k in 0..3 {
            out.push(G2Param { b: Vec3::basis(k), ..Default::default() });
        }
        for k in 0..3 {
            out.push(G2Param { c: Covec3::basis(k), ..Default::default() });
        }
        out
    }
}

/// The derivation ρ̃(A,b,c) applied to ζ.
pub fn derivation_apply(g: &G2Param, z: &ZornOctonion) -> ZornOctonion {
    let d = g.c.pair(&z.q) + z.p.pair(&g.b);
    let xy = z.x - z.y;
    ZornOctonion {
        x: d,
        y: -d,
        q: g.a.mul_vec(&z.q) + g.b * xy + cross_cc(&z.p, &g.c),
        p: -z.p.mul_mat(&g.a) + cross_vv(&g.b, &z.q) + g.c * xy,
    }
}

fn eps(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub type Mat7 = [[f64; 7]; 7];

/// ρ(A,b,c) on Im Õ in the basis (q₁..q₃, p₁..p₃, x).
pub fn rho_matrix(g: &G2Param) -> Mat7 {
    let mut m = [[0.0; 7]; 7];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = g.a.0[i][j];
            m[3 + i][3 + j] = -g.a.0[j][i];
            m[i][3 + j] = (0..3).map(|k| eps(i, j, k) * g.c[k]).sum();
            m[3 + i][j] = (0..3).map(|k| eps(i, k, j) * g.b[k]).sum();
        }
        m[i][6] = 2.0 * g.b[i];
        m[3 + i][6] = 2.0 * g.c[i];
        m[6][i] = g.c[i];
        m[6][3 + i] = g.b[i];
    }
    m
}

pub fn mat7_mul(a: &Mat7, b: &Mat7) -> Mat7 {
    let mut m = [[0.0; 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            m[i][j] = (0..7).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// Read (A, b, c) off a 7×7 matrix and report the distance to ρ(A, b, c).
pub fn decompose_rho(m: &Mat7) -> (G2Param, f64) {
    let mut a = Mat3::ZERO;
    let mut b = Vec3::ZERO;
    let mut c = Covec3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            a.0[i][j] = m[i][j];
        }
        b.0[i] = 0.5 * m[i][6];
        c.0[i] = 0.5 * m[3 + i][6];
    }
    let g = G2Param { a, b, c };
    let r = rho_matrix(&g);
    let mut res = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            res = res.max((r[i][j] - m[i][j]).abs());
        }
    }
    (g, res)
}

/// Bracket via the commutator of the 7×7 representation matrices.
pub fn g2_bracket(g1: &G2Param, g2: &G2Param) -> Result<G2Param> {
    let (r1, r2) = (rho_matrix(g1), rho_matrix(g2));
    let (p, q) = (mat7_mul(&r1, &r2), mat7_mul(&r2, &r1));
    let mut m = [[0.0; 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            m[i][j] = p[i][j] - q[i][j];
        }
    }
    let (g, res) = decompose_rho(&m);
    let scale = 1.0 + g1.norm() * g2.norm();
    if res > 1e-8 * scale {
        return Err(Error::numerical(format!("not in image (residual {res:e})")));
    }
    Ok(g)
}

/// Residual of antisymmetry ρᵀG + Gρ for the form x² − pq.
pub fn rho_antisymmetry_residual(g: &G2Param) -> f64 {
    let r = rho_matrix(g);
    // Gram matrix of x² − pq in the basis (q, p, x)
    let mut gram = [[0.0; 7]; 7];
    for i in 0..3 {
        gram[i][3 + i] = -0.5;
        gram[3 + i][i] = -0.5;
    }
    gram[6][6] = 1.0;
    let mut res = 0.0f64;
    for i in 0..7 {
        for j in 0..7 {
            let s: f64 = (0..7).map(|k| r[k][i] * gram[k][j] + gram[i][k] * r[k][j]).sum();
            res = res.max(s.abs());
        }
    }
    res
}

/// Ω = ζ∗dζ evaluated on a tangent vector at ζ ∈ Im Õ.
pub fn omega_at(z: &ImOctonion, dz: &ImOctonion) -> ZornOctonion {
    zorn_mul(&z.to_zorn(), &dz.to_zorn())
}

/// The 8×7 matrix of dz ↦ Ω(z, dz); rows (x, q₁..q₃, p₁..p₃, y).
pub fn omega_matrix(z: &ImOctonion) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; 7]; 8];
    for j in 0..7 {
        let mut e = [0.0; 7];
        e[j] = 1.0;
        let w = omega_at(z, &ImOctonion::from_array(&e));
        let col = [w.x, w.q[0], w.q[1], w.q[2], w.p[0], w.p[1], w.p[2], w.y];
        for (i, v) in col.iter().enumerate() {
            rows[i][j] = *v;
        }
    }
    rows
}

/// Dimension of ker Ω(z, ·) under the relative singular-value threshold.
pub fn omega_kernel_dim(z: &ImOctonion) -> usize {
    7 - numeric_rank(&omega_matrix(z), 1e-8)
}

/// ι*Ω = [[−q dp, dq + p×dp], [−dp + q×dq, −p dq]] at (q, p) on the quadric,
/// returned componentwise as a Zorn matrix.
pub fn iota_pullback(q: &Vec3, p: &Covec3, dq: &Vec3, dp: &Covec3) -> ZornOctonion {
    ZornOctonion {
        x: -dp.pair(q),
        q: *dq + cross_cc(p, dp),
        p: -*dp + cross_vv(q, dq),
        y: -p.pair(dq),
    }
}

/// ι(q, p) = (1, q; p, −1), a point of the null cone when pq = 1.
pub fn iota(q: &Vec3, p: &Covec3) -> ImOctonion {
    ImOctonion { x: 1.0, q: *q, p: *p }
}

/// |D(ab) − D(a)b − aD(b)|∞ for D = ρ̃(g).
pub fn leibniz_residual(g: &G2Param, a: &ZornOctonion, b: &ZornOctonion) -> f64 {
    let lhs = derivation_apply(g, &zorn_mul(a, b));
    let rhs = zorn_mul(&derivation_apply(g, a), b).add(&zorn_mul(a, &derivation_apply(g, b)));
    lhs.sub(&rhs).norm_inf()
}

/// |g·(ab) − (g·a)(g·b)|∞ for the SL₃ action.
pub fn equivariance_residual(g: &Mat3, a: &ZornOctonion, b: &ZornOctonion) -> Result<f64> {
    let gi = g.inverse().ok_or_else(|| Error::domain("singular matrix"))?;
    let lhs = zorn_mul(a, b).act(g, &gi);
    let rhs = zorn_mul(&a.act(g, &gi), &b.act(g, &gi));
    Ok(lhs.sub(&rhs).norm_inf())
}

/// A random point of the null cone x² = pq in Im Õ.
pub fn random_cone_point(rng: &mut crate::sample::SampleRng) -> ImOctonion {
    loop {
        let q = crate::sample::vec3(rng);
        let p = crate::sample::covec3(rng);
        let s = p.pair(&q);
        if s > 0.05 {
            let x = if crate::sample::uniform(rng, 0.0, 1.0) < 0.5 { s.sqrt() } else { -s.sqrt() };
            return ImOctonion { x, q, p };
        }
    }
}

pub fn random_zorn(rng: &mut crate::sample::SampleRng) -> ZornOctonion {
    use crate::sample::{covec3, uniform, vec3};
    ZornOctonion::new(uniform(rng, -1.0, 1.0), vec3(rng), covec3(rng), uniform(rng, -1.0, 1.0))
}

pub fn random_g2(rng: &mut crate::sample::SampleRng) -> G2Param {
    use crate::sample::{covec3, sl3_algebra, vec3};
    G2Param {
        a: sl3_algebra(rng),
        b: vec3(rng),
        c: covec3(rng),
    }
}
