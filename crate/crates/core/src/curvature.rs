//! Curvature of the dancing metric: Levi-Civita data from finite differences
//! of the chart metric, the coframe η pulled back from SL₃ by a section of
//! SL₃ → M⁴, the Hodge star of the η-orientation, null 2-planes, and adapted
//! lifts of null curves to SL₃ and Q⁵.
//!
//! Index conventions: chart coordinates (x, y, a, b); frame indices ordered
//! (η¹, η², η₁, η₂), so the metric in the dual frame is the constant null form
//! [`NULL_FORM`] and vol = η¹∧η²∧η₁∧η₂. The Riemann tensor is
//! R_{abcd} = g_{ae} R^e_{bcd} with R_{abab} > 0 on round spheres, and the
//! curvature operator on 2-forms is ℛ(ω)_{ab} = ½ R_{abcd} ω^{cd}, so that
//! tr ℛ = scal / 2.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::cartan_engel::{Q5Point, Q5Trajectory};
use crate::curves::CurveRef;
use crate::error::{Error, Result};
use crate::linalg::{Covec3, Mat3, Vec3};
use crate::metric::{dancing_residual, metric_chart, ChartPoint, M4Point, M4Tangent};

type M4 = [[f64; 4]; 4];

/// 𝐠(e_i, e_j) for a null frame dual to (η¹, η², η₁, η₂).
pub const NULL_FORM: M4 = [
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
];

/// Index pairs i < j labelling components of 2-forms.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Frame components of η₁∧η¹ + η₂∧η², η¹∧η², η₁∧η₂.
const SD_BASIS: [[f64; 6]; 3] = [
    [0.0, -1.0, 0.0, 0.0, -1.0, 0.0],
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
];
/// Frame components of η₁∧η¹ − η₂∧η², η₁∧η², η₂∧η¹.
const ASD_BASIS: [[f64; 6]; 3] = [
    [0.0, -1.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
];

// ---------------------------------------------------------------------------
// scalars carrying two derivatives

trait Num:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn c(v: f64) -> Self;
}

impl Num for f64 {
    fn c(v: f64) -> Self {
        v
    }
}

/// (f, f′, f″).
#[derive(Debug, Clone, Copy)]
struct J2(f64, f64, f64);

impl Add for J2 {
    type Output = J2;
    fn add(self, o: J2) -> J2 {
        J2(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}
impl Sub for J2 {
    type Output = J2;
    fn sub(self, o: J2) -> J2 {
        J2(self.0 - o.0, self.1 - o.1, self.2 - o.2)
    }
}
impl Neg for J2 {
    type Output = J2;
    fn neg(self) -> J2 {
        J2(-self.0, -self.1, -self.2)
    }
}
impl Mul for J2 {
    type Output = J2;
    fn mul(self, o: J2) -> J2 {
        J2(
            self.0 * o.0,
            self.1 * o.0 + self.0 * o.1,
            self.2 * o.0 + 2.0 * self.1 * o.1 + self.0 * o.2,
        )
    }
}
impl Div for J2 {
    type Output = J2;
    fn div(self, o: J2) -> J2 {
        let v = self.0 / o.0;
        let d = (self.1 - v * o.1) / o.0;
        J2(v, d, (self.2 - 2.0 * d * o.1 - v * o.2) / o.0)
    }
}
impl Num for J2 {
    fn c(v: f64) -> Self {
        J2(v, 0.0, 0.0)
    }
}

// ---------------------------------------------------------------------------
// sections of SL₃ → M⁴

/// The two coordinate axes most orthogonal to q.
fn completion_indices(q: &Vec3) -> [usize; 2] {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| q[i].abs().total_cmp(&q[j].abs()));
    let mut two = [idx[0], idx[1]];
    two.sort();
    two
}

/// Columns E₁, E₂, E₃ = q with pE₁ = pE₂ = 0 and det = 1; row-major result.
fn section<T: Num>(q: [T; 3], p: [T; 3], idx: [usize; 2]) -> [[T; 3]; 3] {
    let zero = T::c(0.0);
    let c = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let mut cols = [[zero; 3]; 3];
    for (slot, &k) in idx.iter().enumerate() {
        let f = p[k] / c;
        for i in 0..3 {
            let e = if i == k { T::c(1.0) } else { zero };
            cols[slot][i] = e - f * q[i];
        }
    }
    cols[2] = q;
    let [u, v, w] = cols;
    let det = u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]);
    for i in 0..3 {
        cols[1][i] = cols[1][i] / det;
    }
    let mut g = [[zero; 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = cols[j][i];
        }
    }
    g
}

fn section_f64(q: &Vec3, p: &Covec3, idx: [usize; 2]) -> Mat3 {
    Mat3(section(q.0, p.0, idx))
}

/// g ∈ SL₃ with g e₃ = q̂ and e³ g⁻¹ = p̂ (|q̂| = 1, p̂q̂ = 1).
pub fn group_section(pt: &M4Point) -> Mat3 {
    let (q, p) = pt.normalized_reps();
    section_f64(&q, &p, completion_indices(&q))
}

fn chart_reps(cp: &ChartPoint) -> (Vec3, Covec3) {
    let (q, p) = cp.lifts();
    let qn = q * (1.0 / q.norm());
    (qn, p * (1.0 / p.pair(&qn)))
}

// ---------------------------------------------------------------------------
// coframe

/// The coframe (η¹, η², η₁, η₂) at a chart point and its dual frame.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Frame4 {
    pub base: ChartPoint,
    /// Rows η¹, η², η₁, η₂ in chart components.
    pub coframe: M4,
    /// vectors[i]: the frame vector dual to the i-th coframe element.
    pub vectors: M4,
    /// 𝐠(vectors[i], vectors[j]).
    pub gram: M4,
    /// η¹∧η²∧η₁∧η₂ as a multiple of dx∧dy∧da∧db.
    pub volume: f64,
}

impl Frame4 {
    /// Frame components of a chart vector.
    pub fn components(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut r = [0.0; 4];
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = (0..4).map(|j| self.coframe[i][j] * v[j]).sum();
        }
        r
    }
    /// Chart vector with the given frame components.
    pub fn vector(&self, c: &[f64; 4]) -> [f64; 4] {
        let mut r = [0.0; 4];
        for (i, ci) in c.iter().enumerate() {
            for (j, rj) in r.iter_mut().enumerate() {
                *rj += ci * self.vectors[i][j];
            }
        }
        r
    }
    /// max |gram − NULL_FORM|.
    pub fn gram_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.gram[i][j] - NULL_FORM[i][j]).abs());
            }
        }
        d
    }
}

/// η = (ω¹₃, ω²₃, ω³₁, ω³₂) with ω = g⁻¹dg along [`group_section`], by
/// fourth-order central differences in the chart directions.
pub fn coframe(pt: &M4Point) -> Result<Frame4> {
    let cp = pt.to_chart()?;
    coframe_chart(&cp)
}

pub fn coframe_chart(cp: &ChartPoint) -> Result<Frame4> {
    let (q0, _) = chart_reps(cp);
    let idx = completion_indices(&q0);
    let base = [cp.x, cp.y, cp.a, cp.b];
    let g_at = |v: [f64; 4]| -> Result<Mat3> {
        let c = ChartPoint::new(v[0], v[1], v[2], v[3])
            .map_err(|_| Error::numerical("finite differences leave M⁴ (too close to incidence)"))?;
        let (q, p) = chart_reps(&c);
        Ok(section_f64(&q, &p, idx))
    };
    let g0 = g_at(base)?;
    let gi = g0
        .inverse()
        .ok_or_else(|| Error::numerical("singular section"))?;
    let h = 1e-4 * cp.denom().abs().min(1.0);
    let mut eta = [[0.0; 4]; 4];
    for dir in 0..4 {
        let shifted = |s: f64| {
            let mut v = base;
            v[dir] += s * h;
            g_at(v)
        };
        let dg = (shifted(-2.0)? - shifted(2.0)? + (shifted(1.0)? - shifted(-1.0)?) * 8.0) * (1.0 / (12.0 * h));
        let w = gi * dg;
        eta[0][dir] = w.0[0][2];
        eta[1][dir] = w.0[1][2];
        eta[2][dir] = w.0[2][0];
        eta[3][dir] = w.0[2][1];
    }
    let e = Matrix4::from_fn(|i, j| eta[i][j]);
    let vol = e.determinant();
    let f = e
        .try_inverse()
        .ok_or_else(|| Error::numerical("coframe is singular"))?;
    let mut vectors = [[0.0; 4]; 4];
    for (i, v) in vectors.iter_mut().enumerate() {
        for (j, x) in v.iter_mut().enumerate() {
            *x = f[(j, i)];
        }
    }
    let g = metric_chart(cp)?;
    let mut gram = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            gram[i][j] = (0..4)
                .flat_map(|a| (0..4).map(move |b| (a, b)))
                .map(|(a, b)| vectors[i][a] * g[a][b] * vectors[j][b])
                .sum();
        }
    }
    Ok(Frame4 {
        base: *cp,
        coframe: eta,
        vectors,
        gram,
        volume: vol,
    })
}

// ---------------------------------------------------------------------------
// Riemann tensor by finite differences

type R4 = [[[[f64; 4]; 4]; 4]; 4];

struct MetricJet {
    g: M4,
    d1: [M4; 4],
    d2: [[M4; 4]; 4],
    /// size of the last Richardson correction
    err: f64,
}

fn metric_jet(cp: &ChartPoint, h: f64) -> Result<MetricJet> {
    let base = [cp.x, cp.y, cp.a, cp.b];
    let g_at = |d: [f64; 4]| -> Result<M4> {
        let c = ChartPoint::new(base[0] + d[0], base[1] + d[1], base[2] + d[2], base[3] + d[3])
            .map_err(|_| Error::numerical("finite differences leave M⁴ (too close to incidence)"))?;
        metric_chart(&c)
    };
    let g0 = g_at([0.0; 4])?;
    let level = |s: f64| -> Result<([M4; 4], [[M4; 4]; 4])> {
        let step = |i: usize, si: f64, j: usize, sj: f64| {
            let mut d = [0.0; 4];
            d[i] += si;
            d[j] += sj;
            g_at(d)
        };
        let mut d1 = [[[0.0; 4]; 4]; 4];
        let mut d2 = [[[[0.0; 4]; 4]; 4]; 4];
        for c in 0..4 {
            let (gp, gm) = (step(c, s, c, 0.0)?, step(c, -s, c, 0.0)?);
            for a in 0..4 {
                for b in 0..4 {
                    d1[c][a][b] = (gp[a][b] - gm[a][b]) / (2.0 * s);
                    d2[c][c][a][b] = (gp[a][b] - 2.0 * g0[a][b] + gm[a][b]) / (s * s);
                }
            }
            for e in c + 1..4 {
                let pp = step(c, s, e, s)?;
                let pm = step(c, s, e, -s)?;
                let mp = step(c, -s, e, s)?;
                let mm = step(c, -s, e, -s)?;
                for a in 0..4 {
                    for b in 0..4 {
                        let v = (pp[a][b] - pm[a][b] - mp[a][b] + mm[a][b]) / (4.0 * s * s);
                        d2[c][e][a][b] = v;
                        d2[e][c][a][b] = v;
                    }
                }
            }
        }
        Ok((d1, d2))
    };
    let (d1a, d2a) = level(h)?;
    let (d1b, d2b) = level(h / 2.0)?;
    let mut d1 = [[[0.0; 4]; 4]; 4];
    let mut d2 = [[[[0.0; 4]; 4]; 4]; 4];
    let mut err = 0.0f64;
    for c in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                d1[c][a][b] = (4.0 * d1b[c][a][b] - d1a[c][a][b]) / 3.0;
                for e in 0..4 {
                    let corr = (d2b[c][e][a][b] - d2a[c][e][a][b]) / 3.0;
                    d2[c][e][a][b] = d2b[c][e][a][b] + corr;
                    err = err.max(corr.abs());
                }
            }
        }
    }
    Ok(MetricJet { g: g0, d1, d2, err })
}

fn inv4(m: &M4) -> Result<M4> {
    let inv = Matrix4::from_fn(|i, j| m[i][j])
        .try_inverse()
        .ok_or_else(|| Error::numerical("degenerate metric"))?;
    let mut r = [[0.0; 4]; 4];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = inv[(i, j)];
        }
    }
    Ok(r)
}

/// Christoffel symbols Γ^a_{bc} from a metric jet.
fn christoffel(mj: &MetricJet, ginv: &M4) -> [M4; 4] {
    let mut gam = [[[0.0; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                gam[a][b][c] = 0.5
                    * (0..4)
                        .map(|d| ginv[a][d] * (mj.d1[b][d][c] + mj.d1[c][d][b] - mj.d1[d][b][c]))
                        .sum::<f64>();
            }
        }
    }
    gam
}

/// R_{iklm} = ½(g_{im,kl} + g_{kl,im} − g_{il,km} − g_{km,il})
///          + g_{np}(Γⁿ_{kl}Γᵖ_{im} − Γⁿ_{km}Γᵖ_{il}).
fn riemann(mj: &MetricJet, gam: &[M4; 4]) -> R4 {
    let g = &mj.g;
    let dd = |a: usize, b: usize, c: usize, d: usize| mj.d2[c][d][a][b];
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            for l in 0..4 {
                for m in 0..4 {
                    let mut v = 0.5 * (dd(i, m, k, l) + dd(k, l, i, m) - dd(i, l, k, m) - dd(k, m, i, l));
                    for n in 0..4 {
                        for p in 0..4 {
                            v += g[n][p] * (gam[n][k][l] * gam[p][i][m] - gam[n][k][m] * gam[p][i][l]);
                        }
                    }
                    r[i][k][l][m] = v;
                }
            }
        }
    }
    r
}

/// Contract every index of a covariant 4-tensor with the frame vectors.
fn to_frame(r: &R4, f: &M4) -> R4 {
    let mut cur = *r;
    for slot in 0..4 {
        let mut next = [[[[0.0; 4]; 4]; 4]; 4];
        for i0 in 0..4 {
            for i1 in 0..4 {
                for i2 in 0..4 {
                    for i3 in 0..4 {
                        let mut idx = [i0, i1, i2, i3];
                        let new = idx[slot];
                        let mut s = 0.0;
                        for a in 0..4 {
                            idx[slot] = a;
                            s += f[new][a] * cur[idx[0]][idx[1]][idx[2]][idx[3]];
                        }
                        next[i0][i1][i2][i3] = s;
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

fn levi_civita(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let v = [i, j, k, l];
    for a in 0..4 {
        for b in a + 1..4 {
            if v[a] == v[b] {
                return 0.0;
            }
        }
    }
    let mut inv = 0;
    for a in 0..4 {
        for b in a + 1..4 {
            if v[a] > v[b] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Raising both indices of a 2-form: (ω^{kl}) = raise · (ω_{ab}).
fn raise2(ginv: &M4) -> DMatrix<f64> {
    DMatrix::from_fn(6, 6, |r, c| {
        let ((k, l), (a, b)) = (PAIRS[r], PAIRS[c]);
        ginv[k][a] * ginv[l][b] - ginv[k][b] * ginv[l][a]
    })
}

/// Hodge star on 2-form components for metric `g` and vol = +e⁰¹²³.
fn hodge(g: &M4) -> Result<DMatrix<f64>> {
    let ginv = inv4(g)?;
    let det = Matrix4::from_fn(|i, j| g[i][j]).determinant();
    let eps = DMatrix::from_fn(6, 6, |r, c| {
        let ((i, j), (k, l)) = (PAIRS[r], PAIRS[c]);
        levi_civita(i, j, k, l)
    });
    Ok(eps * raise2(&ginv) * det.abs().sqrt())
}

/// (α∧β)₀₁₂₃ for 2-forms given by components on [`PAIRS`].
pub fn wedge22(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[5] - a[1] * b[4] + a[2] * b[3] + a[3] * b[2] - a[4] * b[1] + a[5] * b[0]
}

fn basis_matrix(rows: &[[f64; 6]; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(6, 3, |i, j| rows[j][i])
}

/// Coefficients C with op·from ≈ to·C (least squares).
fn restrict(op: &DMatrix<f64>, from: &DMatrix<f64>, to: &DMatrix<f64>) -> Matrix3<f64> {
    let lhs = to.transpose() * to;
    let rhs = to.transpose() * (op * from);
    let c = lhs.lu().solve(&rhs).expect("basis is independent");
    Matrix3::from_fn(|i, j| c[(i, j)])
}

fn m3(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    /// T_qℝP² ⊕ 0: only the point moves.
    Point,
    /// 0 ⊕ T_pℝP²*: only the line moves.
    Line,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneDescriptor {
    /// Two spanning vectors in chart components (dx, dy, da, db).
    pub basis: [[f64; 4]; 2],
    pub factor: Option<Factor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub base: ChartPoint,
    pub scalar: f64,
    pub ricci0_norm: f64,
    pub weyl_plus_norm: f64,
    pub weyl_minus_norm: f64,
    /// Ascending.
    pub weyl_plus_eigs: [f64; 3],
    pub petrov: String,
    pub principal_planes: Vec<PlaneDescriptor>,
    /// ℛ restricted to Λ²₊ and Λ²₋ in the bases
    /// (η₁∧η¹ ± η₂∧η², η¹∧η², η₁∧η₂) and (…, η₁∧η², η₂∧η¹).
    pub a_plus: [[f64; 3]; 3],
    pub a_minus: [[f64; 3]; 3],
    /// ‖ℛ − ℛ*‖ / ‖ℛ‖ with ℛ* the 𝐠-adjoint on Λ².
    pub self_adjoint_defect: f64,
    /// max |∂g − Γg − Γg| (metric compatibility of the assembled connection).
    pub connection_defect: f64,
    /// Size of the Richardson correction on second derivatives.
    pub extrapolation_error: f64,
}

struct Lab {
    frame: Frame4,
    gf: M4,
    star: DMatrix<f64>,
    wplus: Matrix3<f64>,
    wminus: Matrix3<f64>,
    report: CurvatureReport,
}

const FD_STEP: f64 = 1e-4;
const EXTRAPOLATION_TOL: f64 = 1e-6;

fn analyse(cp: &ChartPoint) -> Result<Lab> {
    let h = FD_STEP * cp.denom().abs().min(1.0);
    let mj = metric_jet(cp, h)?;
    let scale = mj
        .d2
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if mj.err > EXTRAPOLATION_TOL * scale {
        return Err(Error::numerical(format!(
            "curvature extrapolation did not converge (achieved {:.2e})",
            mj.err / scale
        )));
    }
    let ginv = inv4(&mj.g)?;
    let gam = christoffel(&mj, &ginv);
    let mut conn = 0.0f64;
    for c in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                let v = mj.d1[c][a][b]
                    - (0..4)
                        .map(|e| gam[e][c][a] * mj.g[e][b] + gam[e][c][b] * mj.g[a][e])
                        .sum::<f64>();
                conn = conn.max(v.abs());
            }
        }
    }
    let r = riemann(&mj, &gam);

    let frame = coframe_chart(cp)?;
    let rf = to_frame(&r, &frame.vectors);
    let gf = frame.gram;
    let gfi = inv4(&gf)?;

    let mut ric = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            ric[i][k] = (0..4)
                .flat_map(|l| (0..4).map(move |m| (l, m)))
                .map(|(l, m)| gfi[l][m] * rf[l][i][m][k])
                .sum();
        }
    }
    let scalar: f64 = (0..4)
        .flat_map(|i| (0..4).map(move |k| (i, k)))
        .map(|(i, k)| gfi[i][k] * ric[i][k])
        .sum();
    let mut ricci0 = 0.0f64;
    for i in 0..4 {
        for k in 0..4 {
            ricci0 += (ric[i][k] - scalar / 4.0 * gf[i][k]).powi(2);
        }
    }

    let rz = raise2(&gfi);
    let rm = DMatrix::from_fn(6, 6, |p, q| {
        let ((i, j), (k, l)) = (PAIRS[p], PAIRS[q]);
        rf[i][j][k][l]
    });
    let op = &rm * &rz;
    let adj = rz.clone().lu().solve(&(op.transpose() * &rz)).expect("Λ² pairing");
    let self_adjoint_defect = (&op - adj).norm() / op.norm().max(1e-300);
    let star = hodge(&gf)?;
    let (bp, bm) = (basis_matrix(&SD_BASIS), basis_matrix(&ASD_BASIS));
    let a_plus = restrict(&op, &bp, &bp);
    let a_minus = restrict(&op, &bm, &bm);
    let wplus = a_plus - Matrix3::identity() * (a_plus.trace() / 3.0);
    let wminus = a_minus - Matrix3::identity() * (a_minus.trace() / 3.0);

    let mut eigs = [0.0; 3];
    let ev = wplus.complex_eigenvalues();
    let complex = ev.iter().any(|z| z.im.abs() > 1e-6 * wplus.norm().max(1e-300));
    for (e, z) in eigs.iter_mut().zip(ev.iter()) {
        *e = z.re;
    }
    eigs.sort_by(f64::total_cmp);
    let (petrov, planes) = petrov_type(&wplus, &eigs, complex, &frame);

    let report = CurvatureReport {
        base: *cp,
        scalar,
        ricci0_norm: ricci0.sqrt(),
        weyl_plus_norm: wplus.norm(),
        weyl_minus_norm: wminus.norm(),
        weyl_plus_eigs: eigs,
        petrov,
        principal_planes: planes,
        a_plus: m3(&a_plus),
        a_minus: m3(&a_minus),
        self_adjoint_defect,
        connection_defect: conn,
        extrapolation_error: mj.err / scale,
    };
    Ok(Lab {
        frame,
        gf,
        star,
        wplus,
        wminus,
        report,
    })
}

/// Real Petrov type of 𝒲⁺ from its eigenstructure, plus the principal SD
/// null planes for type D (null elements of the repeated eigenspace).
fn petrov_type(
    w: &Matrix3<f64>,
    eigs: &[f64; 3],
    complex: bool,
    frame: &Frame4,
) -> (String, Vec<PlaneDescriptor>) {
    let norm = w.norm();
    if norm < 1e-8 {
        return ("O".into(), vec![]);
    }
    if complex {
        return ("I".into(), vec![]);
    }
    let tol = 1e-4 * norm;
    let rank = |m: Matrix3<f64>| m.svd(false, false).singular_values.iter().filter(|s| **s > tol).count();
    let close01 = (eigs[0] - eigs[1]).abs() < tol;
    let close12 = (eigs[1] - eigs[2]).abs() < tol;
    if close01 && close12 {
        let label = if rank(*w) <= 1 && (w * w).norm() < tol { "N" } else { "III" };
        return (label.into(), vec![]);
    }
    if !close01 && !close12 {
        return ("I".into(), vec![]);
    }
    let lam = if close01 { (eigs[0] + eigs[1]) / 2.0 } else { (eigs[1] + eigs[2]) / 2.0 };
    let shifted = w - Matrix3::identity() * lam;
    if rank(shifted) != 1 {
        return ("II".into(), vec![]);
    }
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let bp = basis_matrix(&SD_BASIS);
    let to6 = |k: usize| -> Vec<f64> {
        let c = nalgebra::DVector::from_fn(3, |i, _| vt[(k, i)]);
        (&bp * c).iter().copied().collect()
    };
    let (u, v) = (to6(order[0]), to6(order[1]));
    let (qa, qb, qc) = (wedge22(&u, &u), wedge22(&u, &v), wedge22(&v, &v));
    let Some(roots) = null_directions(qa, qb, qc) else {
        return ("D".into(), vec![]);
    };
    let planes = roots
        .iter()
        .map(|(s, t)| {
            let beta: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + t * b).collect();
            plane_of_form(&beta, frame)
        })
        .collect();
    ("D".into(), planes)
}

/// The two isotropic directions (s, t) of the form [[a, b], [b, c]], or
/// None when it is definite.
fn null_directions(a: f64, b: f64, c: f64) -> Option<[(f64, f64); 2]> {
    let m = nalgebra::Matrix2::new(a, b, b, c);
    if !m.iter().all(|x| x.is_finite()) {
        return None;
    }
    let e = m.symmetric_eigen();
    let (l0, l1) = (e.eigenvalues[0], e.eigenvalues[1]);
    let tol = 1e-12 * (l0.abs() + l1.abs());
    if l0 * l1 > 0.0 && l0.abs().min(l1.abs()) > tol {
        return None;
    }
    let (v0, v1) = (e.eigenvectors.column(0), e.eigenvectors.column(1));
    let (w0, w1) = (l1.abs().sqrt(), l0.abs().sqrt());
    Some([
        (w0 * v0[0] + w1 * v1[0], w0 * v0[1] + w1 * v1[1]),
        (w0 * v0[0] - w1 * v1[0], w0 * v0[1] - w1 * v1[1]),
    ])
}

/// Kernel of a decomposable 2-form (frame components) as chart vectors.
fn plane_of_form(beta: &[f64], frame: &Frame4) -> PlaneDescriptor {
    let mut b = Matrix4::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        b[(i, j)] = beta[k];
        b[(j, i)] = -beta[k];
    }
    let svd = b.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut basis = [[0.0; 4]; 2];
    for (slot, &k) in order[..2].iter().enumerate() {
        let c = [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)], vt[(k, 3)]];
        let v = frame.vector(&c);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis[slot] = v.map(|x| x / n);
    }
    let part = |r: std::ops::Range<usize>| -> f64 {
        basis
            .iter()
            .map(|v| v[r.clone()].iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    let factor = if part(2..4) < 1e-6 {
        Some(Factor::Point)
    } else if part(0..2) < 1e-6 {
        Some(Factor::Line)
    } else {
        None
    };
    PlaneDescriptor { basis, factor }
}

/// Scalar curvature, Einstein defect, Weyl decomposition and Petrov type
/// at a chart point.
pub fn curvature_report(cp: &ChartPoint) -> Result<CurvatureReport> {
    Ok(analyse(cp)?.report)
}

// ---------------------------------------------------------------------------
// 2-planes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaneKind {
    SelfDual,
    AntiSelfDual,
    NotNull,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneClass {
    pub kind: PlaneKind,
    /// |β∧𝒲β| / (|β|²|𝒲|); zero for principal null planes. NaN if not null.
    pub principal_defect: f64,
}

fn lower(g: &M4, v: &[f64; 4]) -> [f64; 4] {
    let mut r = [0.0; 4];
    for (i, ri) in r.iter_mut().enumerate() {
        *ri = (0..4).map(|j| g[i][j] * v[j]).sum();
    }
    r
}

fn gdot(g: &M4, v: &[f64; 4], w: &[f64; 4]) -> f64 {
    lower(g, v).iter().zip(w).map(|(a, b)| a * b).sum()
}

fn norm4(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn wedge11(a: &[f64; 4], b: &[f64; 4]) -> Vec<f64> {
    PAIRS.iter().map(|&(i, j)| a[i] * b[j] - a[j] * b[i]).collect()
}

/// Classify the plane spanned by frame vectors v, w.
fn classify_frame(gf: &M4, star: &DMatrix<f64>, v: &[f64; 4], w: &[f64; 4]) -> Result<(PlaneKind, Vec<f64>)> {
    let bw = wedge11(v, w);
    let bn = bw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if bn <= 1e-10 * norm4(v) * norm4(w) {
        return Err(Error::domain("dependent tangents"));
    }
    let s = norm4(v) * norm4(w);
    let null = [gdot(gf, v, v) / (norm4(v) * norm4(v)), gdot(gf, v, w) / s, gdot(gf, w, w) / (norm4(w) * norm4(w))];
    if null.iter().any(|x| x.abs() > 1e-7) {
        return Ok((PlaneKind::NotNull, vec![]));
    }
    // a null plane is its own orthogonal complement, so v♭∧w♭ annihilates it
    let beta = wedge11(&lower(gf, v), &lower(gf, w));
    let b = nalgebra::DVector::from_vec(beta.clone());
    let sb = star * &b;
    let n = b.norm();
    let kind = if (&sb - &b).norm() < 1e-6 * n {
        PlaneKind::SelfDual
    } else if (&sb + &b).norm() < 1e-6 * n {
        PlaneKind::AntiSelfDual
    } else {
        PlaneKind::NotNull
    };
    Ok((kind, beta))
}

impl Lab {
    fn principal_defect(&self, beta: &[f64]) -> f64 {
        let bp = basis_matrix(&SD_BASIS);
        let bm = basis_matrix(&ASD_BASIS);
        let mut full = DMatrix::zeros(6, 6);
        full.view_mut((0, 0), (6, 3)).copy_from(&bp);
        full.view_mut((0, 3), (6, 3)).copy_from(&bm);
        let c = full
            .lu()
            .solve(&nalgebra::DVector::from_vec(beta.to_vec()))
            .expect("Λ² basis");
        let cp = nalgebra::Vector3::new(c[0], c[1], c[2]);
        let cm = nalgebra::Vector3::new(c[3], c[4], c[5]);
        let wp = self.wplus * cp;
        let wm = self.wminus * cm;
        let wb: Vec<f64> = (0..6)
            .map(|i| (0..3).map(|k| bp[(i, k)] * wp[k] + bm[(i, k)] * wm[k]).sum())
            .collect();
        let n2: f64 = beta.iter().map(|x| x * x).sum();
        let wn = (self.wplus.norm() + self.wminus.norm()).max(1e-300);
        wedge22(beta, &wb).abs() / (n2 * wn)
    }
}

/// SD / ASD / not null for the 2-plane spanned by two tangents at `pt`,
/// with the principal defect β∧𝒲β for null planes.
pub fn sd_classify(pt: &M4Point, v: &M4Tangent, w: &M4Tangent) -> Result<PlaneClass> {
    let cp = pt.to_chart()?;
    let lab = analyse(&cp)?;
    let (vf, wf) = (
        lab.frame.components(&v.chart_coords()?),
        lab.frame.components(&w.chart_coords()?),
    );
    let (kind, beta) = classify_frame(&lab.gf, &lab.star, &vf, &wf)?;
    let principal_defect = if kind == PlaneKind::NotNull {
        f64::NAN
    } else {
        lab.principal_defect(&beta)
    };
    Ok(PlaneClass { kind, principal_defect })
}

/// The two null 2-planes containing a null vector n (chart components):
/// for each, its kind and a second spanning vector.
pub fn null_planes_through(cp: &ChartPoint, n: &[f64; 4]) -> Result<Vec<(PlaneKind, [f64; 4])>> {
    let frame = coframe_chart(cp)?;
    let gf = frame.gram;
    let star = hodge(&gf)?;
    let nf = frame.components(n);
    if gdot(&gf, &nf, &nf).abs() > 1e-9 * norm4(&nf).powi(2) {
        return Err(Error::domain("vector is not null"));
    }
    // n^⊥ = kernel of n♭; drop the n direction
    let nl = lower(&gf, &nf);
    let perp = crate::linalg::null_space(&[nl.to_vec()], 4, 1e-12);
    let mut comp: Vec<[f64; 4]> = Vec::new();
    for v in perp {
        let mut x = [v[0], v[1], v[2], v[3]];
        let nn = nf.iter().map(|a| a * a).sum::<f64>();
        let k = x.iter().zip(&nf).map(|(a, b)| a * b).sum::<f64>() / nn;
        for (xi, ni) in x.iter_mut().zip(&nf) {
            *xi -= k * ni;
        }
        if norm4(&x) > 1e-8 && comp.len() < 2 {
            if let Some(prev) = comp.first() {
                let d = prev.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / norm4(prev).powi(2);
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= d * pi;
                }
                if norm4(&x) < 1e-8 {
                    continue;
                }
            }
            comp.push(x);
        }
    }
    let [m1, m2] = [comp[0], comp[1]];
    let (a, b, c) = (gdot(&gf, &m1, &m1), gdot(&gf, &m1, &m2), gdot(&gf, &m2, &m2));
    let dirs = null_directions(a, b, c)
        .ok_or_else(|| Error::numerical("induced form on n^⊥/n is definite"))?;
    dirs.iter()
        .map(|(s, t)| {
            let m: [f64; 4] = std::array::from_fn(|i| s * m1[i] + t * m2[i]);
            let (kind, _) = classify_frame(&gf, &star, &nf, &m)?;
            Ok((kind, frame.vector(&m)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// null curves and adapted lifts

/// A curve t ↦ ([q(t)], [p(t)]) in M⁴ given by its two projections.
#[derive(Clone)]
pub struct NullCurve {
    pub q: CurveRef,
    pub p: CurveRef,
    pub t0: f64,
    pub t1: f64,
}

impl NullCurve {
    pub fn new(q: CurveRef, p: CurveRef, t0: f64, t1: f64) -> Self {
        NullCurve { q, p, t0, t1 }
    }
    /// Max normalized null defect on an n-interval grid.
    pub fn null_residual(&self, n: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..=n {
            let t = self.t0 + (self.t1 - self.t0) * i as f64 / n as f64;
            worst = worst.max(dancing_residual(self.q.as_ref(), self.p.as_ref(), t)?);
        }
        Ok(worst)
    }
    pub fn point(&self, t: f64) -> Result<M4Point> {
        M4Point::new(self.q.eval(t), self.p.eval(t).transpose())
    }
}

/// An adapted lift σ(t) ∈ SL₃ and σ⁻¹σ′.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdaptedFrame {
    pub t: f64,
    pub sigma: Mat3,
    pub omega: Mat3,
    /// σ*φ(∂t) = ω¹₁ + ω²₂.
    pub phi: f64,
}

impl AdaptedFrame {
    /// Largest deviation from ω¹₃ = ω³₂ = 0, ω²₃ = ω³₁ = 1.
    pub fn pattern_defect(&self) -> f64 {
        let w = &self.omega.0;
        [w[0][2].abs(), (w[1][2] - 1.0).abs(), (w[2][0] - 1.0).abs(), w[2][1].abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn mat_j2(g: &[[J2; 3]; 3]) -> (Mat3, Mat3, Mat3) {
    let pick = |f: fn(&J2) -> f64| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = f(&g[i][j]);
            }
        }
        Mat3(m)
    };
    (pick(|x| x.0), pick(|x| x.1), pick(|x| x.2))
}

/// Adapted lift at t: start from the section through the curve's
/// representatives, then gauge by h = diag(A, 1/det A) with
/// aA·e₂ = (s¹, s²)ᵗ and (s₁, s₂)·aA = e¹.
pub fn adapted_frame(curve: &NullCurve, t: f64) -> Result<AdaptedFrame> {
    let (qj, pj) = (curve.q.jet(t, 2), curve.p.jet(t, 2));
    let q: [J2; 3] = std::array::from_fn(|i| J2(qj[0][i], qj[1][i], qj[2][i]));
    let p: [J2; 3] = std::array::from_fn(|i| J2(pj[0][i], pj[1][i], pj[2][i]));
    let idx = completion_indices(&qj[0]);
    let (g0, g1, g2) = mat_j2(&section(q, p, idx));
    let gi = g0
        .inverse()
        .ok_or_else(|| Error::domain(format!("incident pair at t = {t}")))?;
    let s = gi * g1;
    let ds = gi * g2 - s * s;
    let (up, dup) = ([s.0[0][2], s.0[1][2]], [ds.0[0][2], ds.0[1][2]]);
    let (lo, dlo) = ([s.0[2][0], s.0[2][1]], [ds.0[2][0], ds.0[2][1]]);
    let scale = s.norm().max(1e-300);
    let (nu, nl) = (up[0].hypot(up[1]), lo[0].hypot(lo[1]));
    if nu <= 1e-9 * scale || nl <= 1e-9 * scale {
        return Err(Error::domain(format!(
            "degenerate curve: a projection is singular at t = {t}"
        )));
    }
    let null = lo[0] * up[0] + lo[1] * up[1];
    if null.abs() > 1e-6 * nu * nl {
        return Err(Error::domain(format!(
            "adapted gauge unsolvable: curve is not null at t = {t}"
        )));
    }
    let n2 = nl * nl;
    let ldl = lo[0] * dlo[0] + lo[1] * dlo[1];
    let m1 = [lo[0] / n2, lo[1] / n2];
    let dm1 = [
        dlo[0] / n2 - 2.0 * lo[0] * ldl / (n2 * n2),
        dlo[1] / n2 - 2.0 * lo[1] * ldl / (n2 * n2),
    ];
    // M = aA = [m1 | s_up]
    let m = [[m1[0], up[0]], [m1[1], up[1]]];
    let dm = [[dm1[0], dup[0]], [dm1[1], dup[1]]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let ddet = dm[0][0] * m[1][1] + m[0][0] * dm[1][1] - dm[0][1] * m[1][0] - m[0][1] * dm[1][0];
    let a = det.cbrt();
    let da = ddet / (3.0 * a * a);
    let mut h = Mat3::ZERO;
    let mut dh = Mat3::ZERO;
    for i in 0..2 {
        for j in 0..2 {
            h.0[i][j] = m[i][j] / a;
            dh.0[i][j] = dm[i][j] / a - m[i][j] * da / (a * a);
        }
    }
    h.0[2][2] = 1.0 / a;
    dh.0[2][2] = -da / (a * a);
    let hi = h.inverse().expect("det h = 1");
    let omega = hi * s * h + hi * dh;
    Ok(AdaptedFrame {
        t,
        sigma: g0 * h,
        omega,
        phi: omega.0[0][0] + omega.0[1][1],
    })
}

pub fn adapted_lift(curve: &NullCurve, ts: &[f64]) -> Result<Vec<AdaptedFrame>> {
    ts.iter().map(|&t| adapted_frame(curve, t)).collect()
}

/// |σ*φ(∂t)| along the curve; vanishes iff the SD tangent plane is parallel.
pub fn parallel_sd_residual(curve: &NullCurve, ts: &[f64]) -> Result<Vec<f64>> {
    ts.iter()
        .map(|&t| adapted_frame(curve, t).map(|f| f.phi.abs()))
        .collect()
}

/// Relative tolerance on σ*φ for [`lift_to_q5`].
pub const LIFT_TOL: f64 = 1e-6;

/// The integral curve (σe₃, e³σ⁻¹) of a null curve with parallel SD tangent
/// plane, σ an adapted lift.
pub fn lift_to_q5(curve: &NullCurve, ts: &[f64]) -> Result<Q5Trajectory> {
    let mut pts = Vec::with_capacity(ts.len());
    for &t in ts {
        let f = adapted_frame(curve, t)?;
        let scale = f.omega.norm().max(1.0);
        if f.phi.abs() > LIFT_TOL * scale {
            return Err(Error::domain(format!(
                "not a dancing pair: the SD tangent plane is not parallel (|φ| = {:.2e} at t = {t})",
                f.phi.abs()
            )));
        }
        let si = f.sigma.inverse().expect("det σ = 1");
        pts.push(Q5Point::new(f.sigma.col(2), si.row(2))?);
    }
    Ok(Q5Trajectory::new(ts.to_vec(), pts, "lifted"))
}
