//! Forward-mode dual numbers, nestable for exact higher derivatives of
//! polynomial vector fields.

use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}
impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}
impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}
impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}
impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::new(T::cst(v), T::cst(0.0))
    }
}

pub fn cross<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A vector field on ℝ⁶ = {(q, p)}, evaluable over any scalar type.
pub trait Field6 {
    fn eval<T: Scalar>(&self, z: &[T; 6]) -> [T; 6];
}

/// Directional derivative DF(z)·v over scalar T.
pub fn jvp<F: Field6, T: Scalar>(f: &F, z: &[T; 6], v: &[T; 6]) -> [T; 6] {
    let zd: [Dual<T>; 6] = std::array::from_fn(|i| Dual::new(z[i], v[i]));
    f.eval(&zd).map(|d| d.eps)
}

/// [X, Y] = DY·X − DX·Y.
pub struct Bracket<'a, X, Y>(pub &'a X, pub &'a Y);

impl<X: Field6, Y: Field6> Field6 for Bracket<'_, X, Y> {
    fn eval<T: Scalar>(&self, z: &[T; 6]) -> [T; 6] {
        let xv = self.0.eval(z);
        let yv = self.1.eval(z);
        let a = jvp(self.1, z, &xv);
        let b = jvp(self.0, z, &yv);
        std::array::from_fn(|i| a[i] - b[i])
    }
}

/// Value followed by the Jacobian columns (6 + 36 numbers).
pub fn jet<F: Field6>(f: &F, z: &[f64; 6]) -> Vec<f64> {
    let mut out = f.eval(z).to_vec();
    for k in 0..6 {
        let mut e = [0.0; 6];
        e[k] = 1.0;
        out.extend_from_slice(&jvp(f, z, &e));
    }
    out
}
