//! Finite-difference stencils.

/// 7-point central weights for derivatives of order 1..=6 (orders of accuracy 6, 6, 4, 4, 2, 2).
pub const STENCIL7: [[f64; 7]; 6] = [
    [-1.0 / 60.0, 9.0 / 60.0, -45.0 / 60.0, 0.0, 45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0],
    [
        2.0 / 180.0,
        -27.0 / 180.0,
        270.0 / 180.0,
        -490.0 / 180.0,
        270.0 / 180.0,
        -27.0 / 180.0,
        2.0 / 180.0,
    ],
    [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0],
    [-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0],
    [-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5],
    [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0],
];

/// Apply the order-`k` stencil (1..=6) to samples `f[i-3..=i+3]`.
pub fn stencil7(f: &[f64], i: usize, k: usize, h: f64) -> f64 {
    let w = &STENCIL7[k - 1];
    let s: f64 = (0..7).map(|j| w[j] * f[i + j - 3]).sum();
    s / h.powi(k as i32)
}

/// 5-point central first derivative.
pub fn d1<F: FnMut(f64) -> f64>(mut f: F, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

/// 5-point central second derivative.
pub fn d2<F: FnMut(f64) -> f64>(mut f: F, t: f64, h: f64) -> f64 {
    (-f(t - 2.0 * h) + 16.0 * f(t - h) - 30.0 * f(t) + 16.0 * f(t + h) - f(t + 2.0 * h))
        / (12.0 * h * h)
}

/// 5-point central first derivative of a vector-valued map.
pub fn d1_vec<const N: usize, F: FnMut(f64) -> [f64; N]>(mut f: F, t: f64, h: f64) -> [f64; N] {
    let (a, b, c, d) = (f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h));
    std::array::from_fn(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h))
}
