use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∫_{lo}^{hi} h(t) dt` for `h` with square-root behavior at both ends, using
/// `t = mid + half·cos s` and Gauss-Legendre in `s`, doubling from `n0` nodes until
/// successive values differ by less than `tol`.
pub fn endpoint_stretched<F>(lo: f64, hi: f64, n0: usize, tol: f64, mut h: F) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut rule = |n: usize| -> Result<Complex64> {
        let (x, w) = gauss_legendre(n);
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * PI * (xi + 1.0);
            acc += wi * s.sin() * h(mid + half * s.cos())?;
        }
        Ok(acc * 0.5 * PI * half)
    };
    let mut n = n0.max(4);
    let mut prev = rule(n)?;
    while n < 4096 {
        n *= 2;
        let next = rule(n)?;
        if (next - prev).norm() < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("no convergence on ({lo}, {hi}) with {n} nodes")))
}
