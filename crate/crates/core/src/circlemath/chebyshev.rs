//! Chebyshev expansions on `[-1, 1]` against the weight `1/sqrt(1 - x²)`.
//!
//! A function sampled at the first-kind nodes `x_j = cos((j + 1/2)π/n)` is turned
//! into coefficients `a_k` of `Σ a_k T_k(x)`; Cauchy and logarithmic integrals of
//! `T_k(x)/sqrt(1 - x²)` are known in closed form, which is how singular integrals
//! over an arc are evaluated without excision.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// First-kind Chebyshev nodes in decreasing order.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| ((j as f64 + 0.5) * PI / n as f64).cos()).collect()
}

/// Coefficients `a_0..a_{n-1}` of the interpolant through values at [`nodes`].
pub fn coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = Vec::with_capacity(2 * n);
    buf.extend_from_slice(values);
    buf.extend(values.iter().rev());
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut a: Vec<Complex64> = (0..n)
        .map(|k| buf[k] * Complex64::from_polar(scale, -PI * k as f64 / (2 * n) as f64))
        .collect();
    a[0] *= 0.5;
    a
}

/// `Σ a_k T_k(x)` by Clenshaw's recurrence.
pub fn evaluate(a: &[Complex64], x: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in a.iter().skip(1).rev() {
        let b0 = c + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    a.first().copied().unwrap_or_default() + x * b1 - b2
}

/// `∫_{-1}^{1} P(x) / (sqrt(1 - x²) (x - y)) dx` for real `y`, principal value when
/// `|y| < 1`. At `|y| = 1` this is finite only when `P(y) = 0`.
pub fn cauchy(a: &[Complex64], y: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    if y.abs() <= 1.0 {
        // π Σ a_k U_{k-1}(y)
        let (mut u_prev, mut u) = (0.0, 1.0);
        for &c in a.iter().skip(1) {
            acc += c * u;
            let next = 2.0 * y * u - u_prev;
            u_prev = u;
            u = next;
        }
        PI * acc
    } else {
        let s = y.signum();
        let r = (y * y - 1.0).sqrt();
        let w = s / (y.abs() + r);
        let mut p = 1.0;
        for &c in a {
            acc += c * p;
            p *= w;
        }
        -PI * s * acc / r
    }
}

/// `∫_{-1}^{1} log|x - y| P(x) / sqrt(1 - x²) dx` for real `y`.
pub fn log_integral(a: &[Complex64], y: f64) -> Complex64 {
    let Some(&a0) = a.first() else {
        return Complex64::new(0.0, 0.0);
    };
    if y.abs() <= 1.0 {
        let mut acc = -PI * std::f64::consts::LN_2 * a0;
        let (mut t_prev, mut t) = (1.0, y);
        for (k, &c) in a.iter().enumerate().skip(1) {
            acc -= PI * c * t / k as f64;
            let next = 2.0 * y * t - t_prev;
            t_prev = t;
            t = next;
        }
        acc
    } else {
        let s = y.signum();
        let r = (y * y - 1.0).sqrt();
        let w = s / (y.abs() + r);
        let mut acc = PI * ((y.abs() + r) / 2.0).ln() * a0;
        let mut p = w;
        for (k, &c) in a.iter().enumerate().skip(1) {
            acc -= PI * c * p / k as f64;
            p *= w;
        }
        acc
    }
}

/// Largest coefficient magnitude in the last quarter, relative to the largest overall.
pub fn tail_ratio(a: &[Complex64]) -> f64 {
    let max = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let start = a.len() - a.len() / 4;
    a[start..].iter().map(|c| c.norm()).fold(0.0, f64::max) / max
}

/// Barycentric interpolation through first-kind nodes.
pub fn barycentric(x_nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = x_nodes.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let d = x - x_nodes[j];
        if d == 0.0 {
            return values[j];
        }
        let w = ((j as f64 + 0.5) * PI / n as f64).sin() * if j % 2 == 0 { 1.0 } else { -1.0 };
        num += w * values[j] / d;
        den += w / d;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<Complex64>) {
        let x = nodes(n);
        let v = x.iter().map(|&t| Complex64::new(f(t), 0.0)).collect();
        (x, v)
    }

    fn direct_coefficients(v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|k| {
                let s: Complex64 = (0..n)
                    .map(|j| v[j] * (k as f64 * (j as f64 + 0.5) * PI / n as f64).cos())
                    .sum();
                s * if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 }
            })
            .collect()
    }

    #[test]
    fn fft_coefficients_match_direct_sum() {
        let (_, v) = sample(37, |x| (3.0 * x).exp() * (x + 0.2).sin());
        let a = coefficients(&v);
        let b = direct_coefficients(&v);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn interpolation_reproduces_function() {
        let f = |x: f64| 1.0 / (2.0 - x) + x.powi(3);
        let (x, v) = sample(64, f);
        let a = coefficients(&v);
        let re: Vec<f64> = v.iter().map(|c| c.re).collect();
        for t in [-0.99, -0.5, 0.0, 0.31, 0.999] {
            assert_abs_diff_eq!(evaluate(&a, t).re, f(t), epsilon = 1e-14);
            assert_abs_diff_eq!(barycentric(&x, &re, t), f(t), epsilon = 1e-13);
        }
        assert!(tail_ratio(&a) < 1e-15);
    }

    // Gauss-Legendre-free check: Gauss-Chebyshev of (P(x) - P(y))/(x - y) plus
    // P(y) times the PV of 1/(sqrt(1-x²)(x-y)), which vanishes for |y| < 1.
    #[test]
    fn cauchy_matches_subtraction_quadrature() {
        let f = |x: f64| (x + 0.3).cos() + 0.5 * x * x;
        let df = |x: f64| -(x + 0.3).sin() + x;
        let (_, v) = sample(48, f);
        let a = coefficients(&v);
        let n = 4000;
        let xs = nodes(n);
        for y in [-0.7, 0.1, 0.55] {
            let q: f64 = xs
                .iter()
                .map(|&x| if (x - y).abs() < 1e-12 { df(y) } else { (f(x) - f(y)) / (x - y) })
                .sum::<f64>()
                * PI
                / n as f64;
            assert_abs_diff_eq!(cauchy(&a, y).re, q, epsilon = 1e-12);
        }
        for y in [-3.0, 1.2, 5.0] {
            let q: f64 = xs.iter().map(|&x| f(x) / (x - y)).sum::<f64>() * PI / n as f64;
            assert_abs_diff_eq!(cauchy(&a, y).re, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_integral_matches_quadrature_off_interval() {
        let f = |x: f64| 1.0 + x - 0.25 * x.powi(4);
        let (_, v) = sample(16, f);
        let a = coefficients(&v);
        let n = 2000;
        let xs = nodes(n);
        for y in [-2.5, 1.01, 3.0] {
            let q: f64 = xs.iter().map(|&x| (x - y).abs().ln() * f(x)).sum::<f64>() * PI / n as f64;
            assert_abs_diff_eq!(log_integral(&a, y).re, q, epsilon = 1e-10);
        }
    }

    #[test]
    fn log_integral_inside_is_continuous_with_outside() {
        let f = |x: f64| (0.4 * x).exp();
        let (_, v) = sample(24, f);
        let a = coefficients(&v);
        let inside = log_integral(&a, 1.0);
        let outside = log_integral(&a, 1.0 + 1e-12);
        assert!((inside - outside).norm() < 1e-5);
        // constant density: log capacity of [-1, 1] is -log 2
        let c = [Complex64::new(1.0, 0.0)];
        assert_abs_diff_eq!(log_integral(&c, 0.3).re, -PI * 2f64.ln(), epsilon = 1e-15);
    }
}
