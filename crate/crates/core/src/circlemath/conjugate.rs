use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Smallest grid accepted by spectral routines.
pub const MIN_GRID: usize = 8;

/// Checks that `n` is a power of two no smaller than `min`.
pub fn check_grid(n: usize, min: usize) -> Result<()> {
    if n < min || !n.is_power_of_two() {
        return Err(Error::GridSize { n, min });
    }
    Ok(())
}

/// Discrete Fourier coefficients `ĥ_m = (1/N) Σ h_j e^{-imθ_j}` in FFT order.
pub fn fourier_coefficients(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter_mut().for_each(|c| *c /= n as f64);
    buf
}

/// Signed frequency of FFT slot `j` on an `n`-grid; the Nyquist slot maps to zero.
pub fn frequency(j: usize, n: usize) -> i64 {
    if 2 * j < n {
        j as i64
    } else if 2 * j == n {
        0
    } else {
        j as i64 - n as i64
    }
}

/// Periodic conjugate function of samples on `θ_j = 2πj/N`: Fourier multiplier
/// `-i·sgn(m)`, zero mean.
pub fn conjugate_function(samples: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    check_grid(n, MIN_GRID)?;
    let mut buf = fourier_coefficients(samples);
    for (j, c) in buf.iter_mut().enumerate() {
        let m = frequency(j, n);
        *c *= Complex64::new(0.0, -(m.signum() as f64));
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|c| c.re).collect())
}

/// Evaluates the trigonometric interpolant with coefficients from
/// [`fourier_coefficients`] at an arbitrary angle.
pub fn interpolate(coeffs: &[Complex64], theta: f64) -> f64 {
    let n = coeffs.len();
    let mut acc = coeffs[0].re;
    let step = Complex64::from_polar(1.0, theta);
    let mut e = step;
    for c in coeffs.iter().take(n.div_ceil(2)).skip(1) {
        acc += 2.0 * (c * e).re;
        e *= step;
    }
    if n % 2 == 0 {
        acc += coeffs[n / 2].re * (theta * (n / 2) as f64).cos();
    }
    acc
}
