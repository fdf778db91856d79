use num_complex::Complex64;
use std::f64::consts::PI;

use super::arcs::{unwrap_near, Arc};
use super::conjugate::{check_grid, fourier_coefficients, MIN_GRID};
use super::pv::ArcPiece;
use crate::{Error, Result, TAU};

/// Tolerated negativity before a density is rejected.
pub const NEGATIVITY_FLOOR: f64 = 1e-10;

/// A measure on the circle in one of three sampled forms.
#[derive(Debug, Clone)]
pub enum MeasureSamples {
    /// Per-arc pieces with `dμ = P(x) dx / sqrt(1 - x²)`.
    Arcs(Vec<ArcPiece>),
    /// Density values on the uniform grid `θ_j = 2πj/N` together with their
    /// Fourier coefficients.
    Uniform { density: Vec<f64>, coeffs: Vec<Complex64> },
    /// Point masses at `θ_j = 2πj/N`.
    Discrete { weights: Vec<f64> },
}

impl MeasureSamples {
    /// Arc piece from `h = f / sqrt((θ - α)(β - θ))` at Chebyshev nodes.
    pub fn arc_piece(arc: Arc, reduced: &[f64]) -> Result<ArcPiece> {
        let d = arc.half_width();
        let piece = ArcPiece::from_values(arc, reduced.iter().map(|&h| Complex64::new(h, 0.0)).collect());
        for (j, &h) in reduced.iter().enumerate() {
            if h * d < -NEGATIVITY_FLOOR {
                let x = piece.x()[j];
                return Err(Error::NegativeDensity { theta: piece.theta()[j], value: h * d * (1.0 - x * x).sqrt() });
            }
        }
        Ok(piece.map(|x, _, v| v * d * d * (1.0 - x * x)))
    }

    pub fn uniform(density: Vec<f64>) -> Result<Self> {
        check_grid(density.len(), MIN_GRID)?;
        let n = density.len();
        if let Some(j) = density.iter().position(|&v| v < -NEGATIVITY_FLOOR) {
            return Err(Error::NegativeDensity { theta: TAU * j as f64 / n as f64, value: density[j] });
        }
        let coeffs = fourier_coefficients(&density);
        Ok(MeasureSamples::Uniform { density, coeffs })
    }

    pub fn discrete(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySupport);
        }
        let n = weights.len();
        if let Some(j) = weights.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeDensity { theta: TAU * j as f64 / n as f64, value: weights[j] });
        }
        Ok(MeasureSamples::Discrete { weights })
    }

    pub fn mass(&self) -> f64 {
        match self {
            MeasureSamples::Arcs(pieces) => pieces.iter().map(|p| p.integral().re).sum(),
            MeasureSamples::Uniform { coeffs, .. } => TAU * coeffs[0].re,
            MeasureSamples::Discrete { weights } => weights.iter().sum(),
        }
    }

    /// `∫ φ dμ` for smooth `φ`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        match self {
            MeasureSamples::Arcs(pieces) => {
                pieces.iter().map(|p| p.integral_with(|t| Complex64::new(phi(t), 0.0)).re).sum()
            }
            MeasureSamples::Uniform { density, .. } => {
                let n = density.len();
                density.iter().enumerate().map(|(j, f)| f * phi(TAU * j as f64 / n as f64)).sum::<f64>() * TAU
                    / n as f64
            }
            MeasureSamples::Discrete { weights } => {
                let n = weights.len();
                weights.iter().enumerate().map(|(j, w)| w * phi(TAU * j as f64 / n as f64)).sum()
            }
        }
    }

    /// The measure `φ dμ` on the same nodes.
    pub fn reweighted<F: Fn(f64) -> f64>(&self, phi: F) -> Self {
        match self {
            MeasureSamples::Arcs(pieces) => {
                MeasureSamples::Arcs(pieces.iter().map(|p| p.map(|_, t, v| v * phi(t))).collect())
            }
            MeasureSamples::Uniform { density, .. } => {
                let n = density.len();
                let d: Vec<f64> =
                    density.iter().enumerate().map(|(j, f)| f * phi(TAU * j as f64 / n as f64)).collect();
                let coeffs = fourier_coefficients(&d);
                MeasureSamples::Uniform { density: d, coeffs }
            }
            MeasureSamples::Discrete { weights } => {
                let n = weights.len();
                MeasureSamples::Discrete {
                    weights: weights.iter().enumerate().map(|(j, w)| w * phi(TAU * j as f64 / n as f64)).collect(),
                }
            }
        }
    }

    /// `(1/2π) ∫ cot((θ - t)/2) dμ(t)`, the conjugate function of the density;
    /// principal value on the support. Point masses skip a coincident node.
    pub fn conjugate_at(&self, theta: f64) -> f64 {
        match self {
            MeasureSamples::Arcs(pieces) => -pieces.iter().map(|p| p.cot_integral(theta).re).sum::<f64>() / TAU,
            MeasureSamples::Uniform { coeffs, .. } => {
                let n = coeffs.len();
                let step = Complex64::from_polar(1.0, theta);
                let mut e = step;
                let mut acc = 0.0;
                for c in coeffs.iter().take(n.div_ceil(2)).skip(1) {
                    acc += 2.0 * (c * e).im;
                    e *= step;
                }
                acc
            }
            MeasureSamples::Discrete { weights } => {
                let n = weights.len();
                weights
                    .iter()
                    .enumerate()
                    .filter_map(|(j, w)| {
                        let u = unwrap_near(theta - TAU * j as f64 / n as f64, 0.0);
                        (u.abs() > 1e-12).then(|| w / (0.5 * u).tan())
                    })
                    .sum::<f64>()
                    / TAU
            }
        }
    }
}

/// `U^μ(e^{iθ}) = -∫ log|2 sin((θ - t)/2)| dμ(t)`. A point mass at the evaluation
/// angle contributes the cell average `1 - log(2π/N)`.
pub fn log_kernel_potential(measure: &MeasureSamples, theta: f64) -> Result<f64> {
    match measure {
        MeasureSamples::Arcs(pieces) => Ok(-pieces.iter().map(|p| p.log_sin_integral(theta).re).sum::<f64>()),
        MeasureSamples::Uniform { coeffs, .. } => {
            let n = coeffs.len();
            let step = Complex64::from_polar(1.0, theta);
            let mut e = step;
            let mut acc = 0.0;
            for (m, c) in coeffs.iter().enumerate().take(n.div_ceil(2)).skip(1) {
                acc += TAU * (c * e).re / m as f64;
                e *= step;
            }
            if n % 2 == 0 {
                let half = (n / 2) as f64;
                acc += PI * coeffs[n / 2].re * (half * theta).cos() / half;
            }
            Ok(acc)
        }
        MeasureSamples::Discrete { weights } => {
            let n = weights.len();
            let diag = (TAU / n as f64).ln() - 1.0;
            Ok(-weights
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let u = unwrap_near(theta - TAU * j as f64 / n as f64, 0.0);
                    if u.abs() < 1e-12 {
                        w * diag
                    } else {
                        w * (2.0 * (0.5 * u).sin()).abs().ln()
                    }
                })
                .sum::<f64>())
        }
    }
}
