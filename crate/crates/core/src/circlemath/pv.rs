use num_complex::Complex64;
use std::f64::consts::PI;

use super::arcs::{unwrap_near, Arc};
use super::branch::SqrtRBranch;
use super::chebyshev;
use crate::{Error, Result, TAU};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `cot(u/2)` minus its poles at `0, ±2π`; smooth on `(-3π, 3π)`.
pub fn cot_regular(u: f64) -> f64 {
    let shift = (u / TAU).round();
    let v = u - TAU * shift;
    let base = if v.abs() < 0.1 {
        let v2 = v * v;
        -v * (1.0 / 6.0 + v2 * (1.0 / 360.0 + v2 * (1.0 / 15120.0 + v2 / 604800.0)))
    } else {
        1.0 / (0.5 * v).tan() - 2.0 / v
    };
    base - [-1.0, 0.0, 1.0]
        .iter()
        .filter(|&&n| n != shift)
        .map(|n| 2.0 / (u - TAU * n))
        .sum::<f64>()
}

/// `log|2 sin(u/2)|` minus `log|u - 2πn|` for `n = -1, 0, 1`; smooth on `(-3π, 3π)`.
pub fn log_sin_regular(u: f64) -> f64 {
    let shift = (u / TAU).round();
    let v = u - TAU * shift;
    let base = if v.abs() < 1e-4 {
        -v * v / 24.0
    } else {
        ((0.5 * v).sin() / (0.5 * v)).ln()
    };
    base - [-1.0, 0.0, 1.0]
        .iter()
        .filter(|&&n| n != shift)
        .map(|n| (u - TAU * n).abs().ln())
        .sum::<f64>()
}

/// Values `P(x_j)` of a function on an arc at first-kind Chebyshev nodes, standing
/// for the weighted quantity `P(x) dx / sqrt(1 - x²)` with `θ = mid + half·x`.
#[derive(Debug, Clone)]
pub struct ArcPiece {
    arc: Arc,
    x: Vec<f64>,
    theta: Vec<f64>,
    values: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl ArcPiece {
    pub fn sample<F>(arc: Arc, n: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, f64) -> Result<Complex64>,
    {
        let x = chebyshev::nodes(n);
        let theta: Vec<f64> = x.iter().map(|&xi| arc.theta_at(xi)).collect();
        let values = x.iter().zip(&theta).map(|(&xi, &t)| f(xi, t)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_values(arc, values))
    }

    pub fn from_values(arc: Arc, values: Vec<Complex64>) -> Self {
        let n = values.len();
        let x = chebyshev::nodes(n);
        let theta = x.iter().map(|&xi| arc.theta_at(xi)).collect();
        let coeffs = chebyshev::coefficients(&values);
        ArcPiece { arc, x, theta, values, coeffs }
    }

    pub fn arc(&self) -> &Arc {
        &self.arc
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn tail_ratio(&self) -> f64 {
        chebyshev::tail_ratio(&self.coeffs)
    }

    /// Same nodes, values multiplied by `w(x, θ)`.
    pub fn map<F: FnMut(f64, f64, Complex64) -> Complex64>(&self, mut w: F) -> Self {
        let values = (0..self.values.len()).map(|j| w(self.x[j], self.theta[j], self.values[j])).collect();
        Self::from_values(self.arc, values)
    }

    /// `∫ P(x) dx / sqrt(1 - x²)`.
    pub fn integral(&self) -> Complex64 {
        PI * self.coeffs.first().copied().unwrap_or_default()
    }

    /// `∫ P(x) φ(θ(x)) dx / sqrt(1 - x²)` for smooth `φ`.
    pub fn integral_with<F: Fn(f64) -> Complex64>(&self, phi: F) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&self.theta).map(|(v, &t)| v * phi(t)).sum();
        s * PI / self.values.len() as f64
    }

    fn y(&self, t0: f64, n: f64) -> f64 {
        (t0 + TAU * n - self.arc.mid()) / self.arc.half_width()
    }

    /// `∫ P(x) cot((θ(x) - θ0)/2) dx / sqrt(1 - x²)`, principal value on the arc.
    pub fn cot_integral(&self, theta0: f64) -> Complex64 {
        let t0 = unwrap_near(theta0, self.arc.mid());
        let smooth: Complex64 = self
            .values
            .iter()
            .zip(&self.theta)
            .map(|(v, &t)| v * cot_regular(t - t0))
            .sum::<Complex64>()
            * PI
            / self.values.len() as f64;
        let d = self.arc.half_width();
        let singular: Complex64 =
            [-1.0, 0.0, 1.0].iter().map(|&n| chebyshev::cauchy(&self.coeffs, self.y(t0, n))).sum();
        smooth + singular * (2.0 / d)
    }

    /// `∫ P(x) log|2 sin((θ(x) - θ0)/2)| dx / sqrt(1 - x²)`.
    pub fn log_sin_integral(&self, theta0: f64) -> Complex64 {
        let t0 = unwrap_near(theta0, self.arc.mid());
        let smooth: Complex64 = self
            .values
            .iter()
            .zip(&self.theta)
            .map(|(v, &t)| v * log_sin_regular(t - t0))
            .sum::<Complex64>()
            * PI
            / self.values.len() as f64;
        let d = self.arc.half_width();
        let singular: Complex64 = [-1.0, 0.0, 1.0]
            .iter()
            .map(|&n| chebyshev::log_integral(&self.coeffs, self.y(t0, n)) + d.ln() * self.integral())
            .sum();
        smooth + singular
    }
}

/// `∫_{S_w} g(ζ) dζ / (sqrt(R⁺(ζ)) (ζ - z))` with `g(ζ)/sqrt(R⁺(ζ))` resolved on
/// each arc at a fixed number of nodes.
#[derive(Debug, Clone)]
pub struct CauchyIntegral {
    pieces: Vec<ArcPiece>,
}

impl CauchyIntegral {
    /// `g` takes the angle `θ` of `ζ = e^{iθ}`.
    pub fn new<G>(branch: &SqrtRBranch, mut g: G, n: usize) -> Result<Self>
    where
        G: FnMut(f64) -> Result<Complex64>,
    {
        let pieces = branch
            .arcs()
            .iter()
            .enumerate()
            .map(|(k, arc)| ArcPiece::sample(*arc, n, |x, t| Ok(g(t)? / branch.reduced(k, x))))
            .collect::<Result<Vec<_>>>()?;
        Ok(CauchyIntegral { pieces })
    }

    /// Doubles the node count from 64 until every piece's Chebyshev tail is below `tol`.
    pub fn adaptive<G>(branch: &SqrtRBranch, mut g: G, tol: f64) -> Result<Self>
    where
        G: FnMut(f64) -> Result<Complex64>,
    {
        let mut n = 64;
        loop {
            let c = Self::new(branch, &mut g, n)?;
            if c.pieces.iter().all(|p| p.tail_ratio() < tol) {
                return Ok(c);
            }
            if n >= 8192 {
                return Err(Error::Quadrature(format!(
                    "Chebyshev tail {:e} above {tol:e} at {n} nodes",
                    c.pieces.iter().map(ArcPiece::tail_ratio).fold(0.0, f64::max)
                )));
            }
            n *= 2;
        }
    }

    /// Per-arc pieces holding `g / (sqrt(R⁺)/W)` with `W = sqrt((θ - α)(β - θ))`.
    pub fn pieces(&self) -> &[ArcPiece] {
        &self.pieces
    }

    /// Value at `z`; principal value when `z` lies on an arc.
    pub fn at(&self, z: Complex64) -> Result<Complex64> {
        if (z.norm() - 1.0).abs() <= 1e-14 {
            let theta0 = z.arg();
            for piece in &self.pieces {
                let x = piece.arc.x_of(theta0);
                if (x.abs() - 1.0).abs() < 1e-14 {
                    return Err(Error::EndpointSingularity { theta: theta0 });
                }
            }
            Ok(self.at_angle(theta0))
        } else {
            Ok(self
                .pieces
                .iter()
                .map(|p| p.integral_with(|t| {
                    let zeta = Complex64::from_polar(1.0, t);
                    I * zeta / (zeta - z)
                }))
                .sum())
        }
    }

    /// Value at `e^{iθ0}` using `dζ/(ζ - z) = (i/2 + cot((θ - θ0)/2)/2) dθ`.
    pub fn at_angle(&self, theta0: f64) -> Complex64 {
        self.pieces.iter().map(|p| 0.5 * I * p.integral() + 0.5 * p.cot_integral(theta0)).sum()
    }
}

/// `∫_{S_w} g(ζ) dζ / (sqrt(R⁺(ζ)) (ζ - z))`, principal value for `z` on the arcs.
/// Node counts start at 256 per arc and double until successive values differ by
/// less than `1e-9`.
pub fn pv_cauchy_on_arcs<G>(branch: &SqrtRBranch, mut g: G, z: Complex64) -> Result<Complex64>
where
    G: FnMut(f64) -> Result<Complex64>,
{
    let mut n = 256;
    let mut prev = CauchyIntegral::new(branch, &mut g, n)?.at(z)?;
    while n < 1 << 15 {
        n *= 2;
        let next = CauchyIntegral::new(branch, &mut g, n)?.at(z)?;
        if (next - prev).norm() < 1e-9 * next.norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("principal value at {z} did not settle")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemath::quadrature::gauss_legendre;
    use crate::ArcSet;
    use approx::assert_abs_diff_eq;

    #[test]
    fn regular_parts_are_smooth() {
        for u in [-6.0, -3.0, -1e-3, 1e-3, 0.05, 2.0, 6.2] {
            let direct = 1.0 / (0.5_f64 * u).tan() - 2.0 / u - 2.0 / (u - TAU) - 2.0 / (u + TAU);
            assert_abs_diff_eq!(cot_regular(u), direct, epsilon = 1e-9);
            let ld = (2.0 * (0.5_f64 * u).sin()).abs().ln()
                - u.abs().ln()
                - (u - TAU).abs().ln()
                - (u + TAU).abs().ln();
            assert_abs_diff_eq!(log_sin_regular(u), ld, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(cot_regular(1e-9), cot_regular(-1e-9), epsilon = 1e-8);
        assert_abs_diff_eq!(cot_regular(TAU - 1e-9), cot_regular(TAU + 1e-9), epsilon = 1e-8);
    }

    fn symmetric_branch(d: f64) -> SqrtRBranch {
        SqrtRBranch::new(&ArcSet::new(&[(PI - d, PI + d)]).unwrap()).unwrap()
    }

    #[test]
    fn zero_integrand() {
        let b = symmetric_branch(1.0);
        let v = pv_cauchy_on_arcs(&b, |_| Ok(Complex64::new(0.0, 0.0)), Complex64::new(0.3, 0.1)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    // g ≡ 1, z = 0: collapsing the contour onto the residue of 1/(ζ sqrt(R)) at 0
    // gives πi / sqrt(R(0)); infinity contributes nothing since K ≥ 1.
    #[test]
    fn residue_at_origin() {
        let b = symmetric_branch(1.3);
        let one = |_| Ok(Complex64::new(1.0, 0.0));
        let v = pv_cauchy_on_arcs(&b, one, Complex64::new(0.0, 0.0)).unwrap();
        let residue = I * PI / b.offcut(Complex64::new(0.0, 0.0)).unwrap();
        assert!((v - residue).norm() < 1e-12, "{v} vs {residue}");
        let brute = CauchyIntegral::new(&b, one, 100_000).unwrap().at(Complex64::new(0.0, 0.0)).unwrap();
        assert!((brute - residue).norm() < 1e-10);
    }

    // symmetric excision in s with θ = mid + half·cos s, graded meshes on both
    // sides of the pole, Richardson-extrapolated in the excision radius
    fn excision_oracle(b: &SqrtRBranch, g: impl Fn(f64) -> Complex64, theta0: f64) -> Complex64 {
        let arc = b.arcs()[0];
        let (m, d) = (arc.mid(), arc.half_width());
        let s0 = ((theta0 - m) / d).acos();
        let (gx, gw) = gauss_legendre(24);
        let h = |s: f64| {
            let t = m + d * s.cos();
            let kernel = 0.5 * I + 0.5 / (0.5 * (t - theta0)).tan();
            g(t) / b.reduced(0, s.cos()) * kernel
        };
        let panel = |a: f64, c: f64| -> Complex64 {
            gx.iter().zip(&gw).map(|(x, w)| 0.5 * (c - a) * w * h(0.5 * (c - a) * x + 0.5 * (c + a))).sum()
        };
        let excised = |eps: f64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut r = eps;
            while s0 + r < PI {
                let next = (2.0 * r).min(PI - s0);
                acc += panel(s0 + r, s0 + next);
                r = next;
            }
            let mut r = eps;
            while s0 - r > 0.0 {
                let next = (2.0 * r).min(s0);
                acc += panel(s0 - next, s0 - r);
                r = next;
            }
            acc
        };
        let mut eps = 1e-2;
        let mut prev = 2.0 * excised(eps / 2.0) - excised(eps);
        loop {
            eps /= 2.0;
            let next = 2.0 * excised(eps / 2.0) - excised(eps);
            if (next - prev).norm() < 1e-10 || eps < 1e-6 {
                return next;
            }
            prev = next;
        }
    }

    #[test]
    fn principal_value_matches_excision() {
        let b = symmetric_branch(2.0);
        let g = |t: f64| Complex64::new(0.5 + (t).cos(), 0.3 * t.sin());
        for theta0 in [PI - 1.5, PI, PI + 0.7] {
            let v = pv_cauchy_on_arcs(&b, |t| Ok(g(t)), Complex64::from_polar(1.0, theta0)).unwrap();
            let o = excision_oracle(&b, g, theta0);
            assert!((v - o).norm() < 1e-8, "{theta0}: {v} vs {o}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let b = symmetric_branch(1.7);
        let g = |t: f64| Ok(Complex64::new(1.0 + 0.3 * t.cos(), 0.0));
        let c = CauchyIntegral::adaptive(&b, g, 1e-14).unwrap();
        let f = |z: Complex64| b.offcut(z).unwrap() * c.at(z).unwrap() / (I * PI);
        for z in [Complex64::new(0.2, 0.4), Complex64::new(-2.0, 0.5), Complex64::new(0.9, -0.1)] {
            // conjugation reverses the orientation of the arc
            assert!((c.at(z.conj()).unwrap() + c.at(z).unwrap().conj()).norm() < 1e-10);
            assert!((f(z.conj()) - f(z).conj()).norm() < 1e-10);
        }
        let on = |t: f64| b.boundary(t).unwrap() * c.at_angle(t) / (I * PI);
        assert!((on(PI - 0.4) - on(PI + 0.4).conj()).norm() < 1e-10);
    }

    #[test]
    fn endpoint_rejected() {
        let b = symmetric_branch(1.0);
        let z = Complex64::from_polar(1.0, PI + 1.0);
        assert!(matches!(
            pv_cauchy_on_arcs(&b, |_| Ok(Complex64::new(1.0, 0.0)), z),
            Err(Error::EndpointSingularity { .. })
        ));
    }

    #[test]
    fn log_and_cot_pieces_match_quadrature_off_arc() {
        let arc = Arc::new(1.0, 2.5).unwrap();
        let f = |t: f64| Complex64::new((t - 1.0) * (2.5 - t) * (1.0 + t.sin()), 0.0);
        let piece = ArcPiece::sample(arc, 64, |_, t| Ok(f(t))).unwrap();
        let fine = ArcPiece::sample(arc, 20000, |_, t| Ok(f(t))).unwrap();
        for theta0 in [4.0, 0.2, 6.0] {
            let lc = fine.integral_with(|t| Complex64::new(1.0 / (0.5 * (t - theta0)).tan(), 0.0));
            assert!((piece.cot_integral(theta0) - lc).norm() < 1e-9);
            let ll = fine.integral_with(|t| Complex64::new((2.0 * (0.5 * (t - theta0)).sin()).abs().ln(), 0.0));
            assert!((piece.log_sin_integral(theta0) - ll).norm() < 1e-9);
        }
    }
}
