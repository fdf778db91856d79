//! External fields `Q(θ) = -log w(e^{iθ})` on the unit circle.
//!
//! Three classes are supported: products of powers of distances to fixed points
//! ([`PolynomialWeight`]), exponentials of real trigonometric polynomials
//! ([`TrigExponentialWeight`]) and user-supplied or grid-sampled fields
//! ([`SampledField`]). All of them are immutable once built and safe to share
//! between threads.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc as Shared;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result, TAU};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One factor `|z - zero|^lambda` of a polynomial weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightZero {
    pub zero: Complex64,
    pub lambda: f64,
}

/// `w(z) = ∏ |z - z_j|^{λ_j}` with `z_j != 0` and `λ_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialWeight {
    terms: Vec<WeightZero>,
}

impl PolynomialWeight {
    pub fn new(terms: Vec<WeightZero>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidField("polynomial weight needs at least one zero".into()));
        }
        for t in &terms {
            if !(t.lambda > 0.0) || !t.lambda.is_finite() {
                return Err(Error::InvalidField(format!("exponent {} must be positive", t.lambda)));
            }
            if t.zero.norm() == 0.0 || !t.zero.re.is_finite() || !t.zero.im.is_finite() {
                return Err(Error::InvalidField(format!("zero {} must be finite and nonzero", t.zero)));
            }
        }
        Ok(PolynomialWeight { terms })
    }

    /// `|z - zero|^lambda`.
    pub fn single(zero: Complex64, lambda: f64) -> Result<Self> {
        Self::new(vec![WeightZero { zero, lambda }])
    }

    pub fn terms(&self) -> &[WeightZero] {
        &self.terms
    }

    /// Number of factors `J`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_lambda(&self) -> f64 {
        self.terms.iter().map(|t| t.lambda).sum()
    }

    /// Index of a zero lying within `tol` of the unit circle, if any.
    pub fn zero_on_circle(&self, tol: f64) -> Option<usize> {
        self.terms.iter().position(|t| (t.zero.norm() - 1.0).abs() <= tol)
    }

    fn check_point(&self, theta: f64) -> Result<Complex64> {
        let e = Complex64::from_polar(1.0, theta);
        if self.terms.iter().any(|t| (e - t.zero).norm_sqr() == 0.0) {
            return Err(Error::FieldInfinite { theta });
        }
        Ok(e)
    }

    pub fn q(&self, theta: f64) -> Result<f64> {
        let e = self.check_point(theta)?;
        Ok(-self.terms.iter().map(|t| t.lambda * (e - t.zero).norm().ln()).sum::<f64>())
    }

    pub fn q_prime(&self, theta: f64) -> Result<f64> {
        let e = self.check_point(theta)?;
        Ok(-self
            .terms
            .iter()
            .map(|t| {
                let d = (e - t.zero).norm_sqr();
                t.lambda * (t.zero.conj() * e).im / d
            })
            .sum::<f64>())
    }

    pub fn q_second(&self, theta: f64) -> Result<f64> {
        let e = self.check_point(theta)?;
        Ok(-self
            .terms
            .iter()
            .map(|t| {
                let r2 = t.zero.norm_sqr();
                let d = (e - t.zero).norm_sqr();
                t.lambda * ((1.0 + r2) * (t.zero.conj() * e).re - 2.0 * r2) / (d * d)
            })
            .sum::<f64>())
    }

    /// Partial-fraction form of `g`, valid for any complex `ζ` away from the poles.
    pub fn g_closed(&self, zeta: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0 + self.total_lambda(), 0.0);
        for t in &self.terms {
            let refl = 1.0 / t.zero.conj();
            acc += t.lambda * t.zero / (zeta - t.zero) + t.lambda * refl / (zeta - refl);
        }
        acc / TAU
    }

    /// Closed-form full-circle density.
    pub fn full_circle_density(&self, theta: f64) -> f64 {
        let e = Complex64::from_polar(1.0, theta);
        let mut acc = 1.0 + self.total_lambda();
        for t in &self.terms {
            acc -= t.lambda * (t.zero.norm_sqr() - 1.0).abs() / (e - t.zero).norm_sqr();
        }
        acc / TAU
    }

    pub fn rotated(&self, theta0: f64) -> Self {
        let rot = Complex64::from_polar(1.0, theta0);
        PolynomialWeight {
            terms: self
                .terms
                .iter()
                .map(|t| WeightZero { zero: t.zero * rot, lambda: t.lambda })
                .collect(),
        }
    }
}

/// `w(e^{iθ}) = exp(-t_M(θ))` with `t_M(θ) = Σ_{m=-M}^{M} c_m e^{imθ}` real.
///
/// Only `c_0, …, c_M` are stored; `c_{-m} = conj(c_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigExponentialWeight {
    coeffs: Vec<Complex64>,
}

impl TrigExponentialWeight {
    /// Builds from `c_0, …, c_M`. `c_0` must be real; a lone `c_0` is padded to degree 1.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        if coeffs[0].im.abs() > 1e-12 * (1.0 + coeffs[0].re.abs()) {
            return Err(Error::InvalidField(format!("c_0 = {} must be real", coeffs[0])));
        }
        coeffs[0].im = 0.0;
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidField("non-finite trigonometric coefficient".into()));
        }
        if coeffs.len() < 2 {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Ok(TrigExponentialWeight { coeffs })
    }

    /// Builds from `(m, c_m)` pairs. Negative `m` entries must be conjugates of
    /// their positive partners when both are given.
    pub fn from_terms(terms: &[(i64, Complex64)]) -> Result<Self> {
        let degree = terms.iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
        let mut pos: Vec<Option<Complex64>> = vec![None; degree + 1];
        let mut neg: Vec<Option<Complex64>> = vec![None; degree + 1];
        for &(m, c) in terms {
            let slot = if m >= 0 { &mut pos[m as usize] } else { &mut neg[(-m) as usize] };
            if slot.is_some() {
                return Err(Error::InvalidField(format!("duplicate coefficient for m = {m}")));
            }
            *slot = Some(c);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        for m in 0..=degree {
            coeffs[m] = match (pos[m], neg[m]) {
                (Some(p), Some(n)) => {
                    if (p - n.conj()).norm() > 1e-12 * (1.0 + p.norm()) {
                        return Err(Error::InvalidField(format!(
                            "c_{{-{m}}} = {n} is not the conjugate of c_{m} = {p}"
                        )));
                    }
                    p
                }
                (Some(p), None) => p,
                (None, Some(n)) => n.conj(),
                (None, None) => Complex64::new(0.0, 0.0),
            };
        }
        Self::new(coeffs)
    }

    /// Degree `M`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_m` for any integer `m`, zero outside `[-M, M]`.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let k = m.unsigned_abs() as usize;
        match self.coeffs.get(k) {
            Some(&c) if m >= 0 => c,
            Some(&c) => c.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Nonnegative-index coefficients `c_0, …, c_M`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `t_M(θ)` summed over all `2M + 1` terms, without assuming it is real.
    pub fn t_complex(&self, theta: f64) -> Complex64 {
        let m = self.degree() as i64;
        (-m..=m).map(|k| self.coeff(k) * Complex64::from_polar(1.0, k as f64 * theta)).sum()
    }

    // Σ_{m≥1} m^p c_m e^{imθ}
    fn weighted_sum(&self, theta: f64, power: i32) -> Complex64 {
        let step = Complex64::from_polar(1.0, theta);
        let mut e = step;
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in self.coeffs.iter().enumerate().skip(1) {
            acc += (m as f64).powi(power) * c * e;
            e *= step;
        }
        acc
    }

    pub fn q(&self, theta: f64) -> f64 {
        self.coeffs[0].re + 2.0 * self.weighted_sum(theta, 0).re
    }

    pub fn q_prime(&self, theta: f64) -> f64 {
        -2.0 * self.weighted_sum(theta, 1).im
    }

    pub fn q_second(&self, theta: f64) -> f64 {
        -2.0 * self.weighted_sum(theta, 2).re
    }

    /// `1/(2π) - (1/π) Σ m c_m ζ^m`, the Laurent-polynomial extension of `g`.
    pub fn g_closed(&self, zeta: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0 / TAU, 0.0);
        let inv = 1.0 / zeta;
        let (mut zp, mut zn) = (zeta, inv);
        for (m, c) in self.coeffs.iter().enumerate().skip(1) {
            let mf = m as f64;
            acc -= (mf * c * zp - mf * c.conj() * zn) / PI;
            zp *= zeta;
            zn *= inv;
        }
        acc
    }

    /// Closed-form full-circle density `1/(2π) - (1/π) Σ m sgn(m) c_m e^{imθ}`.
    pub fn full_circle_density(&self, theta: f64) -> f64 {
        1.0 / TAU - 2.0 * self.weighted_sum(theta, 1).re / PI
    }

    pub fn rotated(&self, theta0: f64) -> Self {
        TrigExponentialWeight {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * Complex64::from_polar(1.0, -(m as f64) * theta0))
                .collect(),
        }
    }
}

/// Regularity of a sampled field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Smoothness {
    /// `C^{1+ε}`: bounded density, density-square identity only.
    C1Holder,
    /// `C^2`: continuous density and the `p(θ)` support characterization.
    C2,
}

type RealFn = Shared<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum SampledSource {
    /// Trigonometric interpolant of values on a uniform grid.
    Grid { values: Vec<f64>, interp: TrigExponentialWeight },
    Closures { q: RealFn, dq: RealFn, d2q: Option<RealFn> },
}

/// A field given by evaluators, or by values on a uniform grid.
#[derive(Clone)]
pub struct SampledField {
    source: SampledSource,
    smoothness: Smoothness,
}

impl fmt::Debug for SampledField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            SampledSource::Grid { values, .. } => f
                .debug_struct("SampledField")
                .field("grid_len", &values.len())
                .field("smoothness", &self.smoothness)
                .finish(),
            SampledSource::Closures { d2q, .. } => f
                .debug_struct("SampledField")
                .field("closures", &true)
                .field("has_second_derivative", &d2q.is_some())
                .field("smoothness", &self.smoothness)
                .finish(),
        }
    }
}

impl SampledField {
    /// Field from evaluators. Supplying `d2q` marks the field `C^2`.
    pub fn from_fns<Q, D>(q: Q, dq: D, d2q: Option<RealFn>) -> Self
    where
        Q: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let smoothness = if d2q.is_some() { Smoothness::C2 } else { Smoothness::C1Holder };
        SampledField {
            source: SampledSource::Closures { q: Shared::new(q), dq: Shared::new(dq), d2q },
            smoothness,
        }
    }

    /// Field from `Q` values at `θ_i = 2πi/n`; derivatives come from the
    /// trigonometric interpolant.
    pub fn from_grid(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::InvalidField(format!("sampled grid needs at least 4 values, got {n}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("sampled grid contains non-finite values".into()));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let half = n / 2;
        let mut coeffs: Vec<Complex64> = buf[..=half].iter().map(|x| x / n as f64).collect();
        if n % 2 == 0 {
            coeffs[half] = Complex64::new(buf[half].re / (2.0 * n as f64), 0.0);
        }
        let interp = TrigExponentialWeight::new(coeffs)?;
        Ok(SampledField {
            source: SampledSource::Grid { values, interp },
            smoothness: Smoothness::C2,
        })
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn grid_values(&self) -> Option<&[f64]> {
        match &self.source {
            SampledSource::Grid { values, .. } => Some(values),
            SampledSource::Closures { .. } => None,
        }
    }

    pub fn q(&self, theta: f64) -> f64 {
        match &self.source {
            SampledSource::Grid { interp, .. } => interp.q(theta),
            SampledSource::Closures { q, .. } => q(theta),
        }
    }

    pub fn q_prime(&self, theta: f64) -> f64 {
        match &self.source {
            SampledSource::Grid { interp, .. } => interp.q_prime(theta),
            SampledSource::Closures { dq, .. } => dq(theta),
        }
    }

    pub fn q_second(&self, theta: f64) -> Result<f64> {
        match &self.source {
            SampledSource::Grid { interp, .. } => Ok(interp.q_second(theta)),
            SampledSource::Closures { d2q: Some(d2q), .. } => Ok(d2q(theta)),
            SampledSource::Closures { d2q: None, .. } => Err(Error::MissingSecondDerivative),
        }
    }

    pub fn rotated(&self, theta0: f64) -> Self {
        let source = match &self.source {
            SampledSource::Grid { values, interp } => SampledSource::Grid {
                values: values.clone(),
                interp: interp.rotated(theta0),
            },
            SampledSource::Closures { q, dq, d2q } => {
                let (q, dq) = (q.clone(), dq.clone());
                SampledSource::Closures {
                    q: Shared::new(move |t| q(t - theta0)),
                    dq: Shared::new(move |t| dq(t - theta0)),
                    d2q: d2q.clone().map(|f| -> RealFn { Shared::new(move |t| f(t - theta0)) }),
                }
            }
        };
        SampledField { source, smoothness: self.smoothness }
    }
}

/// An external field of any supported class.
#[derive(Debug, Clone)]
pub enum ExternalField {
    Polynomial(PolynomialWeight),
    Trig(TrigExponentialWeight),
    Sampled(SampledField),
}

impl ExternalField {
    /// `w ≡ 1`.
    pub fn uniform() -> Self {
        ExternalField::Trig(TrigExponentialWeight::new(vec![]).expect("zero coefficients are valid"))
    }

    /// `t(θ) = c cos θ`, i.e. `c_{±1} = c/2`.
    pub fn cosine(c: f64) -> Self {
        ExternalField::Trig(
            TrigExponentialWeight::new(vec![Complex64::new(0.0, 0.0), Complex64::new(c / 2.0, 0.0)])
                .expect("real coefficients are valid"),
        )
    }

    pub fn q(&self, theta: f64) -> Result<f64> {
        match self {
            ExternalField::Polynomial(w) => w.q(theta),
            ExternalField::Trig(w) => Ok(w.q(theta)),
            ExternalField::Sampled(s) => Ok(s.q(theta)),
        }
    }

    pub fn q_prime(&self, theta: f64) -> Result<f64> {
        match self {
            ExternalField::Polynomial(w) => w.q_prime(theta),
            ExternalField::Trig(w) => Ok(w.q_prime(theta)),
            ExternalField::Sampled(s) => Ok(s.q_prime(theta)),
        }
    }

    pub fn q_second(&self, theta: f64) -> Result<f64> {
        match self {
            ExternalField::Polynomial(w) => w.q_second(theta),
            ExternalField::Trig(w) => Ok(w.q_second(theta)),
            ExternalField::Sampled(s) => s.q_second(theta),
        }
    }

    /// Right-hand side of the dominant singular integral equation:
    /// `g(e^{iθ}) = (i/π) Q'(θ) + 1/(2π)`.
    pub fn g(&self, theta: f64) -> Result<Complex64> {
        Ok(I * self.q_prime(theta)? / PI + 1.0 / TAU)
    }

    /// `g` through the class-specific closed form where one exists.
    pub fn g_closed(&self, theta: f64) -> Result<Complex64> {
        let zeta = Complex64::from_polar(1.0, theta);
        match self {
            ExternalField::Polynomial(w) => {
                w.q(theta)?;
                Ok(w.g_closed(zeta))
            }
            ExternalField::Trig(w) => Ok(w.g_closed(zeta)),
            ExternalField::Sampled(_) => self.g(theta),
        }
    }

    pub fn has_second_derivative(&self) -> bool {
        match self {
            ExternalField::Sampled(s) => s.smoothness == Smoothness::C2,
            _ => true,
        }
    }

    /// Upper bound on the number of support arcs: `J` for polynomial weights,
    /// `M` for trigonometric ones.
    pub fn arc_bound(&self) -> Option<usize> {
        match self {
            ExternalField::Polynomial(w) => Some(w.len()),
            ExternalField::Trig(w) => Some(w.degree()),
            ExternalField::Sampled(_) => None,
        }
    }

    /// `Q(θ - θ0)`.
    pub fn rotated(&self, theta0: f64) -> Self {
        match self {
            ExternalField::Polynomial(w) => ExternalField::Polynomial(w.rotated(theta0)),
            ExternalField::Trig(w) => ExternalField::Trig(w.rotated(theta0)),
            ExternalField::Sampled(s) => ExternalField::Sampled(s.rotated(theta0)),
        }
    }

    /// Rejects fields the solver cannot handle: polynomial weights with a zero on
    /// the unit circle.
    pub fn validate_for_solve(&self) -> Result<()> {
        if let ExternalField::Polynomial(w) = self {
            if let Some(j) = w.zero_on_circle(1e-12) {
                return Err(Error::InvalidField(format!(
                    "zero {} lies on the unit circle",
                    w.terms()[j].zero
                )));
            }
        }
        Ok(())
    }

    pub fn class_name(&self) -> &'static str {
        match self {
            ExternalField::Polynomial(_) => "polynomial",
            ExternalField::Trig(_) => "trig",
            ExternalField::Sampled(_) => "sampled",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(z: f64, l: f64) -> ExternalField {
        ExternalField::Polynomial(PolynomialWeight::single(Complex64::new(z, 0.0), l).unwrap())
    }

    fn fields() -> Vec<ExternalField> {
        vec![
            ExternalField::uniform(),
            poly(2.0, 1.0),
            ExternalField::Polynomial(
                PolynomialWeight::new(vec![
                    WeightZero { zero: Complex64::new(0.3, 0.4), lambda: 0.7 },
                    WeightZero { zero: Complex64::new(-1.5, 1.1), lambda: 1.3 },
                ])
                .unwrap(),
            ),
            ExternalField::cosine(1.0),
            ExternalField::Trig(
                TrigExponentialWeight::new(vec![
                    Complex64::new(0.2, 0.0),
                    Complex64::new(0.3, -0.1),
                    Complex64::new(-0.05, 0.25),
                ])
                .unwrap(),
            ),
            ExternalField::Sampled(SampledField::from_fns(
                |t| (2.0 * t).sin() + 0.3 * t.cos(),
                |t| 2.0 * (2.0 * t).cos() - 0.3 * t.sin(),
                Some(Shared::new(|t: f64| -4.0 * (2.0 * t).sin() - 0.3 * t.cos())),
            )),
        ]
    }

    #[test]
    fn q_examples() {
        assert_eq!(ExternalField::uniform().q(1.3).unwrap(), 0.0);
        assert_abs_diff_eq!(poly(2.0, 1.0).q(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(poly(2.0, 1.0).q(PI).unwrap(), -(3.0f64.ln()), epsilon = 1e-15);
    }

    #[test]
    fn q_prime_examples() {
        assert_eq!(ExternalField::uniform().q_prime(0.4).unwrap(), 0.0);
        let f = ExternalField::cosine(1.0);
        assert_abs_diff_eq!(f.q_prime(PI / 2.0).unwrap(), -1.0, epsilon = 1e-15);
        let h = 1e-6;
        let fd = (f.q(PI / 2.0 + h).unwrap() - f.q(PI / 2.0 - h).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(fd, -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(poly(2.0, 1.0).q_prime(PI).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn g_examples() {
        let g = ExternalField::uniform().g(0.7).unwrap();
        assert_abs_diff_eq!(g.re, 1.0 / TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-15);
        // t = (1/4) cos θ: Q'(0) = 0 so g(1) = 1/(2π); at θ = π/2, Q' = -1/4.
        let f = ExternalField::cosine(0.25);
        let g0 = f.g_closed(0.0).unwrap();
        assert_abs_diff_eq!(g0.re, 1.0 / TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(g0.im, 0.0, epsilon = 1e-15);
        let g1 = f.g_closed(PI / 2.0).unwrap();
        assert_abs_diff_eq!(g1.re, 1.0 / TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(g1.im, -1.0 / (4.0 * PI), epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = poly(2.0, 1.0);
        for _ in 0..64 {
            let t = rng.gen_range(0.0..TAU);
            let (a, b) = (f.g(t).unwrap(), f.g_closed(t).unwrap());
            assert!((a - b).norm() <= 1e-12 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_of_weight_is_reported() {
        let f = poly(1.0, 1.0);
        assert!(matches!(f.q(0.0), Err(Error::FieldInfinite { .. })));
        assert!(f.q(1.0).is_ok());
        assert!(f.validate_for_solve().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for f in fields() {
            for _ in 0..256 {
                let t = rng.gen_range(0.0..TAU);
                let d = f.q_prime(t).unwrap();
                let fd = (f.q(t + h).unwrap() - f.q(t - h).unwrap()) / (2.0 * h);
                assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()), "{f:?} at {t}: {d} vs {fd}");
                let d2 = f.q_second(t).unwrap();
                let fd2 = (f.q_prime(t + h).unwrap() - f.q_prime(t - h).unwrap()) / (2.0 * h);
                assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()), "{f:?} at {t}: {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn closed_form_g_agrees_with_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for f in fields() {
            for _ in 0..128 {
                let t = rng.gen_range(0.0..TAU);
                let (a, b) = (f.g(t).unwrap(), f.g_closed(t).unwrap());
                assert!((a - b).norm() <= 1e-12 * b.norm(), "{f:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trig_field_is_real() {
        let w = TrigExponentialWeight::from_terms(&[
            (0, Complex64::new(0.1, 0.0)),
            (1, Complex64::new(0.4, 0.2)),
            (-3, Complex64::new(0.05, 0.3)),
        ])
        .unwrap();
        assert_eq!(w.degree(), 3);
        for i in 0..500 {
            let t = TAU * i as f64 / 500.0;
            let z = w.t_complex(t);
            assert!(z.im.abs() < 1e-14);
            assert_abs_diff_eq!(z.re, w.q(t), epsilon = 1e-14);
        }
    }

    #[test]
    fn trig_rejects_inconsistent_conjugates() {
        let bad = TrigExponentialWeight::from_terms(&[
            (1, Complex64::new(0.4, 0.2)),
            (-1, Complex64::new(0.4, 0.2)),
        ]);
        assert!(bad.is_err());
        assert!(TrigExponentialWeight::new(vec![Complex64::new(0.0, 1.0)]).is_err());
    }

    #[test]
    fn rotation_shifts_the_field() {
        let theta0 = 0.83;
        for f in fields() {
            let g = f.rotated(theta0);
            for i in 0..50 {
                let t = 0.1 + 0.12 * i as f64;
                assert_abs_diff_eq!(g.q(t).unwrap(), f.q(t - theta0).unwrap(), epsilon = 1e-12);
                assert_abs_diff_eq!(
                    g.q_prime(t).unwrap(),
                    f.q_prime(t - theta0).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn grid_field_interpolates_samples() {
        let n = 64;
        let q = |t: f64| 0.4 * t.cos() - 0.2 * (3.0 * t).sin() + 0.1;
        let values: Vec<f64> = (0..n).map(|i| q(TAU * i as f64 / n as f64)).collect();
        let s = SampledField::from_grid(values).unwrap();
        for i in 0..37 {
            let t = 0.17 * i as f64;
            assert_abs_diff_eq!(s.q(t), q(t), epsilon = 1e-13);
            assert_abs_diff_eq!(s.q_prime(t), -0.4 * t.sin() - 0.6 * (3.0 * t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(s.q(t + TAU), s.q(t), epsilon = 1e-13);
        }
        assert_eq!(s.smoothness(), Smoothness::C2);
    }

    #[test]
    fn missing_second_derivative() {
        let s = SampledField::from_fns(|t| t.sin(), |t| t.cos(), None);
        assert_eq!(s.smoothness(), Smoothness::C1Holder);
        let f = ExternalField::Sampled(s);
        assert!(matches!(f.q_second(0.3), Err(Error::MissingSecondDerivative)));
        assert!(!f.has_second_derivative());
    }
}
