//! Equilibrium densities on a given support.
//!
//! On the full circle the density is `1/(2π) - Q̃'/π` (closed forms for the two
//! explicit weight classes). On proper arcs it is `F(e^{iθ})` for the singular
//! integral `F` built from `g = (i/π)Q' + 1/(2π)` and the branch `sqrt(R)`, or one
//! of its closed forms. [`ArcFormula`] evaluates any of these, and
//! [`DensityProfile`] stores the sampled result.

pub mod tables;

pub use tables::{build_coefficient_tables, inv_sqrt_series, CoefficientTables};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circlemath::chebyshev;
use crate::circlemath::conjugate::{check_grid, conjugate_function, interpolate, MIN_GRID};
use crate::circlemath::potential::NEGATIVITY_FLOOR;
use crate::circlemath::{log_kernel_potential, Arc, ArcSet, CauchyIntegral, MeasureSamples, SqrtRBranch};
use crate::field::{ExternalField, PolynomialWeight, TrigExponentialWeight};
use crate::{Error, Result, TAU};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default uniform grid for full-circle densities.
pub const DEFAULT_GRID: usize = 2048;

/// Imaginary part tolerated in the closed-form densities before the support is
/// declared inconsistent.
pub const IMAG_TOLERANCE: f64 = 1e-8;

/// Negativity tolerated in a full-circle density.
pub const FULL_CIRCLE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
struct ArcNodes {
    arc: Arc,
    x: Vec<f64>,
    // f / sqrt((θ - α)(β - θ)) at x
    reduced: Vec<f64>,
}

/// Sampled equilibrium density together with its support.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    support: ArcSet,
    measure: MeasureSamples,
    arcs: Vec<ArcNodes>,
    imag_residual: f64,
    min_value: f64,
}

impl DensityProfile {
    /// Full-circle profile from values on `θ_j = 2πj/N`; small negatives are clamped.
    pub fn from_uniform(values: Vec<f64>) -> Result<Self> {
        check_grid(values.len(), MIN_GRID)?;
        let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let clamped: Vec<f64> = values.iter().map(|&v| if (-FULL_CIRCLE_FLOOR..0.0).contains(&v) { 0.0 } else { v }).collect();
        let measure = MeasureSamples::uniform(clamped)?;
        Ok(DensityProfile { support: ArcSet::full_circle(), measure, arcs: Vec::new(), imag_residual: 0.0, min_value })
    }

    /// Arc profile from complex values of `f / sqrt((θ - α)(β - θ))` at Chebyshev
    /// nodes of each arc. The imaginary part is recorded, not discarded.
    pub fn from_reduced(support: &ArcSet, reduced: &[Vec<Complex64>]) -> Result<Self> {
        if support.is_full_circle() || support.len() != reduced.len() {
            return Err(Error::InvalidArcs("one sample vector per proper arc is required".into()));
        }
        let mut imag_residual: f64 = 0.0;
        let mut min_value = f64::INFINITY;
        let mut pieces = Vec::new();
        let mut arcs = Vec::new();
        for (arc, h) in support.arcs().iter().zip(reduced) {
            let x = chebyshev::nodes(h.len());
            let d = arc.half_width();
            let mut re = Vec::with_capacity(h.len());
            for (xi, hi) in x.iter().zip(h) {
                let w = d * (1.0 - xi * xi).sqrt();
                imag_residual = imag_residual.max((hi.im * w).abs());
                min_value = min_value.min(hi.re * w);
                if hi.re * w < -NEGATIVITY_FLOOR {
                    return Err(Error::NegativeDensity { theta: arc.theta_at(*xi), value: hi.re * w });
                }
                re.push(hi.re.max(0.0));
            }
            pieces.push(MeasureSamples::arc_piece(*arc, &re)?);
            arcs.push(ArcNodes { arc: *arc, x, reduced: re });
        }
        Ok(DensityProfile {
            support: support.clone(),
            measure: MeasureSamples::Arcs(pieces),
            arcs,
            imag_residual,
            min_value,
        })
    }

    pub fn support(&self) -> &ArcSet {
        &self.support
    }

    pub fn measure(&self) -> &MeasureSamples {
        &self.measure
    }

    /// Largest `|Im f|` seen while building the profile.
    pub fn imag_residual(&self) -> f64 {
        self.imag_residual
    }

    /// Smallest sampled value before clamping.
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// `∫ f dθ`.
    pub fn mass(&self) -> f64 {
        self.measure.mass()
    }

    /// `f(θ)`, zero off the support.
    pub fn eval(&self, theta: f64) -> f64 {
        match &self.measure {
            MeasureSamples::Uniform { coeffs, .. } => interpolate(coeffs, theta),
            _ => {
                for a in &self.arcs {
                    let x = a.arc.x_of(theta);
                    if x.abs() < 1.0 {
                        let w = a.arc.half_width() * (1.0 - x * x).sqrt();
                        return w * chebyshev::barycentric(&a.x, &a.reduced, x);
                    }
                }
                0.0
            }
        }
    }

    /// `(θ, f)` samples in increasing angle; arc samples include both endpoints.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        match &self.measure {
            MeasureSamples::Uniform { density, .. } => {
                let n = density.len();
                density.iter().enumerate().map(|(j, &f)| (TAU * j as f64 / n as f64, f)).collect()
            }
            _ => {
                let mut out = Vec::new();
                for a in &self.arcs {
                    let d = a.arc.half_width();
                    out.push((a.arc.alpha, 0.0));
                    for j in (0..a.x.len()).rev() {
                        let x = a.x[j];
                        out.push((a.arc.theta_at(x), d * (1.0 - x * x).sqrt() * a.reduced[j]));
                    }
                    out.push((a.arc.beta, 0.0));
                }
                out
            }
        }
    }

    /// The same profile scaled to unit mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::EmptySupport);
        }
        let mut out = self.clone();
        match &self.measure {
            MeasureSamples::Uniform { density, .. } => {
                out.measure = MeasureSamples::uniform(density.iter().map(|v| v / m).collect())?;
            }
            _ => {
                let mut pieces = Vec::new();
                for a in &mut out.arcs {
                    a.reduced.iter_mut().for_each(|v| *v /= m);
                    pieces.push(MeasureSamples::arc_piece(a.arc, &a.reduced)?);
                }
                out.measure = MeasureSamples::Arcs(pieces);
            }
        }
        out.min_value /= m;
        out.imag_residual /= m;
        Ok(out)
    }

    /// About `n` samples for output: the uniform grid on the full circle, or
    /// Chebyshev points split across arcs by length, with both endpoints.
    pub fn resampled(&self, n: usize) -> Vec<(f64, f64)> {
        if self.support.is_full_circle() {
            return (0..n).map(|j| TAU * j as f64 / n as f64).map(|t| (t, self.eval(t))).collect();
        }
        let total = self.support.total_length();
        let mut out = Vec::new();
        for a in &self.arcs {
            let m = ((n as f64 * a.arc.len() / total).round() as usize).max(16);
            let d = a.arc.half_width();
            out.push((a.arc.alpha, 0.0));
            for x in chebyshev::nodes(m).into_iter().rev() {
                let w = d * (1.0 - x * x).sqrt();
                out.push((a.arc.theta_at(x), w * chebyshev::barycentric(&a.x, &a.reduced, x)));
            }
            out.push((a.arc.beta, 0.0));
        }
        out
    }

    /// Interior sample angles (no endpoints).
    pub fn interior_angles(&self) -> Vec<f64> {
        match &self.measure {
            MeasureSamples::Uniform { density, .. } => {
                let n = density.len();
                (0..n).map(|j| TAU * j as f64 / n as f64).collect()
            }
            _ => self.arcs.iter().flat_map(|a| a.x.iter().rev().map(|&x| a.arc.theta_at(x))).collect(),
        }
    }

    /// Logarithmic potential `U^μ(e^{iθ})`.
    pub fn potential(&self, theta: f64) -> Result<f64> {
        log_kernel_potential(&self.measure, theta)
    }

    /// Conjugate function `f̃(θ)` of the density extended by zero.
    pub fn conjugate(&self, theta: f64) -> f64 {
        self.measure.conjugate_at(theta)
    }
}

/// Which density formula to use on proper arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    /// The singular integral with the generic `g`.
    General,
    /// The partial-fraction closed form for polynomial weights.
    Polynomial,
    /// The Laurent-coefficient closed form for trigonometric weights.
    Trig,
}

impl Formula {
    /// The closed form for the field's class, if any.
    pub fn preferred(field: &ExternalField) -> Self {
        match field {
            ExternalField::Polynomial(_) => Formula::Polynomial,
            ExternalField::Trig(_) => Formula::Trig,
            ExternalField::Sampled(_) => Formula::General,
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    // F_1(z) = sqrt(R(z)) Σ c_j / (p_j - z)
    Polynomial { poles: Vec<(Complex64, Complex64)> },
    // F_2(z) = sqrt(R(z)) B(z) / π
    Trig { tables: CoefficientTables, weight: TrigExponentialWeight },
    General { cauchy: CauchyIntegral },
}

/// Density formula bound to a field and a proper support.
#[derive(Debug, Clone)]
pub struct ArcFormula<'a> {
    field: &'a ExternalField,
    support: ArcSet,
    branch: SqrtRBranch,
    kind: Kind,
}

fn polynomial_poles(weight: &PolynomialWeight, branch: &SqrtRBranch) -> Result<Vec<(Complex64, Complex64)>> {
    let mut poles = Vec::new();
    for t in weight.terms() {
        for p in [t.zero, 1.0 / t.zero.conj()] {
            let s = branch.offcut(p).map_err(|_| {
                Error::InvalidField(format!("zero or reflected zero {p} lies on the support"))
            })?;
            poles.push((p, t.lambda * p / (TAU * s)));
        }
    }
    Ok(poles)
}

impl<'a> ArcFormula<'a> {
    pub fn new(field: &'a ExternalField, support: &ArcSet, formula: Formula) -> Result<Self> {
        let branch = SqrtRBranch::new(support)?;
        let kind = match (formula, field) {
            (Formula::Polynomial, ExternalField::Polynomial(w)) => Kind::Polynomial { poles: polynomial_poles(w, &branch)? },
            (Formula::Trig, ExternalField::Trig(w)) => {
                if support.len() > w.degree() {
                    return Err(Error::TooManyArcs { count: support.len(), bound: w.degree() });
                }
                Kind::Trig { tables: build_coefficient_tables(support, w.degree())?, weight: w.clone() }
            }
            (Formula::General, _) => {
                field.validate_for_solve()?;
                Kind::General { cauchy: CauchyIntegral::adaptive(&branch, |t| field.g(t), 1e-13)? }
            }
            (f, _) => {
                return Err(Error::InvalidField(format!(
                    "{f:?} formula does not apply to a {} field",
                    field.class_name()
                )))
            }
        };
        Ok(ArcFormula { field, support: support.clone(), branch, kind })
    }

    pub fn branch(&self) -> &SqrtRBranch {
        &self.branch
    }

    pub fn support(&self) -> &ArcSet {
        &self.support
    }

    // the factor multiplying sqrt(R(z)) in F (closed forms) at any off-support z
    fn closed_factor(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            Kind::Polynomial { poles } => poles.iter().map(|(p, c)| c / (p - z)).sum(),
            Kind::Trig { tables, weight } => {
                let k = tables.arc_count();
                let m = weight.degree();
                let mut b = Complex64::new(0.0, 0.0);
                for j in k..=m {
                    b += j as f64 * weight.coeff(j as i64) * tables.s(j + 1, z);
                }
                for j in 1..=m {
                    b += j as f64 * weight.coeff(-(j as i64)) * tables.r(j - 1, z);
                }
                b / PI
            }
            Kind::General { .. } => unreachable!("general formula has no closed factor"),
        }
    }

    /// `F⁺(e^{iθ}) / sqrt((θ - α_k)(β - θ))` at stretched coordinate `x` of arc `k`.
    pub fn reduced(&self, k: usize, x: f64) -> Complex64 {
        let theta = self.branch.arcs()[k].theta_at(x);
        let rho = self.branch.reduced(k, x);
        match &self.kind {
            Kind::General { cauchy } => rho * cauchy.at_angle(theta) / (I * PI),
            _ => rho * self.closed_factor(Complex64::from_polar(1.0, theta)),
        }
    }

    /// Complex density `F(e^{iθ})` inside an arc.
    pub fn density(&self, theta: f64) -> Result<Complex64> {
        let (k, x) = self.branch.locate(theta)?;
        let arc = &self.branch.arcs()[k];
        Ok(self.reduced(k, x) * arc.half_width() * (1.0 - x * x).sqrt())
    }

    /// `F(e^{iθ}) - g(e^{iθ})` at an angle in a gap.
    pub fn excess(&self, theta: f64) -> Result<Complex64> {
        let z = Complex64::from_polar(1.0, theta);
        let s = self.branch.offcut(z)?;
        match &self.kind {
            Kind::General { cauchy } => Ok(s * cauchy.at_angle(theta) / (I * PI) - self.field.g(theta)?),
            _ => Ok(s * self.closed_factor(z)),
        }
    }

    /// Reduced values per arc, doubling from 32 nodes until the Chebyshev tail
    /// drops below `1e-13`.
    pub fn reduced_samples(&self) -> Result<Vec<Vec<Complex64>>> {
        (0..self.support.len())
            .map(|k| {
                let mut n = 32;
                loop {
                    let v: Vec<Complex64> = chebyshev::nodes(n).iter().map(|&x| self.reduced(k, x)).collect();
                    if chebyshev::tail_ratio(&chebyshev::coefficients(&v)) < 1e-13 {
                        return Ok(v);
                    }
                    if n >= 4096 {
                        return Err(Error::Quadrature(format!("density on arc {k} unresolved at {n} nodes")));
                    }
                    n *= 2;
                }
            })
            .collect()
    }

    /// `∫_{S_w} F⁺(e^{it}) dt`, complex.
    pub fn mass(&self) -> Result<Complex64> {
        let samples = self.reduced_samples()?;
        Ok(self
            .support
            .arcs()
            .iter()
            .zip(&samples)
            .map(|(arc, h)| {
                let n = h.len();
                let d = arc.half_width();
                let s: Complex64 = chebyshev::nodes(n).iter().zip(h).map(|(x, v)| v * (1.0 - x * x)).sum();
                s * d * d * PI / n as f64
            })
            .sum())
    }

    /// Sampled profile; rejects negativity beyond the floor. With `strict`, also
    /// rejects an imaginary part above [`IMAG_TOLERANCE`].
    pub fn profile(&self, strict: bool) -> Result<DensityProfile> {
        let samples = self.reduced_samples()?;
        let p = DensityProfile::from_reduced(&self.support, &samples)?;
        if strict && p.imag_residual() > IMAG_TOLERANCE {
            return Err(Error::InconsistentSupport { imag: p.imag_residual() });
        }
        Ok(p)
    }
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// `1/(2π) - Q̃'/π` on the uniform `n`-grid via the spectral conjugate function.
pub fn full_circle_values_spectral(field: &ExternalField, n: usize) -> Result<Vec<f64>> {
    check_grid(n, MIN_GRID)?;
    let dq = uniform_grid(n).iter().map(|&t| field.q_prime(t)).collect::<Result<Vec<_>>>()?;
    Ok(conjugate_function(&dq)?.iter().map(|c| 1.0 / TAU - c / PI).collect())
}

/// Full-circle density on the uniform `n`-grid, through the closed form when the
/// field has one. No sign check.
pub fn full_circle_values(field: &ExternalField, n: usize) -> Result<Vec<f64>> {
    check_grid(n, MIN_GRID)?;
    match field {
        ExternalField::Polynomial(w) => Ok(uniform_grid(n).iter().map(|&t| w.full_circle_density(t)).collect()),
        ExternalField::Trig(w) => Ok(uniform_grid(n).iter().map(|&t| w.full_circle_density(t)).collect()),
        ExternalField::Sampled(_) => full_circle_values_spectral(field, n),
    }
}

/// Grid runs where `values < -floor`, as angle intervals.
pub fn negative_intervals(values: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let mask: Vec<bool> = values.iter().map(|&v| v < -floor).collect();
    match ArcSet::from_mask(&mask) {
        Ok(s) if s.is_full_circle() => vec![(0.0, TAU)],
        Ok(s) => s.arcs().iter().map(|a| (a.alpha, a.beta)).collect(),
        Err(_) => Vec::new(),
    }
}

/// Density under the hypothesis that the support is the whole circle.
pub fn full_circle_density(field: &ExternalField, n: usize) -> Result<DensityProfile> {
    let values = full_circle_values(field, n)?;
    let intervals = negative_intervals(&values, FULL_CIRCLE_FLOOR);
    if !intervals.is_empty() {
        return Err(Error::NotFullCircle { intervals });
    }
    DensityProfile::from_uniform(values)
}

/// Density on proper arcs from the singular integral with the generic `g`.
pub fn general_density(field: &ExternalField, support: &ArcSet) -> Result<DensityProfile> {
    ArcFormula::new(field, support, Formula::General)?.profile(false)
}

/// Density on proper arcs from the partial-fraction closed form.
pub fn polynomial_density(weight: &PolynomialWeight, support: &ArcSet) -> Result<DensityProfile> {
    let field = ExternalField::Polynomial(weight.clone());
    ArcFormula::new(&field, support, Formula::Polynomial)?.profile(true)
}

/// Density on proper arcs from the Laurent-coefficient closed form.
pub fn trig_density(weight: &TrigExponentialWeight, support: &ArcSet) -> Result<DensityProfile> {
    let field = ExternalField::Trig(weight.clone());
    ArcFormula::new(&field, support, Formula::Trig)?.profile(true)
}

/// Density for any support with the class's preferred formula.
pub fn density_for(field: &ExternalField, support: &ArcSet, n: usize) -> Result<DensityProfile> {
    if support.is_full_circle() {
        return full_circle_density(field, n);
    }
    let formula = Formula::preferred(field);
    ArcFormula::new(field, support, formula)?.profile(formula != Formula::General)
}

/// What [`compute_p`] integrates against.
#[derive(Debug, Clone, Copy)]
pub enum PSource<'a> {
    Profile(&'a DensityProfile),
    /// Point masses on the uniform grid.
    Weights(&'a [f64]),
}

/// Samples of `p(θ)` on a uniform grid and the set where it is positive.
#[derive(Debug, Clone)]
pub struct PFunction {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
}

impl PFunction {
    /// Closure of `{p > threshold}` on the grid.
    pub fn positive_set(&self, threshold: f64) -> Result<ArcSet> {
        let mask: Vec<bool> = self.p.iter().map(|&v| v > threshold).collect();
        ArcSet::from_mask(&mask)
    }
}

/// `p(θ) = (1/π²) ∫ (Q'(θ) - Q'(t)) f(t) cot((θ - t)/2) dt - (Q'(θ)/π)² + 1/(4π²)`.
///
/// Profiles are evaluated on a uniform `n`-grid by subtracting `Q'(θ)` inside
/// the principal value. Point masses are evaluated on their own grid with the
/// kernel `(Q'(θ) - Q'(t)) cot((θ - t)/2)` continued by `2Q''(θ)` on the diagonal.
pub fn compute_p(field: &ExternalField, source: PSource<'_>, n: usize) -> Result<PFunction> {
    if !field.has_second_derivative() {
        return Err(Error::MissingSecondDerivative);
    }
    match source {
        PSource::Profile(profile) => {
            check_grid(n, MIN_GRID)?;
            let theta = uniform_grid(n);
            let weighted = profile.measure().reweighted(|t| field.q_prime(t).unwrap_or(f64::NAN));
            let p = theta
                .iter()
                .map(|&t| {
                    let dq = field.q_prime(t)?;
                    let a = TAU * profile.measure().conjugate_at(t);
                    let b = TAU * weighted.conjugate_at(t);
                    Ok((dq * a - b) / (PI * PI) - (dq / PI).powi(2) + 1.0 / (4.0 * PI * PI))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PFunction { theta, p })
        }
        PSource::Weights(w) => {
            let n = w.len();
            check_grid(n, MIN_GRID)?;
            let theta = uniform_grid(n);
            let dq = theta.iter().map(|&t| field.q_prime(t)).collect::<Result<Vec<_>>>()?;
            let p = (0..n)
                .map(|i| {
                    let mut acc = 0.0;
                    for j in 0..n {
                        if w[j] == 0.0 {
                            continue;
                        }
                        acc += w[j]
                            * if i == j {
                                2.0 * field.q_second(theta[i])?
                            } else {
                                (dq[i] - dq[j]) / (0.5 * (theta[i] - theta[j])).tan()
                            };
                    }
                    Ok(acc / (PI * PI) - (dq[i] / PI).powi(2) + 1.0 / (4.0 * PI * PI))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PFunction { theta, p })
        }
    }
}
