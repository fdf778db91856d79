//! Assembly of the final solution and checks of every identity it must satisfy.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circlemath::ArcSet;
use crate::density::{compute_p, density_for, ArcFormula, DensityProfile, Formula, PSource};
use crate::oracle::{extract_support, minimize_energy, OracleOptions, SUPPORT_THRESHOLD};
use crate::support::{
    arc_count_hint, complement, detect_full_circle, reduce_guess, solve_endpoints, FullCircleDecision, GuessSource,
    SolveOptions, SupportSolveReport,
};
use crate::{Error, ExternalField, Result, TAU};

/// Largest variation of `U + Q` over the support before `F_w` is refused.
pub const ROBIN_VARIATION_LIMIT: f64 = 1e-3;

/// Default grid for the Frostman and identity checks.
pub const CHECK_GRID: usize = 4096;

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub field: ExternalField,
    pub support: ArcSet,
    pub profile: DensityProfile,
    /// `F_w`.
    pub robin: f64,
    /// `V_w`.
    pub energy: f64,
    /// `exp(-V_w)`.
    pub capacity: f64,
    /// `∫ Q dμ`.
    pub field_integral: f64,
    /// `max - min` of `U + Q` over the interior samples.
    pub robin_variation: f64,
    pub solve: Option<SupportSolveReport>,
}

fn potential_plus_field(profile: &DensityProfile, field: &ExternalField, theta: f64) -> Result<f64> {
    Ok(profile.potential(theta)? + field.q(theta)?)
}

/// Builds the solution from a density, reading `F_w` at the sample of median
/// density. Refuses when `U + Q` varies by more than [`ROBIN_VARIATION_LIMIT`]
/// over the support samples.
pub fn assemble_solution(field: &ExternalField, support: &ArcSet, profile: DensityProfile) -> Result<EquilibriumSolution> {
    let s = assemble_unchecked(field, support, profile)?;
    if s.robin_variation > ROBIN_VARIATION_LIMIT {
        return Err(Error::RobinVariation { variation: s.robin_variation });
    }
    Ok(s)
}

/// As [`assemble_solution`] without the variation bound.
pub fn assemble_unchecked(field: &ExternalField, support: &ArcSet, profile: DensityProfile) -> Result<EquilibriumSolution> {
    let angles = profile.interior_angles();
    if angles.is_empty() {
        return Err(Error::EmptySupport);
    }
    let values = angles.iter().map(|&t| potential_plus_field(&profile, field, t)).collect::<Result<Vec<_>>>()?;
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    let mut order: Vec<usize> = (0..angles.len()).collect();
    let dens: Vec<f64> = angles.iter().map(|&t| profile.eval(t)).collect();
    order.sort_by(|&a, &b| dens[a].total_cmp(&dens[b]).then(a.cmp(&b)));
    let robin = values[order[order.len() / 2]];
    let bad = std::cell::RefCell::new(None);
    let field_integral = profile.measure().integrate(|t| {
        field.q(t).unwrap_or_else(|e| {
            bad.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    });
    if let Some(e) = bad.into_inner() {
        return Err(e);
    }
    let energy = robin + field_integral;
    Ok(EquilibriumSolution {
        field: field.clone(),
        support: support.clone(),
        profile,
        robin,
        energy,
        capacity: (-energy).exp(),
        field_integral,
        robin_variation: hi - lo,
        solve: None,
    })
}

/// Sup of `|U + Q - F_w|` on the support part of an `n`-grid, and the largest
/// `F_w - (U + Q)` off it, clamped at zero.
pub fn check_frostman(solution: &EquilibriumSolution, n: usize) -> Result<(f64, f64)> {
    let mut equality: f64 = 0.0;
    let mut violation: f64 = 0.0;
    for j in 0..n {
        let t = TAU * j as f64 / n as f64;
        let v = potential_plus_field(&solution.profile, &solution.field, t)? - solution.robin;
        if solution.support.contains(t) {
            equality = equality.max(v.abs());
        } else {
            violation = violation.max(-v);
        }
    }
    Ok((equality, violation))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub frostman_equality: f64,
    pub frostman_inequality: f64,
    pub mass: f64,
    pub density_square: f64,
    pub conjugate: f64,
    pub imag: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            frostman_equality: 1e-4,
            frostman_inequality: 1e-6,
            mass: 1e-8,
            density_square: 1e-5,
            conjugate: 1e-5,
            imag: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.frostman_equality, self.frostman_inequality, self.mass, self.density_square, self.conjugate, self.imag];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::Parse("tolerances must be positive and finite".into()))
        }
    }
}

/// Named residuals of every checkable identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub frostman_equality_sup: f64,
    pub frostman_inequality_violation: f64,
    pub mass_gap: f64,
    /// `sup |p - f²|` on the support; absent without `Q''`.
    pub density_square_identity_sup: Option<f64>,
    /// `sup |f̃ - Q'/π|` on the support.
    pub conjugate_identity_sup: f64,
    pub imag_part_sup: f64,
    pub robin_variation: f64,
    pub failed: Vec<String>,
    pub pass: bool,
}

// grid points strictly inside the support, away from the endpoints by `margin`
fn interior_grid(support: &ArcSet, n: usize, margin: f64) -> Vec<f64> {
    (0..n)
        .map(|j| TAU * j as f64 / n as f64)
        .filter(|&t| support.contains(t) && support.distance_to_endpoint(t) > margin)
        .collect()
}

/// Every residual of `solution` against `tol`, checked on an `n`-grid.
pub fn residual_report(solution: &EquilibriumSolution, tol: &Tolerances, n: usize) -> Result<ResidualReport> {
    let (eq, ineq) = check_frostman(solution, n)?;
    let profile = &solution.profile;
    let field = &solution.field;
    let margin = 1e-9;
    let inside = interior_grid(&solution.support, n, margin);
    let density_square = if field.has_second_derivative() {
        let p = compute_p(field, PSource::Profile(profile), n)?;
        let mut sup: f64 = 0.0;
        for (t, v) in p.theta.iter().zip(&p.p) {
            if solution.support.contains(*t) && solution.support.distance_to_endpoint(*t) > margin {
                sup = sup.max((v - profile.eval(*t).powi(2)).abs());
            }
        }
        Some(sup)
    } else {
        None
    };
    let mut conjugate: f64 = 0.0;
    for &t in &inside {
        conjugate = conjugate.max((profile.conjugate(t) - field.q_prime(t)? / PI).abs());
    }
    let mut report = ResidualReport {
        frostman_equality_sup: eq,
        frostman_inequality_violation: ineq,
        mass_gap: (profile.mass() - 1.0).abs(),
        density_square_identity_sup: density_square,
        conjugate_identity_sup: conjugate,
        imag_part_sup: profile.imag_residual(),
        robin_variation: solution.robin_variation,
        failed: Vec::new(),
        pass: false,
    };
    let checks = [
        ("frostman_equality_sup", report.frostman_equality_sup, tol.frostman_equality),
        ("frostman_inequality_violation", report.frostman_inequality_violation, tol.frostman_inequality),
        ("mass_gap", report.mass_gap, tol.mass),
        ("density_square_identity_sup", report.density_square_identity_sup.unwrap_or(0.0), tol.density_square),
        ("conjugate_identity_sup", report.conjugate_identity_sup, tol.conjugate),
        ("imag_part_sup", report.imag_part_sup, tol.imag),
        ("robin_variation", report.robin_variation, ROBIN_VARIATION_LIMIT),
    ];
    for (name, value, limit) in checks {
        if !(value.is_finite() && value < limit) {
            report.failed.push(name.to_string());
        }
    }
    report.pass = report.failed.is_empty();
    Ok(report)
}

/// Settings for [`full_report`].
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Full-circle detection and residual grid.
    pub grid: usize,
    pub oracle_grid: usize,
    pub oracle: OracleOptions,
    pub solve: SolveOptions,
    /// Skips the oracle when given.
    pub initial: Option<ArcSet>,
    /// Caps the number of arcs in the initial guess.
    pub arc_count: Option<usize>,
    pub support_threshold: f64,
    pub tolerances: Tolerances,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            grid: CHECK_GRID,
            oracle_grid: 4096,
            oracle: OracleOptions::default(),
            solve: SolveOptions::default(),
            initial: None,
            arc_count: None,
            support_threshold: SUPPORT_THRESHOLD,
            tolerances: Tolerances::default(),
        }
    }
}

// merges across the shortest gap until at most `k` arcs remain
fn cap_arcs(mut guess: ArcSet, k: usize) -> ArcSet {
    while guess.len() > k.max(1) {
        let gaps = guess.gaps();
        let (i, _) = gaps
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 .1 - a.1 .0).total_cmp(&(b.1 .1 - b.1 .0)))
            .expect("at least two gaps");
        match reduce_guess(&guess, &Error::GapCollapse { index: i }) {
            Some(g) => guess = g,
            None => break,
        }
    }
    guess
}

fn initial_guess(field: &ExternalField, violations: &[(f64, f64)], options: &PipelineOptions) -> Result<(ArcSet, GuessSource)> {
    if let Some(s) = &options.initial {
        return Ok((s.clone(), GuessSource::User));
    }
    let run = minimize_energy(field, options.oracle_grid, &options.oracle).map_err(|e| e.at("oracle"))?;
    let s = extract_support(&run.measure, options.support_threshold).map_err(|e| e.at("oracle"))?;
    if s.is_full_circle() {
        return Ok((complement(violations).map_err(|e| e.at("support"))?, GuessSource::FullCircleComplement));
    }
    Ok((s, GuessSource::Oracle))
}

/// Solves the endpoint equations from `guess`, dropping an arc and retrying
/// whenever an arc or gap collapses.
pub fn solve_with_retries(field: &ExternalField, mut guess: ArcSet, options: &SolveOptions) -> Result<SupportSolveReport> {
    loop {
        match solve_endpoints(field, &guess, options) {
            Ok(r) => return Ok(r),
            Err(e) if e.is_collapse() => match reduce_guess(&guess, &e) {
                Some(g) => guess = g,
                None => return Err(e),
            },
            Err(e) => return Err(e),
        }
    }
}

/// Detects full-circle support or solves for the arcs, then assembles and
/// checks the solution. Stage failures are tagged with the stage name.
pub fn full_report(field: &ExternalField, options: &PipelineOptions) -> Result<(EquilibriumSolution, ResidualReport)> {
    field.validate_for_solve().map_err(|e| e.at("field"))?;
    let decision = detect_full_circle(field, options.grid).map_err(|e| e.at("detect"))?;
    let (support, profile, solve) = match decision {
        FullCircleDecision::FullCircle(p) => (ArcSet::full_circle(), p, None),
        FullCircleDecision::Arcs { violations } => {
            let (mut guess, source) = initial_guess(field, &violations, options)?;
            if let Some(k) = options.arc_count {
                guess = cap_arcs(guess, k);
            }
            if let Some(k) = field.arc_bound() {
                guess = cap_arcs(guess, k);
            }
            let hint = if field.has_second_derivative() { arc_count_hint(field, options.grid).ok() } else { None };
            let solve_options = SolveOptions { source, ..options.solve.clone() };
            let mut report = solve_with_retries(field, guess, &solve_options).map_err(|e| e.at("support"))?;
            report.arc_hint = hint;
            let support = report.support();
            let profile = density_for(field, &support, options.grid).map_err(|e| e.at("density"))?;
            (support, profile, Some(report))
        }
    };
    let mut solution = assemble_solution(field, &support, profile).map_err(|e| e.at("assemble"))?;
    solution.solve = solve;
    let report = residual_report(&solution, &options.tolerances, options.grid).map_err(|e| e.at("verify"))?;
    Ok((solution, report))
}

/// Recomputes everything for a stored support without solving. The density
/// imaginary part is reported instead of rejected and `F_w` is assigned
/// regardless of its variation, which then fails the report. A density of the
/// wrong mass is scaled to a probability measure before the Frostman checks;
/// the report keeps the unscaled mass gap.
pub fn verify_support(field: &ExternalField, support: &ArcSet, tol: &Tolerances, n: usize) -> Result<(EquilibriumSolution, ResidualReport)> {
    field.validate_for_solve().map_err(|e| e.at("field"))?;
    let profile = if support.is_full_circle() {
        density_for(field, support, n)
    } else {
        ArcFormula::new(field, support, Formula::preferred(field)).and_then(|f| f.profile(false))
    }
    .map_err(|e| e.at("density"))?;
    let raw_gap = (profile.mass() - 1.0).abs();
    let scaled = profile.normalized().map_err(|e| e.at("density"))?;
    let solution = assemble_unchecked(field, support, scaled).map_err(|e| e.at("assemble"))?;
    let mut report = residual_report(&solution, tol, n).map_err(|e| e.at("verify"))?;
    if raw_gap > report.mass_gap {
        report.mass_gap = raw_gap;
        if !(raw_gap < tol.mass) && !report.failed.iter().any(|f| f == "mass_gap") {
            report.failed.insert(2.min(report.failed.len()), "mass_gap".into());
        }
        report.pass = report.failed.is_empty();
    }
    Ok((solution, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Complex64, PolynomialWeight};
    use approx::assert_abs_diff_eq;

    fn poly(r: f64) -> ExternalField {
        ExternalField::Polynomial(PolynomialWeight::single(Complex64::new(r, 0.0), 1.0).unwrap())
    }

    #[test]
    fn classical_case() {
        let (s, r) = full_report(&ExternalField::uniform(), &PipelineOptions::default()).unwrap();
        assert!(s.support.is_full_circle());
        assert_abs_diff_eq!(s.robin, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.energy, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.capacity, 1.0, epsilon = 1e-12);
        assert!(r.frostman_equality_sup < 1e-12 && r.frostman_inequality_violation == 0.0);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn definitional_identities() {
        let (s, r) = full_report(&poly(2.0), &PipelineOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(s.support.len(), 1);
        assert_abs_diff_eq!(s.capacity, (-s.energy).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.robin, s.energy - s.field_integral, epsilon = 1e-12);
        assert_eq!(s.solve.as_ref().unwrap().source, GuessSource::Oracle);
    }

    #[test]
    fn widened_support_fails_frostman() {
        let (s, _) = full_report(&poly(2.0), &PipelineOptions::default()).unwrap();
        let wide = s.support.scaled(1.05).unwrap();
        let (_, r) = verify_support(&poly(2.0), &wide, &Tolerances::default(), 1024).unwrap();
        assert!(r.frostman_equality_sup > 1e-2, "{r:?}");
        assert!(!r.pass);
        let raw = ArcFormula::new(&poly(2.0), &wide, Formula::Polynomial).unwrap().profile(false).unwrap();
        let err = assemble_solution(&poly(2.0), &wide, raw.normalized().unwrap());
        assert!(matches!(err, Err(Error::RobinVariation { .. })));
    }

    #[test]
    fn cosine_field_passes_with_one_arc() {
        let (s, r) = full_report(&ExternalField::cosine(1.0), &PipelineOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(s.support.len(), 1);
    }

    #[test]
    fn zero_on_circle_is_rejected_at_field_stage() {
        let f = ExternalField::Polynomial(PolynomialWeight::single(Complex64::new(0.0, 1.0), 1.0).unwrap());
        match full_report(&f, &PipelineOptions::default()) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "field"),
            other => panic!("{other:?}"),
        }
    }
}
