//! Full-circle detection, the endpoint equations and their Gauss-Newton solve.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::circlemath::quadrature::endpoint_stretched;
use crate::circlemath::{Arc, ArcSet, CauchyIntegral, SqrtRBranch};
use crate::density::tables::build_coefficient_tables;
use crate::density::{full_circle_values, negative_intervals, ArcFormula, DensityProfile, Formula};
use crate::field::{PolynomialWeight, TrigExponentialWeight};
use crate::{Error, ExternalField, Result, TAU};


/// Negativity tolerated by [`detect_full_circle`].
pub const FULL_CIRCLE_TOLERANCE: f64 = 1e-10;

/// Shortest arc allowed during the endpoint solve.
pub const MIN_ARC_LENGTH: f64 = 1e-6;

/// Outcome of testing the full-circle hypothesis.
#[derive(Debug, Clone)]
pub enum FullCircleDecision {
    FullCircle(DensityProfile),
    /// Grid intervals where the would-be density is negative.
    Arcs { violations: Vec<(f64, f64)> },
}

impl FullCircleDecision {
    pub fn is_full_circle(&self) -> bool {
        matches!(self, FullCircleDecision::FullCircle(_))
    }
}

/// Evaluates the full-circle density on an `n`-grid and checks its sign.
pub fn detect_full_circle(field: &ExternalField, n: usize) -> Result<FullCircleDecision> {
    let values = full_circle_values(field, n)?;
    let violations = negative_intervals(&values, FULL_CIRCLE_TOLERANCE);
    if violations.is_empty() {
        Ok(FullCircleDecision::FullCircle(DensityProfile::from_uniform(values)?))
    } else {
        Ok(FullCircleDecision::Arcs { violations })
    }
}

/// The arcs left after removing the given intervals from the circle.
pub fn complement(intervals: &[(f64, f64)]) -> Result<ArcSet> {
    let removed = ArcSet::new(intervals)?;
    let gaps = removed.gaps();
    ArcSet::new(&gaps)
}

/// Residuals of the endpoint equations for one candidate support.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub moment: Vec<Complex64>,
    pub gap: Vec<Complex64>,
    pub mass: f64,
}

/// Euclidean norms of each residual family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyNorms {
    pub moment: f64,
    pub gap: f64,
    pub mass: f64,
}

impl FamilyNorms {
    pub fn max(&self) -> f64 {
        self.moment.max(self.gap).max(self.mass)
    }
}

fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl Residuals {
    /// `[Re moment, Im moment, Re gap, Im gap, mass]`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.moment.len() + 1);
        out.extend(self.moment.iter().map(|c| c.re));
        out.extend(self.moment.iter().map(|c| c.im));
        out.extend(self.gap.iter().map(|c| c.re));
        out.extend(self.gap.iter().map(|c| c.im));
        out.push(self.mass);
        out
    }

    pub fn norms(&self) -> FamilyNorms {
        FamilyNorms { moment: cnorm(&self.moment), gap: cnorm(&self.gap), mass: self.mass.abs() }
    }

    pub fn norm(&self) -> f64 {
        self.stacked().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn proper(support: &ArcSet) -> Result<()> {
    if support.is_full_circle() {
        return Err(Error::InvalidArcs("endpoint equations need a proper arc set".into()));
    }
    Ok(())
}

fn polynomial_moments(w: &PolynomialWeight, branch: &SqrtRBranch, k: usize) -> Result<Vec<Complex64>> {
    // E_n = Σ λ_j (z_j^n / sqrt(R(z_j)) + r_j^n / sqrt(R(r_j))), r_j = 1/conj(z_j)
    let mut terms = Vec::new();
    for t in w.terms() {
        for p in [t.zero, 1.0 / t.zero.conj()] {
            let s = branch
                .offcut(p)
                .map_err(|_| Error::InvalidField(format!("zero or reflected zero {p} lies on the support")))?;
            terms.push((p, t.lambda / s));
        }
    }
    Ok((1..=k)
        .map(|n| {
            let e: Complex64 = terms.iter().map(|(p, c)| c * p.powi(n as i32)).sum();
            if n == k {
                e - (1.0 + w.total_lambda())
            } else {
                e
            }
        })
        .collect())
}

fn trig_moments(w: &TrigExponentialWeight, support: &ArcSet) -> Result<Vec<Complex64>> {
    let k = support.len();
    let m = w.degree();
    let tables = build_coefficient_tables(support, m.max(k))?;
    let origin = tables.origin_series();
    let infinity = tables.infinity_series();
    let gm = |j: i64| -> Complex64 {
        if j == 0 {
            Complex64::new(1.0 / TAU, 0.0)
        } else {
            -(j as f64) * w.coeff(j) / PI
        }
    };
    let mi = m as i64;
    Ok((0..k as i64)
        .map(|kk| {
            let at_origin: Complex64 = (-mi..=-1 - kk).map(|j| gm(j) * origin[(-1 - kk - j) as usize]).sum();
            let at_infinity: Complex64 = (-mi..=mi)
                .filter_map(|j| {
                    let n = j + kk + 1 - k as i64;
                    (n >= 0).then(|| gm(j) * infinity[n as usize])
                })
                .sum();
            TAU * (at_origin - at_infinity)
        })
        .collect())
}

fn general_moments(field: &ExternalField, branch: &SqrtRBranch, k: usize) -> Result<Vec<Complex64>> {
    field.validate_for_solve()?;
    let cauchy = CauchyIntegral::adaptive(branch, |t| field.g(t), 1e-13)?;
    Ok((0..k)
        .map(|kk| {
            2.0 * cauchy
                .pieces()
                .iter()
                .map(|p| p.integral_with(|t| Complex64::from_polar(1.0, (kk + 1) as f64 * t)))
                .sum::<Complex64>()
        })
        .collect())
}

fn moments_with(field: &ExternalField, support: &ArcSet, formula: Formula) -> Result<Vec<Complex64>> {
    proper(support)?;
    let branch = SqrtRBranch::new(support)?;
    match (formula, field) {
        (Formula::Polynomial, ExternalField::Polynomial(w)) => polynomial_moments(w, &branch, support.len()),
        (Formula::Trig, ExternalField::Trig(w)) => trig_moments(w, support),
        (Formula::General, _) => general_moments(field, &branch, support.len()),
        (f, _) => Err(Error::InvalidField(format!("{f:?} formula does not apply to a {} field", field.class_name()))),
    }
}

/// `(2/i) ∫_{S_w} ζ^k g(ζ) dζ / sqrt(R⁺(ζ))` for `k = 0, …, K-1`, with the
/// normalization folded into the last entry; zero at the true support. Closed
/// forms for polynomial and trigonometric weights, quadrature otherwise.
pub fn moment_residuals(field: &ExternalField, support: &ArcSet) -> Result<Vec<Complex64>> {
    moments_with(field, support, Formula::preferred(field))
}

fn gap_integral(formula: &ArcFormula<'_>, lo: f64, hi: f64) -> Result<Complex64> {
    endpoint_stretched(lo, hi, 16, 1e-13, |t| formula.excess(t))
}

/// `∫ (F - g) dt` over each gap `(β_k, α_{k+1})`.
pub fn gap_residuals(field: &ExternalField, support: &ArcSet) -> Result<Vec<Complex64>> {
    proper(support)?;
    let formula = ArcFormula::new(field, support, Formula::preferred(field))?;
    support.gaps().iter().map(|&(lo, hi)| gap_integral(&formula, lo, hi)).collect()
}

/// `∫_{S_w} f dt - 1`.
pub fn mass_residual(field: &ExternalField, support: &ArcSet) -> Result<f64> {
    if support.is_full_circle() {
        return crate::density::full_circle_density(field, crate::density::DEFAULT_GRID).map(|p| p.mass() - 1.0);
    }
    Ok(ArcFormula::new(field, support, Formula::preferred(field))?.mass()?.re - 1.0)
}

/// The stacked endpoint equations for one field and formula.
#[derive(Debug, Clone, Copy)]
pub struct EndpointSystem<'a> {
    field: &'a ExternalField,
    formula: Formula,
}

impl<'a> EndpointSystem<'a> {
    pub fn new(field: &'a ExternalField, formula: Formula) -> Self {
        EndpointSystem { field, formula }
    }

    /// Residuals at `[α_1, β_1, …, α_K, β_K]`, increasing and spanning less than
    /// `2π`. Gaps follow the given order rather than the canonical one.
    pub fn residuals(&self, endpoints: &[f64]) -> Result<Residuals> {
        let k = endpoints.len() / 2;
        check_order(endpoints)?;
        let support = ArcSet::from_endpoints(endpoints)?;
        let moment = moments_with(self.field, &support, self.formula)?;
        let formula = ArcFormula::new(self.field, &support, self.formula)?;
        let gap = (0..k)
            .map(|j| {
                let hi = if j + 1 < k { endpoints[2 * j + 2] } else { endpoints[0] + TAU };
                gap_integral(&formula, endpoints[2 * j + 1], hi)
            })
            .collect::<Result<Vec<_>>>()?;
        let mass = formula.mass()?.re - 1.0;
        Ok(Residuals { moment, gap, mass })
    }
}

fn check_order(x: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() % 2 != 0 {
        return Err(Error::InvalidArcs("need an even, nonzero number of endpoints".into()));
    }
    let ok = x.windows(2).all(|w| w[0] < w[1]) && x[x.len() - 1] < x[0] + TAU;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArcs("endpoints out of order".into()))
    }
}

/// Arc or gap length below which a stalled solve is read as a wrong `K`.
pub const STALL_LENGTH: f64 = 1e-3;

fn collapse(x: &[f64], min: f64) -> Result<()> {
    let k = x.len() / 2;
    if let Some(a) = (0..k).find(|&a| x[2 * a + 1] - x[2 * a] < min) {
        return Err(Error::ArcCollapse { index: a });
    }
    if k > 1 {
        if let Some(a) = (0..k).find(|&a| {
            let next = if a + 1 < k { x[2 * a + 2] } else { x[0] + TAU };
            next - x[2 * a + 1] < min
        }) {
            return Err(Error::GapCollapse { index: a });
        }
    }
    Ok(())
}

/// The guess with one fewer arc after a collapse signal: a collapsed arc is
/// dropped, a collapsed gap merges its neighbors.
pub fn reduce_guess(support: &ArcSet, signal: &Error) -> Option<ArcSet> {
    let arcs = support.arcs();
    if arcs.len() < 2 {
        return None;
    }
    let mut pairs: Vec<(f64, f64)> = arcs.iter().map(|a| (a.alpha, a.beta)).collect();
    match signal.root() {
        Error::ArcCollapse { index } if *index < pairs.len() => {
            pairs.remove(*index);
        }
        Error::GapCollapse { index } if *index < pairs.len() => {
            let j = (index + 1) % pairs.len();
            let hi = if j == 0 { pairs[0].1 + TAU } else { pairs[j].1 };
            pairs[*index].1 = hi;
            pairs.remove(j);
        }
        _ => return None,
    }
    ArcSet::new(&pairs).ok()
}

/// Where the initial arcs came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessSource {
    Oracle,
    User,
    ConvexityHeuristic,
    /// Complement of the set where the full-circle density is negative.
    FullCircleComplement,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Success threshold for every residual family.
    pub tol: f64,
    pub max_iter: usize,
    /// Central-difference step on the angles.
    pub fd_step: f64,
    /// Defaults to the field's preferred formula.
    pub formula: Option<Formula>,
    pub source: GuessSource,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-8, max_iter: 100, fd_step: 1e-6, formula: None, source: GuessSource::User }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSolveReport {
    pub arcs: Vec<Arc>,
    pub k: usize,
    pub residuals: FamilyNorms,
    pub iterations: usize,
    pub source: GuessSource,
    pub formula: Formula,
    /// Number of convexity windows of the field, when known.
    #[serde(default)]
    pub arc_hint: Option<usize>,
}

impl SupportSolveReport {
    pub fn support(&self) -> ArcSet {
        let pairs: Vec<(f64, f64)> = self.arcs.iter().map(|a| (a.alpha, a.beta)).collect();
        ArcSet::new(&pairs).expect("solved arcs are valid")
    }
}

fn least_squares(j: &DMatrix<f64>, r: &DVector<f64>, damping: f64) -> Option<DVector<f64>> {
    let n = j.ncols();
    let mut a = j.clone().resize(j.nrows() + n, n, 0.0);
    let mut b = r.clone().resize_vertically(j.nrows() + n, 0.0);
    for i in 0..n {
        a[(j.nrows() + i, i)] = damping.sqrt();
        b[j.nrows() + i] = 0.0;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(&(-b), 1e-14 * smax).ok()
}

/// Damped Gauss-Newton on the stacked endpoint equations, central-difference
/// Jacobian, step halving to keep the endpoints ordered and the residual
/// decreasing. Iterates until no further decrease, then requires every family
/// below `tol` and a nonnegative density.
pub fn solve_endpoints(field: &ExternalField, initial: &ArcSet, options: &SolveOptions) -> Result<SupportSolveReport> {
    proper(initial)?;
    let formula = options.formula.unwrap_or_else(|| Formula::preferred(field));
    let system = EndpointSystem::new(field, formula);
    let mut x = initial.flat_endpoints();
    let m = x.len();
    let mut res = system.residuals(&x)?;
    let mut r = DVector::from_vec(res.stacked());
    let mut norm = r.norm();
    let mut damping = 0.0;
    let mut iterations = 0;
    while iterations < options.max_iter && norm > 0.0 {
        iterations += 1;
        let h = options.fd_step;
        let mut jac = DMatrix::zeros(r.len(), m);
        for c in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let col = match (system.residuals(&xp), system.residuals(&xm)) {
                (Ok(p), Ok(q)) => (DVector::from_vec(p.stacked()) - DVector::from_vec(q.stacked())) / (2.0 * h),
                (Ok(p), Err(_)) => (DVector::from_vec(p.stacked()) - &r) / h,
                (Err(_), Ok(q)) => (&r - DVector::from_vec(q.stacked())) / h,
                (Err(e), Err(_)) => return Err(e),
            };
            jac.set_column(c, &col);
        }
        let Some(step) = least_squares(&jac, &r, damping) else { break };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if let Ok(tr) = system.residuals(&trial) {
                let tn = DVector::from_vec(tr.stacked()).norm();
                if tn < norm {
                    accepted = Some((trial, tr, tn));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, tr, tn)) = accepted else {
            if damping == 0.0 && norm > options.tol {
                damping = 1e-10 * jac.norm_squared();
                continue;
            }
            break;
        };
        let progress = tn / norm;
        x = trial;
        res = tr;
        r = DVector::from_vec(res.stacked());
        norm = tn;
        damping = if t < 1.0 { damping.max(1e-12 * jac.norm_squared()) } else { 0.0 };
        collapse(&x, MIN_ARC_LENGTH)?;
        if progress > 0.9 && norm < options.tol {
            break;
        }
    }
    let norms = res.norms();
    if norms.max() >= options.tol {
        collapse(&x, STALL_LENGTH)?;
        return Err(Error::NoConvergence { iterations, residual: norms.max() });
    }
    let support = ArcSet::from_endpoints(&x)?;
    ArcFormula::new(field, &support, formula)?.profile(formula != Formula::General)?;
    Ok(SupportSolveReport {
        arcs: support.arcs().to_vec(),
        k: support.len(),
        residuals: norms,
        iterations,
        source: options.source,
        formula,
        arc_hint: None,
    })
}

/// Sign of `Q''` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvexityHint {
    pub convex: bool,
    /// At most this many support arcs meet the window.
    pub max_arcs: Option<usize>,
}

/// Samples `Q''` at 512 interior points of `window`; a convex window meets at
/// most one arc of the support.
pub fn convexity_heuristic(field: &ExternalField, window: (f64, f64)) -> Result<ConvexityHint> {
    let (a, b) = window;
    let n = 512;
    let mut convex = true;
    for i in 0..n {
        let t = a + (b - a) * (i as f64 + 0.5) / n as f64;
        if field.q_second(t)? < -1e-12 {
            convex = false;
            break;
        }
    }
    Ok(ConvexityHint { convex, max_arcs: convex.then_some(1) })
}

/// Maximal runs of the `n`-grid where `Q'' ≥ 0`.
pub fn convex_windows(field: &ExternalField, n: usize) -> Result<Vec<(f64, f64)>> {
    let mask = (0..n)
        .map(|j| field.q_second(TAU * j as f64 / n as f64).map(|v| v >= -1e-12))
        .collect::<Result<Vec<_>>>()?;
    match ArcSet::from_mask(&mask) {
        Ok(s) if s.is_full_circle() => Ok(vec![(0.0, TAU)]),
        Ok(s) => Ok(s.arcs().iter().map(|a| (a.alpha, a.beta)).collect()),
        Err(_) => Ok(Vec::new()),
    }
}

/// Number of convexity windows, at least one.
pub fn arc_count_hint(field: &ExternalField, n: usize) -> Result<usize> {
    Ok(convex_windows(field, n)?.len().max(1))
}
