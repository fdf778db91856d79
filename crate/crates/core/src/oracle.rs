//! Brute-force equilibrium measure: minimize the discretized weighted energy
//! `pᵀAp + 2qᵀp` over the probability simplex on an `N`-point grid.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::circlemath::conjugate::check_grid;
use crate::circlemath::ArcSet;
use crate::{Error, ExternalField, Result, TAU};

/// Smallest grid the oracle accepts.
pub const MIN_ORACLE_GRID: usize = 64;

/// Default support threshold, in units of `1/N`.
pub const SUPPORT_THRESHOLD: f64 = 1e-3;

/// Circulant kernel `A_ij = -log|2 sin((θ_i - θ_j)/2)|` with the diagonal
/// `1 - log(2π/N)`, the average of `-log|t|` over one grid cell.
#[derive(Clone)]
pub struct EnergyMatrix {
    row: Vec<f64>,
    eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for EnergyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyMatrix").field("n", &self.row.len()).finish()
    }
}

impl EnergyMatrix {
    pub fn new(n: usize) -> Result<Self> {
        check_grid(n, MIN_ORACLE_GRID)?;
        let row: Vec<f64> = (0..n)
            .map(|k| match k.min(n - k) {
                0 => 1.0 - (TAU / n as f64).ln(),
                j => -(2.0 * (PI * j as f64 / n as f64).sin()).ln(),
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        let eig = buf.iter().map(|c| c.re).collect();
        Ok(EnergyMatrix { row, eig, fft, ifft })
    }

    pub fn n(&self) -> usize {
        self.row.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.row[(i + n - j) % n]
    }

    /// Eigenvalues in Fourier order; the constant mode comes first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }

    /// `A p` through the FFT.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut buf: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        for (b, e) in buf.iter_mut().zip(&self.eig) {
            *b *= e;
        }
        self.ifft.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    /// `A p` by the direct double sum.
    pub fn apply_dense(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j) * p[j]).sum()).collect()
    }
}

/// Probability weights at `θ_i = 2πi/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn uniform(n: usize) -> Self {
        DiscreteMeasure { weights: vec![1.0 / n as f64; n] }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn theta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n() as f64
    }

    /// Weights divided by the grid step.
    pub fn density(&self) -> Vec<f64> {
        let h = TAU / self.n() as f64;
        self.weights.iter().map(|w| w / h).collect()
    }

    pub fn total_variation(&self, other: &DiscreteMeasure) -> f64 {
        0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Euclidean projection onto `{p ≥ 0, Σp = 1}` by sorting.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Where the minimizer starts.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleStart {
    Uniform,
    /// Any nonnegative weights; projected onto the simplex first.
    Weights(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub start: OracleStart,
    pub max_iter: usize,
    /// Target Frostman gap.
    pub tol: f64,
    /// Active-set refinement of the gradient iterate.
    pub polish: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { start: OracleStart::Uniform, max_iter: 50_000, tol: 1e-8, polish: true }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub measure: DiscreteMeasure,
    /// `pᵀAp + 2qᵀp`.
    pub energy: f64,
    /// `min_i (Ap + q)_i`.
    pub robin: f64,
    pub frostman_gap: f64,
    pub iterations: usize,
    /// Objective after every accepted step.
    pub energy_trace: Vec<f64>,
}

struct Problem {
    a: EnergyMatrix,
    q: Vec<f64>,
}

impl Problem {
    fn new(field: &ExternalField, n: usize) -> Result<Self> {
        let a = EnergyMatrix::new(n)?;
        let q = (0..n).map(|i| field.q(TAU * i as f64 / n as f64)).collect::<Result<Vec<_>>>()?;
        Ok(Problem { a, q })
    }

    fn potential(&self, p: &[f64]) -> Vec<f64> {
        self.a.apply(p).iter().zip(&self.q).map(|(u, q)| u + q).collect()
    }

    fn energy(&self, p: &[f64]) -> f64 {
        let ap = self.a.apply(p);
        p.iter().zip(&ap).zip(&self.q).map(|((pi, ai), qi)| pi * (ai + 2.0 * qi)).sum()
    }

    fn gap(&self, p: &[f64]) -> f64 {
        gap_of(p, &self.potential(p))
    }

    // A_SS + c 11ᵀ on the index set `s`
    fn restricted(&self, s: &[usize], c: f64, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.a.n()];
        for (&i, &v) in s.iter().zip(x) {
            full[i] = v;
        }
        let ax = self.a.apply(&full);
        let sum: f64 = x.iter().sum();
        s.iter().map(|&i| ax[i] + c * sum).collect()
    }

    fn cg(&self, s: &[usize], c: f64, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut x = vec![0.0; m];
        let mut r = b.to_vec();
        let mut d = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let stop = 1e-28 * rr.max(f64::MIN_POSITIVE);
        for _ in 0..4 * m + 100 {
            if rr <= stop {
                break;
            }
            let ad = self.restricted(s, c, &d);
            let alpha = rr / d.iter().zip(&ad).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..m {
                x[i] += alpha * d[i];
                r[i] -= alpha * ad[i];
            }
            let next: f64 = r.iter().map(|v| v * v).sum();
            let beta = next / rr;
            rr = next;
            for i in 0..m {
                d[i] = r[i] + beta * d[i];
            }
        }
        x
    }

    // Solves the equality conditions on a guessed support, drops negative
    // weights and adds grid points where the potential dips below the level.
    fn polish(&self, p: &[f64]) -> Option<Vec<f64>> {
        let n = self.a.n();
        let eig = self.a.eigenvalues();
        let top = eig[1..].iter().cloned().fold(f64::MIN, f64::max);
        let c = ((top - eig[0]) / n as f64).max(0.0);
        let mut s: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0).collect();
        for _ in 0..100 {
            if s.is_empty() {
                return None;
            }
            let ones = vec![1.0; s.len()];
            let qs: Vec<f64> = s.iter().map(|&i| self.q[i]).collect();
            let u = self.cg(&s, c, &ones);
            let v = self.cg(&s, c, &qs);
            let level = (1.0 + v.iter().sum::<f64>()) / u.iter().sum::<f64>();
            let ps: Vec<f64> = u.iter().zip(&v).map(|(a, b)| level * a - b).collect();
            if ps.iter().any(|&x| x < 0.0) {
                s = s.iter().zip(&ps).filter(|(_, &x)| x > 0.0).map(|(&i, _)| i).collect();
                continue;
            }
            let mut full = vec![0.0; n];
            for (&i, &x) in s.iter().zip(&ps) {
                full[i] = x;
            }
            let total: f64 = full.iter().sum();
            full.iter_mut().for_each(|x| *x /= total);
            let phi = self.potential(&full);
            let on: f64 = s.iter().map(|&i| phi[i]).sum::<f64>() / s.len() as f64;
            let scale = 1e-12 * (1.0 + on.abs());
            let add: Vec<usize> = (0..n).filter(|&i| full[i] == 0.0 && phi[i] < on - scale).collect();
            if add.is_empty() {
                return Some(full);
            }
            s.extend(add);
            s.sort_unstable();
            s.dedup();
        }
        None
    }
}

fn gap_of(p: &[f64], phi: &[f64]) -> f64 {
    let on = p.iter().zip(phi).filter(|(w, _)| **w > 0.0).map(|(_, v)| *v).fold(f64::MIN, f64::max);
    let all = phi.iter().cloned().fold(f64::MAX, f64::min);
    on - all
}

// active-set refinement, kept when it meets `tol` without raising the energy
// beyond roundoff
fn refine(prob: &Problem, p: &[f64], e: f64, tol: f64) -> Option<(Vec<f64>, f64)> {
    let pp = prob.polish(p)?;
    let ep = prob.energy(&pp);
    let slack = 8.0 * f64::EPSILON * (1.0 + e.abs());
    (ep <= e + slack && prob.gap(&pp) < tol).then_some((pp, ep))
}

/// Accelerated projected gradient with monotone restart, periodically refined
/// by an active-set solve, until the Frostman gap is below `options.tol`.
pub fn minimize_energy(field: &ExternalField, n: usize, options: &OracleOptions) -> Result<OracleResult> {
    let prob = Problem::new(field, n)?;
    let mut p = match &options.start {
        OracleStart::Uniform => vec![1.0 / n as f64; n],
        OracleStart::Weights(w) => {
            if w.len() != n {
                return Err(Error::GridSize { n: w.len(), min: n });
            }
            project_simplex(w)
        }
    };
    let top = prob.a.eigenvalues()[1..].iter().cloned().fold(f64::MIN, f64::max);
    let lip = 2.0 * top;
    let mut e = prob.energy(&p);
    let mut trace = vec![e];
    let mut y = p.clone();
    let mut t: f64 = 1.0;
    let mut iterations = 0;
    let finish = |p: Vec<f64>, e: f64, trace: Vec<f64>, iterations: usize| {
        let phi = prob.potential(&p);
        let gap = gap_of(&p, &phi);
        let robin = phi.iter().cloned().fold(f64::MAX, f64::min);
        OracleResult { measure: DiscreteMeasure { weights: p }, energy: e, robin, frostman_gap: gap, iterations, energy_trace: trace }
    };
    while iterations < options.max_iter {
        iterations += 1;
        let ay = prob.a.apply(&y);
        let step: Vec<f64> = (0..n).map(|i| y[i] - 2.0 * (ay[i] + prob.q[i]) / lip).collect();
        let next = project_simplex(&step);
        let en = prob.energy(&next);
        if en > e {
            if t == 1.0 {
                break;
            }
            y = p.clone();
            t = 1.0;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = (0..n).map(|i| next[i] + (t - 1.0) / tn * (next[i] - p[i])).collect();
        p = next;
        t = tn;
        e = en;
        trace.push(e);
        if iterations % 100 == 0 {
            if prob.gap(&p) < options.tol {
                return Ok(finish(p, e, trace, iterations));
            }
            if options.polish && iterations % 200 == 0 {
                if let Some((pp, ep)) = refine(&prob, &p, e, options.tol) {
                    trace.push(ep);
                    return Ok(finish(pp, ep, trace, iterations));
                }
            }
        }
    }
    // stopped at the energy floor or the iteration cap
    if options.polish {
        if let Some((pp, ep)) = refine(&prob, &p, e, options.tol) {
            trace.push(ep);
            return Ok(finish(pp, ep, trace, iterations));
        }
    }
    let gap = prob.gap(&p);
    if gap < options.tol {
        return Ok(finish(p, e, trace, iterations));
    }
    Err(Error::OracleNoConvergence { iterations, gap })
}

/// `max_{p_i > 0} (U + Q)_i - min_i (U + Q)_i` with the oracle's kernel.
pub fn frostman_gap(measure: &DiscreteMeasure, field: &ExternalField) -> Result<f64> {
    let prob = Problem::new(field, measure.n())?;
    Ok(prob.gap(&measure.weights))
}

/// Discrete energy `pᵀAp + 2qᵀp` of a measure.
pub fn discrete_energy(measure: &DiscreteMeasure, field: &ExternalField) -> Result<f64> {
    Ok(Problem::new(field, measure.n())?.energy(&measure.weights))
}

/// Runs of weights above `threshold/N`, merged across `2π`.
pub fn extract_support(measure: &DiscreteMeasure, threshold: f64) -> Result<ArcSet> {
    let cut = threshold / measure.n() as f64;
    let mask: Vec<bool> = measure.weights.iter().map(|&w| w > cut).collect();
    ArcSet::from_mask(&mask)
}

/// Energies on `n` and `2n` grids and the two-grid extrapolation `2V(2n) - V(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

pub fn extrapolated_energy(field: &ExternalField, n: usize, options: &OracleOptions) -> Result<Extrapolation> {
    let coarse = minimize_energy(field, n, options)?.energy;
    let mut fine_options = options.clone();
    if let OracleStart::Weights(_) = fine_options.start {
        fine_options.start = OracleStart::Uniform;
    }
    let fine = minimize_energy(field, 2 * n, &fine_options)?.energy;
    Ok(Extrapolation { coarse, fine, extrapolated: 2.0 * fine - coarse })
}
