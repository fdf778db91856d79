use num_complex::Complex64;

use crate::circlemath::{ArcSet, SqrtRBranch};
use crate::{Error, Result};

/// Taylor coefficients of `P(u)^{-1/2}` for a polynomial with `P(0) = 1`, from
/// `2 P T' = -P' T`.
pub fn inv_sqrt_series(p: &[Complex64], terms: usize) -> Vec<Complex64> {
    let coef = |i: usize| p.get(i).copied().unwrap_or_default();
    let mut t = vec![Complex64::new(0.0, 0.0); terms];
    if terms == 0 {
        return t;
    }
    t[0] = Complex64::new(1.0, 0.0);
    for n in 0..terms - 1 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=n {
            acc += coef(i) * (n - i + 1) as f64 * t[n - i + 1];
        }
        let mut half = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            half += coef(i + 1) * (i + 1) as f64 * t[n - i];
        }
        t[n + 1] = -(acc + 0.5 * half) / (n + 1) as f64;
    }
    t
}

fn product_of_linear(roots_inv: impl Iterator<Item = Complex64>) -> Vec<Complex64> {
    // ∏ (1 - c u)
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for c in roots_inv {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (i, &v) in p.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= c * v;
        }
        p = next;
    }
    p
}

/// Laurent data of `1/(sqrt(R(ζ))(ζ - z))` at infinity (`s_k`) and at the origin (`r_k`).
#[derive(Debug, Clone)]
pub struct CoefficientTables {
    k: usize,
    up_to: usize,
    sqrt_r0: Complex64,
    // 1/sqrt(R(ζ)) = ζ^{-K} Σ at_infinity[n] ζ^{-n}
    at_infinity: Vec<Complex64>,
    // 1/sqrt(R(ζ)) = Σ at_origin[n] ζ^n
    at_origin: Vec<Complex64>,
}

/// Tables for `s_{K+1}, …, s_{up_to+1}` and `r_0, …, r_{up_to}` by power-series recursion.
pub fn build_coefficient_tables(support: &ArcSet, up_to: usize) -> Result<CoefficientTables> {
    let branch = SqrtRBranch::new(support)?;
    let k = support.len();
    if up_to < k {
        return Err(Error::TooManyArcs { count: k, bound: up_to });
    }
    let endpoints: Vec<Complex64> = support
        .arcs()
        .iter()
        .flat_map(|a| {
            let (p, q) = a.endpoints();
            [p, q]
        })
        .collect();
    let sqrt_r0 = branch.offcut(Complex64::new(0.0, 0.0))?;
    let terms = up_to + 2;
    let at_infinity = inv_sqrt_series(&product_of_linear(endpoints.iter().copied()), terms);
    let at_origin: Vec<Complex64> = inv_sqrt_series(&product_of_linear(endpoints.iter().map(|e| e.conj())), terms)
        .into_iter()
        .map(|c| c / sqrt_r0)
        .collect();
    Ok(CoefficientTables { k, up_to, sqrt_r0, at_infinity, at_origin })
}

impl CoefficientTables {
    pub fn arc_count(&self) -> usize {
        self.k
    }

    pub fn up_to(&self) -> usize {
        self.up_to
    }

    pub fn sqrt_r0(&self) -> Complex64 {
        self.sqrt_r0
    }

    /// Coefficients of `1/sqrt(R)` in `ζ^{-K-n}`.
    pub fn infinity_series(&self) -> &[Complex64] {
        &self.at_infinity
    }

    /// Coefficients of `1/sqrt(R)` in `ζ^n`.
    pub fn origin_series(&self) -> &[Complex64] {
        &self.at_origin
    }

    /// Coefficients of `s_k(z)` in ascending powers of `z`; empty for `k ≤ K`.
    pub fn s_coeffs(&self, k: usize) -> Vec<Complex64> {
        if k <= self.k {
            return Vec::new();
        }
        let j = k - self.k - 1;
        (0..=j).map(|n| self.at_infinity[j - n]).collect()
    }

    /// Coefficients of `r_k(z)` in powers `z^{-1}, …, z^{-(k+1)}`.
    pub fn r_coeffs(&self, k: usize) -> Vec<Complex64> {
        (0..=k).map(|n| -self.at_origin[k - n]).collect()
    }

    pub fn s(&self, k: usize, z: Complex64) -> Complex64 {
        self.s_coeffs(k).iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn r(&self, k: usize, z: Complex64) -> Complex64 {
        let inv = 1.0 / z;
        self.r_coeffs(k).iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * inv + c) * inv
    }
}
