use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result, TAU};

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Shifts `theta` by a multiple of `2π` into `(center - π, center + π]`.
pub fn unwrap_near(theta: f64, center: f64) -> f64 {
    let mut t = center + (theta - center).rem_euclid(TAU);
    if t > center + PI {
        t -= TAU;
    }
    t
}

/// A closed arc `{e^{iθ} : α ≤ θ ≤ β}` with `0 ≤ α < 2π` and `0 < β - α < 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub alpha: f64,
    pub beta: f64,
}

impl Arc {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let len = beta - alpha;
        if !alpha.is_finite() || !beta.is_finite() || !(len > 0.0) || len >= TAU {
            return Err(Error::InvalidArcs(format!("arc ({alpha}, {beta}) has length outside (0, 2π)")));
        }
        let a = wrap_angle(alpha);
        Ok(Arc { alpha: a, beta: a + len })
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.beta - self.alpha)
    }

    pub fn len(&self) -> f64 {
        self.beta - self.alpha
    }

    /// Complex endpoints `(e^{iα}, e^{iβ})`.
    pub fn endpoints(&self) -> (Complex64, Complex64) {
        (Complex64::from_polar(1.0, self.alpha), Complex64::from_polar(1.0, self.beta))
    }

    /// Angle at the stretched coordinate `x ∈ [-1, 1]`.
    pub fn theta_at(&self, x: f64) -> f64 {
        self.mid() + self.half_width() * x
    }

    /// Stretched coordinate of `theta`, after unwrapping around the midpoint.
    pub fn x_of(&self, theta: f64) -> f64 {
        (unwrap_near(theta, self.mid()) - self.mid()) / self.half_width()
    }

    /// Strict interior membership, modulo `2π`.
    pub fn contains(&self, theta: f64) -> bool {
        self.x_of(theta).abs() < 1.0
    }
}

/// A union of disjoint arcs, or the whole circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcSet {
    arcs: Option<Vec<Arc>>,
}

impl ArcSet {
    pub fn full_circle() -> Self {
        ArcSet { arcs: None }
    }

    /// Canonicalizes `(α, β)` pairs: `α` wrapped to `[0, 2π)`, arcs sorted by `α`,
    /// checked pairwise disjoint including across `2π`.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArcs("no arcs given".into()));
        }
        let mut arcs = pairs.iter().map(|&(a, b)| Arc::new(a, b)).collect::<Result<Vec<_>>>()?;
        arcs.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));
        for k in 0..arcs.len() {
            let next = if k + 1 < arcs.len() { arcs[k + 1].alpha } else { arcs[0].alpha + TAU };
            if !(arcs[k].beta < next) {
                return Err(Error::InvalidArcs(format!(
                    "arc ({}, {}) overlaps or touches its successor at {next}",
                    arcs[k].alpha, arcs[k].beta
                )));
            }
        }
        Ok(ArcSet { arcs: Some(arcs) })
    }

    /// From a flat list `[α_1, β_1, …, α_K, β_K]`.
    pub fn from_endpoints(flat: &[f64]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::InvalidArcs("odd number of endpoints".into()));
        }
        let pairs: Vec<(f64, f64)> = flat.chunks(2).map(|c| (c[0], c[1])).collect();
        Self::new(&pairs)
    }

    /// Runs of `true` on the grid `θ_j = 2πj/N`, merged across `2π`; a run
    /// `j0..=j1` becomes `(θ_{j0} - h/2, θ_{j1} + h/2)` with `h = 2π/N`.
    pub fn from_mask(mask: &[bool]) -> Result<Self> {
        let n = mask.len();
        if n == 0 || mask.iter().all(|&b| !b) {
            return Err(Error::EmptySupport);
        }
        let Some(start) = mask.iter().position(|&b| !b) else {
            return Ok(ArcSet::full_circle());
        };
        let h = TAU / n as f64;
        let mut pairs = Vec::new();
        let mut run: Option<usize> = None;
        for i in start..start + n + 1 {
            let on = i < start + n && mask[i % n];
            match (on, run) {
                (true, None) => run = Some(i),
                (false, Some(j0)) => {
                    pairs.push((j0 as f64 * h - 0.5 * h, (i - 1) as f64 * h + 0.5 * h));
                    run = None;
                }
                _ => {}
            }
        }
        ArcSet::new(&pairs)
    }

    pub fn is_full_circle(&self) -> bool {
        self.arcs.is_none()
    }

    /// The arcs; empty for the full circle.
    pub fn arcs(&self) -> &[Arc] {
        self.arcs.as_deref().unwrap_or(&[])
    }

    /// Number of arcs `K`; zero for the full circle.
    pub fn len(&self) -> usize {
        self.arcs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0 && !self.is_full_circle()
    }

    /// `[α_1, β_1, …, α_K, β_K]`.
    pub fn flat_endpoints(&self) -> Vec<f64> {
        self.arcs().iter().flat_map(|a| [a.alpha, a.beta]).collect()
    }

    /// Complementary arcs `(β_k, α_{k+1})` with `α_{K+1} = α_1 + 2π`.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let arcs = self.arcs();
        (0..arcs.len())
            .map(|k| {
                let next = if k + 1 < arcs.len() { arcs[k + 1].alpha } else { arcs[0].alpha + TAU };
                (arcs[k].beta, next)
            })
            .collect()
    }

    /// Index of the arc whose interior contains `theta`.
    pub fn locate(&self, theta: f64) -> Option<usize> {
        self.arcs().iter().position(|a| a.contains(theta))
    }

    /// Interior membership; every angle belongs to the full circle.
    pub fn contains(&self, theta: f64) -> bool {
        self.is_full_circle() || self.locate(theta).is_some()
    }

    /// Angular distance from `theta` to the nearest endpoint; infinite for the full circle.
    pub fn distance_to_endpoint(&self, theta: f64) -> f64 {
        self.arcs()
            .iter()
            .flat_map(|a| [a.alpha, a.beta])
            .map(|e| (unwrap_near(theta, e) - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_length(&self) -> f64 {
        if self.is_full_circle() {
            TAU
        } else {
            self.arcs().iter().map(Arc::len).sum()
        }
    }

    pub fn rotated(&self, theta0: f64) -> Self {
        match &self.arcs {
            None => self.clone(),
            Some(arcs) => {
                let pairs: Vec<(f64, f64)> = arcs.iter().map(|a| (a.alpha + theta0, a.beta + theta0)).collect();
                ArcSet::new(&pairs).expect("rotation preserves validity")
            }
        }
    }

    /// Scales every arc about its midpoint by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if self.is_full_circle() {
            return Ok(self.clone());
        }
        let pairs: Vec<(f64, f64)> = self
            .arcs()
            .iter()
            .map(|a| (a.mid() - factor * a.half_width(), a.mid() + factor * a.half_width()))
            .collect();
        ArcSet::new(&pairs)
    }

    /// Largest endpoint displacement between two sets with the same `K`, modulo `2π`.
    pub fn endpoint_distance(&self, other: &ArcSet) -> Option<f64> {
        if self.len() != other.len() || self.is_full_circle() != other.is_full_circle() {
            return None;
        }
        let a = self.flat_endpoints();
        let b = other.flat_endpoints();
        let n = a.len();
        if n == 0 {
            return Some(0.0);
        }
        // the canonical order may start at a different arc after a shift
        (0..self.len())
            .map(|s| {
                (0..n)
                    .map(|i| {
                        let (x, y) = (a[i], b[(i + 2 * s) % n]);
                        (unwrap_near(x, y) - y).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_order() {
        let s = ArcSet::new(&[(4.0, 5.0), (-0.5, 0.5), (2.0, 3.0)]).unwrap();
        let e = s.flat_endpoints();
        assert_eq!(s.len(), 3);
        assert!((e[0] - 2.0).abs() < 1e-15);
        assert!((e[4] - (TAU - 0.5)).abs() < 1e-15);
        assert!((e[5] - (TAU + 0.5)).abs() < 1e-15);
        for w in e.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(e[5] - e[0] < TAU);
        assert_eq!(s.gaps().len(), 3);
        assert!((s.gaps()[2].1 - (2.0 + TAU)).abs() < 1e-15);
    }

    #[test]
    fn overlaps_rejected() {
        assert!(ArcSet::new(&[(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(ArcSet::new(&[(0.0, 4.0), (4.5, 6.5)]).is_err());
        assert!(ArcSet::new(&[(1.0, 1.0)]).is_err());
        assert!(ArcSet::new(&[(0.0, TAU)]).is_err());
    }

    #[test]
    fn membership() {
        let s = ArcSet::new(&[(TAU - 0.5, TAU + 0.5)]).unwrap();
        assert!(s.contains(0.0));
        assert!(s.contains(TAU - 0.1));
        assert!(!s.contains(PI));
        assert_eq!(s.locate(0.2), Some(0));
        assert!(ArcSet::full_circle().contains(1.0));
        assert!((s.distance_to_endpoint(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mask_runs() {
        let mut mask = vec![false; 16];
        for i in [15, 0, 1, 6, 7, 8] {
            mask[i] = true;
        }
        let s = ArcSet::from_mask(&mask).unwrap();
        let h = TAU / 16.0;
        assert_eq!(s.len(), 2);
        let e = s.flat_endpoints();
        assert!((e[0] - 5.5 * h).abs() < 1e-12 && (e[1] - 8.5 * h).abs() < 1e-12);
        assert!((e[2] - 14.5 * h).abs() < 1e-12 && (e[3] - 17.5 * h).abs() < 1e-12);
        assert!(ArcSet::from_mask(&[true; 8]).unwrap().is_full_circle());
        assert!(matches!(ArcSet::from_mask(&[false; 8]), Err(Error::EmptySupport)));
    }

    proptest! {
        #[test]
        fn rotation_round_trip(t in -10.0f64..10.0, a in 0.0f64..3.0, l in 0.1f64..2.0) {
            let s = ArcSet::new(&[(a, a + l), (a + l + 0.5, a + l + 1.5)]).unwrap();
            let r = s.rotated(t).rotated(-t);
            prop_assert!(s.endpoint_distance(&r).unwrap() < 1e-12);
            let moved = s.rotated(t);
            prop_assert!((moved.total_length() - s.total_length()).abs() < 1e-12);
        }

        #[test]
        fn unwrap_lands_in_window(t in -50.0f64..50.0, c in -10.0f64..10.0) {
            let u = unwrap_near(t, c);
            prop_assert!(u > c - PI - 1e-12 && u <= c + PI + 1e-12);
            prop_assert!(((u - t) / TAU - ((u - t) / TAU).round()).abs() < 1e-9);
        }
    }
}
