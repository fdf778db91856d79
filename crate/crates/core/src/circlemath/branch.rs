use num_complex::Complex64;

use super::arcs::{unwrap_near, Arc, ArcSet};
use crate::{Error, Result};

/// Distance below which an off-cut evaluation is refused.
pub const CUT_GUARD: f64 = 1e-13;

/// The branch of `sqrt(R(z))`, `R(z) = ∏ (z - a_k)(z - b_k)`, analytic off the arcs
/// and normalized by `sqrt(R(z)) / z^K → 1` at infinity.
#[derive(Debug, Clone)]
pub struct SqrtRBranch {
    arcs: Vec<Arc>,
    // sign of the analytic boundary formula on each arc, fixed against off-cut values
    signs: Vec<f64>,
}

/// `sin(u/2) / (u/2)`.
fn sinc_half(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 24.0
    } else {
        (0.5 * u).sin() / (0.5 * u)
    }
}

// (z - b) sqrt((z - a)/(z - b)) with the square root cut along the image of the arc
fn arc_factor(arc: &Arc, z: Complex64) -> Complex64 {
    let (a, b) = arc.endpoints();
    let h = (z - a) / (z - b);
    let delta = arc.half_width();
    let rot = Complex64::from_polar(1.0, delta);
    (z - b) * (h * rot).sqrt() * rot.conj().sqrt()
}

impl SqrtRBranch {
    pub fn new(support: &ArcSet) -> Result<Self> {
        if support.is_full_circle() || support.is_empty() {
            return Err(Error::InvalidArcs("square-root branch needs at least one proper arc".into()));
        }
        let mut branch = SqrtRBranch { arcs: support.arcs().to_vec(), signs: vec![1.0; support.len()] };
        for (lo, hi) in support.gaps() {
            let anchor = Complex64::from_polar(1.0 - 1e-6, 0.5 * (lo + hi));
            let continued = branch.continue_from_infinity(anchor);
            let formula = branch.offcut_unchecked(anchor);
            if (formula - continued).norm() > 1e-8 * formula.norm() {
                return Err(Error::InvalidArcs("square-root branch could not be anchored".into()));
            }
        }
        for k in 0..branch.arcs.len() {
            let mid = branch.arcs[k].mid();
            let inside = branch.offcut_unchecked(Complex64::from_polar(1.0 - 1e-9, mid));
            let raw = branch.boundary_on_arc(k, mid);
            branch.signs[k] = if (raw * inside.conj()).re >= 0.0 { 1.0 } else { -1.0 };
        }
        Ok(branch)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// `R(z)` as a plain product.
    pub fn r_poly(&self, z: Complex64) -> Complex64 {
        self.arcs
            .iter()
            .map(|arc| {
                let (a, b) = arc.endpoints();
                (z - a) * (z - b)
            })
            .product()
    }

    /// Distance from `z` to the union of arcs.
    pub fn distance_to_cut(&self, z: Complex64) -> f64 {
        let theta = z.arg();
        self.arcs
            .iter()
            .map(|arc| {
                if z.norm() > 0.0 && arc.x_of(theta).abs() <= 1.0 {
                    (z.norm() - 1.0).abs()
                } else {
                    let (a, b) = arc.endpoints();
                    (z - a).norm().min((z - b).norm())
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Branch value at `z` off the arcs.
    pub fn offcut(&self, z: Complex64) -> Result<Complex64> {
        if self.distance_to_cut(z) <= CUT_GUARD {
            return Err(Error::OnCut { z });
        }
        Ok(self.offcut_unchecked(z))
    }

    fn offcut_unchecked(&self, z: Complex64) -> Complex64 {
        self.arcs.iter().map(|arc| arc_factor(arc, z)).product()
    }

    // step along the ray from 10^6 to the target, tracking the sign continuously
    fn continue_from_infinity(&self, target: Complex64) -> Complex64 {
        let dir = target / target.norm();
        let roots: Vec<Complex64> = self
            .arcs
            .iter()
            .flat_map(|a| {
                let (p, q) = a.endpoints();
                [p, q]
            })
            .collect();
        let k = self.arcs.len() as i32;
        let mut r = 1e6;
        let mut z = dir * r;
        let tail: Complex64 = roots.iter().map(|&p| Complex64::new(1.0, 0.0) - p / z).product();
        let mut value = z.powi(k) * tail.sqrt();
        while r > target.norm() {
            let nearest = roots.iter().map(|&p| (z - p).norm()).fold(f64::INFINITY, f64::min);
            r = (r - 0.1 * nearest).max(target.norm());
            z = dir * r;
            let s = self.r_poly(z).sqrt();
            value = if (s - value).norm() <= (s + value).norm() { s } else { -s };
        }
        value
    }

    fn boundary_on_arc(&self, k: usize, theta: f64) -> Complex64 {
        let arc = &self.arcs[k];
        let m = arc.mid();
        let t = unwrap_near(theta, m);
        let sa = (0.5 * (t - arc.alpha)).sin();
        let sb = (0.5 * (arc.beta - t)).sin();
        let own = -2.0 * (sa * sb).max(0.0).sqrt() * Complex64::from_polar(1.0, 0.5 * (t + m));
        let z = Complex64::from_polar(1.0, theta);
        let others: Complex64 = self
            .arcs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, a)| arc_factor(a, z))
            .product();
        own * others
    }

    /// Arc index and stretched coordinate of `theta`, rejecting endpoints and gaps.
    pub fn locate(&self, theta: f64) -> Result<(usize, f64)> {
        for (k, arc) in self.arcs.iter().enumerate() {
            let x = arc.x_of(theta);
            if (x.abs() - 1.0).abs() < 1e-14 {
                return Err(Error::EndpointSingularity { theta });
            }
            if x.abs() < 1.0 {
                return Ok((k, x));
            }
        }
        Err(Error::OffSupport { theta })
    }

    /// Limit of `sqrt(R(r e^{iθ}))` as `r → 1⁻`, for `θ` inside an arc.
    pub fn boundary(&self, theta: f64) -> Result<Complex64> {
        let (k, _) = self.locate(theta)?;
        Ok(self.signs[k] * self.boundary_on_arc(k, theta))
    }

    /// Limit from outside the disk, the negative of [`boundary`](Self::boundary).
    pub fn boundary_outside(&self, theta: f64) -> Result<Complex64> {
        Ok(-self.boundary(theta)?)
    }

    /// Inside boundary value divided by `sqrt((θ - α_k)(β_k - θ))` at stretched
    /// coordinate `x` of arc `k`; smooth and nonvanishing on the closed arc.
    pub fn reduced(&self, k: usize, x: f64) -> Complex64 {
        let arc = &self.arcs[k];
        let delta = arc.half_width();
        let m = arc.mid();
        let t = m + delta * x;
        let s = sinc_half(delta * (1.0 + x)) * sinc_half(delta * (1.0 - x));
        let own = -s.sqrt() * Complex64::from_polar(1.0, 0.5 * (t + m));
        let z = Complex64::from_polar(1.0, t);
        let others: Complex64 = self
            .arcs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, a)| arc_factor(a, z))
            .product();
        self.signs[k] * own * others
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TAU;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn imaginary_axis() -> SqrtRBranch {
        SqrtRBranch::new(&ArcSet::new(&[(PI / 2.0, 3.0 * PI / 2.0)]).unwrap()).unwrap()
    }

    // brute-force continuation along the positive real axis from 10^6
    fn continue_real_axis(b: &SqrtRBranch, x_end: f64) -> Complex64 {
        let mut x: f64 = 1e6;
        let mut v = Complex64::new(x, 0.0);
        while x > x_end {
            x = (x * 0.999 - 1e-4).max(x_end);
            let s = b.r_poly(Complex64::new(x, 0.0)).sqrt();
            v = if (s - v).norm() < (s + v).norm() { s } else { -s };
        }
        v
    }

    #[test]
    fn value_at_origin() {
        let b = imaginary_axis();
        let v = b.offcut(Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
        let c = continue_real_axis(&b, 0.0);
        assert!((c - v).norm() < 1e-10);
    }

    #[test]
    fn normalized_at_infinity() {
        let b = imaginary_axis();
        let v = b.offcut(Complex64::new(1e6, 0.0)).unwrap();
        assert!((v / 1e6 - 1.0).norm() < 1e-6);
    }

    #[test]
    fn boundary_value_at_minus_one() {
        let b = imaginary_axis();
        let v = b.boundary(PI).unwrap();
        assert!((v * v - 2.0).norm() < 1e-14);
        let near = b.offcut(Complex64::from_polar(0.999, PI)).unwrap();
        assert!((v - near).norm() < 0.01 * v.norm());
    }

    #[test]
    fn boundary_errors() {
        let b = imaginary_axis();
        assert!(matches!(b.boundary(PI / 2.0), Err(Error::EndpointSingularity { .. })));
        assert!(matches!(b.boundary(0.1), Err(Error::OffSupport { .. })));
        assert!(matches!(b.offcut(Complex64::new(-1.0, 0.0)), Err(Error::OnCut { .. })));
    }

    #[test]
    fn square_root_vanishes_at_endpoints() {
        let b = imaginary_axis();
        for eps in [1e-3, 1e-5] {
            let v = b.boundary(PI / 2.0 + eps).unwrap().norm();
            let expected = (b.r_poly(Complex64::from_polar(1.0, PI / 2.0 + eps))).norm().sqrt();
            assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
            assert!(v < 3.0 * eps.sqrt());
        }
    }

    #[test]
    fn reduced_matches_boundary() {
        let s = ArcSet::new(&[(0.3, 1.5), (2.0, 4.0), (4.5, 6.0)]).unwrap();
        let b = SqrtRBranch::new(&s).unwrap();
        for (k, arc) in s.arcs().iter().enumerate() {
            for x in [-0.9, -0.3, 0.0, 0.5, 0.99] {
                let t = arc.theta_at(x);
                let w = ((t - arc.alpha) * (arc.beta - t)).sqrt();
                let full = b.boundary(t).unwrap();
                assert!((b.reduced(k, x) * w - full).norm() < 1e-13);
            }
        }
    }

    fn arb_arcs() -> impl Strategy<Value = ArcSet> {
        (1usize..=3, prop::collection::vec(0.05f64..1.0, 6), 0.0f64..TAU).prop_map(|(k, fr, rot)| {
            let total: f64 = fr[..2 * k].iter().sum();
            let mut t = rot;
            let mut pairs = Vec::new();
            for j in 0..k {
                let a = t;
                t += TAU * fr[2 * j] / total;
                pairs.push((a, t));
                t += TAU * fr[2 * j + 1] / total;
            }
            ArcSet::new(&pairs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn squares_to_r(s in arb_arcs(), pts in prop::collection::vec((0.0f64..3.0, 0.0f64..TAU), 100)) {
            let b = SqrtRBranch::new(&s).unwrap();
            for (r, t) in pts {
                let z = Complex64::from_polar(r, t);
                if let Ok(v) = b.offcut(z) {
                    let rz = b.r_poly(z);
                    prop_assert!((v * v - rz).norm() <= 1e-12 * rz.norm().max(1e-300));
                }
            }
            let far = b.offcut(Complex64::new(1e6, 0.0)).unwrap() / 1e6f64.powi(s.len() as i32);
            prop_assert!((far - 1.0).norm() < 1e-5);
        }

        #[test]
        fn inside_and_outside_limits_are_opposite(s in arb_arcs()) {
            let b = SqrtRBranch::new(&s).unwrap();
            for arc in s.arcs() {
                for i in 0..32 {
                    let x = -0.95 + 1.9 * (i as f64 + 0.5) / 32.0;
                    let t = arc.theta_at(x);
                    let v = b.boundary(t).unwrap();
                    prop_assert!((b.boundary_outside(t).unwrap() + v).norm() < 1e-15 * (1.0 + v.norm()));
                    let inside = b.offcut(Complex64::from_polar(1.0 - 1e-7, t)).unwrap();
                    let outside = b.offcut(Complex64::from_polar(1.0 + 1e-7, t)).unwrap();
                    prop_assert!((inside - v).norm() < 1e-3 * v.norm());
                    prop_assert!((outside + v).norm() < 1e-3 * v.norm());
                }
            }
        }
    }
}
