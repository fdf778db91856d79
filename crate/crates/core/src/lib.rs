//! Weighted equilibrium measures on the unit circle.
//!
//! Given an external field `Q = -log w` on the unit circle, this crate finds the
//! probability measure minimizing the weighted logarithmic energy
//!
//! ```text
//!     I_w(mu) = ∫∫ log 1/|z - t| dmu(z) dmu(t) + 2 ∫ Q dmu
//! ```
//!
//! together with its support (a finite union of arcs or the whole circle), the
//! modified Robin constant `F_w`, the minimal energy `V_w` and the weighted
//! capacity `exp(-V_w)`.
//!
//! The pieces are:
//!
//! - [`field`]: polynomial weights, exponentials of trigonometric polynomials and
//!   sampled fields behind one [`ExternalField`] type.
//! - [`circlemath`]: arc sets, the square-root branch `sqrt(R)`, Chebyshev machinery
//!   for principal-value and logarithmic integrals, and the circle conjugate function.
//! - [`density`]: density formulas for full-circle and arc supports.
//! - [`support`]: full-circle detection and the endpoint equations, solved by
//!   damped Gauss-Newton.
//! - [`oracle`]: a brute-force discretized energy minimizer used as ground truth.
//! - [`verify`]: assembly of the final solution and every checkable identity.
//!
//! ```
//! use circeq::{ExternalField, PolynomialWeight, verify::{full_report, PipelineOptions}};
//!
//! let field = ExternalField::Polynomial(PolynomialWeight::single(3.0.into(), 1.0).unwrap());
//! let (solution, report) = full_report(&field, &PipelineOptions::default()).unwrap();
//! assert!(solution.support.is_full_circle());
//! assert!(report.pass);
//! ```

pub mod circlemath;
pub mod density;
mod error;
pub mod field;
pub mod io;
pub mod oracle;
pub mod support;
pub mod verify;

pub use circlemath::{Arc, ArcSet, SqrtRBranch};
pub use density::DensityProfile;
pub use error::{Error, Result};
pub use field::{ExternalField, PolynomialWeight, SampledField, TrigExponentialWeight};
pub use num_complex::Complex64;
pub use oracle::DiscreteMeasure;
pub use support::SupportSolveReport;
pub use verify::{EquilibriumSolution, ResidualReport};

/// `2π`.
pub const TAU: f64 = std::f64::consts::TAU;
