//! Geometry and singular-integral machinery on the unit circle.

pub mod arcs;
pub mod branch;
pub mod chebyshev;
pub mod conjugate;
pub mod potential;
pub mod pv;
pub mod quadrature;

pub use arcs::{unwrap_near, wrap_angle, Arc, ArcSet};
pub use branch::SqrtRBranch;
pub use conjugate::conjugate_function;
pub use potential::{log_kernel_potential, MeasureSamples};
pub use pv::{pv_cauchy_on_arcs, ArcPiece, CauchyIntegral};
