//! Numerical toolkit for radial semilinear wave equations with potentials.
//!
//! The crate evaluates the explicit radial propagator in every dimension,
//! solves the Duhamel integral equation by Picard iteration in weighted
//! spacetime norms, and provides the experiments around finite-time blow-up:
//! lifespan sweeps, ODE comparison, and ground-state driven blow-up for
//! potentials with a negative eigenvalue. A finite-difference solver serves as
//! an independent oracle.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod duhamel;
pub mod error;
pub mod fd;
pub mod field;
pub mod kernels;
pub mod norms;
pub mod problem;
pub mod profile;
pub mod quadrature;
pub mod riemann;
pub mod spectral;

pub use error::{Error, Result};
pub use kernels::{
    orthopoly, positivity_constants, u_kernel, z_ratio, DimensionParams, PolyKind,
    PositivityConstants,
};
pub use profile::{Extrapolation, RadialProfile};
pub use riemann::{apply_riemann, homogeneous_solution, QuadratureSpec};
