//! Derivation-operator calculus for nonlinear Cauchy problems.
//!
//! The crate computes formal operator solutions `e^{tA} u` of evolution
//! equations `dt v = F(x, v, D^a v)` as Taylor coefficient sequences `A^n u`,
//! checks the algebraic identities those sequences satisfy, builds smooth
//! mollified sums of the formal series, and realizes the construction
//! numerically for the Leray form of the incompressible Navier-Stokes equations
//! on a periodic box.
//!
//! Module map:
//! - [`expr`]: symbolic differential polynomials with canonical forms.
//! - [`parser`]: the system description format.
//! - [`derivation`]: the operator `A` and Taylor coefficients.
//! - [`nonlocal`]: spectral Navier-Stokes realization.
//! - [`stencil`]: exact finite-difference weights.
//! - [`borel`]: cutoff function, radii and mollified sums.
//! - [`verify`]: golden cases, identity checks and reference integrators.

pub mod expr;
pub mod parser;
pub mod derivation;
pub mod nonlocal;
pub mod stencil;
pub mod borel;
pub mod verify;
