//! Borel-Whitney mollified sums.
//!
//! A formal series `sum b_n(x) t^n` becomes the smooth function
//! `sum b_n(x) t^n psi(t / r_n)` with `r_n = 1 / (n! (1 + beta_n))` and
//! `beta_n = max_{0<i<n} sup |b_n^(i)|` over the closed box. Sups are estimated
//! by sampling a lattice and its `2m - 1` refinement; see [`SupEstimate`].

use thiserror::Error;

use crate::expr::ExprError;

mod checks;
mod cutoff;
mod series;

pub use checks::{
    mollified_csv, tail_bound_check, taylor_jet_check, DerivativeTail, DerivativeTerm, JetOrder, JetReport, TailReport,
    TailTerm,
};
pub use cutoff::{cutoff, cutoff_derivative, cutoff_tf, m1};
pub use series::{radius, BoxDomain, MollifiedSeries, SupEstimate, SupOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BorelError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("domain: {0}")]
    Domain(String),
    #[error("coefficient: {0}")]
    Coefficient(String),
    #[error("non-finite value in derivative {i} of b_{n}")]
    NonFinite { n: usize, i: usize },
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("{0}")]
    Order(String),
}

#[cfg(test)]
mod tests;
