//! Verification harness: golden cases with closed-form solutions, the
//! truncated-series identities, reference integrators and residuals.
//!
//! Every check yields a [`Check`]: a measured error against a tolerance, with
//! `pass` exactly when `error <= tolerance`. Checks that cannot run (expression
//! swell past the term cap) are reported as skipped, not failed.

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::borel::BorelError;
use crate::derivation::DerivationError;
use crate::expr::ExprError;
use crate::nonlocal::NonlocalError;
use crate::parser::ParseError;

mod golden;
mod identities;
mod reference;
mod residual;
mod series;
mod suite;

pub use golden::{builtin, builtin_names, time_jet, GoldenCase};
pub use identities::{
    algebra_check, compare_with_exact, equivalence_test, homomorphism_test, reference_jet_check, Equivalence,
};
pub use reference::{fd_jet, half_width, ns_reference, FdJet, MethodOfLines, State};
pub use residual::{residual, ResidualRow};
pub use series::{compose_poly, TruncSeries};
pub use suite::{run_case, run_suite, SuiteOptions};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error(transparent)]
    Borel(#[from] BorelError),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Unsupported(String),
    #[error("reference integration blew up at t = {t}; try a smaller dt")]
    Blowup { t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub error: Option<f64>,
    pub tolerance: f64,
    pub detail: serde_json::Value,
    #[serde(skip)]
    pub runtime: Duration,
}

impl Check {
    /// Passes exactly when `error <= tolerance` (NaN fails).
    pub fn measured(name: impl Into<String>, error: f64, tolerance: f64, detail: serde_json::Value) -> Self {
        Check {
            name: name.into(),
            status: if error <= tolerance { Status::Pass } else { Status::Fail },
            error: Some(error),
            tolerance,
            detail,
            runtime: Duration::ZERO,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Skip,
            error: None,
            tolerance: 0.0,
            detail: serde_json::json!({ "reason": reason.into() }),
            runtime: Duration::ZERO,
        }
    }

    pub fn failed(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Fail,
            error: None,
            tolerance: 0.0,
            detail: serde_json::json!({ "reason": reason.into() }),
            runtime: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_runtime(mut self, d: Duration) -> Self {
        self.runtime = d;
        self
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    /// No check failed (skips are allowed).
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn count(&self, s: Status) -> usize {
        self.checks.iter().filter(|c| c.status == s).count()
    }

    /// Deterministic: runtimes are left out, see [`Self::timings_json`].
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.checks).expect("plain data")
    }

    pub fn timings_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.checks
                .iter()
                .map(|c| serde_json::json!({ "name": c.name, "seconds": c.runtime.as_secs_f64() }))
                .collect(),
        )
    }
}

/// Runs `f`, stamping the elapsed time on the returned check.
pub(crate) fn timed(f: impl FnOnce() -> Check) -> Check {
    let start = std::time::Instant::now();
    let c = f();
    c.with_runtime(start.elapsed())
}
