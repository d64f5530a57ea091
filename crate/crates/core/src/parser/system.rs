use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::sync::Arc;

use super::ParseError;
use crate::expr::poly::rational_to_f64;
use crate::expr::{Expr, Naming, Printer, Rational};

/// A Cauchy problem `dt(v_i) = F_i(x, v, D^a v)`, `v_i(0, x) = u_i(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeSystem {
    pub dim: usize,
    pub unknowns: Vec<Arc<str>>,
    /// Canonical right-hand sides, one per unknown.
    pub rhs: Vec<Expr>,
    /// Canonical closed-form initial data, one per unknown.
    pub init: Vec<Expr>,
    /// Declared parameter defaults.
    pub params: BTreeMap<String, Rational>,
    pub time_dependent: bool,
    /// Set by [`crate::derivation::augment_time`]: the operator carries the
    /// extra `d/ds` term.
    pub augmented: bool,
}

impl PdeSystem {
    /// Builds a system, checking the structural invariants.
    pub fn new(
        dim: usize,
        unknowns: Vec<Arc<str>>,
        rhs: Vec<Expr>,
        init: Vec<Expr>,
        params: BTreeMap<String, Rational>,
        time_dependent: bool,
    ) -> Result<Self, ParseError> {
        if rhs.len() != unknowns.len() || init.len() != unknowns.len() {
            return Err(ParseError::semantic("", "one equation and one initial datum per unknown are required"));
        }
        let rhs = rhs.iter().map(|e| e.normalized()).collect::<Result<Vec<_>, _>>()?;
        let init = init.iter().map(|e| e.normalized()).collect::<Result<Vec<_>, _>>()?;
        for e in &rhs {
            for u in e.unknown_names() {
                if !unknowns.contains(&u) {
                    return Err(ParseError::semantic(&u, format!("unknown {u} not declared")));
                }
            }
            if e.mentions_time() && !time_dependent {
                return Err(ParseError::semantic("s", "time symbol s used but the system is not time_dependent"));
            }
        }
        for (u, e) in unknowns.iter().zip(&init) {
            if let Some(w) = e.unknown_names().first() {
                return Err(ParseError::semantic(w, format!("initial data for {u} references unknown {w}")));
            }
            if e.mentions_time() {
                return Err(ParseError::semantic("s", format!("initial data for {u} references the time symbol s")));
            }
        }
        for e in rhs.iter().chain(&init) {
            if let Some(j) = e.max_var_index() {
                if j >= dim {
                    return Err(ParseError::semantic(
                        &format!("x{}", j + 1),
                        format!("dimension mismatch: x{} used in a {dim}-dimensional system", j + 1),
                    ));
                }
            }
        }
        Ok(PdeSystem { dim, unknowns, rhs, init, params, time_dependent, augmented: false })
    }

    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.unknowns.iter().position(|u| u.as_ref() == name)
    }

    pub fn has_pressure(&self) -> bool {
        self.rhs.iter().any(Expr::mentions_pressure)
    }

    /// Parameter names referenced anywhere, declared or not.
    pub fn referenced_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.rhs.iter().chain(&self.init) {
            e.visit(&mut |n| {
                if let Expr::Param(p) = n {
                    out.insert(p.to_string());
                }
            });
        }
        out
    }

    /// Numeric parameter values: declared defaults overridden by `overrides`.
    pub fn param_values(&self, overrides: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> =
            self.params.iter().map(|(k, v)| (k.clone(), rational_to_f64(v))).collect();
        for (k, v) in overrides {
            out.insert(k.clone(), *v);
        }
        out
    }

    pub fn naming(&self) -> Naming {
        Naming::for_dim(self.dim)
    }

    /// Canonical text form; parses back to an identical system (up to the
    /// `augmented` flag, which is not part of the text format).
    pub fn serialize(&self) -> String {
        let printer = Printer::new(self.naming());
        let mut out = String::new();
        let _ = writeln!(out, "dim {};", self.dim);
        let names: Vec<&str> = self.unknowns.iter().map(|u| u.as_ref()).collect();
        let _ = writeln!(out, "unknowns {};", names.join(", "));
        for (k, v) in &self.params {
            let _ = writeln!(out, "param {k} = {};", printer.to_string(&Expr::Num(v.clone())));
        }
        if self.time_dependent {
            let _ = writeln!(out, "time_dependent;");
        }
        for (u, f) in self.unknowns.iter().zip(&self.rhs) {
            let _ = writeln!(out, "eq: dt({u}) = {};", printer.to_string(f));
        }
        for (u, e) in self.unknowns.iter().zip(&self.init) {
            let _ = writeln!(out, "init: {u} = {};", printer.to_string(e));
        }
        out
    }
}
