//! The evolution operator `A` and its iterates.
//!
//! `A` is the derivation fixed by `A(u_i) = F_i`, `A(D^a u_i) = D^a F_i`, zero on
//! coordinates and parameters. For systems with an explicit clock `s` the
//! augmented operator additionally maps `s` to 1.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    set_atom_poly, substitute_poly, to_expr, to_poly, Atom, Derivation, Expr, ExprError, MultiIndex, Poly, Printer,
    SpatialDerivative,
};
use crate::parser::PdeSystem;

/// Default bound on the number of terms in a single coefficient.
pub const DEFAULT_TERM_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerivationError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("the operator is not defined symbolically on leray_pressure terms")]
    PressureMarker,
    #[error("unknown {0} is not an unknown of the system")]
    UnknownSymbol(String),
    #[error("time symbol s requires an augmented system (see augment_time)")]
    NotAugmented,
    #[error("system is not time_dependent")]
    NotTimeDependent,
    #[error("system is already augmented")]
    AlreadyAugmented,
    #[error("expression swell: coefficient {order} of {unknown} has {terms} terms (cap {cap})")]
    TermCap { unknown: String, order: usize, terms: usize, cap: usize },
}

/// `A` for a fixed system, with `D^a F_i` memoized.
#[derive(Debug)]
pub struct Operator<'a> {
    sys: &'a PdeSystem,
    rhs: Vec<Poly>,
    derived: RefCell<BTreeMap<(usize, MultiIndex), Poly>>,
}

impl<'a> Operator<'a> {
    pub fn new(sys: &'a PdeSystem) -> Result<Self, DerivationError> {
        if sys.has_pressure() {
            return Err(DerivationError::PressureMarker);
        }
        if sys.time_dependent && !sys.augmented {
            return Err(DerivationError::NotAugmented);
        }
        let rhs = sys.rhs.iter().map(to_poly).collect::<Result<Vec<_>, _>>()?;
        Ok(Operator { sys, rhs, derived: RefCell::new(BTreeMap::new()) })
    }

    pub fn system(&self) -> &PdeSystem {
        self.sys
    }

    /// `D^alpha F_i`.
    pub fn derived_rhs(&self, i: usize, alpha: &MultiIndex) -> Result<Poly, DerivationError> {
        let key = (i, alpha.clone());
        if let Some(p) = self.derived.borrow().get(&key) {
            return Ok(p.clone());
        }
        let mut p = self.rhs[i].clone();
        for j in alpha.dims() {
            p = SpatialDerivative(j).apply(&p)?;
        }
        self.derived.borrow_mut().insert(key, p.clone());
        Ok(p)
    }

    pub fn apply_expr(&self, e: &Expr) -> Result<Expr, DerivationError> {
        Ok(to_expr(&self.apply(&to_poly(e)?)?))
    }
}

impl Derivation for Operator<'_> {
    type Error = DerivationError;

    fn atom_image(&self, atom: &Atom) -> Result<Option<Poly>, DerivationError> {
        match atom {
            Atom::Param(_) | Atom::Var(_) => Ok(None),
            Atom::Time => {
                if self.sys.augmented {
                    Ok(Some(Poly::one()))
                } else {
                    Err(DerivationError::NotAugmented)
                }
            }
            Atom::Unknown(_) | Atom::Deriv(..) => {
                let (name, alpha) = atom.unknown_parts().unwrap();
                let i = self
                    .sys
                    .index_of(name)
                    .ok_or_else(|| DerivationError::UnknownSymbol(name.to_string()))?;
                Ok(Some(self.derived_rhs(i, &alpha)?))
            }
            Atom::Pressure(..) => Err(DerivationError::PressureMarker),
            Atom::Func(..) => unreachable!("function atoms go through the chain rule"),
        }
    }
}

/// `A e` in canonical form.
pub fn apply_a(e: &Expr, sys: &PdeSystem) -> Result<Expr, DerivationError> {
    if e.mentions_pressure() {
        return Err(DerivationError::PressureMarker);
    }
    Operator::new(sys)?.apply_expr(e)
}

/// Adds the clock rule `A s = 1`; the right-hand sides already use `s` for time.
pub fn augment_time(sys: &PdeSystem) -> Result<PdeSystem, DerivationError> {
    if !sys.time_dependent {
        return Err(DerivationError::NotTimeDependent);
    }
    if sys.augmented {
        return Err(DerivationError::AlreadyAugmented);
    }
    let mut out = sys.clone();
    out.augmented = true;
    Ok(out)
}

/// `a_n = A^n u` for every unknown, `n = 0..=order`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSeries {
    pub system: Arc<PdeSystem>,
    pub order: usize,
    /// `symbolic[i][n]`: `A^n u_i` as a differential polynomial in the unknowns.
    pub symbolic: Vec<Vec<Expr>>,
    /// `coefficients[i][n]`: the same with the initial data substituted.
    pub coefficients: Vec<Vec<Expr>>,
}

#[derive(Serialize)]
struct SeriesRecord<'a> {
    unknown: &'a str,
    order: usize,
    coefficients: Vec<String>,
    symbolic: Vec<String>,
}

impl CoefficientSeries {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Coefficients of the named unknown, initial data substituted.
    pub fn of(&self, unknown: &str) -> Option<&[Expr]> {
        self.system.index_of(unknown).map(|i| self.coefficients[i].as_slice())
    }

    /// JSON array, one record per unknown.
    pub fn to_json(&self) -> serde_json::Value {
        let printer = Printer::new(self.system.naming());
        let records: Vec<SeriesRecord> = self
            .system
            .unknowns
            .iter()
            .enumerate()
            .map(|(i, u)| SeriesRecord {
                unknown: u,
                order: self.order,
                coefficients: self.coefficients[i].iter().map(|e| printer.to_string(e)).collect(),
                symbolic: self.symbolic[i].iter().map(|e| printer.to_string(e)).collect(),
            })
            .collect();
        serde_json::to_value(records).expect("series records serialize")
    }
}

/// [`taylor_coefficients`] with the default term cap.
pub fn taylor_coefficients(sys: &PdeSystem, order: usize) -> Result<CoefficientSeries, DerivationError> {
    taylor_coefficients_capped(sys, order, DEFAULT_TERM_CAP)
}

/// Iterates `A` on every unknown. Time-dependent systems are augmented first
/// and each iterate is evaluated at `s = 0` afterwards; the recursion itself
/// keeps `s` symbolic.
pub fn taylor_coefficients_capped(
    sys: &PdeSystem,
    order: usize,
    cap: usize,
) -> Result<CoefficientSeries, DerivationError> {
    let sys = if sys.time_dependent && !sys.augmented { augment_time(sys)? } else { sys.clone() };
    let op = Operator::new(&sys)?;
    let bindings: BTreeMap<Arc<str>, Poly> = sys
        .unknowns
        .iter()
        .zip(&sys.init)
        .map(|(u, e)| Ok((u.clone(), to_poly(e)?)))
        .collect::<Result<_, ExprError>>()?;
    let zero = Poly::zero();

    let mut symbolic = Vec::with_capacity(sys.len());
    let mut coefficients = Vec::with_capacity(sys.len());
    for u in &sys.unknowns {
        let mut current = Poly::atom(Atom::Unknown(u.clone()));
        let mut sym_row = Vec::with_capacity(order + 1);
        let mut val_row = Vec::with_capacity(order + 1);
        for n in 0..=order {
            if n > 0 {
                current = op.apply(&current)?;
            }
            if current.len() > cap {
                return Err(DerivationError::TermCap { unknown: u.to_string(), order: n, terms: current.len(), cap });
            }
            let at_zero = if sys.augmented { set_atom_poly(&current, &Atom::Time, &zero)? } else { current.clone() };
            val_row.push(to_expr(&substitute_poly(&at_zero, &bindings)?));
            sym_row.push(to_expr(&at_zero));
        }
        symbolic.push(sym_row);
        coefficients.push(val_row);
    }
    Ok(CoefficientSeries { system: Arc::new(sys), order, symbolic, coefficients })
}
