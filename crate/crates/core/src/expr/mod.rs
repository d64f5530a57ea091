//! Symbolic expressions over unknowns, spatial variables and parameters.
//!
//! [`Expr`] is the user-facing immutable tree. Any tree can be brought to a unique
//! canonical form with [`normalize`]; canonical trees compare structurally. The
//! canonical form is computed through the expanded polynomial representation in
//! [`poly`], which is also the working representation for repeated derivations.

pub mod derive;
pub mod eval;
pub mod poly;
pub mod random;
mod print;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use derive::{spatial_derivative, Derivation, ParamDerivative, SpatialDerivative, TimeDerivative};
pub use eval::{eval_pointwise, Compiled, EvalEnv};
pub use poly::{Atom, Monomial, Poly};
pub use print::{Naming, Printer};

/// Exact rational coefficient.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("exponent must be an integer constant, found `{0}`")]
    NonIntegerExponent(String),
    #[error("exponent {0} out of range")]
    ExponentOverflow(i64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound unknown `{0}`")]
    UnboundUnknown(String),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("time symbol `s` has no value here")]
    UnboundTime,
    #[error("pressure marker cannot be evaluated pointwise")]
    PressureMarker,
    #[error("domain error: {0}")]
    Domain(String),
}

/// Elementary functions closed under differentiation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Recip,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Recip => "recip",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "recip" => Func::Recip,
            _ => return None,
        })
    }

    pub fn apply_f64(self, x: f64) -> Result<f64, ExprError> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Exp => Ok(x.exp()),
            Func::Log if x > 0.0 => Ok(x.ln()),
            Func::Log => Err(ExprError::Domain(format!("log of non-positive value {x}"))),
            Func::Recip if x != 0.0 => Ok(1.0 / x),
            Func::Recip => Err(ExprError::DivisionByZero),
        }
    }
}

/// Per-dimension derivative counts; trailing zeros are trimmed so the
/// representation does not depend on the ambient dimension.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn new(counts: Vec<u32>) -> Self {
        let mut m = MultiIndex(counts);
        m.trim();
        m
    }

    /// Unit index `e_j`.
    pub fn unit(j: usize) -> Self {
        let mut v = vec![0; j + 1];
        v[j] = 1;
        MultiIndex(v)
    }

    /// Multi-index counting occurrences of each dimension in `dims`.
    pub fn from_dims(dims: &[usize]) -> Self {
        let mut m = MultiIndex::zero();
        for &j in dims {
            m = m.bumped(j);
        }
        m
    }

    fn trim(&mut self) {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Count for dimension `j`.
    pub fn get(&self, j: usize) -> u32 {
        self.0.get(j).copied().unwrap_or(0)
    }

    /// Number of stored dimensions (highest non-zero dimension + 1).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bumped(&self, j: usize) -> MultiIndex {
        let mut v = self.0.clone();
        if v.len() <= j {
            v.resize(j + 1, 0);
        }
        v[j] += 1;
        MultiIndex(v)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let n = self.0.len().max(other.0.len());
        MultiIndex::new((0..n).map(|j| self.get(j) + other.get(j)).collect())
    }

    /// Flattened list of dimensions, each repeated by its count, ascending.
    pub fn dims(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
            .collect()
    }
}

/// Immutable expression tree.
///
/// Arbitrary shapes are allowed; [`normalize`] produces the canonical one, in which
/// derivatives sit only on unknowns or pressure markers, sums and products are
/// flat and sorted, and constants are folded.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Num(Rational),
    Param(Arc<str>),
    Var(usize),
    /// Clock symbol `s` of time-augmented systems.
    Time,
    Unknown(Arc<str>),
    Deriv(Box<Expr>, MultiIndex),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
    /// Nonlocal Leray pressure marker `P[v1, .., vd]`.
    Pressure(Vec<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Num(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(Arc::from(name))
    }

    pub fn var(j: usize) -> Expr {
        Expr::Var(j)
    }

    pub fn unknown(name: &str) -> Expr {
        Expr::Unknown(Arc::from(name))
    }

    /// `D(e; x_{dims[0]}, ..)`.
    pub fn deriv(e: Expr, dims: &[usize]) -> Expr {
        Expr::Deriv(Box::new(e), MultiIndex::from_dims(dims))
    }

    pub fn func(f: Func, e: Expr) -> Expr {
        Expr::Func(f, Box::new(e))
    }

    pub fn sin(e: Expr) -> Expr {
        Expr::func(Func::Sin, e)
    }

    pub fn cos(e: Expr) -> Expr {
        Expr::func(Func::Cos, e)
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::func(Func::Exp, e)
    }

    pub fn log(e: Expr) -> Expr {
        Expr::func(Func::Log, e)
    }

    pub fn powi(e: Expr, k: i64) -> Expr {
        Expr::Pow(Box::new(e), Box::new(Expr::int(k)))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(c) if c.is_zero())
    }

    /// Canonical form of `self` (see [`normalize`]).
    pub fn normalized(&self) -> Result<Expr, ExprError> {
        normalize(self)
    }

    pub fn to_poly(&self) -> Result<Poly, ExprError> {
        to_poly(self)
    }

    /// Number of top-level terms in canonical form (1 for non-sums).
    pub fn term_count(&self) -> usize {
        match self {
            Expr::Add(v) => v.len(),
            _ => 1,
        }
    }

    /// Pre-order visit of every node.
    pub fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Deriv(e, _) | Expr::Func(_, e) => e.visit(f),
            Expr::Pow(b, e) => {
                b.visit(f);
                e.visit(f);
            }
            Expr::Add(v) | Expr::Mul(v) | Expr::Pressure(v) => v.iter().for_each(|c| c.visit(f)),
            _ => {}
        }
    }

    pub fn contains<P: Fn(&Expr) -> bool>(&self, pred: P) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= pred(e));
        found
    }

    pub fn mentions_unknown(&self) -> bool {
        self.contains(|e| matches!(e, Expr::Unknown(_)))
    }

    pub fn mentions_time(&self) -> bool {
        self.contains(|e| matches!(e, Expr::Time))
    }

    pub fn mentions_pressure(&self) -> bool {
        self.contains(|e| matches!(e, Expr::Pressure(_)))
    }

    /// Names of unknowns mentioned anywhere in the tree, sorted.
    pub fn unknown_names(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Unknown(n) = e {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out.sort();
        out
    }

    /// Largest spatial variable index mentioned, including derivative directions.
    pub fn max_var_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        self.visit(&mut |e| {
            let idx = match e {
                Expr::Var(j) => Some(*j),
                Expr::Deriv(_, alpha) => alpha.len().checked_sub(1),
                _ => None,
            };
            if let Some(j) = idx {
                best = Some(best.map_or(j, |b: usize| b.max(j)));
            }
        });
        best
    }

    /// Multiplies by an exact rational constant, returning canonical form.
    pub fn scaled(&self, c: &Rational) -> Result<Expr, ExprError> {
        Ok(to_expr(&to_poly(self)?.scale(c)))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $build:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $build(self, rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::Add(vec![a, b]));
binop!(Mul, mul, |a, b| Expr::Mul(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::Add(vec![a, Expr::Mul(vec![Expr::int(-1), b])]));
binop!(Div, div, |a, b| Expr::Mul(vec![a, Expr::powi(b, -1)]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Mul(vec![Expr::int(-1), self])
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer::auto(self).write(f, self)
    }
}

/// Canonical form. Idempotent; structural equality of results is algebraic
/// equality of differential polynomials.
pub fn normalize(e: &Expr) -> Result<Expr, ExprError> {
    Ok(to_expr(&to_poly(e)?))
}

/// Converts any tree to its expanded polynomial form.
pub fn to_poly(e: &Expr) -> Result<Poly, ExprError> {
    match e {
        Expr::Num(c) => Ok(Poly::constant(c.clone())),
        Expr::Param(n) => Ok(Poly::atom(Atom::Param(n.clone()))),
        Expr::Var(j) => Ok(Poly::atom(Atom::Var(*j))),
        Expr::Time => Ok(Poly::atom(Atom::Time)),
        Expr::Unknown(n) => Ok(Poly::atom(Atom::Unknown(n.clone()))),
        Expr::Deriv(inner, alpha) => {
            let mut p = to_poly(inner)?;
            for j in alpha.dims() {
                p = SpatialDerivative(j).apply(&p)?;
            }
            Ok(p)
        }
        Expr::Add(children) => {
            let mut acc = Poly::zero();
            for c in children {
                acc.add_assign(&to_poly(c)?);
            }
            Ok(acc)
        }
        Expr::Mul(children) => {
            let mut acc = Poly::one();
            for c in children {
                if acc.is_zero() {
                    // still validate the remaining children
                    to_poly(c)?;
                    continue;
                }
                acc = acc.mul(&to_poly(c)?);
            }
            Ok(acc)
        }
        Expr::Pow(base, exponent) => {
            let k = integer_exponent(exponent)?;
            to_poly(base)?.pow(k)
        }
        Expr::Func(f, arg) => Poly::func(*f, to_poly(arg)?),
        Expr::Pressure(args) => {
            let args = args.iter().map(to_poly).collect::<Result<Vec<_>, _>>()?;
            Ok(Poly::atom(Atom::Pressure(Arc::from(args), MultiIndex::zero())))
        }
    }
}

fn integer_exponent(exponent: &Expr) -> Result<i64, ExprError> {
    let p = to_poly(exponent)?;
    let c = p
        .as_constant()
        .ok_or_else(|| ExprError::NonIntegerExponent(exponent.to_string()))?;
    if !c.is_integer() {
        return Err(ExprError::NonIntegerExponent(exponent.to_string()));
    }
    c.to_integer()
        .to_i64()
        .filter(|k| k.unsigned_abs() <= i32::MAX as u64)
        .ok_or_else(|| ExprError::NonIntegerExponent(exponent.to_string()))
}

/// Canonical tree for a polynomial.
pub fn to_expr(p: &Poly) -> Expr {
    let mut terms: Vec<Expr> = p.terms().map(|(m, c)| term_expr(c, m)).collect();
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.pop().unwrap(),
        _ => Expr::Add(terms),
    }
}

fn term_expr(c: &Rational, m: &Monomial) -> Expr {
    let mut factors: Vec<Expr> = Vec::with_capacity(m.factors().len() + 1);
    if !c.is_one() || m.is_one() {
        factors.push(Expr::Num(c.clone()));
    }
    for (a, e) in m.factors() {
        let base = atom_expr(a);
        factors.push(if *e == 1 {
            base
        } else {
            Expr::Pow(Box::new(base), Box::new(Expr::int(i64::from(*e))))
        });
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Mul(factors)
    }
}

fn atom_expr(a: &Atom) -> Expr {
    match a {
        Atom::Param(n) => Expr::Param(n.clone()),
        Atom::Var(j) => Expr::Var(*j),
        Atom::Time => Expr::Time,
        Atom::Unknown(n) => Expr::Unknown(n.clone()),
        Atom::Deriv(n, alpha) => Expr::Deriv(Box::new(Expr::Unknown(n.clone())), alpha.clone()),
        Atom::Func(f, arg) => Expr::Func(*f, Box::new(to_expr(arg))),
        Atom::Pressure(args, alpha) => {
            let marker = Expr::Pressure(args.iter().map(to_expr).collect());
            if alpha.is_zero() {
                marker
            } else {
                Expr::Deriv(Box::new(marker), alpha.clone())
            }
        }
    }
}

/// Replaces unknowns by bound expressions; `D^alpha u` becomes `D^alpha` of the
/// binding. Recurses into function and pressure arguments.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Arc<str>, Expr>) -> Result<Expr, ExprError> {
    let polys = bindings
        .iter()
        .map(|(k, v)| Ok((k.clone(), to_poly(v)?)))
        .collect::<Result<BTreeMap<_, _>, ExprError>>()?;
    Ok(to_expr(&substitute_poly(&to_poly(e)?, &polys)?))
}

/// Polynomial-level [`substitute`].
pub fn substitute_poly(p: &Poly, bindings: &BTreeMap<Arc<str>, Poly>) -> Result<Poly, ExprError> {
    let mut deriv_cache: BTreeMap<(Arc<str>, MultiIndex), Poly> = BTreeMap::new();
    substitute_inner(p, bindings, &mut deriv_cache)
}

fn substitute_inner(
    p: &Poly,
    bindings: &BTreeMap<Arc<str>, Poly>,
    cache: &mut BTreeMap<(Arc<str>, MultiIndex), Poly>,
) -> Result<Poly, ExprError> {
    p.map_atoms(&mut |a: &Atom| -> Result<Option<Poly>, ExprError> {
        match a {
            Atom::Unknown(_) | Atom::Deriv(..) => {
                let (name, alpha) = a.unknown_parts().unwrap();
                let key = (name.clone(), alpha.clone());
                if let Some(hit) = cache.get(&key) {
                    return Ok(Some(hit.clone()));
                }
                let base = bindings
                    .get(name)
                    .ok_or_else(|| ExprError::UnboundUnknown(name.to_string()))?;
                let mut img = base.clone();
                for j in alpha.dims() {
                    img = SpatialDerivative(j).apply(&img)?;
                }
                cache.insert(key, img.clone());
                Ok(Some(img))
            }
            Atom::Func(f, arg) => {
                let new_arg = substitute_inner(arg, bindings, cache)?;
                Ok(Some(Poly::func(*f, new_arg)?))
            }
            Atom::Pressure(args, alpha) => {
                let new_args = args
                    .iter()
                    .map(|q| substitute_inner(q, bindings, cache))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut img = Poly::atom(Atom::Pressure(Arc::from(new_args), MultiIndex::zero()));
                for j in alpha.dims() {
                    img = SpatialDerivative(j).apply(&img)?;
                }
                Ok(Some(img))
            }
            _ => Ok(None),
        }
    })
}

/// Replaces atoms matching `pred` by a constant value everywhere, including
/// inside function arguments. Used for `s = 0` and `t = 0` evaluation.
pub fn set_atom_poly(p: &Poly, target: &Atom, value: &Poly) -> Result<Poly, ExprError> {
    p.map_atoms(&mut |a: &Atom| -> Result<Option<Poly>, ExprError> {
        if a == target {
            return Ok(Some(value.clone()));
        }
        match a {
            Atom::Func(f, arg) => {
                let new_arg = set_atom_poly(arg, target, value)?;
                if new_arg == **arg {
                    Ok(None)
                } else {
                    Ok(Some(Poly::func(*f, new_arg)?))
                }
            }
            Atom::Pressure(args, alpha) => {
                let new_args = args
                    .iter()
                    .map(|q| set_atom_poly(q, target, value))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Some(Poly::atom(Atom::Pressure(Arc::from(new_args), alpha.clone()))))
            }
            _ => Ok(None),
        }
    })
}

#[cfg(test)]
mod tests;
