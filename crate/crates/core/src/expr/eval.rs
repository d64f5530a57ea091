//! Floating-point evaluation of closed-form expressions.

use std::collections::BTreeMap;

use super::poly::{rational_to_f64, Atom, Poly};
use super::{Expr, ExprError, Func};

/// Direct recursive evaluation of a tree at a point.
///
/// `point[j]` is the value of `x_j`. The tree need not be canonical, but it must
/// be free of unknowns, the clock symbol and pressure markers.
pub fn eval_pointwise(e: &Expr, point: &[f64], params: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
    match e {
        Expr::Num(c) => Ok(rational_to_f64(c)),
        Expr::Param(n) => params
            .get(n.as_ref())
            .copied()
            .ok_or_else(|| ExprError::UnboundParameter(n.to_string())),
        Expr::Var(j) => point
            .get(*j)
            .copied()
            .ok_or_else(|| ExprError::Malformed(format!("point has no coordinate x{}", j + 1))),
        Expr::Time => Err(ExprError::UnboundTime),
        Expr::Unknown(n) => Err(ExprError::UnboundUnknown(n.to_string())),
        Expr::Deriv(..) => {
            let canon = super::normalize(e)?;
            if matches!(canon, Expr::Deriv(..)) {
                // still a derivative of an unknown or a marker
                if canon.mentions_pressure() {
                    return Err(ExprError::PressureMarker);
                }
                let name = canon.unknown_names().first().map(|n| n.to_string()).unwrap_or_default();
                return Err(ExprError::UnboundUnknown(name));
            }
            eval_pointwise(&canon, point, params)
        }
        Expr::Add(v) => v.iter().try_fold(0.0, |acc, c| Ok(acc + eval_pointwise(c, point, params)?)),
        Expr::Mul(v) => v.iter().try_fold(1.0, |acc, c| Ok(acc * eval_pointwise(c, point, params)?)),
        Expr::Pow(b, k) => {
            let base = eval_pointwise(b, point, params)?;
            let exp = eval_pointwise(k, point, params)?;
            if exp.fract() != 0.0 {
                return Err(ExprError::NonIntegerExponent(k.to_string()));
            }
            if base == 0.0 && exp < 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            Ok(base.powi(exp as i32))
        }
        Expr::Func(f, arg) => f.apply_f64(eval_pointwise(arg, point, params)?),
        Expr::Pressure(_) => Err(ExprError::PressureMarker),
    }
}

/// Evaluation environment for [`Compiled`].
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalEnv<'a> {
    pub point: &'a [f64],
    pub time: Option<f64>,
    /// Values of the external unknown atoms, in compile order.
    pub externals: &'a [f64],
}

#[derive(Clone, Debug)]
enum Slot {
    Const(f64),
    Var(usize),
    Time,
    External(usize),
    Func(Func, Box<Compiled>),
}

/// A polynomial lowered to `f64` for repeated evaluation at many points.
#[derive(Clone, Debug)]
pub struct Compiled {
    slots: Vec<Slot>,
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl Compiled {
    /// Lowers `p`. Parameters are bound from `params`; unknown atoms must appear
    /// in `externals` and are read from [`EvalEnv::externals`] at that position.
    pub fn new(p: &Poly, params: &BTreeMap<String, f64>, externals: &[Atom]) -> Result<Self, ExprError> {
        let mut index: BTreeMap<Atom, usize> = BTreeMap::new();
        let mut slots = Vec::new();
        let mut terms = Vec::with_capacity(p.len());
        for (m, c) in p.terms() {
            let mut factors = Vec::with_capacity(m.factors().len());
            for (a, e) in m.factors() {
                let slot = match index.get(a) {
                    Some(&i) => i,
                    None => {
                        let s = Self::slot(a, params, externals)?;
                        slots.push(s);
                        index.insert(a.clone(), slots.len() - 1);
                        slots.len() - 1
                    }
                };
                factors.push((slot, *e));
            }
            terms.push((rational_to_f64(c), factors));
        }
        Ok(Compiled { slots, terms })
    }

    fn slot(a: &Atom, params: &BTreeMap<String, f64>, externals: &[Atom]) -> Result<Slot, ExprError> {
        Ok(match a {
            Atom::Param(n) => Slot::Const(
                *params
                    .get(n.as_ref())
                    .ok_or_else(|| ExprError::UnboundParameter(n.to_string()))?,
            ),
            Atom::Var(j) => Slot::Var(*j),
            Atom::Time => Slot::Time,
            Atom::Unknown(_) | Atom::Deriv(..) => {
                let pos = externals.iter().position(|x| x == a).ok_or_else(|| {
                    ExprError::UnboundUnknown(super::to_expr(&Poly::atom(a.clone())).to_string())
                })?;
                Slot::External(pos)
            }
            Atom::Func(f, arg) => Slot::Func(*f, Box::new(Compiled::new(arg, params, externals)?)),
            Atom::Pressure(..) => return Err(ExprError::PressureMarker),
        })
    }

    pub fn eval(&self, env: &EvalEnv<'_>) -> Result<f64, ExprError> {
        let mut values = Vec::with_capacity(self.slots.len());
        for s in &self.slots {
            values.push(match s {
                Slot::Const(v) => *v,
                Slot::Var(j) => *env
                    .point
                    .get(*j)
                    .ok_or_else(|| ExprError::Malformed(format!("point has no coordinate x{}", j + 1)))?,
                Slot::Time => env.time.ok_or(ExprError::UnboundTime)?,
                Slot::External(i) => env.externals[*i],
                Slot::Func(f, inner) => f.apply_f64(inner.eval(env)?)?,
            });
        }
        let mut sum = 0.0;
        for (c, factors) in &self.terms {
            let mut prod = *c;
            for &(slot, e) in factors {
                let v = values[slot];
                if v == 0.0 && e < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                prod *= v.powi(e);
            }
            sum += prod;
        }
        Ok(sum)
    }

    /// Convenience for closed-form expressions of the spatial point only.
    pub fn eval_at(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.eval(&EvalEnv { point, time: None, externals: &[] })
    }
}
