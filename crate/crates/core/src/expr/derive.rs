//! Derivations on canonical polynomials.
//!
//! A derivation is fixed by its action on non-function atoms; the Leibniz rule
//! extends it to monomials and the chain rule to elementary function applications.
//! Spatial differentiation, parameter/time differentiation and the evolution
//! operator of [`crate::derivation`] are all instances.

use std::sync::Arc;

use super::poly::{Atom, Poly};
use super::{to_expr, to_poly, Expr, ExprError, Func, MultiIndex};

pub trait Derivation {
    type Error: From<ExprError>;

    /// Image of a non-function atom; `None` means zero.
    fn atom_image(&self, atom: &Atom) -> Result<Option<Poly>, Self::Error>;

    fn apply(&self, p: &Poly) -> Result<Poly, Self::Error> {
        p.leibniz(|a| match a {
            Atom::Func(f, arg) => {
                let darg = self.apply(arg)?;
                if darg.is_zero() {
                    Ok(None)
                } else {
                    Ok(Some(func_derivative(*f, arg)?.mul(&darg)))
                }
            }
            _ => self.atom_image(a),
        })
    }
}

/// `f'(arg)` for the closed set of elementary functions.
pub fn func_derivative(f: Func, arg: &Arc<Poly>) -> Result<Poly, ExprError> {
    Ok(match f {
        Func::Sin => Poly::atom(Atom::Func(Func::Cos, arg.clone())),
        Func::Cos => Poly::atom(Atom::Func(Func::Sin, arg.clone())).neg(),
        Func::Exp => Poly::atom(Atom::Func(Func::Exp, arg.clone())),
        Func::Log => arg.recip()?,
        Func::Recip => Poly::atom(Atom::Func(Func::Recip, arg.clone())).pow(2)?.neg(),
    })
}

/// Total derivative with respect to the spatial variable `x_j`.
#[derive(Clone, Copy, Debug)]
pub struct SpatialDerivative(pub usize);

impl Derivation for SpatialDerivative {
    type Error = ExprError;

    fn atom_image(&self, atom: &Atom) -> Result<Option<Poly>, ExprError> {
        let j = self.0;
        Ok(match atom {
            Atom::Var(k) if *k == j => Some(Poly::one()),
            Atom::Unknown(name) => Some(Poly::atom(Atom::Deriv(name.clone(), MultiIndex::unit(j)))),
            Atom::Deriv(name, alpha) => Some(Poly::atom(Atom::Deriv(name.clone(), alpha.bumped(j)))),
            Atom::Pressure(args, alpha) => Some(Poly::atom(Atom::Pressure(args.clone(), alpha.bumped(j)))),
            _ => None,
        })
    }
}

/// Partial derivative with respect to a named parameter (e.g. the time `t` of a
/// closed-form solution).
#[derive(Clone, Debug)]
pub struct ParamDerivative(pub Arc<str>);

impl Derivation for ParamDerivative {
    type Error = ExprError;

    fn atom_image(&self, atom: &Atom) -> Result<Option<Poly>, ExprError> {
        Ok(match atom {
            Atom::Param(n) if *n == self.0 => Some(Poly::one()),
            _ => None,
        })
    }
}

/// Partial derivative with respect to the clock symbol `s`.
#[derive(Clone, Copy, Debug)]
pub struct TimeDerivative;

impl Derivation for TimeDerivative {
    type Error = ExprError;

    fn atom_image(&self, atom: &Atom) -> Result<Option<Poly>, ExprError> {
        Ok(matches!(atom, Atom::Time).then(Poly::one))
    }
}

/// `∂e/∂x_j` in canonical form.
pub fn spatial_derivative(e: &Expr, j: usize) -> Result<Expr, ExprError> {
    Ok(to_expr(&SpatialDerivative(j).apply(&to_poly(e)?)?))
}
