use std::sync::Arc;

use super::NonlocalError;
use crate::expr::Expr;
use crate::parser::PdeSystem;

/// Display form of the pressure: the `leray_pressure` marker together with
/// its Poisson source `sum_ij D(u_j;x_i)*D(u_i;x_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureSymbolic {
    pub marker: Expr,
    /// Unexpanded sum with `d^2` terms.
    pub source: Expr,
}

/// The `d^2` products of the source, in `(i, j)` order, not collected.
pub fn pressure_source(velocity: &[Arc<str>]) -> Expr {
    let d = velocity.len();
    let mut terms = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let dj_ui = Expr::deriv(Expr::Unknown(velocity[i].clone()), &[j]);
            let di_uj = Expr::deriv(Expr::Unknown(velocity[j].clone()), &[i]);
            terms.push(Expr::Mul(vec![di_uj, dj_ui]));
        }
    }
    Expr::Add(terms)
}

/// Uses the velocity list of the first marker in `sys`, or all unknowns when
/// there is one per spatial dimension.
pub fn pressure_symbolic(sys: &PdeSystem) -> Result<PressureSymbolic, NonlocalError> {
    let mut found: Option<Vec<Expr>> = None;
    for e in &sys.rhs {
        e.visit(&mut |n| {
            if let (None, Expr::Pressure(args)) = (&found, n) {
                found = Some(args.clone());
            }
        });
    }
    let velocity: Vec<Arc<str>> = match found {
        Some(args) => args
            .iter()
            .map(|a| match a {
                Expr::Unknown(u) => Ok(u.clone()),
                other => Err(NonlocalError::Shape(format!("pressure argument {other} is not an unknown"))),
            })
            .collect::<Result<_, _>>()?,
        None if sys.len() == sys.dim && sys.dim > 0 => sys.unknowns.clone(),
        None => {
            return Err(NonlocalError::Shape(format!(
                "{} unknowns in {} dimensions do not form a velocity field",
                sys.len(),
                sys.dim
            )))
        }
    };
    let marker = Expr::Pressure(velocity.iter().map(|u| Expr::Unknown(u.clone())).collect());
    Ok(PressureSymbolic { marker, source: pressure_source(&velocity) })
}
