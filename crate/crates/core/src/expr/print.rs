//! Canonical text serialization. Output is accepted by [`crate::parser`].

use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Expr, Func, MultiIndex, Rational};

/// How spatial variables are spelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Naming {
    /// `x` for the single dimension.
    Single,
    /// `x1`, `x2`, ...
    Indexed,
}

impl Naming {
    pub fn for_dim(dim: usize) -> Naming {
        if dim <= 1 {
            Naming::Single
        } else {
            Naming::Indexed
        }
    }

    pub fn var_name(self, j: usize) -> String {
        match self {
            Naming::Single if j == 0 => "x".to_string(),
            _ => format!("x{}", j + 1),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Printer {
    pub naming: Naming,
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_ATOM: u8 = 4;

impl Printer {
    pub fn new(naming: Naming) -> Self {
        Printer { naming }
    }

    /// Picks `x` when only the first spatial variable occurs, `x1..` otherwise.
    pub fn auto(e: &Expr) -> Self {
        let naming = match e.max_var_index() {
            Some(j) if j >= 1 => Naming::Indexed,
            _ => Naming::Single,
        };
        Printer { naming }
    }

    pub fn to_string(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.emit(&mut s, e, 0).expect("writing to a String cannot fail");
        s
    }

    pub fn write(&self, f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
        f.write_str(&self.to_string(e))
    }

    fn prec(e: &Expr) -> u8 {
        match e {
            Expr::Num(c) if c.is_negative() || !c.is_integer() => PREC_MUL,
            Expr::Add(v) if v.len() > 1 => PREC_ADD,
            Expr::Mul(v) if v.len() > 1 => PREC_MUL,
            Expr::Mul(v) if v.len() == 1 => Self::prec(&v[0]),
            Expr::Add(v) if v.len() == 1 => Self::prec(&v[0]),
            Expr::Add(_) | Expr::Mul(_) => PREC_ATOM,
            Expr::Pow(..) | Expr::Func(Func::Recip, _) => PREC_POW,
            _ => PREC_ATOM,
        }
    }

    fn emit(&self, out: &mut String, e: &Expr, min_prec: u8) -> fmt::Result {
        if Self::prec(e) < min_prec {
            out.push('(');
            self.emit(out, e, 0)?;
            out.push(')');
            return Ok(());
        }
        match e {
            Expr::Num(c) => write_rational(out, c),
            Expr::Param(n) => {
                out.push_str(n);
                Ok(())
            }
            Expr::Var(j) => {
                out.push_str(&self.naming.var_name(*j));
                Ok(())
            }
            Expr::Time => {
                out.push('s');
                Ok(())
            }
            Expr::Unknown(n) => {
                out.push_str(n);
                Ok(())
            }
            Expr::Deriv(inner, alpha) => self.emit_deriv(out, inner, alpha),
            Expr::Add(v) if v.is_empty() => {
                out.push('0');
                Ok(())
            }
            Expr::Add(v) => {
                for (i, term) in v.iter().enumerate() {
                    if i == 0 {
                        self.emit(out, term, PREC_ADD)?;
                    } else if let Some(neg) = negated(term) {
                        out.push_str(" - ");
                        self.emit(out, &neg, PREC_MUL)?;
                    } else {
                        out.push_str(" + ");
                        self.emit(out, term, PREC_ADD)?;
                    }
                }
                Ok(())
            }
            Expr::Mul(v) if v.is_empty() => {
                out.push('1');
                Ok(())
            }
            Expr::Mul(v) => {
                let mut rest: &[Expr] = v;
                if v.len() > 1 {
                    if let Expr::Num(c) = &v[0] {
                        if (-c.clone()).is_one() {
                            out.push('-');
                            rest = &v[1..];
                        }
                    }
                }
                for (i, factor) in rest.iter().enumerate() {
                    if i > 0 {
                        out.push('*');
                    }
                    let need = if i == 0 && rest.len() == v.len() { PREC_MUL } else { PREC_POW };
                    self.emit(out, factor, need)?;
                }
                Ok(())
            }
            Expr::Pow(base, k) => {
                if let Expr::Func(Func::Recip, inner) = base.as_ref() {
                    if let Expr::Num(kk) = k.as_ref() {
                        out.push('(');
                        self.emit(out, inner, 0)?;
                        out.push_str(")^");
                        return write_rational(out, &-kk.clone());
                    }
                }
                self.emit(out, base, PREC_ATOM)?;
                out.push('^');
                match k.as_ref() {
                    Expr::Num(c) if c.is_integer() => write_rational(out, c),
                    other => self.emit(out, other, PREC_ATOM),
                }
            }
            Expr::Func(Func::Recip, inner) => {
                out.push('(');
                self.emit(out, inner, 0)?;
                out.push_str(")^-1");
                Ok(())
            }
            Expr::Func(f, arg) => {
                out.push_str(f.name());
                out.push('(');
                self.emit(out, arg, 0)?;
                out.push(')');
                Ok(())
            }
            Expr::Pressure(args) => {
                out.push_str("leray_pressure(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.emit(out, a, 0)?;
                }
                out.push(')');
                Ok(())
            }
        }
    }

    fn emit_deriv(&self, out: &mut String, inner: &Expr, alpha: &MultiIndex) -> fmt::Result {
        if alpha.is_zero() {
            return self.emit(out, inner, PREC_ATOM);
        }
        out.push_str("D(");
        self.emit(out, inner, 0)?;
        out.push(';');
        let names: Vec<String> = alpha.dims().into_iter().map(|j| self.naming.var_name(j)).collect();
        out.push_str(&names.join(","));
        out.push(')');
        Ok(())
    }
}

fn write_rational(out: &mut String, c: &Rational) -> fmt::Result {
    if c.is_integer() {
        write!(out, "{}", c.numer())
    } else {
        write!(out, "{}/{}", c.numer(), c.denom())
    }
}

/// `-term` when `term` carries a negative leading coefficient.
fn negated(term: &Expr) -> Option<Expr> {
    match term {
        Expr::Num(c) if c.is_negative() => Some(Expr::Num(-c.clone())),
        Expr::Mul(v) if !v.is_empty() => match &v[0] {
            Expr::Num(c) if c.is_negative() => {
                let pos = -c.clone();
                let mut rest: Vec<Expr> = Vec::with_capacity(v.len());
                if !pos.is_one() {
                    rest.push(Expr::Num(pos));
                }
                rest.extend(v[1..].iter().cloned());
                Some(if rest.len() == 1 { rest.pop().unwrap() } else { Expr::Mul(rest) })
            }
            _ => None,
        },
        _ => None,
    }
}
