//! Truncated power series in `t` with polynomial coefficients, and composition
//! of a polynomial with such series. Independent of the evolution operator: only
//! ring arithmetic and the Taylor expansions of the elementary functions are used.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::expr::{Atom, ExprError, Func, Poly, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct TruncSeries {
    /// Coefficients of `t^0 .. t^order`.
    pub coeffs: Vec<Poly>,
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

impl TruncSeries {
    pub fn constant(p: Poly, order: usize) -> Self {
        let mut coeffs = vec![Poly::zero(); order + 1];
        coeffs[0] = p;
        TruncSeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn add(&self, o: &TruncSeries) -> TruncSeries {
        TruncSeries { coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale(&self, c: &Rational) -> TruncSeries {
        TruncSeries { coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn mul_poly(&self, p: &Poly) -> TruncSeries {
        TruncSeries { coeffs: self.coeffs.iter().map(|a| a.mul(p)).collect() }
    }

    /// Cauchy product, truncated.
    pub fn mul(&self, o: &TruncSeries) -> TruncSeries {
        let n = self.order();
        let mut coeffs = vec![Poly::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    coeffs[i + j].add_assign(&a.mul(b));
                }
            }
        }
        TruncSeries { coeffs }
    }

    fn tail(&self) -> TruncSeries {
        let mut t = self.clone();
        t.coeffs[0] = Poly::zero();
        t
    }

    /// `sum_j c_j x^j` for a series `x` without constant term (so `x^j = O(t^j)`).
    fn power_sum(x: &TruncSeries, c: impl Fn(usize) -> Rational) -> TruncSeries {
        let n = x.order();
        let mut acc = TruncSeries::constant(Poly::constant(c(0)), n);
        let mut pow = TruncSeries::constant(Poly::one(), n);
        for j in 1..=n {
            pow = pow.mul(x);
            acc = acc.add(&pow.scale(&c(j)));
        }
        acc
    }

    pub fn pow(&self, k: i64) -> Result<TruncSeries, ExprError> {
        if k < 0 {
            return self.recip()?.pow(-k);
        }
        let mut acc = TruncSeries::constant(Poly::one(), self.order());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    pub fn recip(&self) -> Result<TruncSeries, ExprError> {
        let inv = self.coeffs[0].recip()?;
        // 1/(g0 + x) = (1/g0) sum (-x/g0)^j
        let x = self.tail().mul_poly(&inv);
        Ok(Self::power_sum(&x, |j| if j % 2 == 0 { rat(1, 1) } else { rat(-1, 1) }).mul_poly(&inv))
    }

    pub fn func(&self, f: Func) -> Result<TruncSeries, ExprError> {
        let g0 = self.coeffs[0].clone();
        let x = self.tail();
        let fact = |j: usize| -> i64 { (1..=j as i64).product() };
        Ok(match f {
            Func::Sin | Func::Cos => {
                let s = Self::power_sum(&x, |j| {
                    if j % 2 == 1 {
                        rat(if (j / 2) % 2 == 0 { 1 } else { -1 }, fact(j))
                    } else {
                        rat(0, 1)
                    }
                });
                let c = Self::power_sum(&x, |j| {
                    if j % 2 == 0 {
                        rat(if (j / 2) % 2 == 0 { 1 } else { -1 }, fact(j))
                    } else {
                        rat(0, 1)
                    }
                });
                let (sin0, cos0) = (Poly::func(Func::Sin, g0.clone())?, Poly::func(Func::Cos, g0)?);
                if f == Func::Sin {
                    c.mul_poly(&sin0).add(&s.mul_poly(&cos0))
                } else {
                    c.mul_poly(&cos0).add(&s.mul_poly(&sin0).scale(&rat(-1, 1)))
                }
            }
            Func::Exp => Self::power_sum(&x, |j| rat(1, fact(j))).mul_poly(&Poly::func(Func::Exp, g0)?),
            Func::Log => {
                let inv = g0.recip()?;
                let y = x.mul_poly(&inv);
                let l = Self::power_sum(&y, |j| if j == 0 { rat(0, 1) } else { rat(if j % 2 == 1 { 1 } else { -1 }, j as i64) });
                l.add(&TruncSeries::constant(Poly::func(Func::Log, g0)?, self.order()))
            }
            Func::Recip => self.recip()?,
        })
    }
}

/// `p` with every atom replaced by a series: `leaf` decides for non-function
/// atoms (`None` keeps the atom as a constant); function atoms are expanded by
/// composing their argument.
pub fn compose_poly(
    p: &Poly,
    order: usize,
    leaf: &mut dyn FnMut(&Atom) -> Result<Option<TruncSeries>, ExprError>,
) -> Result<TruncSeries, ExprError> {
    let mut cache: BTreeMap<Atom, TruncSeries> = BTreeMap::new();
    let mut acc = TruncSeries::constant(Poly::zero(), order);
    for (m, c) in p.terms() {
        let mut term = TruncSeries::constant(Poly::constant(c.clone()), order);
        for (a, e) in m.factors() {
            let s = match cache.get(a) {
                Some(s) => s.clone(),
                None => {
                    let s = match a {
                        Atom::Func(f, arg) => compose_poly(arg, order, leaf)?.func(*f)?,
                        _ => leaf(a)?.unwrap_or_else(|| TruncSeries::constant(Poly::atom(a.clone()), order)),
                    };
                    cache.insert(a.clone(), s.clone());
                    s
                }
            };
            term = term.mul(&s.pow(i64::from(*e))?);
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}
