//! Canonical polynomial representation backing [`Expr`](super::Expr) normalization.
//!
//! A [`Poly`] is a finite sum of rational multiples of [`Monomial`]s; a monomial is a
//! sorted product of [`Atom`]s raised to non-zero integer powers. Atoms are the
//! indivisible symbols: parameters, spatial variables, the clock `s`, unknowns and
//! their spatial derivatives, elementary function applications (whose arguments are
//! themselves canonical), and the nonlocal pressure marker.
//!
//! Everything is fully expanded, so two algebraically equal differential polynomials
//! have identical representations. No trigonometric or logarithmic identities are
//! applied.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{ExprError, Func, MultiIndex, Rational};

/// Indivisible factor of a monomial. Variant order is the canonical order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Param(Arc<str>),
    Var(usize),
    Time,
    Unknown(Arc<str>),
    Deriv(Arc<str>, MultiIndex),
    Func(Func, Arc<Poly>),
    Pressure(Arc<[Poly]>, MultiIndex),
}

impl Atom {
    pub fn is_unknown_like(&self) -> bool {
        matches!(self, Atom::Unknown(_) | Atom::Deriv(..))
    }

    /// Unknown name and derivative multi-index for `Unknown` / `Deriv` atoms.
    pub fn unknown_parts(&self) -> Option<(&Arc<str>, MultiIndex)> {
        match self {
            Atom::Unknown(name) => Some((name, MultiIndex::zero())),
            Atom::Deriv(name, alpha) => Some((name, alpha.clone())),
            _ => None,
        }
    }

    /// Builds `D^alpha name`, collapsing the zero multi-index to the bare unknown.
    pub fn unknown_derivative(name: Arc<str>, alpha: MultiIndex) -> Atom {
        if alpha.is_zero() {
            Atom::Unknown(name)
        } else {
            Atom::Deriv(name, alpha)
        }
    }
}

/// Sorted product of atoms with non-zero integer exponents. The empty monomial is `1`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn from_atom(atom: Atom, exp: i32) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(atom, exp)])
        }
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| i64::from(*e)).sum()
    }

    /// Product of two sorted monomials (merge with exponent addition).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = &self.0[i];
            let (b, eb) = &other.0[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = ea + eb;
                    if e != 0 {
                        out.push((a.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Same monomial with the exponent of factor `idx` lowered by one.
    fn lowered(&self, idx: usize) -> Monomial {
        let mut out = self.0.clone();
        out[idx].1 -= 1;
        if out[idx].1 == 0 {
            out.remove(idx);
        }
        Monomial(out)
    }

    fn from_sorted(factors: Vec<(Atom, i32)>) -> Monomial {
        Monomial(factors)
    }
}

/// Expanded polynomial with rational coefficients; zero coefficients never stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn integer(n: i64) -> Self {
        Poly::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn atom(atom: Atom) -> Self {
        Poly::term(Rational::one(), Monomial::from_atom(atom, 1))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// The rational value if the polynomial is a constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// The single `(coefficient, monomial)` pair if the polynomial has exactly one term.
    pub fn as_single_term(&self) -> Option<(&Rational, &Monomial)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (c, m))
        } else {
            None
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Poly, scale: &Rational) {
        if scale.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * scale);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        out
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Multiplies by a single term `c * m`.
    pub fn mul_term(&self, c: &Rational, m: &Monomial) -> Poly {
        let mut out = Poly::zero();
        for (mm, cc) in &self.terms {
            out.add_term(mm.mul(m), cc * c);
        }
        out
    }

    /// Integer power. Negative powers go through [`Poly::recip`].
    pub fn pow(&self, k: i64) -> Result<Poly, ExprError> {
        if k < 0 {
            return self.recip()?.pow(-k);
        }
        if k == 0 {
            return Ok(Poly::one());
        }
        if let Some((c, m)) = self.as_single_term() {
            let k32 = i32::try_from(k).map_err(|_| ExprError::ExponentOverflow(k))?;
            let factors = m
                .factors()
                .iter()
                .map(|(a, e)| (a.clone(), e * k32))
                .collect();
            return Ok(Poly::term(pow_rational(c, k), Monomial::from_sorted(factors)));
        }
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    /// Multiplicative inverse. Single terms invert exactly; sums become a
    /// `recip(..)` atom.
    pub fn recip(&self) -> Result<Poly, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if let Some((c, m)) = self.as_single_term() {
            let mut out = Poly::constant(c.recip());
            for (a, e) in m.factors() {
                out = out.mul(&atom_pow(a, -e)?);
            }
            return Ok(out);
        }
        Ok(Poly::atom(Atom::Func(Func::Recip, Arc::new(self.clone()))))
    }

    /// Applies an elementary function with exact folding of `sin 0`, `cos 0`,
    /// `exp 0` and `log 1`.
    pub fn func(f: Func, arg: Poly) -> Result<Poly, ExprError> {
        if f == Func::Recip {
            return arg.recip();
        }
        if let Some(c) = arg.as_constant() {
            match f {
                Func::Sin if c.is_zero() => return Ok(Poly::zero()),
                Func::Cos | Func::Exp if c.is_zero() => return Ok(Poly::one()),
                Func::Log if c.is_one() => return Ok(Poly::zero()),
                _ => {}
            }
        }
        Ok(Poly::atom(Atom::Func(f, Arc::new(arg))))
    }

    /// Rebuilds the polynomial with every atom replaced by `f(atom)`.
    ///
    /// `f` returns `None` to keep an atom unchanged. Function and pressure atoms
    /// are not recursed into automatically; `f` decides.
    pub fn map_atoms<F, E>(&self, f: &mut F) -> Result<Poly, E>
    where
        F: FnMut(&Atom) -> Result<Option<Poly>, E>,
        E: From<ExprError>,
    {
        let mut cache: BTreeMap<Atom, Option<Poly>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(c.clone());
            let mut kept: Vec<(Atom, i32)> = Vec::new();
            for (a, e) in m.factors() {
                let image = match cache.get(a) {
                    Some(img) => img.clone(),
                    None => {
                        let img = f(a)?;
                        cache.insert(a.clone(), img.clone());
                        img
                    }
                };
                match image {
                    None => kept.push((a.clone(), *e)),
                    Some(p) => acc = acc.mul(&p.pow(i64::from(*e))?),
                }
            }
            if !kept.is_empty() {
                acc = acc.mul_term(&Rational::one(), &Monomial::from_sorted(kept));
            }
            out.add_assign(&acc);
        }
        Ok(out)
    }

    /// Visits every atom, including those nested in function and pressure arguments.
    pub fn visit_atoms<F: FnMut(&Atom)>(&self, f: &mut F) {
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                f(a);
                match a {
                    Atom::Func(_, arg) => arg.visit_atoms(f),
                    Atom::Pressure(args, _) => args.iter().for_each(|p| p.visit_atoms(f)),
                    _ => {}
                }
            }
        }
    }

    pub fn contains_atom<P: Fn(&Atom) -> bool>(&self, pred: P) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= pred(a));
        found
    }

    /// Coefficient-wise product of a derivation with the polynomial, given the
    /// image of each atom. Used by [`super::derive`].
    pub(crate) fn leibniz<F, E>(&self, mut image: F) -> Result<Poly, E>
    where
        F: FnMut(&Atom) -> Result<Option<Poly>, E>,
    {
        let mut cache: BTreeMap<Atom, Option<Poly>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (idx, (a, e)) in m.factors().iter().enumerate() {
                let img = match cache.get(a) {
                    Some(img) => img.clone(),
                    None => {
                        let img = image(a)?;
                        cache.insert(a.clone(), img.clone());
                        img
                    }
                };
                let Some(img) = img else { continue };
                let coeff = c * Rational::from_integer(BigInt::from(*e));
                let rest = m.lowered(idx);
                for (mi, ci) in img.terms() {
                    out.add_term(rest.mul(mi), &coeff * ci);
                }
            }
        }
        Ok(out)
    }

    /// Largest spatial variable index mentioned anywhere, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        self.visit_atoms(&mut |a| {
            let idx = match a {
                Atom::Var(j) => Some(*j),
                Atom::Deriv(_, alpha) | Atom::Pressure(_, alpha) => alpha.len().checked_sub(1),
                _ => None,
            };
            if let Some(j) = idx {
                best = Some(best.map_or(j, |b| b.max(j)));
            }
        });
        best
    }
}

/// `atom^e` as a polynomial; `recip(p)^(-k)` expands back to `p^k`.
pub fn atom_pow(a: &Atom, e: i32) -> Result<Poly, ExprError> {
    if let (Atom::Func(Func::Recip, inner), true) = (a, e < 0) {
        return inner.pow(i64::from(-e));
    }
    Ok(Poly::term(Rational::one(), Monomial::from_atom(a.clone(), e)))
}

pub fn pow_rational(c: &Rational, k: i64) -> Rational {
    let k = k as usize;
    let numer = num_traits::pow::pow(c.numer().clone(), k);
    let denom = num_traits::pow::pow(c.denom().clone(), k);
    Rational::new(numer, denom)
}

/// Converts an exact rational to the nearest `f64`.
pub fn rational_to_f64(c: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (c.numer().to_i64(), c.denom().to_i64()) {
        if n.unsigned_abs() < (1u64 << 53) && d < (1i64 << 53) {
            return n as f64 / d as f64;
        }
    }
    // Shift large operands down before dividing.
    let n = c.numer().abs();
    let d = c.denom().clone();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = (nb - db) - 60;
    let q = if shift >= 0 {
        (&n / (&d << (shift as usize))).to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(shift as i32)
    } else {
        ((&n << ((-shift) as usize)) / &d).to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(shift as i32)
    };
    if c.is_negative() {
        -q
    } else {
        q
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::to_expr(self))
    }
}
