//! Exact finite-difference weights.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use twofloat::TwoFloat;

use crate::expr::Rational;

/// Weights `w_j` with `f^(m)(0) ~ sum_j w_j f(x_j)` (unit spacing), by
/// Fornberg's recursion in exact arithmetic.
pub fn weights(nodes: &[i64], m: usize) -> Vec<Rational> {
    let n = nodes.len();
    assert!(n > m, "need more nodes than the derivative order");
    let x: Vec<Rational> = nodes.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect();
    let mut c = vec![vec![Rational::zero(); m + 1]; n];
    let mut c1 = Rational::from_integer(1.into());
    let mut c4 = x[0].clone();
    c[0][0] = Rational::from_integer(1.into());
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = Rational::from_integer(1.into());
        let c5 = c4.clone();
        c4 = x[i].clone();
        for j in 0..i {
            let c3 = &x[i] - &x[j];
            c2 = &c2 * &c3;
            if j == i - 1 {
                for s in (1..=mn).rev() {
                    let sr = Rational::from_integer(BigInt::from(s));
                    c[i][s] = &c1 * (&sr * &c[i - 1][s - 1] - &c5 * &c[i - 1][s]) / &c2;
                }
                c[i][0] = -&c1 * &c5 * &c[i - 1][0] / &c2;
            }
            for s in (1..=mn).rev() {
                let sr = Rational::from_integer(BigInt::from(s));
                c[j][s] = (&c4 * &c[j][s] - &sr * &c[j][s - 1]) / &c3;
            }
            c[j][0] = &c4 * &c[j][0] / &c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m].clone()).collect()
}

/// Symmetric stencil `-p..=p` for the `m`-th derivative.
pub fn central(m: usize, p: usize) -> (Vec<i64>, Vec<Rational>) {
    let nodes: Vec<i64> = (-(p as i64)..=p as i64).collect();
    let w = weights(&nodes, m);
    (nodes, w)
}

/// `num / den` to double-double, for numerator and denominator exact in `f64`.
pub fn to_twofloat(r: &Rational) -> TwoFloat {
    let num = r.numer().to_f64().expect("small numerator");
    let den = r.denom().to_f64().expect("small denominator");
    // double-double by double division is accurate; double-double by double-double is not
    TwoFloat::from(num) / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn classic_stencils() {
        assert_eq!(central(1, 1).1, vec![r(-1, 2), r(0, 1), r(1, 2)]);
        assert_eq!(central(2, 1).1, vec![r(1, 1), r(-2, 1), r(1, 1)]);
        assert_eq!(central(1, 2).1, vec![r(1, 12), r(-2, 3), r(0, 1), r(2, 3), r(-1, 12)]);
        assert_eq!(central(4, 2).1, vec![r(1, 1), r(-4, 1), r(6, 1), r(-4, 1), r(1, 1)]);
    }

    #[test]
    fn twofloat_weights_carry_extra_precision() {
        let w = to_twofloat(&r(1, 3));
        // 1/3 - hi is about 1.85e-17; a plain double would leave lo = 0
        assert!((w.lo() - 1.850371707708594e-17).abs() < 1e-30);
    }

    #[test]
    fn exact_on_polynomials() {
        // 2p+1 nodes differentiate degree <= 2p polynomials exactly
        let (nodes, w) = central(3, 3);
        for deg in 0..=6u32 {
            let s: Rational = nodes
                .iter()
                .zip(&w)
                .map(|(&x, wi)| wi * Rational::from_integer(BigInt::from(x).pow(deg)))
                .sum();
            let want = if deg == 3 { r(6, 1) } else { r(0, 1) };
            assert_eq!(s, want, "degree {deg}");
        }
    }
}
