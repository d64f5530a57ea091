use std::fmt::Write as _;

use serde::Serialize;
use twofloat::TwoFloat;

use super::cutoff::{cutoff, cutoff_derivative, cutoff_tf, m1};
use super::series::{tau_sup, MollifiedSeries, SupEstimate};
use super::BorelError;
use num_traits::{One, Zero};

use crate::expr::poly::rational_to_f64;
use crate::expr::Rational;
use crate::stencil;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Clone, Debug, Serialize)]
pub struct TailTerm {
    pub n: usize,
    pub sup_x: SupEstimate,
    pub beta: f64,
    pub radius: f64,
    /// `sup_{0<=tau<=1} tau^n psi(tau)`.
    pub sup_tau: SupEstimate,
    /// `sup_x |b_n^(i)| * r_n^n * sup_tau`.
    pub term: f64,
    /// `beta_n r_n^n`.
    pub beta_term: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeTerm {
    pub n: usize,
    pub sup_x: SupEstimate,
    /// `sup_{0<=tau<=1} |n tau^(n-1) psi(tau) + tau^n psi'(tau)|`.
    pub sup_tau: SupEstimate,
    pub term: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeTail {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub m1: f64,
    pub terms: Vec<DerivativeTerm>,
}

/// Sup-sums of the `i`-times `x`-differentiated cutoff series against `sum 1/n!`.
#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub i: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub terms: Vec<TailTerm>,
    /// Same with one `t`-derivative, over `n >= i + 2`, against `sum (n + M1)/n!`.
    pub derivative: DerivativeTail,
}

impl TailReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// `sup_{t, x} |b_n^(i)(x) t^n psi(t/r_n)|` summed over `n = i+1..N`; `t` ranges
/// over the support `[-r_n, r_n]`, so the `t` factor is `r_n^n sup tau^n psi(tau)`.
pub fn tail_bound_check(series: &MollifiedSeries, i: usize) -> Result<TailReport, BorelError> {
    let order = series.order();
    let inflation = series.options().inflation;
    let m = series.options().tau_samples;
    let sup_x = |n: usize| {
        series
            .derivative_sup(n, i)
            .ok_or_else(|| BorelError::Order(format!("no sup for derivative order {i} of b_{n}")))
    };

    let mut terms = Vec::new();
    for n in i + 1..=order {
        let sx = sup_x(n)?;
        let r = series.radius(n);
        let st = tau_sup(|tau| tau.powi(n as i32) * cutoff(tau), m, inflation);
        terms.push(TailTerm {
            n,
            sup_x: sx,
            beta: series.beta(n),
            radius: r,
            sup_tau: st,
            term: sx.value * r.powi(n as i32) * st.value,
            beta_term: series.beta(n) * r.powi(n as i32),
            bound: 1.0 / factorial(n),
        });
    }
    let lhs: f64 = terms.iter().map(|t| t.term).sum();
    let rhs: f64 = terms.iter().map(|t| t.bound).sum();

    let m1 = m1();
    let mut dterms = Vec::new();
    for n in i + 2..=order {
        let sx = sup_x(n)?;
        let r = series.radius(n);
        let nf = n as f64;
        let st = tau_sup(
            |tau| nf * tau.powi(n as i32 - 1) * cutoff(tau) + tau.powi(n as i32) * cutoff_derivative(tau),
            m,
            inflation,
        );
        dterms.push(DerivativeTerm {
            n,
            sup_x: sx,
            sup_tau: st,
            term: sx.value * r.powi(n as i32 - 1) * st.value,
            bound: (nf + m1) / factorial(n),
        });
    }
    let dlhs: f64 = dterms.iter().map(|t| t.term).sum();
    let drhs: f64 = dterms.iter().map(|t| t.bound).sum();

    Ok(TailReport {
        i,
        order,
        lhs,
        rhs,
        pass: lhs <= rhs && dlhs <= drhs,
        terms,
        derivative: DerivativeTail { lhs: dlhs, rhs: drhs, pass: dlhs <= drhs, m1, terms: dterms },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JetOrder {
    pub k: usize,
    /// `max_x |D_t^k v(0, x) - k! b_k(x)|`.
    pub max_abs_error: f64,
    /// `max_x |k! b_k(x)|`.
    pub scale: f64,
    /// Error over scale, or the absolute error when the scale vanishes.
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct JetReport {
    #[serde(rename = "K")]
    pub max_k: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub step: f64,
    pub half_width: usize,
    pub points: usize,
    pub orders: Vec<JetOrder>,
    pub max_rel_error: f64,
}

impl JetReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// `t`-jet of the mollified sum at `t = 0` by central differences, with all
/// stencil points inside the region where every cutoff is 1. The stencil sums run
/// in exact rational arithmetic on the (exactly converted) sampled values: the
/// steps there can be tiny enough that any floating format loses the jet to
/// cancellation. `points` sample points per axis over the box.
pub fn taylor_jet_check(series: &MollifiedSeries, max_k: usize, points: usize) -> Result<JetReport, BorelError> {
    let order = series.order();
    if max_k + 2 > order {
        return Err(BorelError::Order(format!("jet order {max_k} needs N >= {}, series has N = {order}", max_k + 2)));
    }
    // 2p + 1 nodes are exact on polynomials of degree 2p >= N
    let p = order.div_ceil(2).max(1);
    let step = series.plateau() / p as f64;
    let h = exact(step)?;
    let stencils: Vec<_> = (0..=max_k).map(|k| stencil::central(k, p)).collect();
    let nodes = &stencils[0].0;
    let radii: Vec<f64> = (0..=order).map(|n| series.radius(n)).collect();
    let fact: Vec<f64> = (0..=max_k).map(factorial).collect();
    // psi(t_j / r_n) as exact rationals
    let psi: Vec<Vec<Rational>> = nodes
        .iter()
        .map(|&j| {
            let t = TwoFloat::from(j as f64) * step;
            (0..=order)
                .map(|n| if n == 0 { Ok(Rational::one()) } else { exact_tf(cutoff_tf(t / radii[n])) })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let tpow: Vec<Vec<Rational>> = nodes
        .iter()
        .map(|&j| {
            let t = &h * Rational::from_integer(j.into());
            let mut out = vec![Rational::one()];
            for n in 1..=order {
                out.push(&out[n - 1] * &t);
            }
            out
        })
        .collect();
    let hk: Vec<Rational> = (0..=max_k).map(|k| num_traits::pow(h.clone(), k)).collect();

    let mut err = vec![0.0f64; max_k + 1];
    let mut scale = vec![0.0f64; max_k + 1];
    let pts = points.max(1);
    let dom = series.domain();
    let d = dom.dim();
    let total = pts.pow(d as u32);
    for flat in 0..total {
        let mut rest = flat;
        let x: Vec<f64> = (0..d)
            .map(|a| {
                let k = rest % pts;
                rest /= pts;
                dom.lattice_coord(a, k, pts)
            })
            .collect();
        let b = series.values(&x)?;
        let bq = b.iter().map(|&v| exact(v)).collect::<Result<Vec<_>, _>>()?;
        let v: Vec<Rational> = (0..nodes.len())
            .map(|j| {
                bq.iter()
                    .enumerate()
                    .fold(Rational::zero(), |acc, (n, bn)| acc + bn * &tpow[j][n] * &psi[j][n])
            })
            .collect();
        for k in 0..=max_k {
            let s = stencils[k].1.iter().zip(&v).fold(Rational::zero(), |acc, (w, f)| acc + w * f);
            let fd = rational_to_f64(&(s / &hk[k]));
            let want = fact[k] * b[k];
            err[k] = err[k].max((fd - want).abs());
            scale[k] = scale[k].max(want.abs());
        }
    }
    let orders: Vec<JetOrder> = (0..=max_k)
        .map(|k| JetOrder {
            k,
            max_abs_error: err[k],
            scale: scale[k],
            rel_error: if scale[k] > 0.0 { err[k] / scale[k] } else { err[k] },
        })
        .collect();
    let max_rel_error = orders.iter().fold(0.0f64, |m, o| m.max(o.rel_error));
    Ok(JetReport { max_k, order, step, half_width: p, points: total, orders, max_rel_error })
}

/// Rows `t, x1..xd, value` of the mollified sum on the product of `ts` and `xs`.
pub fn mollified_csv(series: &MollifiedSeries, ts: &[f64], xs: &[Vec<f64>]) -> Result<String, BorelError> {
    let d = series.domain().dim();
    let mut out = String::from("t");
    for a in 1..=d {
        let _ = write!(out, ",x{a}");
    }
    out.push_str(",value\n");
    for &t in ts {
        for x in xs {
            let v = series.mollified_eval(t, x)?;
            let _ = write!(out, "{t:e}");
            for c in x {
                let _ = write!(out, ",{c:e}");
            }
            let _ = writeln!(out, ",{v:e}");
        }
    }
    Ok(out)
}

fn exact(v: f64) -> Result<Rational, BorelError> {
    Rational::from_float(v).ok_or_else(|| BorelError::Coefficient(format!("non-finite value {v}")))
}

fn exact_tf(v: TwoFloat) -> Result<Rational, BorelError> {
    Ok(exact(v.hi())? + exact(v.lo())?)
}
