use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::cutoff::{cutoff, m1};
use super::BorelError;
use crate::derivation::CoefficientSeries;
use crate::expr::{Compiled, Derivation, Expr, MultiIndex, Poly, Rational, SpatialDerivative};
use crate::nonlocal::{PeriodicGrid, Spectral};

/// Closed axis-aligned box; zero-dimensional for ODEs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self, BorelError> {
        for &(a, b) in bounds {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(BorelError::Domain(format!("bad interval ({a}, {b})")));
            }
        }
        Ok(BoxDomain { lower: bounds.iter().map(|b| b.0).collect(), upper: bounds.iter().map(|b| b.1).collect() })
    }

    pub fn point() -> Self {
        BoxDomain { lower: vec![], upper: vec![] }
    }

    /// `[0, 2pi]^d`.
    pub fn torus(d: usize) -> Self {
        BoxDomain { lower: vec![0.0; d], upper: vec![std::f64::consts::TAU; d] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| *a <= *v && v <= b)
    }

    /// `m` points per axis including both ends, coordinates `a + (b - a) * (k / (m - 1))`.
    /// Refining `m -> 2m - 1` keeps every old point bit-for-bit.
    pub(crate) fn lattice_coord(&self, axis: usize, k: usize, m: usize) -> f64 {
        let (a, b) = (self.lower[axis], self.upper[axis]);
        if m < 2 {
            return a;
        }
        a + (b - a) * (k as f64 / (m - 1) as f64)
    }

    /// Calls `f(point, on_coarse)` for every point of the `2m - 1` lattice;
    /// `on_coarse` marks the points of the `m` lattice.
    pub(crate) fn for_each_nested(&self, m: usize, mut f: impl FnMut(&[f64], bool) -> Result<(), BorelError>) -> Result<(), BorelError> {
        let d = self.dim();
        let fine = 2 * m - 1;
        let mut idx = vec![0usize; d];
        let mut x: Vec<f64> = (0..d).map(|a| self.lattice_coord(a, 0, fine)).collect();
        loop {
            f(&x, idx.iter().all(|k| k % 2 == 0))?;
            let mut a = 0;
            loop {
                if a == d {
                    return Ok(());
                }
                idx[a] += 1;
                if idx[a] < fine {
                    x[a] = self.lattice_coord(a, idx[a], fine);
                    break;
                }
                idx[a] = 0;
                x[a] = self.lattice_coord(a, 0, fine);
                a += 1;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupOptions {
    /// Sample points per axis on the coarse lattice; refinement uses `2m - 1`.
    pub samples: usize,
    /// Applied when the refinement raised the estimate.
    pub inflation: f64,
    /// Coarse sample count on `[0, 1]` for the one-dimensional `t` profiles.
    pub tau_samples: usize,
}

impl Default for SupOptions {
    fn default() -> Self {
        SupOptions { samples: 2048, inflation: 0.05, tau_samples: 4097 }
    }
}

/// A sampled supremum: coarse and refined maxima, and the value used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupEstimate {
    pub coarse: f64,
    pub fine: f64,
    pub value: f64,
}

impl SupEstimate {
    /// `value = fine`, inflated when refinement moved the maximum by more than
    /// round-off.
    pub fn new(coarse: f64, fine: f64, inflation: f64) -> Self {
        let changed = fine > coarse * (1.0 + 1e-12);
        SupEstimate { coarse, fine, value: if changed { fine * (1.0 + inflation) } else { fine } }
    }

    pub fn exact(v: f64) -> Self {
        SupEstimate { coarse: v, fine: v, value: v }
    }

    pub(crate) fn max(self, other: SupEstimate, inflation: f64) -> SupEstimate {
        SupEstimate::new(self.coarse.max(other.coarse), self.fine.max(other.fine), inflation)
    }
}

/// Sup over `[0, 1]` of `|g|`, sampled with the nested rule; the largest sample
/// is then polished by golden-section search between its neighbours, and the
/// value is never below the polished maximum.
pub(crate) fn tau_sup(g: impl Fn(f64) -> f64, m: usize, inflation: f64) -> SupEstimate {
    let fine = 2 * m - 1;
    let h = 1.0 / (fine - 1) as f64;
    let f = |tau: f64| g(tau).abs();
    let (mut c, mut fmax, mut at) = (0.0f64, 0.0f64, 0usize);
    for k in 0..fine {
        let v = f(k as f64 * h);
        if v > fmax {
            fmax = v;
            at = k;
        }
        if k % 2 == 0 {
            c = c.max(v);
        }
    }
    let (mut lo, mut hi) = ((at as f64 - 1.0).max(0.0) * h, ((at + 1) as f64 * h).min(1.0));
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (a, b) = (hi - gr * (hi - lo), lo + gr * (hi - lo));
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let polished = f(0.5 * (lo + hi)).max(fmax);
    let mut est = SupEstimate::new(c, fmax, inflation);
    est.value = est.value.max(polished);
    est
}

pub fn radius(n: usize, beta: f64) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    1.0 / (fact * (1.0 + beta))
}

/// All multi-indices of total order `i` in `d` variables.
fn multi_indices(d: usize, i: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut counts = vec![0u32; d];
    fn rec(pos: usize, left: u32, counts: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            out.push(MultiIndex::new(counts.clone()));
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, out);
        }
    }
    if d == 0 {
        if i == 0 {
            out.push(MultiIndex::zero());
        }
        return out;
    }
    rec(0, i, &mut counts, &mut out);
    out
}

#[derive(Clone, Debug)]
enum Repr {
    Symbolic {
        expr: Expr,
        /// `derivs[i]`: all partials of order `i`.
        derivs: Vec<Vec<Compiled>>,
    },
    Sampled {
        grid: PeriodicGrid,
        hat: Vec<Complex64>,
        /// `derivs[i]`: transformed partials of order `i`.
        derivs: Vec<Vec<Vec<Complex64>>>,
    },
}

/// `sum_n b_n(x) t^n psi(t / r_n)` over a box `Omega`.
#[derive(Clone, Debug)]
pub struct MollifiedSeries {
    domain: BoxDomain,
    coeffs: Vec<Repr>,
    /// `sups[n][i] ~ sup |b_n^(i)|` for `i < max(n, 1)`.
    sups: Vec<Vec<SupEstimate>>,
    betas: Vec<SupEstimate>,
    radii: Vec<f64>,
    options: SupOptions,
}

impl MollifiedSeries {
    /// Symbolic coefficients `b_0..b_N` in the spatial variables of `domain`.
    pub fn from_exprs(
        coefficients: Vec<Expr>,
        domain: BoxDomain,
        params: &BTreeMap<String, f64>,
        options: SupOptions,
    ) -> Result<Self, BorelError> {
        check_options(&options)?;
        let d = domain.dim();
        let mut coeffs = Vec::with_capacity(coefficients.len());
        for (n, e) in coefficients.into_iter().enumerate() {
            if e.mentions_unknown() || e.mentions_time() || e.mentions_pressure() {
                return Err(BorelError::Coefficient(format!("b_{n} must be a closed function of x, got {e}")));
            }
            if let Some(j) = e.max_var_index() {
                if j >= d {
                    return Err(BorelError::Domain(format!("b_{n} uses x{} but the domain has dimension {d}", j + 1)));
                }
            }
            let top = n.max(1) as u32;
            let mut by_order: Vec<BTreeMap<MultiIndex, Poly>> = vec![BTreeMap::from([(MultiIndex::zero(), e.to_poly()?)])];
            for i in 1..top {
                let mut level = BTreeMap::new();
                for alpha in multi_indices(d, i) {
                    let j = (0..d).find(|&j| alpha.get(j) > 0).expect("order >= 1");
                    let mut counts: Vec<u32> = (0..d).map(|a| alpha.get(a)).collect();
                    counts[j] -= 1;
                    let parent = by_order[i as usize - 1][&MultiIndex::new(counts)].clone();
                    level.insert(alpha, SpatialDerivative(j).apply(&parent)?);
                }
                by_order.push(level);
            }
            let derivs = by_order
                .iter()
                .map(|lvl| lvl.values().map(|p| Compiled::new(p, params, &[])).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            coeffs.push(Repr::Symbolic { expr: e, derivs });
        }
        Self::finish(domain, coeffs, options)
    }

    /// Coefficients `b_n = a_n / n!` for one unknown of a Taylor series.
    pub fn from_coefficient_series(
        series: &CoefficientSeries,
        unknown: &str,
        domain: BoxDomain,
        overrides: &BTreeMap<String, f64>,
        options: SupOptions,
    ) -> Result<Self, BorelError> {
        let a = series.of(unknown).ok_or_else(|| BorelError::Coefficient(format!("no unknown named {unknown}")))?;
        if domain.dim() != series.system.dim {
            return Err(BorelError::Domain(format!(
                "domain has dimension {}, system has {}",
                domain.dim(),
                series.system.dim
            )));
        }
        let mut fact = Rational::from_integer(1.into());
        let mut b = Vec::with_capacity(a.len());
        for (n, an) in a.iter().enumerate() {
            if n > 0 {
                fact *= Rational::from_integer(n.into());
            }
            b.push(an.scaled(&fact.recip())?);
        }
        let params = series.system.param_values(overrides);
        Self::from_exprs(b, domain, &params, options)
    }

    /// Coefficients sampled on a periodic grid over `[0, 2pi)^d`; derivatives
    /// are spectral and evaluation off the grid is by trigonometric interpolation.
    pub fn from_samples(grid: &PeriodicGrid, samples: Vec<Vec<f64>>, options: SupOptions) -> Result<Self, BorelError> {
        check_options(&options)?;
        let d = grid.dim();
        let sp = Spectral::new(grid);
        let mut coeffs = Vec::with_capacity(samples.len());
        for (n, s) in samples.into_iter().enumerate() {
            if s.len() != grid.len() {
                return Err(BorelError::Coefficient(format!("b_{n} has {} samples, grid has {}", s.len(), grid.len())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(BorelError::NonFinite { n, i: 0 });
            }
            let hat = sp.forward(&s);
            let top = n.max(1) as u32;
            let mut derivs = Vec::with_capacity(top as usize);
            for i in 0..top {
                derivs.push(
                    multi_indices(d, i)
                        .iter()
                        .map(|alpha| {
                            let mut h = hat.clone();
                            for axis in 0..d {
                                for _ in 0..alpha.get(axis) {
                                    h = sp.derivative_hat(&h, axis);
                                }
                            }
                            h
                        })
                        .collect(),
                );
            }
            coeffs.push(Repr::Sampled { grid: grid.clone(), hat, derivs });
        }
        Self::finish(BoxDomain::torus(d), coeffs, options)
    }

    fn finish(domain: BoxDomain, coeffs: Vec<Repr>, options: SupOptions) -> Result<Self, BorelError> {
        let mut sups = Vec::with_capacity(coeffs.len());
        let mut betas = Vec::with_capacity(coeffs.len());
        let mut radii = Vec::with_capacity(coeffs.len());
        for (n, c) in coeffs.iter().enumerate() {
            let s = derivative_sups(c, &domain, &options).map_err(|e| match e {
                BorelError::NonFinite { i, .. } => BorelError::NonFinite { n, i },
                other => other,
            })?;
            let beta = s[1.min(s.len())..]
                .iter()
                .fold(SupEstimate::exact(0.0), |acc, x| acc.max(*x, options.inflation));
            radii.push(if n == 0 { f64::INFINITY } else { radius(n, beta.value) });
            betas.push(beta);
            sups.push(s);
        }
        Ok(MollifiedSeries { domain, coeffs, sups, betas, radii, options })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn options(&self) -> &SupOptions {
        &self.options
    }

    /// `max_{0<i<n} sup |b_n^(i)|`; zero for `n <= 1`.
    pub fn beta(&self, n: usize) -> f64 {
        self.betas[n].value
    }

    /// The refined sample maximum behind [`Self::beta`], before inflation.
    pub fn beta_raw(&self, n: usize) -> f64 {
        self.betas[n].fine
    }

    pub fn beta_estimate(&self, n: usize) -> SupEstimate {
        self.betas[n]
    }

    /// `r_n = 1 / (n! (1 + beta_n))`; `r_0` is infinite (the `n = 0` term is never cut).
    pub fn radius(&self, n: usize) -> f64 {
        self.radii[n]
    }

    /// `sup |b_n^(i)|` over the closed box, for `i < max(n, 1)`.
    pub fn derivative_sup(&self, n: usize, i: usize) -> Option<SupEstimate> {
        self.sups.get(n).and_then(|s| s.get(i)).copied()
    }

    pub fn m1(&self) -> f64 {
        m1()
    }

    pub fn coefficient_expr(&self, n: usize) -> Option<&Expr> {
        match self.coeffs.get(n)? {
            Repr::Symbolic { expr, .. } => Some(expr),
            Repr::Sampled { .. } => None,
        }
    }

    /// Half the smallest radius: every cutoff factor is exactly 1 for `|t|` up to here.
    pub fn plateau(&self) -> f64 {
        self.radii[1.min(self.radii.len())..].iter().fold(f64::INFINITY, |m, r| m.min(r / 2.0))
    }

    /// `b_0(x), .., b_N(x)`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>, BorelError> {
        if !self.domain.contains(x) {
            return Err(BorelError::OutsideDomain(x.to_vec()));
        }
        self.coeffs.iter().map(|c| eval_repr(c, x)).collect()
    }

    pub fn mollified_eval(&self, t: f64, x: &[f64]) -> Result<f64, BorelError> {
        let b = self.values(x)?;
        Ok(self.sum(t, &b, true))
    }

    /// The plain truncated Taylor sum `sum_n b_n(x) t^n`.
    pub fn taylor_sum(&self, t: f64, x: &[f64]) -> Result<f64, BorelError> {
        let b = self.values(x)?;
        Ok(self.sum(t, &b, false))
    }

    fn sum(&self, t: f64, b: &[f64], cut: bool) -> f64 {
        let mut acc = 0.0;
        for (n, bn) in b.iter().enumerate() {
            let psi = if cut && n > 0 { cutoff(t / self.radii[n]) } else { 1.0 };
            acc += bn * t.powi(n as i32) * psi;
        }
        acc
    }
}

fn check_options(o: &SupOptions) -> Result<(), BorelError> {
    if o.samples < 2 || o.tau_samples < 2 || o.inflation.is_nan() || o.inflation < 0.0 {
        return Err(BorelError::Domain("sampling needs at least 2 points and a non-negative inflation".into()));
    }
    Ok(())
}

fn eval_repr(c: &Repr, x: &[f64]) -> Result<f64, BorelError> {
    match c {
        Repr::Symbolic { derivs, .. } => Ok(derivs[0][0].eval_at(x)?),
        Repr::Sampled { grid, hat, .. } => Ok(trig_eval(grid, hat, x)),
    }
}

fn trig_eval(grid: &PeriodicGrid, hat: &[Complex64], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (flat, c) in hat.iter().enumerate() {
        if *c == Complex64::default() {
            continue;
        }
        let idx = grid.unravel(flat);
        let phase: f64 = (0..grid.dim()).map(|a| grid.wavenumber(a, idx[a]) as f64 * x[a]).sum();
        acc += c.re * phase.cos() - c.im * phase.sin();
    }
    acc / grid.len() as f64
}

/// Spectrum of a grid function placed on a grid twice as fine per axis
/// (Nyquist bins split evenly), scaled so the inverse interpolates.
fn zero_pad(grid: &PeriodicGrid, fine: &PeriodicGrid, hat: &[Complex64]) -> Vec<Complex64> {
    let d = grid.dim();
    let mut out = vec![Complex64::default(); fine.len()];
    let scale = fine.len() as f64 / grid.len() as f64;
    for (flat, c) in hat.iter().enumerate() {
        if *c == Complex64::default() {
            continue;
        }
        let idx = grid.unravel(flat);
        let ks: Vec<i64> = (0..d).map(|a| grid.wavenumber(a, idx[a])).collect();
        let nyq: Vec<usize> = (0..d).filter(|&a| 2 * idx[a] == grid.dims()[a]).collect();
        let copies = 1usize << nyq.len();
        for mask in 0..copies {
            let mut target = 0usize;
            for (a, &ka) in ks.iter().enumerate().take(d) {
                let mut k = ka;
                if let Some(pos) = nyq.iter().position(|&b| b == a) {
                    k = k.abs() * if mask >> pos & 1 == 1 { -1 } else { 1 };
                }
                let n = fine.dims()[a] as i64;
                target = target * fine.dims()[a] + k.rem_euclid(n) as usize;
            }
            out[target] += c * (scale / copies as f64);
        }
    }
    out
}

fn derivative_sups(c: &Repr, domain: &BoxDomain, o: &SupOptions) -> Result<Vec<SupEstimate>, BorelError> {
    match c {
        Repr::Symbolic { derivs, .. } => derivs
            .iter()
            .enumerate()
            .map(|(i, level)| {
                let (mut coarse, mut fine) = (0.0f64, 0.0f64);
                domain.for_each_nested(o.samples, |x, on_coarse| {
                    for comp in level {
                        let v = comp.eval_at(x)?.abs();
                        if !v.is_finite() {
                            return Err(BorelError::NonFinite { n: 0, i });
                        }
                        fine = fine.max(v);
                        if on_coarse {
                            coarse = coarse.max(v);
                        }
                    }
                    Ok(())
                })?;
                Ok(SupEstimate::new(coarse, fine, o.inflation))
            })
            .collect(),
        Repr::Sampled { grid, derivs, .. } => {
            let sp = Spectral::new(grid);
            let fine_dims: Vec<usize> = grid.dims().iter().map(|n| 2 * n).collect();
            let fine_grid = PeriodicGrid::new(&fine_dims).map_err(|e| BorelError::Domain(e.to_string()))?;
            let fine_sp = Spectral::new(&fine_grid);
            let maxabs = |v: Vec<f64>| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            derivs
                .iter()
                .enumerate()
                .map(|(i, level)| {
                    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
                    for h in level {
                        coarse = coarse.max(maxabs(sp.inverse(h.clone())));
                        fine = fine.max(maxabs(fine_sp.inverse(zero_pad(grid, &fine_grid, h))));
                    }
                    if !(coarse.is_finite() && fine.is_finite()) {
                        return Err(BorelError::NonFinite { n: 0, i });
                    }
                    Ok(SupEstimate::new(coarse, fine.max(coarse), o.inflation))
                })
                .collect()
        }
    }
}
