use std::collections::BTreeMap;

use serde::Serialize;

use super::VerifyError;
use crate::borel::{cutoff, cutoff_derivative, MollifiedSeries};
use crate::expr::{Atom, Compiled, Derivation, EvalEnv, MultiIndex, Poly, SpatialDerivative};
use crate::parser::PdeSystem;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub unknown: String,
    pub residual: f64,
}

/// `D^alpha b_n` for every `n`, compiled.
struct Jets {
    radii: Vec<f64>,
    by_alpha: BTreeMap<MultiIndex, Vec<Compiled>>,
}

impl Jets {
    fn value(&self, alpha: &MultiIndex, t: f64, x: &[f64]) -> Result<f64, VerifyError> {
        let mut acc = 0.0;
        for (n, c) in self.by_alpha[alpha].iter().enumerate() {
            let psi = if n == 0 { 1.0 } else { cutoff(t / self.radii[n]) };
            acc += c.eval_at(x)? * t.powi(n as i32) * psi;
        }
        Ok(acc)
    }

    /// `d/dt` of the mollified sum, termwise.
    fn time_derivative(&self, t: f64, x: &[f64]) -> Result<f64, VerifyError> {
        let mut acc = 0.0;
        for (n, c) in self.by_alpha[&MultiIndex::zero()].iter().enumerate().skip(1) {
            let r = self.radii[n];
            let nf = n as f64;
            let dt = nf * t.powi(n as i32 - 1) * cutoff(t / r) + t.powi(n as i32) * cutoff_derivative(t / r) / r;
            acc += c.eval_at(x)? * dt;
        }
        Ok(acc)
    }
}

/// `|d/dt v~_i - F_i(x, v~, D v~)|` at every `(t, x)`, where `v~` is the
/// mollified sum of each unknown (`series[i]`, symbolic coefficients).
pub fn residual(
    sys: &PdeSystem,
    series: &[MollifiedSeries],
    ts: &[f64],
    xs: &[Vec<f64>],
    overrides: &BTreeMap<String, f64>,
) -> Result<Vec<ResidualRow>, VerifyError> {
    if series.len() != sys.len() {
        return Err(VerifyError::Unsupported(format!("{} series for {} unknowns", series.len(), sys.len())));
    }
    let params = sys.param_values(overrides);
    let rhs = sys.rhs.iter().map(|e| e.to_poly()).collect::<Result<Vec<Poly>, _>>()?;
    let mut atoms: Vec<Atom> = Vec::new();
    for p in &rhs {
        p.visit_atoms(&mut |a| {
            if a.is_unknown_like() && !atoms.contains(a) {
                atoms.push(a.clone());
            }
        });
    }
    atoms.sort();
    let mut jets: Vec<Jets> = series
        .iter()
        .map(|s| Jets { radii: (0..=s.order()).map(|n| s.radius(n)).collect(), by_alpha: BTreeMap::new() })
        .collect();
    let mut wanted: Vec<(usize, MultiIndex)> = atoms
        .iter()
        .map(|a| {
            let (name, alpha) = a.unknown_parts().expect("unknown-like");
            let i = sys.index_of(name).ok_or_else(|| VerifyError::Unsupported(format!("unknown {name}")))?;
            Ok((i, alpha))
        })
        .collect::<Result<_, VerifyError>>()?;
    wanted.extend((0..sys.len()).map(|i| (i, MultiIndex::zero())));
    for (i, alpha) in &wanted {
        if jets[*i].by_alpha.contains_key(alpha) {
            continue;
        }
        let compiled = (0..=series[*i].order())
            .map(|n| {
                let e = series[*i]
                    .coefficient_expr(n)
                    .ok_or_else(|| VerifyError::Unsupported("residual needs symbolic coefficients".into()))?;
                let mut p = e.to_poly()?;
                for j in alpha.dims() {
                    p = SpatialDerivative(j).apply(&p)?;
                }
                Ok(Compiled::new(&p, &params, &[])?)
            })
            .collect::<Result<Vec<_>, VerifyError>>()?;
        jets[*i].by_alpha.insert(alpha.clone(), compiled);
    }
    let f = rhs.iter().map(|p| Compiled::new(p, &params, &atoms)).collect::<Result<Vec<_>, _>>()?;
    let externals = &wanted[..atoms.len()];

    let mut rows = Vec::with_capacity(ts.len() * xs.len() * sys.len());
    for &t in ts {
        for x in xs {
            let ext = externals
                .iter()
                .map(|(i, alpha)| jets[*i].value(alpha, t, x))
                .collect::<Result<Vec<_>, _>>()?;
            let env = EvalEnv { point: x, time: Some(t), externals: &ext };
            for (i, u) in sys.unknowns.iter().enumerate() {
                let r = jets[i].time_derivative(t, x)? - f[i].eval(&env)?;
                rows.push(ResidualRow { t, x: x.clone(), unknown: u.to_string(), residual: r.abs() });
            }
        }
    }
    Ok(rows)
}
