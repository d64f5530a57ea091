//! Reference integrators: method of lines for 1D (and 0D) symbolic systems,
//! and the pseudo-spectral Navier-Stokes stepper.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::VerifyError;
use crate::expr::{Atom, Compiled, EvalEnv, MultiIndex, Poly};
use crate::nonlocal::{Field, NsOperator, PeriodicGrid, Spectral};
use crate::parser::PdeSystem;
use crate::stencil;

/// One array of grid values per unknown.
pub type State = Vec<Vec<f64>>;

/// Spectral method of lines on `[0, 2pi)` with classical RK4 in time.
///
/// `cutoff` keeps Fourier modes `|k| <= cutoff` of the state after every stage
/// (a Galerkin truncation); it also bounds the growth of round-off when
/// integrating diffusive systems backwards for central differences.
pub struct MethodOfLines {
    dim: usize,
    points: Vec<f64>,
    spectral: Option<Spectral>,
    cutoff: Option<usize>,
    rhs: Vec<Compiled>,
    externals: Vec<(usize, MultiIndex)>,
    init: Vec<Compiled>,
}

impl std::fmt::Debug for MethodOfLines {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MethodOfLines").field("dim", &self.dim).field("points", &self.points.len()).finish()
    }
}

impl MethodOfLines {
    /// `n` grid points (a power of two) for 1D systems; ignored for ODEs.
    pub fn new(
        sys: &PdeSystem,
        n: usize,
        cutoff: Option<usize>,
        overrides: &BTreeMap<String, f64>,
    ) -> Result<Self, VerifyError> {
        if sys.dim > 1 {
            return Err(VerifyError::Unsupported(format!("method of lines needs d <= 1, got d = {}", sys.dim)));
        }
        if sys.has_pressure() {
            return Err(VerifyError::Unsupported("pressure markers need the Navier-Stokes integrator".into()));
        }
        let params = sys.param_values(overrides);
        let rhs_polys = sys.rhs.iter().map(|e| e.to_poly()).collect::<Result<Vec<Poly>, _>>()?;
        let mut atoms: Vec<Atom> = Vec::new();
        for p in &rhs_polys {
            p.visit_atoms(&mut |a| {
                if a.is_unknown_like() && !atoms.contains(a) {
                    atoms.push(a.clone());
                }
            });
        }
        atoms.sort();
        let externals = atoms
            .iter()
            .map(|a| {
                let (name, alpha) = a.unknown_parts().expect("unknown-like");
                let i = sys.index_of(name).ok_or_else(|| VerifyError::Unsupported(format!("unknown {name}")))?;
                Ok((i, alpha))
            })
            .collect::<Result<Vec<_>, VerifyError>>()?;
        let rhs = rhs_polys.iter().map(|p| Compiled::new(p, &params, &atoms)).collect::<Result<Vec<_>, _>>()?;
        let init = sys
            .init
            .iter()
            .map(|e| Compiled::new(&e.to_poly()?, &params, &[]))
            .collect::<Result<Vec<_>, _>>()?;
        let (points, spectral) = if sys.dim == 0 {
            (vec![0.0], None)
        } else {
            let grid = PeriodicGrid::new(&[n]).map_err(|e| VerifyError::Unsupported(e.to_string()))?;
            ((0..n).map(|k| grid.point(k)[0]).collect(), Some(Spectral::new(&grid)))
        };
        Ok(MethodOfLines { dim: sys.dim, points, spectral, cutoff: if sys.dim == 0 { None } else { cutoff }, rhs, externals, init })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn initial_state(&self) -> Result<State, VerifyError> {
        let s = self
            .init
            .iter()
            .map(|c| self.points.iter().map(|&x| c.eval_at(&self.point(x))).collect::<Result<Vec<_>, _>>())
            .collect::<Result<State, _>>()?;
        Ok(self.truncate(s))
    }

    fn point(&self, x: f64) -> Vec<f64> {
        if self.dim == 0 {
            vec![]
        } else {
            vec![x]
        }
    }

    fn truncate(&self, s: State) -> State {
        let (Some(sp), Some(kc)) = (&self.spectral, self.cutoff) else { return s };
        let n = self.points.len();
        s.into_iter()
            .map(|u| {
                let mut h = sp.forward(&u);
                for (i, z) in h.iter_mut().enumerate() {
                    let k = if i <= n / 2 { i } else { n - i };
                    if k > kc {
                        *z = Complex64::default();
                    }
                }
                sp.inverse(h)
            })
            .collect()
    }

    pub fn rhs(&self, t: f64, s: &State) -> Result<State, VerifyError> {
        let cols: Vec<Vec<f64>> = self
            .externals
            .iter()
            .map(|(i, alpha)| match (&self.spectral, alpha.is_zero()) {
                (Some(sp), false) => sp.partial(&s[*i], &[alpha.get(0)]),
                _ => s[*i].clone(),
            })
            .collect();
        let mut out = vec![vec![0.0; self.points.len()]; self.rhs.len()];
        let mut ext = vec![0.0; cols.len()];
        for (k, &x) in self.points.iter().enumerate() {
            for (e, c) in ext.iter_mut().zip(&cols) {
                *e = c[k];
            }
            let p = self.point(x);
            let env = EvalEnv { point: &p, time: Some(t), externals: &ext };
            for (o, f) in out.iter_mut().zip(&self.rhs) {
                o[k] = f.eval(&env)?;
            }
        }
        Ok(self.truncate(out))
    }

    pub fn step(&self, t: f64, s: &State, dt: f64) -> Result<State, VerifyError> {
        let axpy = |a: &State, b: &State, c: f64| -> State {
            a.iter().zip(b).map(|(u, v)| u.iter().zip(v).map(|(x, y)| x + c * y).collect()).collect()
        };
        let k1 = self.rhs(t, s)?;
        let k2 = self.rhs(t + dt / 2.0, &axpy(s, &k1, dt / 2.0))?;
        let k3 = self.rhs(t + dt / 2.0, &axpy(s, &k2, dt / 2.0))?;
        let k4 = self.rhs(t + dt, &axpy(s, &k3, dt))?;
        Ok(s.iter()
            .enumerate()
            .map(|(i, u)| {
                u.iter()
                    .enumerate()
                    .map(|(k, x)| x + dt / 6.0 * (k1[i][k] + 2.0 * k2[i][k] + 2.0 * k3[i][k] + k4[i][k]))
                    .collect()
            })
            .collect())
    }

    /// From `t0` to `t1` (either direction) in equal steps no longer than `max_dt`.
    pub fn integrate(&self, s: &State, t0: f64, t1: f64, max_dt: f64) -> Result<State, VerifyError> {
        let steps = ((t1 - t0).abs() / max_dt).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / steps as f64;
        let scale = 1.0 + max_abs(s);
        let mut cur = s.clone();
        for k in 0..steps {
            let t = t0 + k as f64 * dt;
            cur = self.step(t, &cur, dt)?;
            let m = max_abs(&cur);
            if !m.is_finite() || m > 1e12 * scale {
                return Err(VerifyError::Blowup { t: t + dt });
            }
        }
        Ok(cur)
    }

    /// States at `t = j h` for `j = -back..=forward`, stepping `h / substeps`.
    pub fn samples(&self, h: f64, back: usize, forward: usize, substeps: usize) -> Result<Vec<State>, VerifyError> {
        let s0 = self.initial_state()?;
        let dt = h / substeps as f64;
        let mut fwd = vec![s0.clone()];
        for j in 0..forward {
            fwd.push(self.integrate(&fwd[j], j as f64 * h, (j + 1) as f64 * h, dt)?);
        }
        let mut bwd = vec![s0];
        for j in 0..back {
            bwd.push(self.integrate(&bwd[j], -(j as f64) * h, -((j + 1) as f64) * h, dt)?);
        }
        Ok(bwd.into_iter().skip(1).rev().chain(fwd).collect())
    }
}

fn max_abs(s: &State) -> f64 {
    s.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `k`-th `t`-derivative at `t = 0` from states at `t = j h`, `j = -p..=p`.
fn central_derivative(states: &[State], k: usize, p: usize, h: f64) -> State {
    let (_, w) = stencil::central(k, p);
    let w: Vec<f64> = w.iter().map(stencil::to_twofloat).map(|x| x.hi()).collect();
    let mid = states.len() / 2;
    let s0 = &states[mid];
    s0.iter()
        .enumerate()
        .map(|(i, u)| {
            (0..u.len())
                .map(|x| {
                    let acc: f64 = w.iter().enumerate().map(|(j, wj)| wj * states[mid + j - p][i][x]).sum();
                    acc / h.powi(k as i32)
                })
                .collect()
        })
        .collect()
}

/// Half-width giving sixth-order accuracy for the `k`-th derivative.
pub fn half_width(k: usize) -> usize {
    3 + k.saturating_sub(1) / 2
}

/// A finite-difference jet with the step chosen by Richardson comparison.
#[derive(Clone, Debug)]
pub struct FdJet {
    /// `derivatives[k - 1]` is the `k`-th `t`-derivative at `t = 0`.
    pub derivatives: Vec<State>,
    pub steps: Vec<f64>,
    /// `max |D(h) - D(h/2)|` at the chosen pair.
    pub richardson: Vec<f64>,
}

/// Central differences of orders `1..=max_k` at `t = 0`. For each order the
/// candidate steps `h0 / 2^m` are compared pairwise and the finer member of
/// the closest pair is returned.
pub fn fd_jet(mol: &MethodOfLines, max_k: usize, h0: f64, levels: usize, substeps: usize) -> Result<FdJet, VerifyError> {
    let pmax = half_width(max_k.max(1));
    let hmin = h0 / (1usize << levels) as f64;
    let reach = pmax << levels;
    let samples = mol.samples(hmin, reach, reach, substeps)?;
    let mid = reach;
    let at = |m: usize, p: usize| -> Vec<State> {
        let stride = 1usize << (levels - m);
        (0..=2 * p).map(|j| samples[mid + j * stride - p * stride].clone()).collect()
    };
    let mut out = FdJet { derivatives: Vec::new(), steps: Vec::new(), richardson: Vec::new() };
    for k in 1..=max_k {
        let p = half_width(k);
        let est: Vec<State> = (0..=levels)
            .map(|m| central_derivative(&at(m, p), k, p, h0 / (1usize << m) as f64))
            .collect();
        let (best, diff) = (0..levels)
            .map(|m| (m, max_abs_diff(&est[m], &est[m + 1])))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        out.derivatives.push(est[best + 1].clone());
        out.steps.push(h0 / (1usize << (best + 1)) as f64);
        out.richardson.push(diff);
    }
    Ok(out)
}

fn max_abs_diff(a: &State, b: &State) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Pseudo-spectral Navier-Stokes reference (dealiased RK4).
pub fn ns_reference(u0: &Field, nu: f64, t_end: f64, dt: f64) -> Result<Field, VerifyError> {
    let op = NsOperator::new(u0.grid(), nu)?;
    Ok(op.integrate(u0, t_end, dt)?)
}
