use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, NonlocalError, PeriodicGrid};

/// FFT plans and wavenumber tables for one grid.
pub struct Spectral {
    grid: PeriodicGrid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// `k[a][flat]`: signed wavenumber on axis `a`.
    k: Vec<Vec<f64>>,
    /// `-|k|^2`.
    laplace: Vec<f64>,
    /// Two-thirds rule: every `|k_a| <= (N_a - 1) / 3`.
    keep: Vec<bool>,
    /// Derivative multiplier is zero at the Nyquist bin.
    nyquist: Vec<Vec<bool>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.dims().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.dims().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let d = grid.dim();
        let len = grid.len();
        let mut k = vec![vec![0.0; len]; d];
        let mut nyquist = vec![vec![false; len]; d];
        let mut laplace = vec![0.0; len];
        let mut keep = vec![true; len];
        for flat in 0..len {
            let idx = grid.unravel(flat);
            for a in 0..d {
                let n = grid.dims()[a];
                let ka = grid.wavenumber(a, idx[a]);
                k[a][flat] = ka as f64;
                nyquist[a][flat] = 2 * idx[a] == n;
                laplace[flat] -= (ka * ka) as f64;
                if ka.unsigned_abs() as usize > (n - 1) / 3 {
                    keep[flat] = false;
                }
            }
        }
        Spectral { grid: grid.clone(), forward, inverse, k, laplace, keep, nyquist }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let dims = self.grid.dims();
        let plans = if inverse { &self.inverse } else { &self.forward };
        for (a, plan) in plans.iter().enumerate() {
            let n = dims[a];
            let stride: usize = dims[a + 1..].iter().product();
            let outer: usize = dims[..a].iter().product();
            let mut line = vec![Complex64::default(); n];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + m * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (m, v) in line.iter().enumerate() {
                        data[base + m * stride] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Normalized inverse transform; the imaginary part is discarded, which
    /// projects onto the conjugate-symmetric (real) subspace.
    pub fn inverse(&self, mut h: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut h, true);
        let scale = 1.0 / self.grid.len() as f64;
        h.iter().map(|z| z.re * scale).collect()
    }

    pub fn derivative_hat(&self, h: &[Complex64], axis: usize) -> Vec<Complex64> {
        h.iter()
            .enumerate()
            .map(|(i, z)| {
                if self.nyquist[axis][i] {
                    Complex64::default()
                } else {
                    z * Complex64::new(0.0, self.k[axis][i])
                }
            })
            .collect()
    }

    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        self.inverse(self.derivative_hat(&self.forward(f), axis))
    }

    /// `D^alpha f` for a multi-index given as per-axis counts.
    pub fn partial(&self, f: &[f64], counts: &[u32]) -> Vec<f64> {
        let mut h = self.forward(f);
        for (axis, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                h = self.derivative_hat(&h, axis);
            }
        }
        self.inverse(h)
    }

    /// Multiplier `-|k|^2` in grid order.
    pub fn laplace_symbol(&self) -> &[f64] {
        &self.laplace
    }

    /// Solves `lap p = s` on transformed data, zero mean.
    pub fn inverse_laplacian_hat(&self, h: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> =
            h.iter().zip(&self.laplace).map(|(z, &l)| if l == 0.0 { Complex64::default() } else { z / l }).collect();
        out[0] = Complex64::default();
        out
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let h = self.forward(f);
        self.inverse(h.iter().zip(&self.laplace).map(|(z, l)| z * l).collect())
    }

    pub fn filter_hat(&self, h: &mut [Complex64]) {
        for (z, keep) in h.iter_mut().zip(&self.keep) {
            if !keep {
                *z = Complex64::default();
            }
        }
    }

    /// Zeroes the top third of modes on every axis.
    pub fn dealias(&self, f: &[f64]) -> Vec<f64> {
        let mut h = self.forward(f);
        self.filter_hat(&mut h);
        self.inverse(h)
    }

    /// Solves `lap p = source` with `mean(p) = 0`; the mean of the source is ignored.
    pub fn inverse_laplacian(&self, source: &[f64]) -> Vec<f64> {
        self.inverse(self.inverse_laplacian_hat(&self.forward(source)))
    }

    pub fn divergence(&self, u: &Field) -> Result<Field, NonlocalError> {
        self.check_vector(u)?;
        let mut div = vec![0.0; self.grid.len()];
        for (a, c) in u.components().iter().enumerate() {
            for (d, x) in div.iter_mut().zip(self.derivative(c, a)) {
                *d += x;
            }
        }
        Field::new(self.grid.clone(), vec![div])
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let h = self.forward(p);
        (0..self.grid.dim()).map(|a| self.inverse(self.derivative_hat(&h, a))).collect()
    }

    pub(crate) fn check_vector(&self, u: &Field) -> Result<(), NonlocalError> {
        if u.grid() != &self.grid {
            return Err(NonlocalError::Shape("field lives on a different grid".into()));
        }
        if u.num_components() != self.grid.dim() {
            return Err(NonlocalError::Shape(format!(
                "expected {} velocity components, got {}",
                self.grid.dim(),
                u.num_components()
            )));
        }
        if !u.is_finite() {
            return Err(NonlocalError::NonFinite);
        }
        Ok(())
    }
}
