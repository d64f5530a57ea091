use std::f64::consts::PI;

use serde::Serialize;

use super::NonlocalError;

/// Uniform lattice on the torus `[0, 2pi)^d`, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodicGrid {
    dims: Vec<usize>,
}

impl PeriodicGrid {
    /// Points per axis must be powers of two; `1 <= d <= 3`.
    pub fn new(dims: &[usize]) -> Result<Self, NonlocalError> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(NonlocalError::Grid(format!("dimension {} not in 1..=3", dims.len())));
        }
        if let Some(n) = dims.iter().find(|n| !n.is_power_of_two() || **n < 2) {
            return Err(NonlocalError::Grid(format!("{n} points per axis is not a power of two >= 2")));
        }
        Ok(PeriodicGrid { dims: dims.to_vec() })
    }

    pub fn cube(d: usize, n: usize) -> Result<Self, NonlocalError> {
        Self::new(&vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.dims[axis] as f64
    }

    /// Per-axis lattice indices of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).iter().enumerate().map(|(a, &i)| i as f64 * self.spacing(a)).collect()
    }

    /// Signed wavenumber of FFT bin `i` on `axis`; the Nyquist bin maps to `n/2`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> i64 {
        let n = self.dims[axis];
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }
}

/// Real samples of `components` scalar functions on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    components: Vec<Vec<f64>>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, components: Vec<Vec<f64>>) -> Result<Self, NonlocalError> {
        if components.is_empty() {
            return Err(NonlocalError::Shape("a field needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| c.len() != grid.len()) {
            return Err(NonlocalError::Shape(format!("component has {} samples, grid has {}", c.len(), grid.len())));
        }
        Ok(Field { grid, components })
    }

    pub fn zeros(grid: &PeriodicGrid, m: usize) -> Self {
        Field { grid: grid.clone(), components: vec![vec![0.0; grid.len()]; m] }
    }

    /// Samples `f(x) -> [f_1, .., f_m]` at every lattice point.
    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(grid: &PeriodicGrid, m: usize, f: F) -> Self {
        let mut out = Self::zeros(grid, m);
        for k in 0..grid.len() {
            let v = f(&grid.point(k));
            for (c, x) in out.components.iter_mut().zip(v) {
                c[k] = x;
            }
        }
        out
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Root-mean-square over points, summed over components.
    pub fn l2(&self) -> f64 {
        let s: f64 = self.components.iter().flatten().map(|x| x * x).sum();
        (s / self.grid.len() as f64).sqrt()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.components[i].iter().sum::<f64>() / self.grid.len() as f64
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Field, s: f64) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.components.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.components
            .iter()
            .flatten()
            .zip(other.components.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
