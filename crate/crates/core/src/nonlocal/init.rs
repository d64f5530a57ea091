//! Built-in initial velocity fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Field, NonlocalError, PeriodicGrid, Spectral};

/// `(cos x sin y, -sin x cos y)`.
pub fn taylor_green_2d(grid: &PeriodicGrid) -> Result<Field, NonlocalError> {
    if grid.dim() != 2 {
        return Err(NonlocalError::Grid("taylor-green-2d needs a 2D grid".into()));
    }
    Ok(Field::from_fn(grid, 2, |p| vec![p[0].cos() * p[1].sin(), -p[0].sin() * p[1].cos()]))
}

/// `(sin x cos y cos z, -cos x sin y cos z, 0)`.
pub fn taylor_green_3d(grid: &PeriodicGrid) -> Result<Field, NonlocalError> {
    if grid.dim() != 3 {
        return Err(NonlocalError::Grid("taylor-green-3d needs a 3D grid".into()));
    }
    Ok(Field::from_fn(grid, 3, |p| {
        vec![p[0].sin() * p[1].cos() * p[2].cos(), -p[0].cos() * p[1].sin() * p[2].cos(), 0.0]
    }))
}

/// Divergence-free field with modes `|k_a| <= band`: the curl of a seeded random
/// potential (a stream function in 2D), scaled to unit max-norm.
pub fn random_band_limited(grid: &PeriodicGrid, band: usize, seed: u64) -> Result<Field, NonlocalError> {
    let d = grid.dim();
    if !(2..=3).contains(&d) {
        return Err(NonlocalError::Grid("random fields need d = 2 or 3".into()));
    }
    if let Some(n) = grid.dims().iter().find(|&&n| 3 * band >= n) {
        return Err(NonlocalError::Grid(format!("band {band} does not fit a {n}-point axis after dealiasing")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = band as i64;
    let width = 2 * b + 1;
    let modes: Vec<Vec<i64>> = (0..width.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let c = code % width - b;
                    code /= width;
                    c
                })
                .collect::<Vec<i64>>()
        })
        // half space: first non-zero entry positive
        .filter(|k| k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
        .collect();

    let n_pot = if d == 2 { 1 } else { 3 };
    let mut pot = vec![vec![0.0; grid.len()]; n_pot];
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.point(i)).collect();
    for m in &modes {
        let k2: i64 = m.iter().map(|c| c * c).sum();
        let amp = 1.0 / (1.0 + k2 as f64);
        for p in pot.iter_mut() {
            let (c, s): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for (v, x) in p.iter_mut().zip(&points) {
                let phase: f64 = m.iter().zip(x).map(|(&ki, xi)| ki as f64 * xi).sum();
                *v += amp * (c * phase.cos() + s * phase.sin());
            }
        }
    }

    let sp = Spectral::new(grid);
    let comps = if d == 2 {
        let dx = sp.derivative(&pot[0], 0);
        let dy = sp.derivative(&pot[0], 1);
        vec![dy, dx.iter().map(|v| -v).collect()]
    } else {
        let g: Vec<Vec<Vec<f64>>> = pot.iter().map(|p| sp.gradient(p)).collect();
        // (curl A)_i = d_j A_l - d_l A_j for cyclic (i, j, l)
        let curl = |j: usize, l: usize| -> Vec<f64> { g[l][j].iter().zip(&g[j][l]).map(|(a, b)| a - b).collect() };
        vec![curl(1, 2), curl(2, 0), curl(0, 1)]
    };
    let field = Field::new(grid.clone(), comps)?;
    let norm = field.max_abs();
    Ok(if norm > 0.0 { field.scaled(1.0 / norm) } else { field })
}
