use num_complex::Complex64;
use serde_json::json;

use super::{Field, NonlocalError, PeriodicGrid, Spectral};

/// Default relative divergence tolerance.
pub const DIV_TOL: f64 = 1e-10;

/// Default relative floor below which spectral modes count as round-off.
pub const NOISE_FLOOR: f64 = 1e-13;

type Hat = Vec<Vec<Complex64>>;

/// Dealiased velocity values and gradients, reused across recursion steps.
struct Prepared {
    vals: Vec<Vec<f64>>,
    /// `grad[i][j] = d_j (P a)_i`.
    grad: Vec<Vec<Vec<f64>>>,
}

/// Leray-form Navier-Stokes right-hand side on a periodic grid:
/// `nu lap u - P[(u.grad) u] - grad p` with `lap p = -P[sum_ij d_i u_j d_j u_i]`,
/// `P` the two-thirds filter applied to product inputs and outputs.
#[derive(Debug)]
pub struct NsOperator {
    spectral: Spectral,
    nu: f64,
}

/// One evaluation of the right-hand side, with its pieces for diagnostics.
#[derive(Clone, Debug)]
pub struct RhsParts {
    pub value: Field,
    pub pressure: Field,
    /// Largest magnitude among the viscous, advective and pressure pieces.
    pub scale: f64,
}

/// Knobs of the coefficient recursion.
#[derive(Clone, Debug)]
pub struct NsOptions {
    /// `max |div a_n| <= div_tol * scale_n` is enforced at every step.
    pub div_tol: f64,
    /// Spectral modes of `u0` below `noise_floor * max |u0^|`, and modes of
    /// each new coefficient below `noise_floor` times the largest mode of its
    /// viscous, advective and pressure pieces, are dropped as round-off.
    /// Without this, `nu |k|^2` amplifies round-off by up to ~100x per order
    /// on a 64^2 grid.
    pub noise_floor: f64,
    /// `forces[n]`: n-th time derivative of the body force at `t = 0`.
    pub forces: Option<Vec<Field>>,
}

impl Default for NsOptions {
    fn default() -> Self {
        NsOptions { div_tol: DIV_TOL, noise_floor: NOISE_FLOOR, forces: None }
    }
}

impl NsOperator {
    pub fn new(grid: &PeriodicGrid, nu: f64) -> Result<Self, NonlocalError> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(NonlocalError::Parameter(format!("viscosity {nu} must be finite and non-negative")));
        }
        if grid.dim() < 2 {
            return Err(NonlocalError::Grid("Navier-Stokes needs d >= 2".into()));
        }
        Ok(NsOperator { spectral: Spectral::new(grid), nu })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn hat(&self, u: &Field) -> Hat {
        u.components().iter().map(|c| self.spectral.forward(c)).collect()
    }

    fn prepare(&self, h: &Hat) -> Prepared {
        let s = &self.spectral;
        let d = s.grid().dim();
        let mut vals = Vec::with_capacity(d);
        let mut grad = Vec::with_capacity(d);
        for c in h {
            let mut c = c.clone();
            s.filter_hat(&mut c);
            grad.push((0..d).map(|j| s.inverse(s.derivative_hat(&c, j))).collect());
            vals.push(s.inverse(c));
        }
        Prepared { vals, grad }
    }

    /// `adv_i += c sum_j a_j d_j b_i`, `src += c sum_ij d_i a_j d_j b_i`.
    fn accumulate(&self, c: f64, a: &Prepared, b: &Prepared, adv: &mut [Vec<f64>], src: &mut [f64]) {
        let d = a.vals.len();
        for (i, adv_i) in adv.iter_mut().enumerate().take(d) {
            for j in 0..d {
                let (aj, dbi) = (&a.vals[j], &b.grad[i][j]);
                for (k, out) in adv_i.iter_mut().enumerate() {
                    *out += c * aj[k] * dbi[k];
                }
                let daj = &a.grad[j][i];
                for (k, out) in src.iter_mut().enumerate() {
                    *out += c * daj[k] * dbi[k];
                }
            }
        }
    }

    /// Transformed pressure for the product source `src`: `lap p = -P[src] + div f`.
    fn pressure_hat(&self, src: &[f64], force: Option<&Hat>) -> Vec<Complex64> {
        let s = &self.spectral;
        let mut h = s.forward(src);
        s.filter_hat(&mut h);
        h.iter_mut().for_each(|z| *z = -*z);
        if let Some(f) = force {
            for (a, fa) in f.iter().enumerate() {
                for (z, w) in h.iter_mut().zip(s.derivative_hat(fa, a)) {
                    *z += w;
                }
            }
        }
        s.inverse_laplacian_hat(&h)
    }

    /// `nu lap base - P[adv] - grad p + force`, transformed and sampled.
    fn assemble(
        &self,
        base: &Hat,
        adv: Vec<Vec<f64>>,
        src: Vec<f64>,
        force: Option<&Field>,
        floor: f64,
    ) -> Result<(Hat, RhsParts), NonlocalError> {
        let s = &self.spectral;
        let grid = s.grid().clone();
        let force_hat = match force {
            Some(f) => {
                s.check_vector(f)?;
                Some(self.hat(f))
            }
            None => None,
        };
        let p_hat = self.pressure_hat(&src, force_hat.as_ref());
        let mut scale: f64 = 0.0;
        let mut hat_scale: f64 = 0.0;
        let mut out_hat = Vec::with_capacity(adv.len());
        for (i, adv_i) in adv.iter().enumerate() {
            let lap: Vec<Complex64> =
                base[i].iter().zip(s.laplace_symbol()).map(|(z, l)| z * (self.nu * l)).collect();
            let mut adv_hat = s.forward(adv_i);
            s.filter_hat(&mut adv_hat);
            let grad_p = s.derivative_hat(&p_hat, i);
            for piece in [&lap, &adv_hat, &grad_p] {
                scale = scale.max(s.inverse(piece.clone()).iter().fold(0.0, |m, x| m.max(x.abs())));
                hat_scale = piece.iter().fold(hat_scale, |m, z| m.max(z.norm()));
            }
            let mut h: Vec<Complex64> =
                lap.iter().zip(&adv_hat).zip(&grad_p).map(|((l, a), g)| l - a - g).collect();
            if let Some(f) = &force_hat {
                for (z, w) in h.iter_mut().zip(&f[i]) {
                    *z += w;
                }
            }
            out_hat.push(h);
        }
        let cut = floor * hat_scale;
        out_hat.iter_mut().flatten().filter(|z| z.norm() <= cut).for_each(|z| *z = Complex64::default());
        let out = out_hat.iter().map(|h| s.inverse(h.clone())).collect();
        let pressure = Field::new(grid.clone(), vec![s.inverse(p_hat)])?;
        Ok((out_hat, RhsParts { value: Field::new(grid, out)?, pressure, scale }))
    }

    fn products(&self, terms: &[(f64, &Prepared, &Prepared)]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.spectral.grid().len();
        let d = self.spectral.grid().dim();
        let mut adv = vec![vec![0.0; n]; d];
        let mut src = vec![0.0; n];
        for (c, a, b) in terms {
            self.accumulate(*c, a, b, &mut adv, &mut src);
        }
        (adv, src)
    }

    pub fn pressure(&self, u: &Field) -> Result<Field, NonlocalError> {
        self.spectral.check_vector(u)?;
        let a = self.prepare(&self.hat(u));
        let (_, src) = self.products(&[(1.0, &a, &a)]);
        Field::new(self.spectral.grid().clone(), vec![self.spectral.inverse(self.pressure_hat(&src, None))])
    }

    pub fn rhs_parts(&self, u: &Field, force: Option<&Field>) -> Result<RhsParts, NonlocalError> {
        self.spectral.check_vector(u)?;
        let h = self.hat(u);
        let a = self.prepare(&h);
        let (adv, src) = self.products(&[(1.0, &a, &a)]);
        Ok(self.assemble(&h, adv, src, force, 0.0)?.1)
    }

    pub fn rhs(&self, u: &Field) -> Result<Field, NonlocalError> {
        Ok(self.rhs_parts(u, None)?.value)
    }

    /// Binomial recursion for `a_n = A^n u0`; coefficients are carried in
    /// transformed form so each is sampled exactly once.
    pub fn taylor_coefficients(
        &self,
        u0: &Field,
        order: usize,
        opts: &NsOptions,
    ) -> Result<NsCoefficients, NonlocalError> {
        let s = &self.spectral;
        s.check_vector(u0)?;

        let mut h0 = self.hat(u0);
        let peak = h0.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
        let cut = opts.noise_floor * peak;
        h0.iter_mut().flatten().filter(|z| z.norm() <= cut).for_each(|z| *z = Complex64::default());
        let a0 = Field::new(s.grid().clone(), h0.iter().map(|c| s.inverse(c.clone())).collect())?;

        let div0 = s.divergence(&a0)?.max_abs();
        if div0 > opts.div_tol * a0.max_abs() {
            return Err(NonlocalError::Divergence { n: 0, divergence: div0, scale: a0.max_abs() });
        }

        let mut prepared = vec![self.prepare(&h0)];
        let mut hats = vec![h0];
        let mut coefficients = vec![a0];
        let mut pressures = Vec::with_capacity(order);
        let mut divergence = vec![div0];
        let mut binom: Vec<f64> = vec![1.0];
        for n in 0..order {
            if n > 0 {
                let mut next = vec![1.0; n + 1];
                for k in 1..n {
                    next[k] = binom[k - 1] + binom[k];
                }
                binom = next;
            }
            let terms: Vec<(f64, &Prepared, &Prepared)> =
                (0..=n).map(|k| (binom[k], &prepared[k], &prepared[n - k])).collect();
            let (adv, src) = self.products(&terms);
            let force = opts.forces.as_ref().and_then(|f| f.get(n));
            let (h, parts) = self.assemble(&hats[n], adv, src, force, opts.noise_floor)?;
            if !parts.value.is_finite() {
                return Err(NonlocalError::NonFinite);
            }
            let div = s.divergence(&parts.value)?.max_abs();
            let scale = parts.value.max_abs().max(parts.scale);
            if div > opts.div_tol * scale {
                return Err(NonlocalError::Divergence { n: n + 1, divergence: div, scale });
            }
            prepared.push(self.prepare(&h));
            hats.push(h);
            coefficients.push(parts.value);
            pressures.push(parts.pressure);
            divergence.push(div);
        }
        Ok(NsCoefficients { grid: s.grid().clone(), nu: self.nu, coefficients, pressures, divergence })
    }

    /// Classical RK4 on the right-hand side; `dt` may be negative.
    pub fn integrate(&self, u0: &Field, t_end: f64, dt: f64) -> Result<Field, NonlocalError> {
        let steps = (t_end / dt).round();
        if dt == 0.0 || steps < 0.0 || ((steps * dt) - t_end).abs() > 1e-12 * t_end.abs().max(1.0) {
            return Err(NonlocalError::Parameter(format!("t_end {t_end} is not a whole number of steps {dt}")));
        }
        let limit = 1e6 * u0.max_abs().max(1.0);
        let mut u = u0.clone();
        for step in 0..steps as usize {
            let k1 = self.rhs(&u)?;
            let mut tmp = u.clone();
            tmp.add_scaled(&k1, dt / 2.0);
            let k2 = self.rhs(&tmp)?;
            let mut tmp = u.clone();
            tmp.add_scaled(&k2, dt / 2.0);
            let k3 = self.rhs(&tmp)?;
            let mut tmp = u.clone();
            tmp.add_scaled(&k3, dt);
            let k4 = self.rhs(&tmp)?;
            u.add_scaled(&k1, dt / 6.0);
            u.add_scaled(&k2, dt / 3.0);
            u.add_scaled(&k3, dt / 3.0);
            u.add_scaled(&k4, dt / 6.0);
            if !u.is_finite() || u.max_abs() > limit {
                return Err(NonlocalError::Blowup { t: (step + 1) as f64 * dt });
            }
        }
        Ok(u)
    }
}

/// Sampled `a_0..a_N` of the Navier-Stokes operator.
#[derive(Clone, Debug)]
pub struct NsCoefficients {
    pub grid: PeriodicGrid,
    pub nu: f64,
    pub coefficients: Vec<Field>,
    /// `p_n`, the pressure of step `n -> n+1`.
    pub pressures: Vec<Field>,
    /// `max |div a_n|`.
    pub divergence: Vec<f64>,
}

impl NsCoefficients {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// JSON manifest; `files[n]` names the stored field of `a_n`.
    pub fn manifest(&self, files: &[String]) -> serde_json::Value {
        let coeffs: Vec<_> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(n, a)| {
                json!({
                    "n": n,
                    "max_norm": a.max_abs(),
                    "l2_norm": a.l2(),
                    "divergence_max": self.divergence[n],
                    "file": files.get(n),
                })
            })
            .collect();
        json!({
            "domain": "periodic torus [0,2pi)^d; the free-space Poisson kernel is kept symbolic only",
            "grid": self.grid.dims(),
            "nu": self.nu,
            "order": self.order(),
            "dealiasing": "2/3 rule on product inputs and outputs",
            "pressure_gauge": "zero mean",
            "coefficients": coeffs,
        })
    }
}

pub fn pressure_solve(u: &Field) -> Result<Field, NonlocalError> {
    NsOperator::new(u.grid(), 0.0)?.pressure(u)
}

pub fn ns_rhs(u: &Field, nu: f64) -> Result<Field, NonlocalError> {
    NsOperator::new(u.grid(), nu)?.rhs(u)
}

pub fn ns_taylor_coefficients(u0: &Field, nu: f64, order: usize) -> Result<NsCoefficients, NonlocalError> {
    NsOperator::new(u0.grid(), nu)?.taylor_coefficients(u0, order, &NsOptions::default())
}

pub fn divergence(u: &Field) -> Result<Field, NonlocalError> {
    Spectral::new(u.grid()).divergence(u)
}
