use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::reference::{fd_jet, MethodOfLines};
use super::series::{compose_poly, TruncSeries};
use super::{time_jet, Check, GoldenCase, VerifyError};
use crate::derivation::{augment_time, taylor_coefficients_capped, DerivationError, Operator};
use crate::expr::random::{random_expr, Vocabulary};
use crate::expr::{
    normalize, spatial_derivative, substitute, Atom, Compiled, Derivation, Expr, Poly, Rational,
    SpatialDerivative,
};
use crate::parser::{parse_system, PdeSystem};

fn fact(n: usize) -> Rational {
    Rational::from_integer((1..=n as u64).map(BigInt::from).product())
}

pub(crate) fn is_cap(e: &VerifyError) -> bool {
    matches!(e, VerifyError::Derivation(DerivationError::TermCap { .. }))
}

/// Sample points of a golden case's domain: 64 per axis, or the single point for ODEs.
fn sample_points(case: &GoldenCase) -> Vec<Vec<f64>> {
    let d = case.domain.dim();
    if d == 0 {
        return vec![vec![]];
    }
    let m = 64usize;
    (0..m.pow(d as u32))
        .map(|mut flat| {
            (0..d)
                .map(|a| {
                    let k = flat % m;
                    flat /= m;
                    case.domain.lower[a] + (case.domain.upper[a] - case.domain.lower[a]) * k as f64 / m as f64
                })
                .collect()
        })
        .collect()
}

/// `a_n` from the operator against `d^n/dt^n v*|_{t=0}`: canonical equality per
/// coefficient, with a pointwise relative error as fallback. One check per unknown.
pub fn compare_with_exact(
    case: &GoldenCase,
    overrides: &BTreeMap<String, f64>,
    term_cap: usize,
) -> Result<Vec<Check>, VerifyError> {
    let Some(exact) = &case.exact else {
        return Err(VerifyError::Unsupported(format!("case {} has no closed form", case.name)));
    };
    let series = match taylor_coefficients_capped(&case.system, case.order, term_cap) {
        Ok(s) => s,
        Err(e @ DerivationError::TermCap { .. }) => {
            return Ok(case
                .system
                .unknowns
                .iter()
                .map(|u| Check::skipped(format!("exact/{}/{u}", case.name), e.to_string()))
                .collect())
        }
        Err(e) => return Err(e.into()),
    };
    let params = case.system.param_values(overrides);
    let mut params_t = params.clone();
    params_t.insert("t".into(), 0.0);
    let points = sample_points(case);
    let mut checks = Vec::new();
    for (i, u) in case.system.unknowns.iter().enumerate() {
        let jet = time_jet(&exact[i], case.order)?;
        let mut worst = 0.0f64;
        let mut rows = Vec::new();
        for (n, want) in jet.iter().enumerate() {
            let got = &series.coefficients[i][n];
            let canonical = got.to_poly()? == want.to_poly()?;
            let err = if canonical {
                0.0
            } else {
                let g = Compiled::new(&got.to_poly()?, &params, &[])?;
                let w = Compiled::new(&want.to_poly()?, &params_t, &[])?;
                let (mut diff, mut scale) = (0.0f64, 0.0f64);
                for p in &points {
                    let wv = w.eval_at(p)?;
                    diff = diff.max((g.eval_at(p)? - wv).abs());
                    scale = scale.max(wv.abs());
                }
                diff / scale.max(1.0)
            };
            worst = worst.max(err);
            rows.push(json!({ "n": n, "canonical": canonical, "error": err }));
        }
        checks.push(Check::measured(
            format!("exact/{}/{u}", case.name),
            worst,
            case.tolerance,
            json!({ "order": case.order, "coefficients": rows }),
        ));
    }
    Ok(checks)
}

/// `a_k`, `k = 1..=max_k`, against central differences in `t` of the method-of-lines
/// reference at `t = 0`; relative max-norm error over the grid.
pub fn reference_jet_check(
    case: &GoldenCase,
    points: usize,
    max_k: usize,
    tol: f64,
    overrides: &BTreeMap<String, f64>,
    term_cap: usize,
) -> Result<Vec<Check>, VerifyError> {
    let series = match taylor_coefficients_capped(&case.system, max_k, term_cap) {
        Ok(s) => s,
        Err(e @ DerivationError::TermCap { .. }) => {
            return Ok(vec![Check::skipped(format!("reference-fd/{}", case.name), e.to_string())])
        }
        Err(e) => return Err(e.into()),
    };
    let mol = MethodOfLines::new(&case.system, points, Some(REFERENCE_BAND), overrides)?;
    let jet = fd_jet(&mol, max_k, REFERENCE_H0, REFERENCE_LEVELS, REFERENCE_SUBSTEPS)?;
    let params = case.system.param_values(overrides);
    let xs: Vec<Vec<f64>> =
        mol.points().iter().map(|&x| if case.system.dim == 0 { vec![] } else { vec![x] }).collect();
    let mut checks = Vec::new();
    for (i, u) in case.system.unknowns.iter().enumerate() {
        let mut worst = 0.0f64;
        let mut rows = Vec::new();
        for k in 1..=max_k {
            let c = Compiled::new(&series.coefficients[i][k].to_poly()?, &params, &[])?;
            let (mut diff, mut scale) = (0.0f64, 0.0f64);
            for (p, fd) in xs.iter().zip(&jet.derivatives[k - 1][i]) {
                let a = c.eval_at(p)?;
                diff = diff.max((a - fd).abs());
                scale = scale.max(a.abs());
            }
            let rel = if scale > 0.0 { diff / scale } else { diff };
            worst = worst.max(rel);
            rows.push(json!({ "k": k, "rel_error": rel, "step": jet.steps[k - 1], "richardson": jet.richardson[k - 1] }));
        }
        checks.push(Check::measured(
            format!("reference-fd/{}/{u}", case.name),
            worst,
            tol,
            json!({ "points": points, "band": REFERENCE_BAND, "orders": rows }),
        ));
    }
    Ok(checks)
}

/// Retained Fourier band of the reference integrator in jet checks.
pub const REFERENCE_BAND: usize = 16;
pub const REFERENCE_H0: f64 = 0.2;
pub const REFERENCE_LEVELS: usize = 6;
pub const REFERENCE_SUBSTEPS: usize = 4;

/// Mismatch counts of the three truncated-series identities, per power of `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equivalence {
    pub order: usize,
    /// `d/dt v_N` against termwise `A v_N`.
    pub i: Vec<usize>,
    /// `d/dt v_N` against `F(x, v_N, D v_N)`.
    pub ii: Vec<usize>,
    /// Termwise `A v_N` against `F(x, v_N, D v_N)`.
    pub iii: Vec<usize>,
}

impl Equivalence {
    pub fn holds(&self) -> [bool; 3] {
        [self.i.iter().all(|&m| m == 0), self.ii.iter().all(|&m| m == 0), self.iii.iter().all(|&m| m == 0)]
    }

    /// Equality is transitive, so exactly one failing identity means a harness bug.
    pub fn consistent(&self) -> bool {
        self.holds().iter().filter(|h| !**h).count() != 1
    }

    pub fn checks(&self, name: &str) -> Vec<Check> {
        let mk = |tag: &str, v: &[usize]| {
            let n: usize = v.iter().sum();
            Check::measured(
                format!("equivalence/{name}/{tag}"),
                n as f64,
                0.0,
                json!({ "order": self.order, "mismatches_per_power": v }),
            )
        };
        vec![
            mk("i", &self.i),
            mk("ii", &self.ii),
            mk("iii", &self.iii),
            Check::measured(
                format!("equivalence/{name}/consistency"),
                if self.consistent() { 0.0 } else { 1.0 },
                0.0,
                json!({ "holds": self.holds() }),
            ),
        ]
    }
}

fn augmented(sys: &PdeSystem) -> Result<PdeSystem, VerifyError> {
    Ok(if sys.time_dependent && !sys.augmented { augment_time(sys)? } else { sys.clone() })
}

/// Symbolic iterates `A^n u_i / n!`, `n = 0..=order`, per unknown.
fn scaled_iterates(op: &Operator<'_>, sys: &PdeSystem, order: usize) -> Result<Vec<Vec<Poly>>, VerifyError> {
    sys.unknowns
        .iter()
        .map(|u| {
            let mut a = Poly::atom(Atom::Unknown(u.clone()));
            let mut out = vec![a.clone()];
            for n in 1..=order {
                a = op.apply(&a)?;
                out.push(a.scale(&fact(n).recip()));
            }
            Ok(out)
        })
        .collect()
}

/// The truncated series `v_N = sum_n t^n A^n u / n!` with symbolic coefficients
/// satisfies `d/dt v_N = A v_N = F(x, v_N, D v_N)` through `t^(N-1)`.
pub fn equivalence_test(sys: &PdeSystem, order: usize) -> Result<Equivalence, VerifyError> {
    if order == 0 {
        return Err(VerifyError::Unsupported("equivalence needs N >= 1".into()));
    }
    let sys = augmented(sys)?;
    let op = Operator::new(&sys)?;
    let c = scaled_iterates(&op, &sys, order)?;
    let top = order - 1;
    let mut out = Equivalence { order, i: vec![0; top + 1], ii: vec![0; top + 1], iii: vec![0; top + 1] };
    for (idx, _) in sys.unknowns.iter().enumerate() {
        let f = sys.rhs[idx].to_poly()?;
        let mut leaf = |a: &Atom| -> Result<Option<TruncSeries>, crate::expr::ExprError> {
            match a {
                Atom::Unknown(_) | Atom::Deriv(..) => {
                    let (name, alpha) = a.unknown_parts().expect("unknown-like");
                    let j = sys.index_of(name).expect("declared unknown");
                    let mut coeffs = Vec::with_capacity(top + 1);
                    for cn in c[j].iter().take(top + 1) {
                        let mut p = cn.clone();
                        for dim in alpha.dims() {
                            p = SpatialDerivative(dim).apply(&p)?;
                        }
                        coeffs.push(p);
                    }
                    Ok(Some(TruncSeries { coeffs }))
                }
                Atom::Time if sys.augmented => {
                    let mut s = TruncSeries::constant(Poly::atom(Atom::Time), top);
                    if top >= 1 {
                        s.coeffs[1] = Poly::one();
                    }
                    Ok(Some(s))
                }
                _ => Ok(None),
            }
        };
        let z = compose_poly(&f, top, &mut leaf)?;
        for k in 0..=top {
            // t^k coefficient of d/dt v_N
            let x = c[idx][k + 1].scale(&Rational::from_integer(BigInt::from(k + 1)));
            let y = op.apply(&c[idx][k])?;
            out.i[k] += usize::from(x != y);
            out.ii[k] += usize::from(x != z.coeffs[k]);
            out.iii[k] += usize::from(y != z.coeffs[k]);
        }
    }
    Ok(out)
}

/// `e^{tA} F(g_1, .., g_p)` against `F(e^{tA} g_1, .., e^{tA} g_p)` through `t^order`.
/// `outer` uses the unknowns `g1, g2, ..` as placeholders. Returns mismatches per power.
pub fn homomorphism_test(sys: &PdeSystem, gs: &[Expr], outer: &Expr, order: usize) -> Result<Vec<usize>, VerifyError> {
    let sys = augmented(sys)?;
    let op = Operator::new(&sys)?;
    let names: Vec<Arc<str>> = (1..=gs.len()).map(|j| Arc::from(format!("g{j}"))).collect();
    if names.iter().any(|n| sys.index_of(n).is_some()) {
        return Err(VerifyError::Unsupported("placeholder names clash with system unknowns".into()));
    }
    let bindings: BTreeMap<Arc<str>, Expr> = names.iter().cloned().zip(gs.iter().cloned()).collect();
    let mut lhs = Vec::with_capacity(order + 1);
    let mut a = substitute(outer, &bindings)?.to_poly()?;
    lhs.push(a.clone());
    for n in 1..=order {
        a = op.apply(&a)?;
        lhs.push(a.scale(&fact(n).recip()));
    }
    let g_series: Vec<TruncSeries> = gs
        .iter()
        .map(|g| {
            let mut a = g.to_poly()?;
            let mut coeffs = vec![a.clone()];
            for n in 1..=order {
                a = op.apply(&a)?;
                coeffs.push(a.scale(&fact(n).recip()));
            }
            Ok(TruncSeries { coeffs })
        })
        .collect::<Result<_, VerifyError>>()?;
    let mut leaf = |a: &Atom| -> Result<Option<TruncSeries>, crate::expr::ExprError> {
        Ok(match a {
            Atom::Unknown(n) => names.iter().position(|m| m == n).map(|j| g_series[j].clone()),
            _ => None,
        })
    };
    let rhs = compose_poly(&outer.to_poly()?, order, &mut leaf)?;
    Ok(lhs.iter().zip(&rhs.coeffs).map(|(l, r)| usize::from(l != r)).collect())
}

const ALGEBRA_SYSTEM: &str = "dim 2; unknowns u, w;\n\
    eq: dt(u) = nu*D(u;x1,x1) - u*D(w;x2) + sin(w);\n\
    eq: dt(w) = u^2 - exp(x1)*D(w;x1);\n\
    init: u = sin(x1); init: w = cos(x2);";

/// Seeded random expressions: linearity, Leibniz rule and commutation with
/// spatial derivatives of `A`, as exact canonical equalities. Each expression is
/// paired with its successor (cyclically).
pub fn algebra_check(seed: u64, count: usize) -> Result<Check, VerifyError> {
    let sys = parse_system(ALGEBRA_SYSTEM)?;
    let op = Operator::new(&sys)?;
    let voc = Vocabulary::symbolic(&["u", "w"], &["nu"], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exprs = Vec::with_capacity(count);
    let mut rejected = 0usize;
    while exprs.len() < count {
        match normalize(&random_expr(&mut rng, 3, &voc)) {
            Ok(e) => exprs.push(e),
            Err(_) => rejected += 1,
        }
    }
    let images = exprs.iter().map(|e| op.apply_expr(e)).collect::<Result<Vec<_>, _>>()?;
    let mut violations = Vec::new();
    let (mut lin, mut leib, mut comm) = (0usize, 0usize, 0usize);
    for k in 0..count {
        let (e1, e2) = (&exprs[k], &exprs[(k + 1) % count]);
        let (a1, a2) = (&images[k], &images[(k + 1) % count]);
        let c = Expr::rational(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        let sum = normalize(&(c.clone() * e1.clone() + e2.clone()))?;
        if op.apply_expr(&sum)? != normalize(&(c * a1.clone() + a2.clone()))? {
            lin += 1;
            violations.push(json!({ "kind": "linearity", "index": k }));
        }
        let prod = normalize(&(e1.clone() * e2.clone()))?;
        if op.apply_expr(&prod)? != normalize(&(a1.clone() * e2.clone() + e1.clone() * a2.clone()))? {
            leib += 1;
            violations.push(json!({ "kind": "leibniz", "index": k }));
        }
        for j in 0..sys.dim {
            if op.apply_expr(&spatial_derivative(e1, j)?)? != spatial_derivative(a1, j)? {
                comm += 1;
                violations.push(json!({ "kind": "commutation", "index": k, "axis": j }));
            }
        }
    }
    violations.truncate(10);
    Ok(Check::measured(
        "algebra/derivation",
        (lin + leib + comm) as f64,
        0.0,
        json!({
            "seed": seed,
            "expressions": count,
            "rejected_draws": rejected,
            "linearity_violations": lin,
            "leibniz_violations": leib,
            "commutation_violations": comm,
            "first_violations": violations,
        }),
    ))
}
