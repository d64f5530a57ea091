//! The cutoff `psi`: `1` on `|t| <= 1/2`, `0` on `|t| >= 1`, and the bump
//! quotient `h(2-2|t|) / (h(2-2|t|) + h(2|t|-1))` with `h(s) = exp(-1/s)` between.

use std::sync::OnceLock;

use twofloat::TwoFloat;

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// `h'(s) = h(s) / s^2`.
fn dh(s: f64) -> f64 {
    if s > 0.0 {
        h(s) / (s * s)
    } else {
        0.0
    }
}

pub fn cutoff(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let p = h(2.0 - 2.0 * a);
        let q = h(2.0 * a - 1.0);
        p / (p + q)
    }
}

pub fn cutoff_derivative(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 || a >= 1.0 {
        return 0.0;
    }
    let (sp, sq) = (2.0 - 2.0 * a, 2.0 * a - 1.0);
    let (p, q) = (h(sp), h(sq));
    let (dp, dq) = (-2.0 * dh(sp), 2.0 * dh(sq));
    let d = (dp * q - p * dq) / ((p + q) * (p + q));
    d * t.signum()
}

/// Double-double version: the plateau values are exact; the transition is
/// evaluated in `f64`.
pub fn cutoff_tf(t: TwoFloat) -> TwoFloat {
    let a = t.abs();
    if a <= TwoFloat::from(0.5) {
        TwoFloat::from(1.0)
    } else if a >= TwoFloat::from(1.0) {
        TwoFloat::from(0.0)
    } else {
        TwoFloat::from(cutoff(t.hi()))
    }
}

/// `M1 = max |psi'|` over `[-1, 1]`.
pub fn m1() -> f64 {
    static M1: OnceLock<f64> = OnceLock::new();
    *M1.get_or_init(|| {
        // unimodal on (1/2, 1): dense scan, then golden-section polish
        let n = 20_000;
        let f = |t: f64| cutoff_derivative(t).abs();
        let best = (1..n).map(|k| 0.5 + 0.5 * k as f64 / n as f64).fold(0.5, |b, t| if f(t) > f(b) { t } else { b });
        let (mut lo, mut hi) = (best - 0.5 / n as f64, best + 0.5 / n as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if f(a) > f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        f(0.5 * (lo + hi)).max(f(best))
    })
}
