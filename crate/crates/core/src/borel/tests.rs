use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::*;
use crate::derivation::taylor_coefficients;
use crate::expr::{spatial_derivative, Compiled, Expr};
use crate::nonlocal::PeriodicGrid;
use crate::parser::parse_system;

fn no_params() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

fn x() -> Expr {
    Expr::var(0)
}

fn series(b: Vec<Expr>, bounds: &[(f64, f64)]) -> MollifiedSeries {
    MollifiedSeries::from_exprs(b, BoxDomain::new(bounds).unwrap(), &no_params(), SupOptions::default()).unwrap()
}

fn fd(f: impl Fn(f64) -> f64, t: f64, k: usize, h: f64) -> f64 {
    // k-th central difference on 2k+1 binomial points
    let mut acc = 0.0;
    let mut c = 1.0;
    for j in 0..=k {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += s * c * f(t + (k as f64 / 2.0 - j as f64) * h);
        c = c * (k - j) as f64 / (j + 1) as f64;
    }
    acc / h.powi(k as i32)
}

#[test]
fn cutoff_plateaus_and_shape() {
    assert_eq!(cutoff(0.3), 1.0);
    assert_eq!(cutoff(1.2), 0.0);
    assert_eq!(cutoff(0.5), 1.0);
    assert_eq!(cutoff(-0.5), 1.0);
    assert_eq!(cutoff(1.0), 0.0);
    assert_eq!(cutoff(-7.0), 0.0);
    // symmetric point of the quotient: h(1/2) / (h(1/2) + h(1/2))
    assert_eq!(cutoff(0.75), 0.5);
    let direct = |t: f64| {
        let p = (-1.0 / (2.0 - 2.0 * t)).exp();
        let q = (-1.0 / (2.0 * t - 1.0)).exp();
        p / (p + q)
    };
    for k in 1..100 {
        let t = 0.5 + 0.5 * k as f64 / 100.0;
        assert_eq!(cutoff(t), direct(t));
        assert_eq!(cutoff(-t), cutoff(t));
        assert!((0.0..=1.0).contains(&cutoff(t)));
        assert!(cutoff(t + 0.001) <= cutoff(t));
    }
}

#[test]
fn cutoff_smooth_across_junctions() {
    for t0 in [0.5, 1.0, -0.5, -1.0] {
        for k in 1..=4 {
            let a = fd(cutoff, t0, k, 1e-4);
            let b = fd(cutoff, t0, k, 5e-5);
            assert!(a.is_finite() && (a - b).abs() <= 1e-3, "t0 {t0} order {k}: {a} vs {b}");
        }
    }
}

#[test]
fn cutoff_derivative_and_m1() {
    for k in 1..200 {
        let t = -1.2 + 2.4 * k as f64 / 200.0;
        let num = (cutoff(t + 1e-6) - cutoff(t - 1e-6)) / 2e-6;
        assert!((cutoff_derivative(t) - num).abs() < 1e-6, "t {t}");
    }
    let sampled = (0..=100_000).map(|k| (cutoff_derivative(0.5 + 0.5 * k as f64 / 100_000.0)).abs()).fold(0.0, f64::max);
    assert!(m1() >= sampled && m1() <= sampled * (1.0 + 1e-6), "{} vs {sampled}", m1());
}

#[test]
fn cutoff_double_double_agrees() {
    use twofloat::TwoFloat;
    for k in 0..50 {
        let t = 0.4 + 0.7 * k as f64 / 50.0;
        assert_eq!(cutoff_tf(TwoFloat::from(t)).hi(), cutoff(t), "t {t}");
    }
    // just inside the plateau in double-double, though not in double
    let inside = TwoFloat::new_add(0.5, -1e-20);
    assert_eq!(cutoff_tf(inside), TwoFloat::from(1.0));
    assert_eq!(cutoff_tf(-TwoFloat::new_add(1.0, 1e-20)), TwoFloat::from(0.0));
}

#[test]
fn radius_examples() {
    assert_eq!(radius(2, 0.0), 0.5);
    assert_eq!(radius(2, 1.0), 0.25);
    assert_eq!(radius(4, 3.0), 1.0 / 96.0);
    assert!(radius(3, 2.0) < radius(3, 1.5));
}

#[test]
fn beta_examples() {
    let zero = series(vec![Expr::zero(); 5], &[(0.0, 1.0)]);
    for n in 0..=4 {
        assert_eq!(zero.beta(n), 0.0);
    }
    let s = series(vec![Expr::zero(), Expr::zero(), x()], &[(0.0, 1.0)]);
    assert_eq!(s.beta(1), 0.0);
    assert_eq!(s.beta(2), 1.0);
    assert_eq!(s.radius(2), 0.25);

    let s = series(vec![Expr::zero(), Expr::zero(), Expr::zero(), Expr::sin(x())], &[(0.0, PI)]);
    let oracle = (0..=10_000)
        .map(|k| {
            let t = PI * k as f64 / 10_000.0;
            t.cos().abs().max(t.sin().abs())
        })
        .fold(0.0, f64::max);
    let b = s.beta(3);
    assert!(b >= oracle - 1e-12 && b <= 1.05 * oracle, "{b} vs {oracle}");
    assert_eq!(s.radius(3), 1.0 / (6.0 * (1.0 + b)));

    let ones = series(vec![Expr::int(1); 6], &[(-1.0, 1.0)]);
    for n in 1..=5 {
        assert_eq!(ones.beta(n), 0.0);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        assert_eq!(ones.radius(n), 1.0 / fact);
    }
}

#[test]
fn beta_raw_monotone_under_refinement() {
    let b = vec![Expr::zero(), Expr::zero(), Expr::zero(), Expr::sin(Expr::int(3) * x()) * Expr::exp(x())];
    let mut last = 0.0;
    for m in [5, 9, 17, 33, 65, 129] {
        let opts = SupOptions { samples: m, ..SupOptions::default() };
        let s = MollifiedSeries::from_exprs(b.clone(), BoxDomain::new(&[(0.0, 1.3)]).unwrap(), &no_params(), opts).unwrap();
        let raw = s.beta_raw(3);
        assert!(raw >= last, "m {m}: {raw} < {last}");
        assert!(s.beta(3) >= raw);
        last = raw;
    }
}

#[test]
fn non_finite_derivative_is_an_error() {
    let b = vec![Expr::zero(), Expr::zero(), Expr::log(x())];
    let err = MollifiedSeries::from_exprs(b, BoxDomain::new(&[(-1.0, 1.0)]).unwrap(), &no_params(), SupOptions::default());
    assert!(err.is_err());
}

#[test]
fn plateau_matches_taylor_sum_and_far_field_is_b0() {
    let b: Vec<Expr> = (0..6).map(|n| Expr::sin(Expr::int(n + 1) * x()) * Expr::rational(1, n + 1)).collect();
    let s = series(b, &[(0.0, 2.0)]);
    let plateau = s.plateau();
    let rmax = (1..=5).map(|n| s.radius(n)).fold(0.0, f64::max);
    for k in 0..=20 {
        let xv = [2.0 * k as f64 / 20.0];
        for j in -10..=10 {
            let t = plateau * j as f64 / 10.0;
            assert_eq!(s.mollified_eval(t, &xv).unwrap(), s.taylor_sum(t, &xv).unwrap());
        }
        for t in [rmax, 1.5 * rmax, -3.0 * rmax, 10.0] {
            assert_eq!(s.mollified_eval(t, &xv).unwrap(), xv[0].sin());
        }
    }
    assert!(matches!(s.mollified_eval(0.0, &[2.5]), Err(BorelError::OutsideDomain(_))));
    assert!(s.mollified_eval(0.0, &[0.1, 0.2]).is_err());
}

fn heat(order: usize) -> MollifiedSeries {
    let sys = parse_system("param nu = 1; eq: dt(u) = nu*D(u;x,x); init: u = sin(x);").unwrap();
    let cs = taylor_coefficients(&sys, order).unwrap();
    MollifiedSeries::from_coefficient_series(&cs, "u", BoxDomain::torus(1), &no_params(), SupOptions::default()).unwrap()
}

#[test]
fn heat_inside_plateau_matches_exact_solution() {
    let s = heat(3);
    let t = 0.05;
    assert!(t <= s.plateau());
    // Lagrange remainder of exp(-t) after degree 3
    let remainder = t.powi(4) / 24.0;
    for k in 0..=32 {
        let xv = std::f64::consts::TAU * k as f64 / 32.0;
        let v = s.mollified_eval(t, &[xv]).unwrap();
        let exact = (-t).exp() * xv.sin();
        assert!((v - exact).abs() <= remainder * 1.01 + 1e-15, "x {xv}: {v} vs {exact}");
    }
}

#[test]
fn coefficient_series_is_divided_by_factorials() {
    let sys = parse_system("param c = 1/2; eq: dt(u) = u^2; init: u = c;").unwrap();
    let cs = taylor_coefficients(&sys, 6).unwrap();
    let s = MollifiedSeries::from_coefficient_series(&cs, "u", BoxDomain::point(), &no_params(), SupOptions::default())
        .unwrap();
    let b = s.values(&[]).unwrap();
    for (n, v) in b.iter().enumerate() {
        assert!((v - 0.5f64.powi(n as i32 + 1)).abs() < 1e-15);
        assert_eq!(s.beta(n), 0.0);
    }
    let over = BTreeMap::from([("c".to_string(), 0.25)]);
    let s = MollifiedSeries::from_coefficient_series(&cs, "u", BoxDomain::point(), &over, SupOptions::default()).unwrap();
    assert!((s.values(&[]).unwrap()[3] - 0.25f64.powi(4)).abs() < 1e-15);
    assert!(MollifiedSeries::from_coefficient_series(&cs, "w", BoxDomain::point(), &no_params(), SupOptions::default())
        .is_err());
    assert!(MollifiedSeries::from_coefficient_series(&cs, "u", BoxDomain::torus(1), &no_params(), SupOptions::default())
        .is_err());
}

#[test]
fn tail_check_zero_and_constant_series() {
    let zero = series(vec![Expr::zero(); 8], &[(0.0, 1.0)]);
    let rep = tail_bound_check(&zero, 0).unwrap();
    assert_eq!(rep.lhs, 0.0);
    assert!(rep.pass && rep.rhs > 0.0);

    let ones = series(vec![Expr::int(1); 8], &[(0.0, 1.0)]);
    let rep = tail_bound_check(&ones, 0).unwrap();
    assert!(rep.pass, "{:?}", rep.to_json());
    for term in &rep.terms {
        // direct maximization of |t^n psi(t / r_n)| over the support
        let r = ones.radius(term.n);
        let oracle = (0..=100_000)
            .map(|k| {
                let t = r * k as f64 / 100_000.0;
                (t.powi(term.n as i32) * cutoff(t / r)).abs()
            })
            .fold(0.0, f64::max);
        assert!(term.term >= oracle * (1.0 - 1e-9) && term.term <= 1.05 * oracle, "n {}: {} vs {oracle}", term.n, term.term);
        assert!(term.term <= term.bound);
    }
    let json = rep.to_json();
    for key in ["i", "N", "lhs", "rhs", "pass", "terms", "derivative"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn tail_check_burgers_against_finer_sampling() {
    let sys = parse_system("param nu = 1/10; eq: dt(u) = nu*D(u;x,x) - u*D(u;x); init: u = sin(x);").unwrap();
    let cs = taylor_coefficients(&sys, 8).unwrap();
    let s = MollifiedSeries::from_coefficient_series(&cs, "u", BoxDomain::torus(1), &no_params(), SupOptions::default())
        .unwrap();
    let i = 2;
    let rep = tail_bound_check(&s, i).unwrap();
    assert!(rep.pass, "{:#}", rep.to_json());

    // independent estimate: symbolic i-th derivative of a_n / n!, 10x denser x and tau samples
    let params = sys.param_values(&no_params());
    let mut oracle = 0.0;
    for n in i + 1..=8 {
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let mut e = cs.coefficients[0][n].clone();
        for _ in 0..i {
            e = spatial_derivative(&e, 0).unwrap();
        }
        let c = Compiled::new(&e.to_poly().unwrap(), &params, &[]).unwrap();
        let m = 20_480;
        let sx = (0..=m)
            .map(|k| c.eval_at(&[std::f64::consts::TAU * k as f64 / m as f64]).unwrap().abs())
            .fold(0.0, f64::max)
            / fact;
        let st = (0..=40_960)
            .map(|k| {
                let tau = k as f64 / 40_960.0;
                tau.powi(n as i32) * cutoff(tau)
            })
            .fold(0.0, f64::max);
        oracle += sx * s.radius(n).powi(n as i32) * st;
    }
    assert!(oracle <= rep.lhs * (1.0 + 1e-9), "{oracle} vs {}", rep.lhs);
    assert!(rep.lhs <= 1.11 * oracle, "{oracle} vs {}", rep.lhs);
    assert!(oracle <= rep.rhs);
}

#[test]
fn jet_check_heat_series() {
    let s = heat(6);
    let rep = taylor_jet_check(&s, 4, 33).unwrap();
    assert!(rep.passes(1e-6), "{:#}", rep.to_json());
    assert_eq!(rep.orders[0].max_abs_error, 0.0);
    // a_2 = nu^2 D^4 sin = sin
    assert!((rep.orders[2].scale - 1.0).abs() < 1e-3);
    assert!(taylor_jet_check(&s, 5, 4).is_err());
}

#[test]
fn jet_check_zero_series() {
    let zero = series(vec![Expr::zero(); 7], &[(0.0, 1.0)]);
    let rep = taylor_jet_check(&zero, 4, 5).unwrap();
    assert!(rep.orders.iter().all(|o| o.max_abs_error == 0.0));
}

#[test]
fn sampled_coefficients_match_symbolic() {
    let grid = PeriodicGrid::new(&[64]).unwrap();
    let pts: Vec<f64> = (0..64).map(|k| grid.point(k)[0]).collect();
    let b: Vec<Vec<f64>> = (0..4).map(|n| pts.iter().map(|x| ((n + 1) as f64 * x).sin()).collect()).collect();
    let sampled = MollifiedSeries::from_samples(&grid, b, SupOptions::default()).unwrap();
    let exprs: Vec<Expr> = (0..4).map(|n| Expr::sin(Expr::int(n + 1) * x())).collect();
    let symbolic =
        MollifiedSeries::from_exprs(exprs, BoxDomain::torus(1), &no_params(), SupOptions::default()).unwrap();
    for n in 1..4 {
        let (a, b) = (sampled.beta_raw(n), symbolic.beta_raw(n));
        // the grid hits the maxima of sin(kx); the symbolic lattice only comes close
        assert!((a - b).abs() <= 1e-6 * b, "n {n}: {a} vs {b}");
    }
    for xv in [0.123, 1.0, 4.56] {
        let a = sampled.mollified_eval(0.01, &[xv]).unwrap();
        let b = symbolic.mollified_eval(0.01, &[xv]).unwrap();
        assert!((a - b).abs() < 1e-12, "x {xv}: {a} vs {b}");
    }
}

#[test]
fn csv_dump_layout() {
    let s = series(vec![x(), Expr::int(1)], &[(0.0, 1.0)]);
    let csv = mollified_csv(&s, &[0.0, 0.1], &[vec![0.0], vec![0.5]]).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1,value");
    assert_eq!(lines.len(), 5);
    let last: Vec<f64> = lines[4].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last, vec![0.1, 0.5, s.mollified_eval(0.1, &[0.5]).unwrap()]);
}
