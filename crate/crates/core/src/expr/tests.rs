use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{random_expr, shuffle_commutative, Vocabulary};
use super::*;
use crate::parser::{parse_expression, Symbols};

fn p(text: &str) -> Expr {
    parse_expression(text, &Symbols::with_unknowns(&["u", "w"])).unwrap()
}

fn raw_u() -> Expr {
    Expr::unknown("u")
}

#[test]
fn collects_like_terms() {
    let e = raw_u() * Expr::int(2) + raw_u() * Expr::int(1);
    assert_eq!(normalize(&e).unwrap(), normalize(&(Expr::int(3) * raw_u())).unwrap());
    assert_eq!(normalize(&e).unwrap().to_string(), "3*u");
}

#[test]
fn drops_additive_zero() {
    let d = Expr::deriv(raw_u(), &[0]);
    let e = d.clone() + Expr::zero();
    assert_eq!(normalize(&e).unwrap(), d);
}

#[test]
fn collects_products_into_powers() {
    let s = Expr::sin(raw_u());
    let e = s.clone() * s.clone();
    assert_eq!(normalize(&e).unwrap(), Expr::powi(s, 2));
}

#[test]
fn rejects_non_integer_exponents() {
    let e = Expr::Pow(Box::new(raw_u()), Box::new(Expr::param("nu")));
    assert!(matches!(normalize(&e), Err(ExprError::NonIntegerExponent(_))));
    let e = Expr::Pow(Box::new(raw_u()), Box::new(Expr::rational(1, 2)));
    assert!(matches!(normalize(&e), Err(ExprError::NonIntegerExponent(_))));
}

#[test]
fn division_by_zero_is_an_error() {
    let e = raw_u() / Expr::zero();
    assert_eq!(normalize(&e), Err(ExprError::DivisionByZero));
}

#[test]
fn canonical_order_puts_constants_first() {
    let e = p("sin(u) + D(u;x) + u + x + nu + 3");
    assert_eq!(e.to_string(), "3 + nu + x + u + D(u;x) + sin(u)");
}

#[test]
fn nested_derivatives_merge() {
    let e = Expr::deriv(Expr::deriv(raw_u(), &[0]), &[1]);
    let n = normalize(&e).unwrap();
    assert_eq!(n, Expr::Deriv(Box::new(raw_u()), MultiIndex::new(vec![1, 1])));
    assert_eq!(n.to_string(), "D(u;x1,x2)");
}

#[test]
fn spatial_derivative_examples() {
    assert_eq!(spatial_derivative(&p("u^2"), 0).unwrap(), p("2*u*D(u;x)"));
    assert_eq!(spatial_derivative(&p("sin(x)"), 0).unwrap(), p("cos(x)"));
    let d = spatial_derivative(&p("D(u;x1)"), 1).unwrap();
    assert_eq!(d, Expr::Deriv(Box::new(raw_u()), MultiIndex::new(vec![1, 1])));
    // explicit coordinates: dx_k/dx_j = delta_kj
    assert_eq!(spatial_derivative(&p("x1*x2"), 1).unwrap(), p("x1"));
}

#[test]
fn chain_rule_table_is_total() {
    assert_eq!(spatial_derivative(&p("exp(u)"), 0).unwrap(), p("exp(u)*D(u;x)"));
    assert_eq!(spatial_derivative(&p("cos(u)"), 0).unwrap(), p("-sin(u)*D(u;x)"));
    assert_eq!(spatial_derivative(&p("log(u)"), 0).unwrap(), p("D(u;x)/u"));
    assert_eq!(spatial_derivative(&p("1/(1+u)"), 0).unwrap(), p("-D(u;x)*(1+u)^-2"));
}

#[test]
fn substitute_examples() {
    let mut b = BTreeMap::new();
    b.insert(Arc::from("u"), p("sin(x)"));
    assert_eq!(substitute(&p("nu*D(u;x,x)"), &b).unwrap(), p("-nu*sin(x)"));

    let mut b = BTreeMap::new();
    b.insert(Arc::from("u"), p("u"));
    assert_eq!(substitute(&p("u"), &b).unwrap(), p("u"));

    let mut b = BTreeMap::new();
    b.insert(Arc::from("u"), p("x^2"));
    assert_eq!(substitute(&p("u*D(u;x)"), &b).unwrap(), p("2*x^3"));
}

#[test]
fn substitute_reports_unbound_unknown() {
    let b = BTreeMap::from([(Arc::from("u"), p("x"))]);
    assert_eq!(substitute(&p("u*w"), &b), Err(ExprError::UnboundUnknown("w".into())));
}

#[test]
fn substitute_reaches_function_arguments() {
    let b = BTreeMap::from([(Arc::from("u"), p("x"))]);
    assert_eq!(substitute(&p("exp(sin(u))"), &b).unwrap(), p("exp(sin(x))"));
}

#[test]
fn eval_examples() {
    let none = BTreeMap::new();
    assert_eq!(eval_pointwise(&p("sin(x)"), &[0.0], &none).unwrap(), 0.0);
    let nu = BTreeMap::from([("nu".to_string(), 0.5)]);
    assert_eq!(eval_pointwise(&p("nu*x"), &[2.0], &nu).unwrap(), 1.0);
    assert_eq!(eval_pointwise(&p("exp(0)"), &[], &none).unwrap(), 1.0);
}

#[test]
fn eval_errors() {
    let none = BTreeMap::new();
    assert!(matches!(eval_pointwise(&p("u + 1"), &[0.0], &none), Err(ExprError::UnboundUnknown(_))));
    assert!(matches!(eval_pointwise(&Expr::log(Expr::var(0)), &[-1.0], &none), Err(ExprError::Domain(_))));
    assert!(matches!(eval_pointwise(&p("nu"), &[0.0], &none), Err(ExprError::UnboundParameter(_))));
}

#[test]
fn compiled_matches_tree_evaluation() {
    let e = p("exp(sin(x))*cos(x) + x^3/7 - 1/(2 + sin(x))");
    let params = BTreeMap::new();
    let c = Compiled::new(&e.to_poly().unwrap(), &params, &[]).unwrap();
    for k in 0..20 {
        let x = -3.0 + 0.3 * k as f64;
        let a = c.eval_at(&[x]).unwrap();
        let b = eval_pointwise(&e, &[x], &params).unwrap();
        assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn reciprocal_of_sum_round_trips_through_text() {
    let e = p("(1 + u)^-2 * u");
    let text = e.to_string();
    assert_eq!(p(&text), e);
    assert_eq!(p("(1+u)^-1 * (1+u)^-1"), p("(1+u)^-2"));
    assert_eq!(p("u^-1 * u"), p("1"));
}

fn symbolic_vocab() -> Vocabulary {
    Vocabulary::symbolic(&["u", "w"], &["nu"], 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent_and_order_insensitive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let voc = Vocabulary { singular: false, ..symbolic_vocab() };
        let e = random_expr(&mut rng, 6, &voc);
        let n = match normalize(&e) { Ok(n) => n, Err(_) => return Ok(()) };
        prop_assert_eq!(normalize(&n).unwrap(), n.clone());
        let shuffled = shuffle_commutative(&e, &mut rng);
        prop_assert_eq!(normalize(&shuffled).unwrap(), n);
    }

    #[test]
    fn spatial_derivatives_commute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, 4, &symbolic_vocab());
        let Ok(e) = normalize(&e) else { return Ok(()) };
        let a = spatial_derivative(&spatial_derivative(&e, 0).unwrap(), 1).unwrap();
        let b = spatial_derivative(&spatial_derivative(&e, 1).unwrap(), 0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spatial_derivative_is_linear(seed in any::<u64>(), num in -5i64..5, den in 1i64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e1 = random_expr(&mut rng, 4, &symbolic_vocab());
        let e2 = random_expr(&mut rng, 4, &symbolic_vocab());
        let c = Expr::rational(num, den);
        let Ok(lhs) = spatial_derivative(&(c.clone() * e1.clone() + e2.clone()), 0) else { return Ok(()) };
        let rhs = c * spatial_derivative(&e1, 0).unwrap() + spatial_derivative(&e2, 0).unwrap();
        prop_assert_eq!(lhs, normalize(&rhs).unwrap());
    }

    #[test]
    fn derivative_matches_central_difference(seed in any::<u64>(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = normalize(&random_expr(&mut rng, 4, &Vocabulary::closed_form(2))).unwrap();
        let none = BTreeMap::new();
        let h = 1e-5;
        for j in 0..2 {
            let d = spatial_derivative(&e, j).unwrap();
            let exact = eval_pointwise(&d, &[x, y], &none).unwrap();
            let mut lo = [x, y];
            let mut hi = [x, y];
            lo[j] -= h;
            hi[j] += h;
            let f_hi = eval_pointwise(&e, &hi, &none).unwrap();
            let f_lo = eval_pointwise(&e, &lo, &none).unwrap();
            let fd = (f_hi - f_lo) / (2.0 * h);
            let scale = exact.abs().max(1.0);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "e = {e}, d = {d}, fd = {fd}, exact = {exact}");
        }
    }
}
