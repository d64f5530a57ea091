use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::expr::random::{random_expr, Vocabulary};

const BURGERS: &str = "eq: dt(v) = nu*D(v;x,x) - v*D(v;x); init: v = sin(x);";

#[test]
fn parses_burgers() {
    let sys = parse_system(BURGERS).unwrap();
    assert_eq!(sys.len(), 1);
    assert_eq!(sys.dim, 1);
    assert_eq!(sys.unknowns[0].as_ref(), "v");
    assert_eq!(sys.rhs[0].to_string(), "nu*D(v;x,x) - v*D(v;x)");
    assert_eq!(sys.init[0].to_string(), "sin(x)");
    assert!(!sys.time_dependent);
    assert!(sys.params.is_empty());
    assert!(sys.referenced_params().contains("nu"));
}

#[test]
fn parses_ode_without_space() {
    let sys = parse_system("eq: dt(v) = v^2; init: v = 1;").unwrap();
    assert_eq!(sys.dim, 0);
    assert_eq!(sys.rhs[0].to_string(), "v^2");
}

#[test]
fn rejects_initial_data_for_undeclared_unknown() {
    let err = parse_system("eq: dt(v) = D(v;x); init: w = 0;").unwrap_err();
    assert_eq!(err.to_string(), "unknown w not declared");
    assert!(matches!(err, ParseError::Semantic { ref symbol, .. } if symbol == "w"));
}

#[test]
fn reports_syntax_errors_with_position() {
    let err = parse_system("eq: dt(v) = v +;\ninit: v = 1;").unwrap_err();
    match err {
        ParseError::Syntax { line, col, .. } => {
            assert_eq!((line, col), (1, 16));
        }
        other => panic!("expected syntax error, got {other:?}"),
    }
    let err = parse_system("eq: dt(v) = v;\ninit: v = 1 $;").unwrap_err();
    assert!(matches!(err, ParseError::Syntax { line: 2, col: 13, .. }), "{err:?}");
}

#[test]
fn semantic_errors_name_the_symbol() {
    let err = parse_system("eq: dt(v) = D(w;x); init: v = 0;").unwrap_err();
    assert!(matches!(err, ParseError::Semantic { ref symbol, .. } if symbol == "w"), "{err:?}");

    let err = parse_system("dim 1; eq: dt(v) = D(v;x2); init: v = 0;").unwrap_err();
    assert!(matches!(err, ParseError::Semantic { ref symbol, .. } if symbol == "x2"), "{err:?}");

    let err = parse_system("eq: dt(v) = v; init: v = v;").unwrap_err();
    assert!(matches!(err, ParseError::Semantic { ref symbol, .. } if symbol == "v"), "{err:?}");

    let err = parse_system("eq: dt(v) = s; init: v = 0;").unwrap_err();
    assert!(matches!(err, ParseError::Semantic { ref symbol, .. } if symbol == "s"), "{err:?}");

    let err = parse_system("unknowns v, w; eq: dt(v) = w; init: v = 0; init: w = 0;").unwrap_err();
    assert!(err.to_string().contains("no equation for unknown w"), "{err}");
}

#[test]
fn time_dependent_systems_accept_the_clock() {
    let sys = parse_system("time_dependent; eq: dt(v) = v + s; init: v = 0;").unwrap();
    assert!(sys.time_dependent);
    assert!(sys.rhs[0].mentions_time());
}

#[test]
fn declared_params_keep_exact_defaults() {
    let sys = parse_system("param nu = 0.1; param c = -3/4; eq: dt(v) = nu*v + c; init: v = 1;").unwrap();
    assert_eq!(sys.params["nu"], Rational::new(1.into(), 10.into()));
    assert_eq!(sys.params["c"], Rational::new((-3).into(), 4.into()));
    let values = sys.param_values(&BTreeMap::from([("c".to_string(), 2.0)]));
    assert_eq!(values["nu"], 0.1);
    assert_eq!(values["c"], 2.0);
}

#[test]
fn serialize_examples() {
    let sym = Symbols::with_unknowns(&["u"]);
    assert_eq!(parse_expression("u*3", &sym).unwrap().to_string(), "3*u");
    assert_eq!(parse_expression("D(u;x,x)", &sym).unwrap().to_string(), "D(u;x,x)");
}

#[test]
fn system_round_trips_bit_identically() {
    let sys = parse_system(BURGERS).unwrap();
    let text = sys.serialize();
    let again = parse_system(&text).unwrap();
    assert_eq!(again, sys);
    assert_eq!(again.serialize(), text);

    let wave = parse_system(
        "dim 2; param c = 1/3; unknowns v1, v2; eq: dt(v1) = v2; eq: dt(v2) = c*D(v1;x1,x1) + D(v1;x2,x2); init: v1 = sin(x1)*cos(x2); init: v2 = 0;",
    )
    .unwrap();
    let text = wave.serialize();
    assert_eq!(parse_system(&text).unwrap().serialize(), text);
}

#[test]
fn leray_pressure_marker_round_trips() {
    let sys = parse_system(
        "dim 2; unknowns v1, v2; param nu = 1/10;\n\
         eq: dt(v1) = nu*(D(v1;x1,x1) + D(v1;x2,x2)) - v1*D(v1;x1) - v2*D(v1;x2) - D(leray_pressure(v1,v2);x1);\n\
         eq: dt(v2) = nu*(D(v2;x1,x1) + D(v2;x2,x2)) - v1*D(v2;x1) - v2*D(v2;x2) - D(leray_pressure(v1,v2);x2);\n\
         init: v1 = cos(x1)*sin(x2); init: v2 = -sin(x1)*cos(x2);",
    )
    .unwrap();
    assert!(sys.has_pressure());
    assert!(sys.rhs[0].to_string().contains("D(leray_pressure(v1,v2);x1)"));
    let text = sys.serialize();
    assert_eq!(parse_system(&text).unwrap(), sys);

    let err = parse_system("eq: dt(v) = leray_pressure(q); init: v = 0;").unwrap_err();
    assert!(matches!(err, ParseError::Semantic { ref symbol, .. } if symbol == "q"));
}

#[test]
fn numbers_are_exact() {
    let sym = Symbols::default();
    assert_eq!(parse_expression("0.1 + 0.2", &sym).unwrap(), parse_expression("3/10", &sym).unwrap());
    assert_eq!(parse_expression("2.5e-1", &sym).unwrap(), parse_expression("1/4", &sym).unwrap());
    assert_eq!(parse_expression("-2^2", &sym).unwrap(), Expr::int(-4));
    assert_eq!(parse_expression("2^-1", &sym).unwrap(), Expr::rational(1, 2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let voc = Vocabulary::symbolic(&["u", "w"], &["nu", "c"], 2);
        let e = random_expr(&mut rng, 4, &voc);
        let Ok(canon) = normalize(&e) else { return Ok(()) };
        let text = canon.to_string();
        let back = parse_expression(&text, &Symbols::with_unknowns(&["u", "w"])).unwrap();
        prop_assert_eq!(&back, &canon, "text = {}", text);
        prop_assert_eq!(back.to_string(), text);
    }
}
