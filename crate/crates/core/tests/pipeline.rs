use std::collections::BTreeMap;

use opexp::borel::{tail_bound_check, taylor_jet_check, BoxDomain, MollifiedSeries, SupOptions};
use opexp::derivation::{taylor_coefficients, CoefficientSeries};
use opexp::expr::Compiled;
use opexp::parser::parse_system;
use opexp::verify::{equivalence_test, run_case, GoldenCase, Status, SuiteOptions};

const KDV: &str = "param a = 1/4;\neq: dt(u) = -a*D(u;x,x,x) - u*D(u;x);\ninit: u = cos(x);\n";

fn eval(series: &CoefficientSeries, n: usize, x: f64) -> f64 {
    let params = series.system.param_values(&BTreeMap::new());
    Compiled::new(&series.coefficients[0][n].to_poly().unwrap(), &params, &[]).unwrap().eval_at(&[x]).unwrap()
}

#[test]
fn parse_expand_sum_check() {
    let sys = parse_system(KDV).unwrap();
    let series = taylor_coefficients(&sys, 6).unwrap();
    // D^3 cos = sin, -u u_x = cos sin
    for x in [0.2f64, 1.1, 2.9] {
        let want = -0.25 * x.sin() + x.cos() * x.sin();
        assert!((eval(&series, 1, x) - want).abs() < 1e-14);
    }
    let s = MollifiedSeries::from_coefficient_series(&series, "u", BoxDomain::torus(1), &BTreeMap::new(), SupOptions::default())
        .unwrap();
    for i in 0..=3 {
        assert!(tail_bound_check(&s, i).unwrap().pass);
    }
    assert!(taylor_jet_check(&s, 4, 16).unwrap().passes(1e-6));
    assert!(s.mollified_eval(0.0, &[1.0]).unwrap() == 1.0f64.cos());
}

#[test]
fn user_system_through_the_suite() {
    let sys = parse_system(KDV).unwrap();
    let e = equivalence_test(&sys, 4).unwrap();
    assert_eq!(e.holds(), [true; 3]);
    let case = GoldenCase::from_system("kdv", sys, 6, BoxDomain::torus(1));
    let opts = SuiteOptions { algebra_count: 0, ..SuiteOptions::default() };
    let report = run_case(&case, &opts);
    for c in &report.checks {
        assert_ne!(c.status, Status::Fail, "{} {}", c.name, c.detail);
    }
    assert!(report.checks.iter().any(|c| c.name == "reference-fd/kdv/u"));
}

#[test]
fn coefficient_json_is_stable() {
    let sys = parse_system(KDV).unwrap();
    let a = serde_json::to_string(&taylor_coefficients(&sys, 3).unwrap().to_json()).unwrap();
    let b = serde_json::to_string(&taylor_coefficients(&sys, 3).unwrap().to_json()).unwrap();
    assert_eq!(a, b);
}
