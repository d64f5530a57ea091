use std::f64::consts::PI;

use super::*;
use crate::expr::Expr;
use crate::parser::{parse_system, PdeSystem};

fn tg(n: usize) -> Field {
    taylor_green_2d(&PeriodicGrid::cube(2, n).unwrap()).unwrap()
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

#[test]
fn grid_validation() {
    assert!(PeriodicGrid::new(&[12, 16]).is_err());
    assert!(PeriodicGrid::new(&[]).is_err());
    assert!(PeriodicGrid::new(&[4, 4, 4, 4]).is_err());
    let g = PeriodicGrid::new(&[4, 8]).unwrap();
    assert_eq!(g.len(), 32);
    assert_eq!(g.unravel(9), vec![1, 1]);
    assert_eq!(g.point(9), vec![PI / 2.0, PI / 4.0]);
    assert_eq!((g.wavenumber(1, 4), g.wavenumber(1, 5)), (4, -3));
}

#[test]
fn divergence_examples() {
    let g = PeriodicGrid::cube(2, 32).unwrap();
    assert!(divergence(&tg(32)).unwrap().max_abs() < 1e-14);
    let u = Field::from_fn(&g, 2, |p| vec![p[0].cos(), 0.0]);
    let want = Field::from_fn(&g, 1, |p| vec![-p[0].sin()]);
    assert!(divergence(&u).unwrap().max_abs_diff(&want) < 1e-13);
    assert_eq!(divergence(&Field::zeros(&g, 2)).unwrap().max_abs(), 0.0);
}

#[test]
fn taylor_green_pressure() {
    let u = tg(64);
    let p = pressure_solve(&u).unwrap();
    let want = Field::from_fn(u.grid(), 1, |x| vec![-((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0]);
    assert!(p.max_abs_diff(&want) < 1e-10, "{}", p.max_abs_diff(&want));
    assert!(p.mean(0).abs() < 1e-15);

    // lap p = cos 2x + cos 2y, checked through the spectral Laplacian
    let sp = Spectral::new(u.grid());
    let lap = sp.laplacian(p.component(0));
    let src = Field::from_fn(u.grid(), 1, |x| vec![(2.0 * x[0]).cos() + (2.0 * x[1]).cos()]);
    assert!(Field::new(u.grid().clone(), vec![lap]).unwrap().max_abs_diff(&src) < 1e-10);
}

#[test]
fn zero_and_shear_pressure() {
    let g = PeriodicGrid::cube(2, 16).unwrap();
    let p = pressure_solve(&Field::zeros(&g, 2)).unwrap();
    assert!(p.component(0).iter().all(|&x| x == 0.0));
    let shear = Field::from_fn(&g, 2, |x| vec![x[1].sin(), 0.0]);
    assert!(pressure_solve(&shear).unwrap().max_abs() < 1e-15);
}

#[test]
fn non_finite_and_shape_errors() {
    let g = PeriodicGrid::cube(2, 8).unwrap();
    let mut u = Field::zeros(&g, 2);
    u.components_mut()[0][3] = f64::NAN;
    assert_eq!(pressure_solve(&u).unwrap_err(), NonlocalError::NonFinite);
    assert!(matches!(pressure_solve(&Field::zeros(&g, 3)), Err(NonlocalError::Shape(_))));
    assert!(matches!(ns_rhs(&tg(8), -1.0), Err(NonlocalError::Parameter(_))));
}

#[test]
fn rhs_matches_exact_decay() {
    let nu = 0.1;
    let u = tg(64);
    let rhs = ns_rhs(&u, nu).unwrap();
    // central difference in t of u e^{-2 nu t}
    let h = 1e-3;
    let fd = u.scaled(((-2.0 * nu * h).exp() - (2.0 * nu * h).exp()) / (2.0 * h));
    assert!(rhs.max_abs_diff(&fd) < 1e-7);
    assert!(rhs.max_abs_diff(&u.scaled(-2.0 * nu)) < 1e-13);
    assert!(divergence(&rhs).unwrap().max_abs() <= 1e-10 * rhs.max_abs());

    let g = PeriodicGrid::cube(2, 32).unwrap();
    let shear = Field::from_fn(&g, 2, |x| vec![x[1].sin(), 0.0]);
    let want = Field::from_fn(&g, 2, |x| vec![-nu * x[1].sin(), 0.0]);
    assert!(ns_rhs(&shear, nu).unwrap().max_abs_diff(&want) < 1e-14);
    let op = NsOperator::new(&g, nu).unwrap();
    let slope = op.integrate(&shear, 1e-3, 1e-3).unwrap();
    let back = op.integrate(&shear, -1e-3, -1e-3).unwrap();
    let mut fd = slope;
    fd.add_scaled(&back, -1.0);
    assert!(fd.scaled(1.0 / 2e-3).max_abs_diff(&want) < 1e-9);
    assert_eq!(ns_rhs(&Field::zeros(&g, 2), nu).unwrap().max_abs(), 0.0);
}

#[test]
fn taylor_green_coefficients_decay() {
    let nu = 0.1;
    let u = tg(64);
    let c = ns_taylor_coefficients(&u, nu, 4).unwrap();
    assert_eq!(c.order(), 4);
    for (n, a) in c.coefficients.iter().enumerate() {
        let want = u.scaled((-2.0 * nu).powi(n as i32));
        assert!(rel(a, &want) <= 1e-8, "n = {n}: {}", rel(a, &want));
        assert!(c.divergence[n] <= 1e-10 * a.max_abs(), "n = {n}");
    }
}

#[test]
fn euler_taylor_green_is_steady() {
    let u = tg(64);
    let c = ns_taylor_coefficients(&u, 0.0, 4).unwrap();
    for a in &c.coefficients[1..] {
        assert!(a.max_abs() <= 1e-10 * u.max_abs());
    }
    let op = NsOperator::new(u.grid(), 0.0).unwrap();
    assert!(op.integrate(&u, 0.1, 0.01).unwrap().max_abs_diff(&u) < 1e-12);
}

#[test]
fn zero_data_gives_zero_coefficients() {
    let g = PeriodicGrid::cube(3, 8).unwrap();
    let c = ns_taylor_coefficients(&Field::zeros(&g, 3), 0.3, 3).unwrap();
    assert!(c.coefficients.iter().all(|a| a.max_abs() == 0.0));
}

#[test]
fn rejects_compressible_data() {
    let g = PeriodicGrid::cube(2, 16).unwrap();
    let u = Field::from_fn(&g, 2, |p| vec![p[0].cos(), 0.0]);
    assert!(matches!(ns_taylor_coefficients(&u, 0.1, 2), Err(NonlocalError::Divergence { n: 0, .. })));
}

#[test]
fn second_coefficient_is_the_directional_derivative_of_the_rhs() {
    let g = PeriodicGrid::cube(2, 16).unwrap();
    let u = random_band_limited(&g, 3, 7).unwrap();
    let op = NsOperator::new(&g, 0.05).unwrap();
    let c = op.taylor_coefficients(&u, 2, &NsOptions::default()).unwrap();
    assert!(c.coefficients[1].max_abs_diff(&op.rhs(&u).unwrap()) < 1e-14);
    // the rhs is quadratic, so the central difference is exact up to rounding
    let eps = 1e-3;
    let mut plus = u.clone();
    plus.add_scaled(&c.coefficients[1], eps);
    let mut minus = u.clone();
    minus.add_scaled(&c.coefficients[1], -eps);
    let mut jac = op.rhs(&plus).unwrap();
    jac.add_scaled(&op.rhs(&minus).unwrap(), -1.0);
    let jac = jac.scaled(1.0 / (2.0 * eps));
    assert!(rel(&c.coefficients[2], &jac) < 1e-10, "{}", rel(&c.coefficients[2], &jac));
}

#[test]
fn random_field_matches_integrator_differences() {
    let g = PeriodicGrid::cube(3, 16).unwrap();
    let u = random_band_limited(&g, 2, 42).unwrap();
    assert!((u.max_abs() - 1.0).abs() < 1e-15);
    assert!(divergence(&u).unwrap().max_abs() < 1e-13);
    let nu = 0.05;
    let op = NsOperator::new(&g, nu).unwrap();
    let c = op.taylor_coefficients(&u, 2, &NsOptions::default()).unwrap();
    let h = 1e-4;
    let fwd = op.integrate(&u, h, h).unwrap();
    let bwd = op.integrate(&u, -h, -h).unwrap();
    let mut d1 = fwd.clone();
    d1.add_scaled(&bwd, -1.0);
    let d1 = d1.scaled(1.0 / (2.0 * h));
    let mut d2 = fwd;
    d2.add_scaled(&bwd, 1.0);
    d2.add_scaled(&u, -2.0);
    let d2 = d2.scaled(1.0 / (h * h));
    assert!(rel(&c.coefficients[1], &d1) <= 1e-5, "{}", rel(&c.coefficients[1], &d1));
    assert!(rel(&c.coefficients[2], &d2) <= 1e-4, "{}", rel(&c.coefficients[2], &d2));
}

#[test]
fn random_fields_are_reproducible() {
    let g = PeriodicGrid::cube(2, 16).unwrap();
    assert_eq!(random_band_limited(&g, 2, 5).unwrap(), random_band_limited(&g, 2, 5).unwrap());
    assert_ne!(random_band_limited(&g, 2, 5).unwrap(), random_band_limited(&g, 2, 6).unwrap());
    assert!(random_band_limited(&g, 6, 5).is_err());
}

#[test]
fn integrator_energy_decay() {
    let nu = 0.1;
    let u = tg(32);
    let op = NsOperator::new(u.grid(), nu).unwrap();
    let e0 = u.l2().powi(2);
    let mut v = u.clone();
    for step in 1..=5 {
        v = op.integrate(&v, 0.1, 0.01).unwrap();
        let t = 0.1 * step as f64;
        let e = v.l2().powi(2);
        assert!((e / e0 - (-4.0 * nu * t).exp()).abs() < 1e-6);
    }
}

#[test]
fn force_hook_enters_linearly() {
    let g = PeriodicGrid::cube(2, 16).unwrap();
    let nu = 0.2;
    let f = Field::from_fn(&g, 2, |x| vec![x[1].sin(), 0.0]);
    let op = NsOperator::new(&g, nu).unwrap();
    let forces = vec![f.clone()];
    let c = op.taylor_coefficients(&Field::zeros(&g, 2), 2, &NsOptions { forces: Some(forces), ..NsOptions::default() }).unwrap();
    assert!(c.coefficients[1].max_abs_diff(&f) < 1e-15);
    assert!(c.coefficients[2].max_abs_diff(&f.scaled(-nu)) < 1e-14);

    // a gradient force is absorbed by the pressure
    let grad = Field::from_fn(&g, 2, |x| vec![x[0].cos(), 0.0]);
    let c = op.taylor_coefficients(&Field::zeros(&g, 2), 1, &NsOptions { forces: Some(vec![grad]), ..NsOptions::default() }).unwrap();
    assert!(c.coefficients[1].max_abs() < 1e-14);
}

#[test]
fn binary_and_csv_round_trip() {
    let g = PeriodicGrid::new(&[4, 8]).unwrap();
    let u = random_band_limited(&g, 1, 3).unwrap();
    let bytes = io::encode_binary(&u);
    assert_eq!(bytes.len(), 4 + 8 + 4 + 8 * 2 * 32);
    assert_eq!(&bytes[..4], &2u32.to_le_bytes());
    assert_eq!(io::decode_binary(&bytes).unwrap(), u);
    assert!(io::decode_binary(&bytes[..bytes.len() - 1]).is_err());

    let text = io::encode_csv(&u);
    assert!(text.starts_with("x1,x2,c1,c2\n"));
    assert_eq!(io::decode_csv(&text, &g).unwrap(), u);

    let dir = std::env::temp_dir().join(format!("opexp-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("u.bin");
    io::write_binary(&u, &path).unwrap();
    assert_eq!(io::read_binary(&path).unwrap(), u);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn manifest_records_norms() {
    let c = ns_taylor_coefficients(&tg(16), 0.1, 2).unwrap();
    let files: Vec<String> = (0..=2).map(|n| format!("a{n}.bin")).collect();
    let m = c.manifest(&files);
    assert_eq!(m["order"], 2);
    assert_eq!(m["grid"], serde_json::json!([16, 16]));
    assert_eq!(m["coefficients"][1]["file"], "a1.bin");
    assert!((m["coefficients"][1]["max_norm"].as_f64().unwrap() - 0.2).abs() < 1e-12);
}

fn ns_system(d: usize) -> PdeSystem {
    let names: Vec<String> = (1..=d).map(|i| format!("v{i}")).collect();
    let list = names.join(",");
    let mut text = format!("dim {d}; unknowns {};\n", names.join(", "));
    for (i, v) in names.iter().enumerate() {
        let adv: Vec<String> = names.iter().enumerate().map(|(j, w)| format!("{w}*D({v};x{})", j + 1)).collect();
        text += &format!("eq: dt({v}) = -{} - D(leray_pressure({list});x{});\n", adv.join(" - "), i + 1);
        text += &format!("init: {v} = 0;\n");
    }
    parse_system(&text).unwrap()
}

#[test]
fn pressure_marker_display() {
    for d in [2usize, 3] {
        let sys = ns_system(d);
        let ps = pressure_symbolic(&sys).unwrap();
        let Expr::Add(terms) = &ps.source else { panic!("source is a sum") };
        assert_eq!(terms.len(), d * d);
        assert!(ps.marker.to_string().starts_with("leray_pressure(v1,v2"));
        let text = sys.serialize();
        assert_eq!(parse_system(&text).unwrap(), sys);
    }
    let burgers = parse_system("eq: dt(v) = -v*D(v;x); init: v = sin(x);").unwrap();
    let ps = pressure_symbolic(&burgers).unwrap();
    assert_eq!(ps.marker.to_string(), "leray_pressure(v)");
    let wave = parse_system("unknowns a, b; eq: dt(a) = b; eq: dt(b) = D(a;x,x); init: a = 0; init: b = 0;").unwrap();
    assert!(pressure_symbolic(&wave).is_err());
}

#[test]
fn round_off_floor_only_removes_round_off() {
    let g = PeriodicGrid::cube(3, 16).unwrap();
    let u = random_band_limited(&g, 2, 11).unwrap();
    let op = NsOperator::new(&g, 0.05).unwrap();
    let run = |floor: f64| op.taylor_coefficients(&u, 3, &NsOptions { noise_floor: floor, ..NsOptions::default() });
    let lo = run(1e-14).unwrap();
    let hi = run(1e-12).unwrap();
    for (a, b) in lo.coefficients.iter().zip(&hi.coefficients) {
        assert!(rel(a, b) < 1e-12, "{}", rel(a, b));
    }
}
