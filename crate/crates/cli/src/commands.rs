use std::fmt::Write as _;
use std::path::Path;

use opexp::borel::{mollified_csv, tail_bound_check, MollifiedSeries, SupOptions};
use opexp::derivation::{taylor_coefficients_capped, DerivationError, DEFAULT_TERM_CAP};
use opexp::expr::Printer;
use opexp::nonlocal::{
    io::write_binary, ns_taylor_coefficients, random_band_limited, taylor_green_2d, taylor_green_3d, Field,
    NonlocalError, PeriodicGrid,
};
use opexp::verify::{ns_reference, run_case, run_suite, Check, Status, SuiteOptions, VerificationReport};
use serde_json::{json, Value};

use crate::config::{input, io, CliError, RunConfig, Source};

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io(path))
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("plain data");
    s.push('\n');
    write(path, &s)
}

fn derivation(e: DerivationError) -> CliError {
    match e {
        DerivationError::TermCap { .. } => CliError::Failed(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

pub fn expand(cfg: &RunConfig) -> Result<bool, CliError> {
    let order = cfg.order.unwrap_or(4);
    let case = cfg.case(order)?;
    let series = taylor_coefficients_capped(&case.system, order, DEFAULT_TERM_CAP).map_err(derivation)?;
    let dir = cfg.out_dir()?;
    write_json(
        &dir.join("series.json"),
        &json!({ "config": cfg, "system": case.system.serialize(), "series": series.to_json() }),
    )?;
    let printer = Printer::new(case.system.naming());
    let mut table = String::new();
    for (i, u) in case.system.unknowns.iter().enumerate() {
        for (n, a) in series.coefficients[i].iter().enumerate() {
            let _ = writeln!(table, "{u}\t{n}\t{}", printer.to_string(a));
        }
    }
    write(&dir.join("series.txt"), &table)?;
    print!("{table}");
    Ok(true)
}

pub fn sum(cfg: &RunConfig) -> Result<bool, CliError> {
    let order = cfg.order.unwrap_or(6);
    let case = cfg.case(order)?;
    let coeffs = taylor_coefficients_capped(&case.system, order, DEFAULT_TERM_CAP).map_err(derivation)?;
    let params = cfg.params();
    let dir = cfg.out_dir()?;
    let m = cfg.grid.as_ref().and_then(|g| g.first().copied()).unwrap_or(16);
    let d = case.domain.dim();
    let xs: Vec<Vec<f64>> = (0..m.pow(d as u32))
        .map(|mut flat| {
            (0..d)
                .map(|a| {
                    let k = flat % m;
                    flat /= m;
                    let (lo, hi) = (case.domain.lower[a], case.domain.upper[a]);
                    lo + (hi - lo) * k as f64 / (m - 1) as f64
                })
                .collect()
        })
        .collect();
    let mut unknowns = Vec::new();
    let mut all_pass = true;
    for u in &case.system.unknowns {
        let s = MollifiedSeries::from_coefficient_series(&coeffs, u, case.domain.clone(), &params, SupOptions::default())
            .map_err(input)?;
        let plateau = s.plateau();
        // half the lattice on the plateau, half beyond it
        let ts: Vec<f64> = (0..=16).map(|j| plateau * j as f64 / 8.0).collect();
        write(&dir.join(format!("mollified_{u}.csv")), &mollified_csv(&s, &ts, &xs).map_err(input)?)?;
        write(&dir.join(format!("taylor_{u}.csv")), &taylor_csv(&s, &ts, &xs)?)?;
        let rows: Vec<Value> = (0..=s.order())
            .map(|n| json!({ "n": n, "beta": s.beta(n), "beta_raw": s.beta_raw(n), "radius": s.radius(n) }))
            .collect();
        let mut tails = Vec::new();
        for i in 0..=3.min(order.saturating_sub(1)) {
            let r = tail_bound_check(&s, i).map_err(input)?;
            all_pass &= r.pass;
            tails.push(r.to_json());
        }
        unknowns.push(json!({ "unknown": u.as_ref(), "plateau": plateau, "radii": rows, "tail": tails }));
    }
    write_json(&dir.join("sum.json"), &json!({ "config": cfg, "pass": all_pass, "unknowns": unknowns }))?;
    println!("{} tail-bound checks, order {order}", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}

fn taylor_csv(s: &MollifiedSeries, ts: &[f64], xs: &[Vec<f64>]) -> Result<String, CliError> {
    let d = xs.first().map_or(0, |x| x.len());
    let mut out = String::from("t");
    for j in 1..=d {
        let _ = write!(out, ",x{j}");
    }
    out.push_str(",value\n");
    for &t in ts {
        for x in xs {
            let _ = write!(out, "{t:e}");
            for c in x {
                let _ = write!(out, ",{c:e}");
            }
            let _ = writeln!(out, ",{:e}", s.taylor_sum(t, x).map_err(input)?);
        }
    }
    Ok(out)
}

fn report_files(cfg: &RunConfig, report: &VerificationReport) -> Result<(), CliError> {
    let dir = cfg.out_dir()?;
    write_json(&dir.join("report.json"), &json!({ "config": cfg, "checks": report.to_json() }))?;
    write_json(&dir.join("timings.json"), &report.timings_json())?;
    for c in &report.checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        match c.error {
            Some(e) => println!("{tag} {} error={e:e} tol={:e}", c.name, c.tolerance),
            None => println!("{tag} {}", c.name),
        }
    }
    println!(
        "{} passed, {} failed, {} skipped",
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Skip)
    );
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> Result<bool, CliError> {
    let mut opts = SuiteOptions { seed: cfg.seed, order: cfg.order, params: cfg.params(), ..SuiteOptions::default() };
    if let Some(t) = cfg.tol {
        opts.jet_tol = t;
        opts.fd_tol = t;
    }
    if let Some(n) = cfg.grid.as_ref().and_then(|g| g.first()) {
        opts.fd_points = *n;
    }
    let report = match &cfg.source {
        Source::Suite { name } => run_suite(name, &opts).map_err(input)?,
        _ => run_case(&cfg.case(6)?, &opts),
    };
    report_files(cfg, &report)?;
    Ok(report.all_passed())
}

fn ns_field(cfg: &RunConfig) -> Result<Field, CliError> {
    let init = cfg.init.as_deref().unwrap_or("taylor-green-2d");
    let d = match init {
        "taylor-green-2d" => 2,
        "taylor-green-3d" => 3,
        "random-band-limited" => cfg.grid.as_ref().map_or(3, |g| g.len()),
        other => return Err(CliError::Input(format!("unknown initial field {other}"))),
    };
    let dims = match &cfg.grid {
        Some(g) if g.len() == d => g.clone(),
        Some(g) if g.len() == 1 => vec![g[0]; d],
        Some(g) => return Err(CliError::Input(format!("--grid has {} axes, {init} needs {d}", g.len()))),
        None => vec![if d == 2 { 64 } else { 16 }; d],
    };
    let grid = PeriodicGrid::new(&dims).map_err(input)?;
    match init {
        "taylor-green-2d" => taylor_green_2d(&grid),
        "taylor-green-3d" => taylor_green_3d(&grid),
        _ => random_band_limited(&grid, cfg.band.unwrap_or(2), cfg.seed),
    }
    .map_err(input)
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

pub fn ns(cfg: &RunConfig) -> Result<bool, CliError> {
    let u0 = ns_field(cfg)?;
    let nu = cfg.nu.unwrap_or(0.1);
    let order = cfg.order.unwrap_or(4);
    let init = cfg.init.clone().unwrap_or_default();
    let coeffs = match ns_taylor_coefficients(&u0, nu, order) {
        Ok(c) => c,
        Err(e @ NonlocalError::Divergence { .. }) => return Err(CliError::Failed(e.to_string())),
        Err(e) => return Err(input(e)),
    };
    let dir = cfg.out_dir()?;
    let mut files = Vec::new();
    for (n, a) in coeffs.coefficients.iter().enumerate() {
        let name = format!("a{n}.bin");
        let path = dir.join(&name);
        write_binary(a, &path).map_err(io(&path))?;
        files.push(name);
    }
    let mut manifest = coeffs.manifest(&files);
    manifest["config"] = serde_json::to_value(cfg).expect("plain data");
    write_json(&dir.join("manifest.json"), &manifest)?;

    let mut report = VerificationReport::default();
    for (n, a) in coeffs.coefficients.iter().enumerate() {
        let scale = a.max_abs();
        let div = coeffs.divergence[n];
        let err = if scale > 0.0 { div / scale } else { div };
        report.push(Check::measured(format!("ns/divergence/a{n}"), err, 1e-10, json!({ "max_div": div, "max_abs": scale })));
    }
    if init == "taylor-green-2d" && nu != 0.0 {
        let tol = cfg.tol.unwrap_or(1e-8);
        for (n, a) in coeffs.coefficients.iter().enumerate() {
            let want = u0.scaled((-2.0 * nu).powi(n as i32));
            report.push(Check::measured(format!("ns/decay/a{n}"), rel(a, &want), tol, json!({ "factor": (-2.0 * nu).powi(n as i32) })));
        }
    } else if init.starts_with("taylor-green") && nu == 0.0 {
        let tol = cfg.tol.unwrap_or(1e-10);
        for (n, a) in coeffs.coefficients.iter().enumerate().skip(1) {
            report.push(Check::measured(format!("ns/steady/a{n}"), a.max_abs() / u0.max_abs(), tol, json!({})));
        }
    } else {
        // central differences of the pseudo-spectral reference at t = 0
        let h = 1e-4;
        let fwd = ns_reference(&u0, nu, h, h).map_err(input)?;
        let bwd = ns_reference(&u0, nu, -h, -h).map_err(input)?;
        let mut d1 = fwd.clone();
        d1.add_scaled(&bwd, -1.0);
        let d1 = d1.scaled(1.0 / (2.0 * h));
        let mut d2 = fwd;
        d2.add_scaled(&bwd, 1.0);
        d2.add_scaled(&u0, -2.0);
        let d2 = d2.scaled(1.0 / (h * h));
        if order >= 1 {
            report.push(Check::measured("ns/reference-fd/a1", rel(&coeffs.coefficients[1], &d1), 1e-5, json!({ "h": h })));
        }
        if order >= 2 {
            report.push(Check::measured("ns/reference-fd/a2", rel(&coeffs.coefficients[2], &d2), 1e-4, json!({ "h": h })));
        }
    }
    report_files(cfg, &report)?;
    Ok(report.all_passed())
}
