use std::sync::Arc;

use super::VerifyError;
use crate::borel::BoxDomain;
use crate::expr::{set_atom_poly, to_expr, Atom, Derivation, Expr, ParamDerivative, Poly};
use crate::parser::{parse_expression, parse_system, PdeSystem, Symbols};

/// A system with (optionally) its exact solution as a closed form in the
/// parameter `t` and the spatial variables.
#[derive(Clone, Debug)]
pub struct GoldenCase {
    pub name: String,
    pub system: PdeSystem,
    /// One closed form per unknown, or `None` when only a numeric reference exists.
    pub exact: Option<Vec<Expr>>,
    pub order: usize,
    /// For pointwise comparison when canonical forms differ.
    pub tolerance: f64,
    pub domain: BoxDomain,
    /// Source text of the system.
    pub spec: String,
}

const CASES: &[(&str, &str, Option<&[&str]>)] = &[
    ("transport", "eq: dt(u) = D(u;x);\ninit: u = exp(sin(x));\n", Some(&["exp(sin(x + t))"])),
    ("heat", "param nu = 1;\neq: dt(u) = nu*D(u;x,x);\ninit: u = sin(x);\n", Some(&["exp(-nu*t)*sin(x)"])),
    ("riccati", "param c = 1/2;\neq: dt(u) = u^2;\ninit: u = c;\n", Some(&["c/(1 - c*t)"])),
    ("burgers", "param nu = 1/10;\neq: dt(u) = nu*D(u;x,x) - u*D(u;x);\ninit: u = sin(x);\n", None),
    ("clock", "time_dependent;\neq: dt(v) = v + s;\ninit: v = 0;\n", Some(&["exp(t) - 1 - t"])),
    (
        "wave",
        "unknowns v1, v2;\neq: dt(v1) = v2;\neq: dt(v2) = D(v1;x,x);\ninit: v1 = sin(x);\ninit: v2 = 0;\n",
        Some(&["sin(x)*cos(t)", "-sin(x)*sin(t)"]),
    ),
];

pub fn builtin_names() -> Vec<&'static str> {
    CASES.iter().map(|c| c.0).collect()
}

/// Embedded golden case by name.
pub fn builtin(name: &str) -> Option<GoldenCase> {
    let (name, text, exact) = CASES.iter().find(|c| c.0 == name)?;
    let system = parse_system(text).expect("embedded spec parses");
    let sym = Symbols { dim: Some(system.dim), ..Symbols::default() };
    let exact = exact.map(|forms| forms.iter().map(|f| parse_expression(f, &sym).expect("embedded closed form")).collect());
    let domain = if system.dim == 0 { BoxDomain::point() } else { BoxDomain::torus(system.dim) };
    Some(GoldenCase {
        name: name.to_string(),
        order: if *name == "clock" { 8 } else { 6 },
        tolerance: 1e-12,
        exact,
        domain,
        spec: text.to_string(),
        system,
    })
}

impl GoldenCase {
    /// A user system without closed form.
    pub fn from_system(name: &str, system: PdeSystem, order: usize, domain: BoxDomain) -> Self {
        let spec = system.serialize();
        GoldenCase { name: name.to_string(), system, exact: None, order, tolerance: 1e-12, domain, spec }
    }
}

/// `d^n/dt^n f |_{t=0}` for `n = 0..=order`, by parameter differentiation.
pub fn time_jet(f: &Expr, order: usize) -> Result<Vec<Expr>, VerifyError> {
    let t = Atom::Param(Arc::from("t"));
    let d = ParamDerivative(Arc::from("t"));
    let mut p = f.to_poly()?;
    let mut out = Vec::with_capacity(order + 1);
    for n in 0..=order {
        if n > 0 {
            p = d.apply(&p)?;
        }
        out.push(to_expr(&set_atom_poly(&p, &t, &Poly::zero())?));
    }
    Ok(out)
}
