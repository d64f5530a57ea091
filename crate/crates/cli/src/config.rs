use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use opexp::borel::BoxDomain;
use opexp::parser::{parse_system, PdeSystem};
use opexp::verify::{builtin, builtin_names, GoldenCase};
use serde::Serialize;

use crate::Common;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid input: exit 2.
    Input(String),
    /// A check or invariant failed while running: exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

pub fn input<E: fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub fn io<E: fmt::Display>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Spec { path: String },
    Case { name: String },
    Suite { name: String },
    Builtin,
}

/// Everything a run depends on; recorded verbatim in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub source: Source,
    pub order: Option<usize>,
    pub omega: Option<Vec<f64>>,
    pub grid: Option<Vec<usize>>,
    pub nu: Option<f64>,
    pub tol: Option<f64>,
    pub out: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &str, c: &Common, ns: Option<(String, usize)>) -> Result<Self, CliError> {
        let source = match (&c.spec, &c.case, &c.suite) {
            (Some(p), None, None) => Source::Spec { path: p.clone() },
            (None, Some(n), None) => Source::Case { name: n.clone() },
            (None, None, Some(s)) if command == "verify" => Source::Suite { name: s.clone() },
            (None, None, Some(_)) => return Err(CliError::Input("--suite is only valid for verify".into())),
            (None, None, None) if command == "ns" => Source::Builtin,
            (None, None, None) => return Err(CliError::Input("one of --spec, --case or --suite is required".into())),
            _ => return Err(CliError::Input("--spec, --case and --suite are exclusive".into())),
        };
        if command == "ns" && source != Source::Builtin {
            return Err(CliError::Input("ns takes its field from --init, not --spec/--case".into()));
        }
        if let Some(t) = c.tol {
            if t.is_nan() || t <= 0.0 {
                return Err(CliError::Input(format!("--tol must be positive, got {t}")));
            }
        }
        if let Some(o) = &c.omega {
            if o.len() % 2 != 0 || o.is_empty() {
                return Err(CliError::Input("--omega takes pairs a,b per axis".into()));
            }
        }
        if let Some(g) = &c.grid {
            if let Some(n) = g.iter().find(|n| !n.is_power_of_two() || **n < 4) {
                return Err(CliError::Input(format!("grid sizes must be powers of two >= 4, got {n}")));
            }
        }
        let (init, band) = match ns {
            Some((i, b)) => (Some(i), Some(b)),
            None => (None, None),
        };
        Ok(RunConfig {
            command: command.to_string(),
            source,
            order: c.order,
            omega: c.omega.clone(),
            grid: c.grid.clone(),
            nu: c.nu,
            tol: c.tol,
            out: c.out.clone(),
            seed: c.seed,
            init,
            band,
        })
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        let p = PathBuf::from(&self.out);
        std::fs::create_dir_all(&p).map_err(io(&p))?;
        Ok(p)
    }

    /// Parameter overrides from the flags.
    pub fn params(&self) -> BTreeMap<String, f64> {
        self.nu.map(|v| BTreeMap::from([("nu".to_string(), v)])).unwrap_or_default()
    }

    pub fn domain(&self, dim: usize) -> Result<BoxDomain, CliError> {
        match &self.omega {
            None if dim == 0 => Ok(BoxDomain::point()),
            None => Ok(BoxDomain::torus(dim)),
            Some(o) => {
                if o.len() != 2 * dim {
                    return Err(CliError::Input(format!("--omega gives {} axes, the system has {dim}", o.len() / 2)));
                }
                let pairs: Vec<(f64, f64)> = o.chunks(2).map(|c| (c[0], c[1])).collect();
                BoxDomain::new(&pairs).map_err(input)
            }
        }
    }

    /// The system of `--spec` or `--case`, as a golden case.
    pub fn case(&self, default_order: usize) -> Result<GoldenCase, CliError> {
        let mut case = match &self.source {
            Source::Case { name } => builtin(name).ok_or_else(|| {
                CliError::Input(format!("unknown case {name}; available: {}", builtin_names().join(", ")))
            })?,
            Source::Spec { path } => {
                let p = Path::new(path);
                let text = std::fs::read_to_string(p).map_err(io(p))?;
                let sys: PdeSystem = parse_system(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
                let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("spec").to_string();
                let domain = self.domain(sys.dim)?;
                GoldenCase::from_system(&name, sys, default_order, domain)
            }
            _ => return Err(CliError::Input("a --spec or --case is required".into())),
        };
        if self.omega.is_some() {
            case.domain = self.domain(case.system.dim)?;
        }
        if let Some(n) = self.order {
            case.order = n;
        } else if matches!(self.source, Source::Spec { .. }) {
            case.order = default_order;
        }
        Ok(case)
    }
}
