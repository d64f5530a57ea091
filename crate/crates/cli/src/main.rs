use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{CliError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "opexp", version, about = "Operator-exponential Taylor coefficients, mollified sums and their verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Taylor coefficients a_n = A^n u as JSON and a text table.
    Expand(Common),
    /// Radii, mollified-sum CSV and tail-bound report.
    Sum(Common),
    /// Golden cases and identity checks; exit 1 if any check fails.
    Verify(Common),
    /// Navier-Stokes coefficients on a periodic grid.
    Ns(NsArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// System description file.
    #[arg(long, conflicts_with_all = ["case", "suite"])]
    spec: Option<String>,
    /// Embedded golden case.
    #[arg(long, conflicts_with = "suite")]
    case: Option<String>,
    /// Named suite (verify only).
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    /// Box bounds a1,b1[,a2,b2,..].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    omega: Option<Vec<f64>>,
    /// Grid points per axis.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Overrides the parameter `nu`.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value = "out")]
    out: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct NsArgs {
    /// taylor-green-2d, taylor-green-3d or random-band-limited.
    #[arg(long, default_value = "taylor-green-2d")]
    init: String,
    /// Largest wavenumber of random-band-limited fields.
    #[arg(long, default_value_t = 2)]
    band: usize,
    #[command(flatten)]
    common: Common,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Expand(c) => commands::expand(&RunConfig::new("expand", &c, None)?),
        Command::Sum(c) => commands::sum(&RunConfig::new("sum", &c, None)?),
        Command::Verify(c) => commands::verify(&RunConfig::new("verify", &c, None)?),
        Command::Ns(a) => commands::ns(&RunConfig::new("ns", &a.common, Some((a.init.clone(), a.band)))?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
