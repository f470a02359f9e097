//! `toda`: factorizations, charts, flows, and verification suites from the command line.

mod chart;
mod doc;
mod error;
mod example;
mod factor;
mod flow;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toda_core::{HierarchyPoly, Tolerance};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "toda", version, about = "Toda flows on conjugacy classes of traceless complex matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Factor a matrix or test a cell predicate.
    Factor {
        kind: factor::Kind,
        #[arg(long)]
        input: PathBuf,
        /// Relative tolerance for the role and cell predicates.
        #[arg(long, env = "TODA_TOL_OVERRIDE")]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map a matrix to chart coordinates (`to`) or back (`from`).
    Chart {
        direction: chart::Direction,
        /// Matrix document for `to`, chart document for `from`.
        #[arg(long)]
        input: PathBuf,
        /// Chart center, comma-separated complex numbers (e.g. `1+i,-1-i`).
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, value_enum, default_value_t = chart::ChartForm::Complex)]
        form: chart::ChartForm,
        /// Scan the atlas for the first center whose chart contains the input.
        #[arg(long)]
        auto_center: bool,
        #[arg(long, env = "TODA_TOL_OVERRIDE")]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate a matrix along the flow and write CSV trajectories.
    Flow {
        #[arg(long)]
        input: PathBuf,
        /// Chart center; defaults to the computed spectrum.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t1: f64,
        /// Number of intervals in the sample grid.
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = flow::MethodArg::All)]
        method: flow::MethodArg,
        /// Coefficients of f, constant term first (`0,0,1` is x²).
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        poly: String,
        /// Algebra whose compact projector defines the field.
        #[arg(long, value_enum, default_value_t = flow::Algebra::Sl)]
        form: flow::Algebra,
        /// Scan the atlas when the input is outside the chart of `--lambda`.
        #[arg(long)]
        auto_center: bool,
        /// Threshold on the relative distance between methods (method `all`).
        #[arg(long, env = "TODA_TOL_OVERRIDE")]
        tol: Option<f64>,
        /// CSV path; with `--method all`, a prefix for three CSVs and a JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded verification suite.
    Verify {
        #[arg(value_enum, default_value_t = verify::Suite::All)]
        suite: verify::Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Dimension range `lo..hi` (inclusive).
        #[arg(long, default_value = "2..4")]
        n: String,
        /// Random trials per dimension and check.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        poly: String,
        /// Threshold for the cross-method and diagonal-law checks.
        #[arg(long, env = "TODA_TOL_OVERRIDE")]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worked examples.
    Example {
        name: example::Name,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long, env = "TODA_TOL_OVERRIDE")]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn tolerance(rel: Option<f64>) -> Result<Tolerance, CliError> {
    let base = Tolerance::default();
    match rel {
        None => Ok(base),
        Some(r) => Tolerance::new(base.abs, r, base.minor_floor).map_err(CliError::input),
    }
}

pub fn positive_tol(tol: Option<f64>, default: f64) -> Result<f64, CliError> {
    match tol {
        None => Ok(default),
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(CliError::Input(format!("tolerance must be positive, got {t}"))),
    }
}

pub fn parse_poly(s: &str) -> Result<HierarchyPoly, CliError> {
    HierarchyPoly::new(doc::parse_complex_list(s)?).map_err(CliError::input)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Factor { kind, input, tol, out } => factor::run(kind, &input, tolerance(tol)?, out.as_deref()),
        Command::Chart { direction, input, lambda, form, auto_center, tol, out } => chart::run(chart::Args {
            direction,
            input: &input,
            lambda: lambda.as_deref(),
            form,
            auto_center,
            tol: tolerance(tol)?,
            out: out.as_deref(),
        }),
        Command::Flow { input, lambda, t0, t1, steps, method, poly, form, auto_center, tol, out } => flow::run(flow::Args {
            input: &input,
            lambda: lambda.as_deref(),
            t0,
            t1,
            steps,
            method,
            poly: parse_poly(&poly)?,
            algebra: form,
            auto_center,
            threshold: positive_tol(tol, flow::DEFAULT_THRESHOLD)?,
            out: out.as_deref(),
        }),
        Command::Verify { suite, seed, n, trials, poly, tol, out } => verify::run(verify::Args {
            suite,
            seed,
            dims: verify::parse_range(&n)?,
            trials,
            poly: parse_poly(&poly)?,
            threshold: positive_tol(tol, verify::DEFAULT_THRESHOLD)?,
            out: out.as_deref(),
        }),
        Command::Example { name, lambda, seed, t0, t1, steps, tol, out } => example::run(example::Args {
            name,
            lambda: lambda.as_deref(),
            seed,
            t0,
            t1,
            steps,
            tol: tolerance(tol)?,
            out: out.as_deref(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
