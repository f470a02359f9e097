use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::Value;
use toda_core::charts::{atlas_centers, chart_contains, Form};
use toda_core::flow::{
    chart_trajectory, compare_methods, integrate_rk, symes_trajectory, uniform_grid, SymesOptions, RK_ATOL, RK_RTOL,
    SO5_ATOL, SO5_RTOL,
};
use toda_core::{AlgebraKind, CMatrix, ChartCenter, ComparisonReport, HierarchyPoly, IwasawaContext, Tolerance, Trajectory};

use crate::chart::{center_from, spectrum_center, ChartForm};
use crate::doc::{emit, emit_json, num, object, parse_complex_list, read_matrix, trajectory_csv};
use crate::error::CliError;

pub const DEFAULT_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rk,
    Symes,
    Chart,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algebra {
    Sl,
    Slr,
    So5,
}

pub struct Args<'a> {
    pub input: &'a Path,
    pub lambda: Option<&'a str>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub method: MethodArg,
    pub poly: HierarchyPoly,
    pub algebra: Algebra,
    pub auto_center: bool,
    pub threshold: f64,
    pub out: Option<&'a Path>,
}

fn context(algebra: Algebra, n: usize) -> Result<IwasawaContext, CliError> {
    let kind = match algebra {
        Algebra::Sl => AlgebraKind::SlComplex(n),
        Algebra::Slr => AlgebraKind::SlReal(n),
        Algebra::So5 if n == 5 => AlgebraKind::SoC5,
        Algebra::So5 => return Err(CliError::Input(format!("so5 needs a 5×5 input, got {n}×{n}"))),
    };
    IwasawaContext::new(kind, Tolerance::default()).map_err(CliError::input)
}

/// The chart center for `x`: `--lambda` when its chart contains `x`, else the first atlas
/// translate that does (scanned when `--auto-center` is set or no center was given).
fn choose_center(x: &CMatrix, lambda: Option<&str>, auto: bool) -> Result<ChartCenter, CliError> {
    let tol = Tolerance::default();
    let base = match lambda {
        Some(s) => center_from(parse_complex_list(s)?, tol)?,
        None => spectrum_center(x, ChartForm::Complex, tol)?,
    };
    if base.n() != x.n() {
        return Err(CliError::Input(format!("center has {} entries, matrix is {}×{}", base.n(), x.n(), x.n())));
    }
    if chart_contains(x, &base) || (lambda.is_some() && !auto) {
        return Ok(base);
    }
    let centers = atlas_centers(&base, Form::SlComplex).map_err(CliError::compute)?;
    centers
        .into_iter()
        .find(|ce| chart_contains(x, ce))
        .ok_or_else(|| CliError::Failure("no atlas chart contains the initial matrix".into()))
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn report_value(r: &ComparisonReport, threshold: f64, pass: bool) -> Value {
    object([
        ("rk_symes", num(r.rk_symes)),
        ("rk_chart", num(r.rk_chart)),
        ("symes_chart", num(r.symes_chart)),
        ("max_pairwise", num(r.max_pairwise())),
        ("drift_rk", num(r.drift_rk)),
        ("drift_symes", num(r.drift_symes)),
        ("drift_chart", num(r.drift_chart)),
        ("diag_law", num(r.diag_law)),
        ("boundary_hits", Value::from(r.boundary_hits)),
        ("confined", Value::from(r.boundary_hits == 0)),
        ("samples", Value::from(r.samples)),
        ("threshold", num(threshold)),
        ("pass", Value::from(pass)),
    ])
}

pub fn run(args: Args) -> Result<bool, CliError> {
    let x0 = read_matrix(args.input)?;
    let n = x0.n();
    let ctx = context(args.algebra, n)?;
    if !ctx.in_algebra(&x0) {
        return Err(CliError::Input("initial matrix is not in the chosen algebra".into()));
    }
    if args.steps == 0 {
        return Err(CliError::Input("--steps must be positive".into()));
    }
    let grid = uniform_grid(args.t0, args.t1, args.steps + 1).map_err(CliError::input)?;
    let f = &args.poly;
    let (rtol, atol) = if args.algebra == Algebra::So5 { (SO5_RTOL, SO5_ATOL) } else { (RK_RTOL, RK_ATOL) };
    let rk_tols = [("rtol", rtol), ("atol", atol)];
    let symes_opts = SymesOptions::default();
    let symes_tols = [("max_spread", symes_opts.max_spread), ("consistency", symes_opts.consistency)];
    let needs_chart = matches!(args.method, MethodArg::Chart | MethodArg::All);
    if needs_chart && args.algebra == Algebra::So5 {
        return Err(CliError::Input("chart coordinates are only available for the sl fields".into()));
    }
    let center = if needs_chart { Some(choose_center(&x0, args.lambda, args.auto_center)?) } else { None };
    let write = |traj: &Trajectory, tols: &[(&str, f64)], path: Option<PathBuf>| {
        emit(&trajectory_csv(traj, f, center.as_ref(), tols), path.as_deref())
    };
    match args.method {
        MethodArg::Rk => {
            let tr = integrate_rk(&ctx, &x0, f, &grid, rtol, atol).map_err(CliError::compute)?;
            write(&tr, &rk_tols, args.out.map(Path::to_path_buf))?;
            Ok(true)
        }
        MethodArg::Symes => {
            let tr = symes_trajectory(&x0, f, &grid, None, &symes_opts).map_err(CliError::compute)?;
            write(&tr, &symes_tols, args.out.map(Path::to_path_buf))?;
            Ok(true)
        }
        MethodArg::Chart => {
            let ce = center.as_ref().expect("chart center chosen above");
            let tr = chart_trajectory(&x0, ce, f, &grid).map_err(CliError::compute)?;
            write(&tr, &[("rel", ce.tol().rel), ("abs", ce.tol().abs)], args.out.map(Path::to_path_buf))?;
            Ok(true)
        }
        MethodArg::All => {
            let ce = center.as_ref().expect("chart center chosen above");
            let cmp = compare_methods(&ctx, &x0, ce, f, &grid).map_err(CliError::compute)?;
            let r = &cmp.report;
            let pass = r.max_pairwise() <= args.threshold && r.boundary_hits == 0;
            let report = report_value(r, args.threshold, pass);
            if let Some(prefix) = args.out {
                write(&cmp.rk, &rk_tols, Some(suffixed(prefix, ".rk.csv")))?;
                write(&cmp.symes, &symes_tols, Some(suffixed(prefix, ".symes.csv")))?;
                write(&cmp.chart, &[("rel", ce.tol().rel), ("abs", ce.tol().abs)], Some(suffixed(prefix, ".chart.csv")))?;
                emit_json(&report, Some(&suffixed(prefix, ".report.json")))?;
            }
            emit_json(&report, None)?;
            Ok(pass)
        }
    }
}
