use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;
use toda_core::charts::{atlas_centers, chart_forward, chart_inverse, Form};
use toda_core::eigen::eigenvalues;
use toda_core::realforms::{real_atlas_centers, slh_chart_forward, slh_chart_inverse};
use toda_core::{CMatrix, ChartCenter, ChartPoint, RealChartPoint, RealFormTag, Tolerance, C64};

use crate::doc::{complex_list, complex_list_from_value, emit_json, matrix, matrix_from_value, object, parse_complex_list, read_json, read_matrix};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    To,
    From,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartForm {
    Complex,
    Slh,
}

impl ChartForm {
    fn name(self) -> &'static str {
        match self {
            ChartForm::Complex => "complex",
            ChartForm::Slh => "slh",
        }
    }
}

pub struct Args<'a> {
    pub direction: Direction,
    pub input: &'a Path,
    pub lambda: Option<&'a str>,
    pub form: ChartForm,
    pub auto_center: bool,
    pub tol: Tolerance,
    pub out: Option<&'a Path>,
}

pub fn center_from(lambda: Vec<C64>, tol: Tolerance) -> Result<ChartCenter, CliError> {
    ChartCenter::new(lambda, tol).map_err(CliError::input)
}

/// Spectrum of `x`, recentred to sum zero and ordered by real then imaginary part.
/// For `slh` the eigenvalues are arranged in conjugate pairs `(λ, λ̄)` with `Im λ > 0`.
pub fn spectrum_center(x: &CMatrix, form: ChartForm, tol: Tolerance) -> Result<ChartCenter, CliError> {
    let mut ev = eigenvalues(x).map_err(CliError::compute)?;
    let n = ev.len() as f64;
    let mean: C64 = ev.iter().sum::<C64>() / n;
    ev.iter_mut().for_each(|z| *z -= mean);
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    if form == ChartForm::Slh {
        let upper: Vec<C64> = ev.iter().copied().filter(|z| z.im > 0.0).collect();
        if upper.len() * 2 != ev.len() {
            return Err(CliError::Failure("NotInForm: spectrum is not in conjugate pairs off the real axis".into()));
        }
        ev = upper.iter().flat_map(|z| [*z, z.conj()]).collect();
    }
    center_from(ev, tol)
}

fn atlas(center: &ChartCenter, form: ChartForm) -> Result<Vec<ChartCenter>, CliError> {
    match form {
        ChartForm::Complex => atlas_centers(center, Form::SlComplex),
        ChartForm::Slh => real_atlas_centers(&RealFormTag::SlH(center.n()), center),
    }
    .map_err(CliError::compute)
}

enum Point {
    Complex(ChartPoint),
    Slh(RealChartPoint),
}

fn forward(x: &CMatrix, center: &ChartCenter, form: ChartForm) -> toda_core::Result<Point> {
    match form {
        ChartForm::Complex => chart_forward(x, center).map(Point::Complex),
        ChartForm::Slh => slh_chart_forward(x, center).map(Point::Slh),
    }
}

fn to(args: &Args) -> Result<bool, CliError> {
    let x = read_matrix(args.input)?;
    let base = match args.lambda {
        Some(s) => center_from(parse_complex_list(s)?, args.tol)?,
        None if args.auto_center => spectrum_center(&x, args.form, args.tol)?,
        None => return Err(CliError::Input("--lambda is required unless --auto-center is given".into())),
    };
    if base.n() != x.n() {
        return Err(CliError::Input(format!("center has {} entries, matrix is {}×{}", base.n(), x.n(), x.n())));
    }
    let (point, center, atlas_info) = if args.auto_center {
        let centers = atlas(&base, args.form)?;
        let found = centers.iter().enumerate().find_map(|(i, ce)| forward(&x, ce, args.form).ok().map(|p| (i, p)));
        match found {
            Some((i, p)) => {
                let info = object([("index", Value::from(i)), ("size", Value::from(centers.len()))]);
                (p, centers[i].clone(), Some(info))
            }
            None => return Err(CliError::Failure(format!("no chart among {} atlas centers contains the input", centers.len()))),
        }
    } else {
        (forward(&x, &base, args.form).map_err(CliError::compute)?, base, None)
    };
    let mut doc = object([
        ("form", Value::from(args.form.name())),
        ("lambda", complex_list(center.lambda())),
    ]);
    let map = doc.as_object_mut().expect("object");
    match point {
        Point::Complex(p) => {
            map.insert("y".into(), matrix(&p.y));
            map.insert("z".into(), matrix(&p.z));
        }
        Point::Slh(p) => {
            map.insert("y".into(), matrix(&p.y));
            map.insert("z".into(), matrix(&p.z));
            map.insert("z_im".into(), complex_list(&p.z_im));
        }
    }
    if let Some(info) = atlas_info {
        map.insert("atlas".into(), info);
    }
    emit_json(&doc, args.out)?;
    Ok(true)
}

fn field<'v>(doc: &'v Value, key: &str) -> Result<&'v Value, CliError> {
    doc.get(key).ok_or_else(|| CliError::Input(format!("chart document lacks '{key}'")))
}

fn from(args: &Args) -> Result<bool, CliError> {
    let doc = read_json(args.input)?;
    let lambda = match args.lambda {
        Some(s) => parse_complex_list(s)?,
        None => complex_list_from_value(field(&doc, "lambda")?)?,
    };
    let center = center_from(lambda, args.tol)?;
    let y = matrix_from_value(field(&doc, "y")?)?;
    let z = matrix_from_value(field(&doc, "z")?)?;
    let x = match args.form {
        ChartForm::Complex => {
            let pt = ChartPoint::new(y, z, center).map_err(CliError::input)?;
            chart_inverse(&pt)
        }
        ChartForm::Slh => {
            let z_im = complex_list_from_value(field(&doc, "z_im")?)?;
            slh_chart_inverse(&RealChartPoint { y, z, z_im, center })
        }
    }
    .map_err(CliError::compute)?;
    emit_json(&matrix(&x), args.out)?;
    Ok(true)
}

pub fn run(args: Args) -> Result<bool, CliError> {
    match args.direction {
        Direction::To => to(&args),
        Direction::From => from(&args),
    }
}
