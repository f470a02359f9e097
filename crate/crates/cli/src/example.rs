use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use toda_core::charts::chart_inverse_parts;
use toda_core::eigen::{eigenvalues, hausdorff};
use toda_core::expm::matexp;
use toda_core::flow::{integrate_rk, symes_flow, uniform_grid, SO5_ATOL, SO5_RTOL};
use toda_core::iwasawa::so5_center_matrix;
use toda_core::matrix::c;
use toda_core::sample::{complex_normal, random_matrix, rng_for};
use toda_core::{AlgebraKind, CMatrix, ChartCenter, ChartPoint, HierarchyPoly, IwasawaContext, Tolerance, C64};

use crate::doc::{emit, parse_complex_list, trajectory_csv};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Name {
    Sl2,
    So5,
}

pub struct Args<'a> {
    pub name: Name,
    pub lambda: Option<&'a str>,
    pub seed: u64,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub tol: Tolerance,
    pub out: Option<&'a Path>,
}

fn lower(w: C64) -> CMatrix {
    let mut m = CMatrix::zeros(2);
    m[(1, 0)] = w;
    m
}

/// The sl_2 chart in closed form: with `s = (y − z)/2λ`, `r² = 1 + |s|²`,
/// `X = [[λ + s̄z/r², −s̄(2λ + s̄y)/r²], [z/r², −λ − s̄z/r²]]`.
fn sl2(args: &Args) -> Result<bool, CliError> {
    let lam = match args.lambda {
        None => c(1.0, 0.0),
        Some(s) => match parse_complex_list(s)?.as_slice() {
            [l] | [l, _] => *l,
            _ => return Err(CliError::Input("sl2 takes --lambda λ (the center is diag(λ, −λ))".into())),
        },
    };
    let ce = ChartCenter::new(vec![lam, -lam], args.tol).map_err(CliError::input)?;
    let vals = [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)];
    let rel = |a: C64, b: C64| (a - b).norm() / b.norm().max(1.0);
    let mut text = String::new();
    let _ = writeln!(text, "sl_2 chart at λ = {lam}");
    let _ = writeln!(text, "{:>8} {:>8}  {:>22} {:>22} {:>10}", "y", "z", "x_12", "x_21", "max err");
    let (mut entries, mut flow) = (0.0f64, 0.0f64);
    let f = HierarchyPoly::identity();
    for &y in &vals {
        for &z in &vals {
            let pt = ChartPoint::new(lower(y), lower(z), ce.clone()).map_err(CliError::input)?;
            let x = chart_inverse_parts(&pt).map_err(CliError::compute)?.x;
            let s = (y - z) / (2.0 * lam);
            let r2 = 1.0 + s.norm_sqr();
            let sb = s.conj();
            let want = [lam + sb * z / r2, -sb * (2.0 * lam + sb * y) / r2, z / r2, -lam - sb * z / r2];
            let err = x.row_major().iter().zip(want).map(|(g, w)| rel(*g, w)).fold(0.0, f64::max);
            entries = entries.max(err);
            let _ = writeln!(
                text,
                "{:>8} {:>8}  {:>22} {:>22} {:>10.2e}",
                format!("{y}"),
                format!("{z}"),
                format!("{:.6}", x[(0, 1)]),
                format!("{:.6}", x[(1, 0)]),
                err
            );
            // Along the flow the (2,1) entry is z(t)/r(t)² with z(t) = e^{−2 Re λ t} z, y(t) = e^{2i Im λ t} y.
            let t = args.t1 - args.t0;
            let xt = symes_flow(&x, &f, t, None).map_err(CliError::compute)?;
            let (yt, zt) = (y * (c(0.0, 2.0 * lam.im * t)).exp(), z * (-2.0 * lam.re * t).exp());
            let st = (yt - zt) / (2.0 * lam);
            flow = flow.max(rel(xt[(1, 0)], zt / (1.0 + st.norm_sqr())));
        }
    }
    let pass = entries < 1e-12 && flow < 1e-10;
    let _ = writeln!(text, "max entry error {entries:.3e} (< 1e-12)");
    let _ = writeln!(text, "(2,1) entry after flowing by {}: max error {flow:.3e} (< 1e-10)", args.t1 - args.t0);
    let _ = writeln!(text, "{}", if pass { "PASS" } else { "FAIL" });
    emit(&text, args.out)?;
    Ok(pass)
}

fn so5(args: &Args) -> Result<bool, CliError> {
    if args.steps == 0 {
        return Err(CliError::Input("--steps must be positive".into()));
    }
    let mut rng = rng_for(args.seed, 0);
    let (l1, l2) = match args.lambda {
        None => (complex_normal(&mut rng, 1.0), complex_normal(&mut rng, 1.0)),
        Some(s) => match parse_complex_list(s)?.as_slice() {
            [a, b] => (*a, *b),
            _ => return Err(CliError::Input("so5 takes --lambda λ1,λ2".into())),
        },
    };
    let a = random_matrix(&mut rng, 5, 0.5);
    let g = matexp(&(&a - &a.transpose()), 1.0, None).map_err(CliError::compute)?;
    let x0 = &(&g * &so5_center_matrix(l1, l2)) * &g.transpose();
    let ctx = IwasawaContext::new(AlgebraKind::SoC5, args.tol).map_err(CliError::input)?;
    let f = HierarchyPoly::identity();
    let grid = uniform_grid(args.t0, args.t1, args.steps + 1).map_err(CliError::input)?;
    let tr = integrate_rk(&ctx, &x0, &f, &grid, SO5_RTOL, SO5_ATOL).map_err(CliError::compute)?;
    let want = [l1, -l1, l2, -l2, c(0.0, 0.0)];
    let skew = tr.samples.iter().map(|x| (x + &x.transpose()).max_abs()).fold(0.0, f64::max);
    let mut spec: f64 = 0.0;
    for x in &tr.samples {
        spec = spec.max(hausdorff(&eigenvalues(x).map_err(CliError::compute)?, &want));
    }
    let pass = skew < 1e-9 && spec < 1e-9;
    if let Some(p) = args.out {
        emit(&trajectory_csv(&tr, &f, None, &[("rtol", SO5_RTOL), ("atol", SO5_ATOL)]), Some(p))?;
    }
    println!("so_C(5) flow from g·Λ·gᵀ, λ1 = {l1:.6}, λ2 = {l2:.6}, t in [{}, {}]", args.t0, args.t1);
    println!("max |X + Xᵀ| {skew:.3e} (< 1e-9)");
    println!("max distance of the spectrum from {{±λ1, ±λ2, 0}} {spec:.3e} (< 1e-9)");
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

pub fn run(args: Args) -> Result<bool, CliError> {
    match args.name {
        Name::Sl2 => sl2(&args),
        Name::So5 => so5(&args),
    }
}
