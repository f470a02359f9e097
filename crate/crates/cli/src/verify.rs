//! Seeded verification suites. Trials run in parallel; every aggregate is a max or a
//! count, so the report is identical to a serial run.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;
use toda_core::charts::{atlas_centers, chart_forward, chart_inverse, chart_inverse_parts, find_chart};
use toda_core::eigen::{eigenvalues, hausdorff};
use toda_core::expm::matexp;
use toda_core::factor::{gram_schmidt_qr, in_cell_c, in_cell_d, kappa, ldu, nu, ql_kla};
use toda_core::flow::{compare_methods, integrate_rk, spectrum_drift, symes_flow, uniform_grid, RK_ATOL, RK_RTOL, SO5_ATOL, SO5_RTOL};
use toda_core::iwasawa::so5_center_matrix;
use toda_core::matrix::c;
use toda_core::realforms::{
    random_slh_center, random_slh_chart_point, slh_chart_flow, slh_chart_forward, slh_chart_inverse, tangency_check,
};
use toda_core::sample::{
    complex_normal, random_center, random_chart_point, random_matrix, random_orbit_point, random_real_spectrum,
    random_traceless, random_unit_lower, rng_for, TodaRng,
};
use toda_core::{AlgebraKind, CMatrix, ChartCenter, ChartPoint, Form, HierarchyPoly, IwasawaContext, RealFormTag, Tolerance, C64};

use crate::doc::emit;
use crate::error::CliError;

/// Threshold for the cross-method and diagonal-law checks.
pub const DEFAULT_THRESHOLD: f64 = 1e-7;

/// Threshold marking a check whose residual is a count that must be zero.
const COUNT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Core,
    Charts,
    Flow,
    Realforms,
    So5,
    All,
}

pub struct Args<'a> {
    pub suite: Suite,
    pub seed: u64,
    pub dims: (usize, usize),
    pub trials: usize,
    pub poly: HierarchyPoly,
    pub threshold: f64,
    pub out: Option<&'a Path>,
}

/// `lo..hi` (inclusive) or a single dimension.
pub fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("bad dimension range '{s}', expected e.g. 2..4"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if !(2..=8).contains(&lo) || !(lo..=8).contains(&hi) {
        return Err(CliError::Input(format!("dimension range '{s}' must lie within 2..8")));
    }
    Ok((lo, hi))
}

struct Check {
    name: String,
    worst: f64,
    threshold: f64,
    failures: usize,
    runs: usize,
    first_error: Option<String>,
}

impl Check {
    fn pass(&self) -> bool {
        self.failures == 0 && self.worst < self.threshold
    }
}

type Trial = Result<Vec<f64>, String>;

struct Runner {
    seed: u64,
    next_stream: u64,
    checks: Vec<Check>,
}

impl Runner {
    /// Runs `f` on every `(n, trial)` job and records one check per named component.
    ///
    /// A non-finite component counts as a failure.
    fn run<F>(&mut self, names: &[(&str, f64)], jobs: &[(usize, usize)], f: F)
    where
        F: Fn(&mut TodaRng, usize) -> Trial + Sync,
    {
        let stream = self.next_stream;
        self.next_stream += 1;
        let seed = self.seed;
        let results: Vec<Trial> = jobs
            .par_iter()
            .map(|&(n, i)| {
                let mut rng = rng_for(seed, stream << 40 | (n as u64) << 32 | i as u64);
                f(&mut rng, n)
            })
            .collect();
        for (k, &(name, threshold)) in names.iter().enumerate() {
            let mut check = Check { name: name.to_string(), worst: 0.0, threshold, failures: 0, runs: jobs.len(), first_error: None };
            for r in &results {
                match r {
                    Ok(v) if v[k].is_finite() => check.worst = check.worst.max(v[k]),
                    Ok(_) => {
                        check.failures += 1;
                        check.first_error.get_or_insert_with(|| "non-finite residual".into());
                    }
                    Err(e) => {
                        check.failures += 1;
                        check.first_error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            self.checks.push(check);
        }
    }
}

fn jobs(dims: impl IntoIterator<Item = usize>, trials: usize) -> Vec<(usize, usize)> {
    dims.into_iter().flat_map(|n| (0..trials).map(move |i| (n, i))).collect()
}

fn err(e: toda_core::TodaError) -> String {
    e.name()
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn rel_dist(a: &CMatrix, b: &CMatrix) -> f64 {
    a.dist(b) / b.frobenius().max(1.0)
}

fn core(r: &mut Runner, a: &Args) {
    let js = jobs(a.dims.0..=a.dims.1, a.trials);
    r.run(&[("core/qr: g = k u with k unitary, u in U", 1e-12)], &js, |rng, n| {
        let g = random_matrix(rng, n, 1.0);
        let fp = gram_schmidt_qr(&g).map_err(err)?;
        if !fp.roles_hold(&tol()) {
            return Err("factor roles violated".into());
        }
        Ok(vec![rel_dist(&fp.product(), &g).max(fp.factors[0].unitarity_residual())])
    });
    r.run(&[("core/kla: g = k l a with k unitary, l unit lower, a positive", 1e-12)], &js, |rng, n| {
        let g = random_matrix(rng, n, 1.0);
        let ft = ql_kla(&g).map_err(err)?;
        if !ft.roles_hold(&tol()) {
            return Err("factor roles violated".into());
        }
        Ok(vec![rel_dist(&ft.product(), &g).max(ft.factors[0].unitarity_residual())])
    });
    r.run(&[("core/ldu: g = l d u", 1e-10)], &js, |rng, n| {
        let g = random_matrix(rng, n, 1.0);
        let ft = ldu(&g, &tol()).map_err(err)?;
        Ok(vec![rel_dist(&ft.product(), &g)])
    });
    r.run(&[("core/cells: κ(L) in C and ν(L) in D", COUNT)], &js, |rng, n| {
        let l = random_unit_lower(rng, n, 1.0);
        let k = kappa(&l).map_err(err)?;
        let u = nu(&l).map_err(err)?;
        let misses = !in_cell_c(&k, &tol()) as u8 + !in_cell_d(&u, &tol()).map_err(err)? as u8;
        Ok(vec![misses as f64])
    });
    r.run(
        &[("core/projectors: π_k + π_u = 1 and π_k idempotent", 1e-12), ("core/field: tr(X^j F) = 0, tr F = 0", 1e-12)],
        &js,
        |rng, n| {
            let ctx = IwasawaContext::sl_complex(n);
            let x = random_traceless(rng, n, 1.0);
            let pk = ctx.project_k(&x).map_err(err)?;
            let pu = ctx.project_u(&x).map_err(err)?;
            let pkk = ctx.project_k(&pk).map_err(err)?;
            let proj = rel_dist(&(&pk + &pu), &x).max(rel_dist(&pkk, &pk));
            let field = ctx.toda_field(&x, &HierarchyPoly::identity()).map_err(err)?;
            let scale = field.frobenius().max(f64::MIN_POSITIVE);
            let mut worst = field.trace().norm() / scale;
            let mut power = CMatrix::identity(n);
            for _ in 1..n {
                power = &power * &x;
                worst = worst.max((&power * &field).trace().norm() / (scale * power.frobenius().max(1.0)));
            }
            Ok(vec![proj, worst])
        },
    );
}

fn sl2_entries(lam: C64, y: C64, z: C64) -> [C64; 4] {
    let s = (y - z) / (2.0 * lam);
    let r2 = 1.0 + s.norm_sqr();
    let sb = s.conj();
    let m11 = (lam * r2 + sb * z) / r2;
    [m11, -sb * (2.0 * lam + sb * y) / r2, z / r2, -m11]
}

fn charts(r: &mut Runner, a: &Args) {
    let js = jobs(a.dims.0..=a.dims.1, a.trials);
    r.run(
        &[("charts/round trip φ∘φ⁻¹ (max entry error)", 1e-9), ("charts/round trip φ⁻¹∘φ (relative)", 1e-9)],
        &js,
        |rng, n| {
            let ce = random_center(rng, n, tol());
            let pt = random_chart_point(rng, &ce, 1.0);
            let x = chart_inverse(&pt).map_err(err)?;
            let back = chart_forward(&x, &ce).map_err(err)?;
            let x2 = chart_inverse(&back).map_err(err)?;
            Ok(vec![back.max_entry_dist(&pt), rel_dist(&x2, &x)])
        },
    );
    r.run(&[("charts/atlas coverage (uncovered orbit points)", COUNT)], &js, |rng, n| {
        let ce = random_center(rng, n, tol());
        let centers = atlas_centers(&ce, Form::SlComplex).map_err(err)?;
        let x = random_orbit_point(rng, &ce);
        Ok(vec![if find_chart(&x, &centers).is_some() { 0.0 } else { 1.0 }])
    });
    let lams = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
    let vals = [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)];
    let mut entries: f64 = 0.0;
    let mut consistency: f64 = 0.0;
    let mut failures = 0;
    let mut first_error = None;
    for &lam in &lams {
        let ce = ChartCenter::new(vec![lam, -lam], tol()).expect("simple sl_2 center");
        for &y in &vals {
            for &z in &vals {
                let lower = |w: C64| {
                    let mut m = CMatrix::zeros(2);
                    m[(1, 0)] = w;
                    m
                };
                match ChartPoint::new(lower(y), lower(z), ce.clone()).and_then(|p| chart_inverse_parts(&p)) {
                    Ok(parts) => {
                        let want = sl2_entries(lam, y, z);
                        let got = parts.x.row_major();
                        for (g, w) in got.iter().zip(want) {
                            entries = entries.max((g - w).norm() / w.norm().max(1.0));
                        }
                        consistency = consistency.max(parts.consistency);
                    }
                    Err(e) => {
                        failures += 1;
                        first_error.get_or_insert(e.name());
                    }
                }
            }
        }
    }
    let runs = lams.len() * vals.len() * vals.len();
    for (name, worst) in [("charts/sl_2 closed form, all four entries", entries), ("charts/sl_2 k*(Λ+Y)k = u(Λ+Z)u⁻¹", consistency)] {
        r.checks.push(Check { name: name.into(), worst, threshold: 1e-12, failures, runs, first_error: first_error.clone() });
    }
}

fn flow(r: &mut Runner, a: &Args) {
    let js = jobs(a.dims.0..=a.dims.1, a.trials);
    let f = &a.poly;
    r.run(
        &[
            ("flow/three-way agreement on [0, 2] (relative)", a.threshold),
            ("flow/diagonal law of Symes samples", a.threshold),
            ("flow/confinement (boundary hits)", COUNT),
        ],
        &js,
        |rng, n| {
            let ce = random_center(rng, n, tol());
            let x0 = chart_inverse(&random_chart_point(rng, &ce, 1.0)).map_err(err)?;
            let grid = uniform_grid(0.0, 2.0, 41).map_err(err)?;
            let cmp = compare_methods(&IwasawaContext::sl_complex(n), &x0, &ce, f, &grid).map_err(err)?;
            let rep = cmp.report;
            Ok(vec![rep.max_pairwise(), rep.diag_law, rep.boundary_hits as f64])
        },
    );
    r.run(&[("flow/RK isospectrality on [0, 5]", 1e-9)], &js, |rng, n| {
        let ce = random_center(rng, n, tol());
        let x0 = chart_inverse(&random_chart_point(rng, &ce, 1.0)).map_err(err)?;
        let grid = uniform_grid(0.0, 5.0, 101).map_err(err)?;
        let tr = integrate_rk(&IwasawaContext::sl_complex(n), &x0, f, &grid, RK_RTOL, RK_ATOL).map_err(err)?;
        Ok(vec![spectrum_drift(&tr)])
    });
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn realforms(r: &mut Runner, a: &Args) {
    let f = &a.poly;
    let mut tags: Vec<RealFormTag> = (a.dims.0..=a.dims.1).map(RealFormTag::SlR).collect();
    tags.extend((a.dims.0..=a.dims.1).filter(|n| n % 2 == 0).map(RealFormTag::SlH));
    if !tags.iter().any(|t| matches!(t, RealFormTag::SlH(_))) {
        tags.push(RealFormTag::SlH(4));
    }
    tags.push(RealFormTag::su_pq_conj(2, 1).expect("valid signature"));
    let js = jobs(0..tags.len(), a.trials);
    r.run(
        &[("realforms/flow invariance (out-of-form residual)", 1e-9), ("realforms/field tangent to the form", COUNT)],
        &js,
        |rng, i| {
            let tag = &tags[i];
            let ctx = IwasawaContext::sl_complex(tag.n());
            let x0 = tag.random_member(rng, 0.7);
            let tangent = tangency_check(tag, &x0, f, &tol()).map_err(err)?;
            let grid = uniform_grid(0.0, 2.0, 21).map_err(err)?;
            let tr = integrate_rk(&ctx, &x0, f, &grid, RK_RTOL, RK_ATOL).map_err(err)?;
            let worst = max_of(tr.samples.iter().map(|x| tag.form_residual(x).unwrap_or(f64::NAN)));
            Ok(vec![worst, if tangent { 0.0 } else { 1.0 }])
        },
    );
    let js = jobs(a.dims.0..=a.dims.1, a.trials);
    r.run(&[("realforms/sl_R with real center: Y constant", 1e-9)], &js, |rng, n| {
        let ce = ChartCenter::new(random_real_spectrum(rng, n, 1.0, 0.3), tol()).map_err(err)?;
        let mut real_lower = || random_matrix(rng, n, 1.0).map(|z| c(z.re, 0.0)).strictly_lower();
        let y0 = real_lower();
        let z0 = real_lower();
        let x0 = chart_inverse(&ChartPoint::new(y0.clone(), z0, ce.clone()).map_err(err)?).map_err(err)?;
        let mut worst: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            let p = symes_flow(&x0, f, t, None).and_then(|xt| chart_forward(&xt, &ce)).map_err(err)?;
            worst = worst.max(p.y.dist(&y0));
        }
        Ok(vec![worst])
    });
    let js = jobs([4], a.trials);
    r.run(
        &[
            ("realforms/sl_H round trip", 1e-9),
            ("realforms/sl_H Z_Im constant", 1e-8),
            ("realforms/sl_H entry rates", 1e-7),
        ],
        &js,
        |rng, n| {
            let ce = random_slh_center(rng, n / 2, 0.3, tol());
            let p0 = random_slh_chart_point(rng, &ce, 0.7);
            let x0 = slh_chart_inverse(&p0).map_err(err)?;
            let round = slh_chart_forward(&x0, &ce).map_err(err)?.max_entry_dist(&p0);
            let (mut zim, mut law) = (0.0f64, 0.0f64);
            for t in [0.5, 1.0, 2.0] {
                let got = symes_flow(&x0, f, t, None).and_then(|xt| slh_chart_forward(&xt, &ce)).map_err(err)?;
                let want = slh_chart_flow(&p0, f, t).map_err(err)?;
                zim = zim.max(max_of(got.z_im.iter().zip(&p0.z_im).map(|(a, b)| (a - b).norm())));
                law = law.max(got.max_entry_dist(&want));
            }
            Ok(vec![round, zim, law])
        },
    );
}

fn so5(r: &mut Runner, a: &Args) {
    let f = &a.poly;
    let js = jobs([5], a.trials);
    r.run(
        &[
            ("so5/projectors: π_k + π_u = 1 and π_k idempotent", 1e-12),
            ("so5/field tangent: |F + Fᵀ| / |F|", 1e-12),
            ("so5/skew-symmetry along the flow", 1e-9),
            ("so5/spectrum {±λ1, ±λ2, 0} conserved", 1e-9),
        ],
        &js,
        |rng, _| {
            let ctx = IwasawaContext::new(AlgebraKind::SoC5, tol()).map_err(err)?;
            let (l1, l2) = (complex_normal(rng, 1.0), complex_normal(rng, 1.0));
            let g = random_matrix(rng, 5, COUNT);
            let g = matexp(&(&g - &g.transpose()), 1.0, None).map_err(err)?;
            let x0 = &(&g * &so5_center_matrix(l1, l2)) * &g.transpose();
            let pk = ctx.project_k(&x0).map_err(err)?;
            let pu = ctx.project_u(&x0).map_err(err)?;
            let proj = rel_dist(&(&pk + &pu), &x0).max(rel_dist(&ctx.project_k(&pk).map_err(err)?, &pk));
            let field = ctx.toda_field(&x0, f).map_err(err)?;
            let tangent = (&field + &field.transpose()).frobenius() / field.frobenius().max(f64::MIN_POSITIVE);
            let grid = uniform_grid(0.0, 2.0, 41).map_err(err)?;
            let tr = integrate_rk(&ctx, &x0, f, &grid, SO5_RTOL, SO5_ATOL).map_err(err)?;
            let want = [l1, -l1, l2, -l2, c(0.0, 0.0)];
            let skew = max_of(tr.samples.iter().map(|x| (x + &x.transpose()).max_abs()));
            let spec = max_of(
                tr.samples.iter().map(|x| eigenvalues(x).map(|e| hausdorff(&e, &want)).unwrap_or(f64::NAN)),
            );
            Ok(vec![proj, tangent, skew, spec])
        },
    );
}

fn report(checks: &[Check]) -> String {
    let mut s = String::new();
    for ch in checks {
        let verdict = if ch.pass() { "PASS" } else { "FAIL" };
        let bound = if ch.threshold == COUNT {
            format!("{:.0} (must be 0)", ch.worst)
        } else {
            format!("{:.3e} (< {:.0e})", ch.worst, ch.threshold)
        };
        let _ = write!(s, "{verdict} {}: worst {bound}, {} runs, {} failures", ch.name, ch.runs, ch.failures);
        if let Some(e) = &ch.first_error {
            let _ = write!(s, ", first error {e}");
        }
        s.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.pass()).count();
    let _ = writeln!(s, "{} checks, {} failed", checks.len(), failed);
    s
}

pub fn run(a: Args) -> Result<bool, CliError> {
    if a.trials == 0 {
        return Err(CliError::Input("--trials must be positive".into()));
    }
    let mut r = Runner { seed: a.seed, next_stream: 0, checks: Vec::new() };
    let all = a.suite == Suite::All;
    if all || a.suite == Suite::Core {
        core(&mut r, &a);
    }
    if all || a.suite == Suite::Charts {
        charts(&mut r, &a);
    }
    if all || a.suite == Suite::Flow {
        flow(&mut r, &a);
    }
    if all || a.suite == Suite::Realforms {
        realforms(&mut r, &a);
    }
    if all || a.suite == Suite::So5 {
        so5(&mut r, &a);
    }
    let text = report(&r.checks);
    print!("{text}");
    if let Some(p) = a.out {
        emit(&text, Some(p))?;
    }
    Ok(r.checks.iter().all(Check::pass))
}
