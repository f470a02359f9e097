//! Three propagators for `X' = [X, π_k f(X)]` and their cross-comparison.

use std::fmt;

use crate::charts::{chart_forward, chart_inverse, ChartCenter, ChartPoint};
use crate::eigen::{eig_ordered, eigenvalues, hausdorff};
use crate::error::{Result, TodaError};
use crate::expm::matexp;
use crate::factor::gram_schmidt_qr;
use crate::iwasawa::{HierarchyPoly, IwasawaContext};
use crate::matrix::{CMatrix, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rk,
    Symes,
    Chart,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk => "rk",
            Method::Symes => "symes",
            Method::Chart => "chart",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<CMatrix>,
    pub method: Method,
    /// Hausdorff distance from each sample's spectrum to the initial spectrum.
    pub drift: Vec<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, samples: Vec<CMatrix>, method: Method) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(TodaError::DimensionMismatch { expected: times.len(), actual: samples.len() });
        }
        let drift = match samples.first() {
            None => Vec::new(),
            Some(first) => {
                let base = eigenvalues(first)?;
                samples
                    .iter()
                    .map(|s| eigenvalues(s).map(|e| hausdorff(&e, &base)).unwrap_or(f64::INFINITY))
                    .collect()
            }
        };
        Ok(Trajectory { times, samples, method, drift })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Largest spectrum drift over the trajectory.
pub fn spectrum_drift(traj: &Trajectory) -> f64 {
    traj.drift.iter().copied().fold(0.0, f64::max)
}

/// `samples` equally spaced times from `t0` to `t1` inclusive.
pub fn uniform_grid(t0: f64, t1: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(TodaError::InvalidInput(format!("grid [{t0}, {t1}] with {samples} samples")));
    }
    let h = (t1 - t0) / (samples - 1) as f64;
    Ok((0..samples).map(|k| if k + 1 == samples { t1 } else { t0 + h * k as f64 }).collect())
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(TodaError::InvalidInput("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

pub const RK_RTOL: f64 = 1e-10;
pub const RK_ATOL: f64 = 1e-12;
/// Tolerances for the so_C(5) example, whose spectrum check is absolute and whose
/// orbit points reach norms near 10.
pub const SO5_RTOL: f64 = 1e-11;
pub const SO5_ATOL: f64 = 1e-13;
const RK_MAX_STEPS: usize = 2_000_000;

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output weights (Hairer & Wanner's continuous extension).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Linear combination `y + h Σ a_i k_i` on flat complex state vectors.
fn axpy(y: &[C64], h: f64, terms: &[(f64, &[C64])]) -> Vec<C64> {
    let mut out = y.to_vec();
    for (a, k) in terms {
        if *a == 0.0 {
            continue;
        }
        let s = h * a;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += *v * s;
        }
    }
    out
}

/// Adaptive Dormand–Prince 5(4) integration of an autonomous complex ODE, sampled at `t_grid`
/// by the continuous extension. `y0` is the state at `t_grid[0]`.
pub fn dopri5<F>(mut rhs: F, y0: &[C64], t_grid: &[f64], rtol: f64, atol: f64) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(&[C64]) -> Vec<C64>,
{
    check_grid(t_grid)?;
    if !(rtol > 0.0 && atol >= 0.0) {
        return Err(TodaError::InvalidInput(format!("rtol = {rtol}, atol = {atol}")));
    }
    let dim = y0.len();
    let t_end = *t_grid.last().unwrap();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y0.to_vec());
    let mut next = 1;
    let mut t = t_grid[0];
    let mut y = y0.to_vec();
    let mut k1 = rhs(&y);
    if next == t_grid.len() {
        return Ok(out);
    }

    let weighted_norm = |v: &[C64], y: &[C64]| -> f64 {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let sc = atol + rtol * b.norm();
                (a.norm() / sc).powi(2)
            })
            .sum();
        (s / dim.max(1) as f64).sqrt()
    };
    // Initial step, following Hairer–Nørsett–Wanner.
    let span = t_end - t;
    let d0 = weighted_norm(&y, &y);
    let d1 = weighted_norm(&k1, &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span);
    let y1 = axpy(&y, h, &[(1.0, &k1)]);
    let f1 = rhs(&y1);
    let diff: Vec<C64> = f1.iter().zip(&k1).map(|(a, b)| a - b).collect();
    let d2 = weighted_norm(&diff, &y) / h;
    let h1 = if d1.max(d2) <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    h = (100.0 * h).min(h1).min(span);

    let mut steps = 0usize;
    let mut reject_streak = false;
    while next < t_grid.len() {
        steps += 1;
        if steps > RK_MAX_STEPS {
            return Err(TodaError::StepFailure { t, h });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(TodaError::StepFailure { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = rhs(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(&axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(&y_new);
        let err_vec = axpy(
            &vec![C64::new(0.0, 0.0); dim],
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = {
            let s: f64 = err_vec
                .iter()
                .zip(y.iter().zip(&y_new))
                .map(|(e, (a, b))| {
                    let sc = atol + rtol * a.norm().max(b.norm());
                    (e.norm() / sc).powi(2)
                })
                .sum();
            (s / dim.max(1) as f64).sqrt()
        };
        if !err.is_finite() {
            h *= 0.2;
            reject_streak = true;
            continue;
        }
        if err <= 1.0 {
            let t_new = t + h;
            let ydiff: Vec<C64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
            let bspl: Vec<C64> = k1.iter().zip(&ydiff).map(|(k, d)| *k * h - d).collect();
            let r4: Vec<C64> =
                ydiff.iter().zip(k7.iter().zip(&bspl)).map(|(d, (k, b))| d - *k * h - b).collect();
            let r5 = axpy(
                &vec![C64::new(0.0, 0.0); dim],
                h,
                &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
            );
            while next < t_grid.len() && t_grid[next] <= t_new {
                let th = if next + 1 == t_grid.len() && t_grid[next] == t_end && t_new == t_end {
                    1.0
                } else {
                    (t_grid[next] - t) / h
                };
                let th1 = 1.0 - th;
                let v: Vec<C64> = (0..dim)
                    .map(|i| y[i] + (ydiff[i] + (bspl[i] + (r4[i] + r5[i] * th1) * th) * th1) * th)
                    .collect();
                out.push(if th == 1.0 { y_new.clone() } else { v });
                next += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if reject_streak {
                fac = fac.min(1.0);
            }
            reject_streak = false;
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            reject_streak = true;
        }
    }
    Ok(out)
}

fn flatten(x: &CMatrix) -> Vec<C64> {
    x.row_major()
}

fn unflatten(n: usize, v: &[C64]) -> CMatrix {
    CMatrix::from_fn(n, |i, j| v[i * n + j])
}

/// Dormand–Prince integration of the Lax equation, sampled at `t_grid` (`X0` at `t_grid[0]`).
pub fn integrate_rk(
    ctx: &IwasawaContext,
    x0: &CMatrix,
    f: &HierarchyPoly,
    t_grid: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Trajectory> {
    ctx.toda_field(x0, f)?;
    let n = x0.n();
    let rhs = |v: &[C64]| flatten(&ctx.field_raw(&unflatten(n, v), f));
    let states = dopri5(rhs, &flatten(x0), t_grid, rtol, atol)?;
    let samples = states.iter().map(|s| unflatten(n, s)).collect();
    Trajectory::new(t_grid.to_vec(), samples, Method::Rk)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymesOptions {
    /// Bound on `|Δ|·max|Re(f(λ_i) − f(λ_j))|` (and on `|Δ|·‖f(X)‖_F`) per increment.
    pub max_spread: f64,
    /// Largest allowed relative disagreement between the `κ` and `ν` sides.
    pub consistency: f64,
}

impl Default for SymesOptions {
    fn default() -> Self {
        SymesOptions { max_spread: 8.0, consistency: 1e-6 }
    }
}

fn symes_increment(x: &CMatrix, f: &HierarchyPoly, dt: f64, center: Option<&ChartCenter>, opts: &SymesOptions) -> Result<CMatrix> {
    let fx = f.eval_matrix(x);
    let e = match center.map(|ce| eig_ordered(x, ce).map(|v| (ce, v))) {
        Some(Ok((ce, v))) => {
            let d: Vec<C64> = ce.lambda().iter().map(|l| (f.eval(*l) * dt).exp()).collect();
            &(&v * &CMatrix::from_diagonal(&d)) * &v.inverse()?
        }
        _ => matexp(&fx, dt, None)?,
    };
    let (k, u) = gram_schmidt_qr(&e)?.into_parts();
    let x_k = &(&k.adjoint() * x) * &k;
    let x_u = &(&u * x) * &u.inverse_upper()?;
    let discrepancy = x_k.dist(&x_u) / x_k.frobenius().max(1.0);
    if !(discrepancy <= opts.consistency) {
        return Err(TodaError::ConditioningExceeded { discrepancy });
    }
    Ok(x_k)
}

/// Number of increments needed to propagate `X` by `t`.
fn symes_increments(x: &CMatrix, f: &HierarchyPoly, t: f64, center: Option<&ChartCenter>, opts: &SymesOptions) -> Result<usize> {
    let spectrum = match center {
        Some(ce) => ce.lambda().to_vec(),
        None => eigenvalues(x)?,
    };
    let fl: Vec<f64> = spectrum.iter().map(|l| f.eval(*l).re).collect();
    let spread = fl.iter().copied().fold(f64::NEG_INFINITY, f64::max) - fl.iter().copied().fold(f64::INFINITY, f64::min);
    let rate = spread.max(f.eval_matrix(x).frobenius());
    let m = (t.abs() * rate / opts.max_spread).ceil();
    if !m.is_finite() {
        return Err(TodaError::InvalidInput(format!("cannot propagate by t = {t}")));
    }
    Ok((m as usize).max(1))
}

/// Symes' propagator `X(t) = κ(E)⁻¹ X0 κ(E)`, `E = exp(t f(X0))`, composed over
/// increments for long times. The `ν` side `ν(E) X0 ν(E)⁻¹` is checked against it.
pub fn symes_flow_with(x0: &CMatrix, f: &HierarchyPoly, t: f64, center: Option<&ChartCenter>, opts: &SymesOptions) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(TodaError::InvalidInput(format!("t = {t}")));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let m = symes_increments(x0, f, t, center, opts)?;
    let dt = t / m as f64;
    let mut x = x0.clone();
    for _ in 0..m {
        x = symes_increment(&x, f, dt, center, opts)?;
    }
    Ok(x)
}

pub fn symes_flow(x0: &CMatrix, f: &HierarchyPoly, t: f64, center: Option<&ChartCenter>) -> Result<CMatrix> {
    symes_flow_with(x0, f, t, center, &SymesOptions::default())
}

/// Symes samples on a grid, each propagated from the previous sample.
pub fn symes_trajectory(
    x0: &CMatrix,
    f: &HierarchyPoly,
    t_grid: &[f64],
    center: Option<&ChartCenter>,
    opts: &SymesOptions,
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    let mut samples = Vec::with_capacity(t_grid.len());
    samples.push(x0.clone());
    for w in t_grid.windows(2) {
        let prev = samples.last().unwrap();
        samples.push(symes_flow_with(prev, f, w[1] - w[0], center, opts)?);
    }
    Trajectory::new(t_grid.to_vec(), samples, Method::Symes)
}

/// Entrywise exponential law: `Y_jk ↦ e^{i t Im(f(λ_k) − f(λ_j))} Y_jk`, `Z_lm ↦ e^{t Re(f(λ_l) − f(λ_m))} Z_lm`.
pub fn chart_flow(pt: &ChartPoint, f: &HierarchyPoly, t: f64) -> ChartPoint {
    let n = pt.center.n();
    let fl: Vec<C64> = pt.center.lambda().iter().map(|l| f.eval(*l)).collect();
    let mut y = pt.y.clone();
    let mut z = pt.z.clone();
    for j in 0..n {
        for k in 0..j {
            y[(j, k)] *= (I * (t * (fl[k] - fl[j]).im)).exp();
            z[(j, k)] *= (t * (fl[j] - fl[k]).re).exp();
        }
    }
    ChartPoint { y, z, center: pt.center.clone() }
}

/// Chart route: forward once, flow the coordinates, invert at every sample.
pub fn chart_trajectory(x0: &CMatrix, center: &ChartCenter, f: &HierarchyPoly, t_grid: &[f64]) -> Result<Trajectory> {
    check_grid(t_grid)?;
    let pt = chart_forward(x0, center)?;
    let t0 = t_grid[0];
    let samples = t_grid
        .iter()
        .map(|&t| if t == t0 { Ok(x0.clone()) } else { chart_inverse(&chart_flow(&pt, f, t - t0)) })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(t_grid.to_vec(), samples, Method::Chart)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Max over samples of `‖X_a(t) − X_b(t)‖_F / ‖X0‖_F` for each pair.
    pub rk_symes: f64,
    pub rk_chart: f64,
    pub symes_chart: f64,
    pub drift_rk: f64,
    pub drift_symes: f64,
    pub drift_chart: f64,
    /// Samples (RK or Symes) whose chart coordinates could not be computed.
    pub boundary_hits: usize,
    /// Max over Symes samples and entries of `|coordinate − exponential law| / max(1, |law|)`.
    pub diag_law: f64,
    pub samples: usize,
}

impl ComparisonReport {
    pub fn max_pairwise(&self) -> f64 {
        self.rk_symes.max(self.rk_chart).max(self.symes_chart)
    }

    pub fn max_drift(&self) -> f64 {
        self.drift_rk.max(self.drift_symes).max(self.drift_chart)
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub rk: Trajectory,
    pub symes: Trajectory,
    pub chart: Trajectory,
}

fn max_rel_distance(a: &Trajectory, b: &Trajectory, scale: f64) -> f64 {
    a.samples.iter().zip(&b.samples).map(|(x, y)| x.dist(y) / scale).fold(0.0, f64::max)
}

/// Relative coordinate error against the exponential law, entrywise.
pub fn chart_law_residual(got: &ChartPoint, want: &ChartPoint) -> f64 {
    let n = want.center.n();
    let mut r: f64 = 0.0;
    for j in 0..n {
        for k in 0..j {
            for (g, w) in [(got.y[(j, k)], want.y[(j, k)]), (got.z[(j, k)], want.z[(j, k)])] {
                r = r.max((g - w).norm() / w.norm().max(1.0));
            }
        }
    }
    r
}

/// Runs all three propagators on `t_grid` and cross-checks them.
pub fn compare_methods(
    ctx: &IwasawaContext,
    x0: &CMatrix,
    center: &ChartCenter,
    f: &HierarchyPoly,
    t_grid: &[f64],
) -> Result<Comparison> {
    let rk = integrate_rk(ctx, x0, f, t_grid, RK_RTOL, RK_ATOL)?;
    let symes = symes_trajectory(x0, f, t_grid, None, &SymesOptions::default())?;
    let chart = chart_trajectory(x0, center, f, t_grid)?;
    let scale = x0.frobenius().max(f64::MIN_POSITIVE);
    let pt0 = chart_forward(x0, center)?;
    let t0 = t_grid[0];
    let mut boundary_hits = 0;
    let mut diag_law: f64 = 0.0;
    for (k, &t) in t_grid.iter().enumerate() {
        let want = chart_flow(&pt0, f, t - t0);
        match chart_forward(&symes.samples[k], center) {
            Ok(got) => diag_law = diag_law.max(chart_law_residual(&got, &want)),
            Err(_) => boundary_hits += 1,
        }
        if chart_forward(&rk.samples[k], center).is_err() {
            boundary_hits += 1;
        }
    }
    let report = ComparisonReport {
        rk_symes: max_rel_distance(&rk, &symes, scale),
        rk_chart: max_rel_distance(&rk, &chart, scale),
        symes_chart: max_rel_distance(&symes, &chart, scale),
        drift_rk: spectrum_drift(&rk),
        drift_symes: spectrum_drift(&symes),
        drift_chart: spectrum_drift(&chart),
        boundary_hits,
        diag_law,
        samples: t_grid.len(),
    };
    Ok(Comparison { report, rk, symes, chart })
}
