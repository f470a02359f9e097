//! Real forms of `sl_n(C)`: `sl_n(R)`, `sl_m(H)` and `c·su(p,q)·c⁻¹`.
//!
//! Membership and Toda tangency for all three; the induced `(Y, Z, Z_Im)` chart
//! and its rate table for `sl_m(H)`.

use itertools::Itertools;

use crate::charts::{atlas_centers, chart_forward, chart_forward_parts, chart_inverse, strict_lower_conjugator};
use crate::charts::{is_slh_pattern, ChartCenter, ChartPoint, Form};
use crate::error::{Result, TodaError};
use crate::factor::kappa;
use crate::iwasawa::{HierarchyPoly, IwasawaContext};
use crate::matrix::{c, CMatrix, Tolerance, C64, I};
use crate::sample::{complex_normal, normal, random_real_matrix, TodaRng};

/// Cached matrices of the conjugated `su(p,q)` form.
#[derive(Debug, Clone, PartialEq)]
pub struct SuPq {
    pub p: usize,
    pub q: usize,
    pub c: CMatrix,
    pub c_inv: CMatrix,
    /// Permutation matrix with `g e_j = e_σ(j)`.
    pub g: CMatrix,
    pub ipq: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealFormTag {
    SlR(usize),
    /// Dimension `2m`.
    SlH(usize),
    SuPqConj(Box<SuPq>),
}

/// 0-based image of `j` under `(1,…,p+q) ↦ (1+q,…,p+q, 1,…,q)`.
fn supq_sigma(p: usize, q: usize, j: usize) -> usize {
    if j < p {
        j + q
    } else {
        j - p
    }
}

fn supq_permutation(p: usize, q: usize) -> CMatrix {
    let n = p + q;
    let mut g = CMatrix::zeros(n);
    for j in 0..n {
        g[(supq_sigma(p, q, j), j)] = c(1.0, 0.0);
    }
    g
}

/// `c = g · B` with `B = [[I_{p−q}, 0, 0], [0, I_q/√2, I^op/√2], [0, −I^op/√2, I_q/√2]]`.
pub fn c_matrix(p: usize, q: usize) -> Result<CMatrix> {
    if q == 0 || p < q {
        return Err(TodaError::BadSignature { p, q });
    }
    let n = p + q;
    let r = p - q;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = CMatrix::zeros(n);
    for i in 0..r {
        b[(i, i)] = c(1.0, 0.0);
    }
    for i in 0..q {
        b[(r + i, r + i)] = c(s, 0.0);
        b[(p + i, p + i)] = c(s, 0.0);
        b[(r + i, p + q - 1 - i)] = c(s, 0.0);
        b[(p + i, r + q - 1 - i)] = c(-s, 0.0);
    }
    Ok(&supq_permutation(p, q) * &b)
}

impl RealFormTag {
    pub fn sl_r(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(TodaError::InvalidInput(format!("sl_R needs n >= 2, got {n}")));
        }
        Ok(RealFormTag::SlR(n))
    }

    pub fn sl_h(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(TodaError::InvalidInput(format!("sl_H needs even n >= 2, got {n}")));
        }
        Ok(RealFormTag::SlH(n))
    }

    pub fn su_pq_conj(p: usize, q: usize) -> Result<Self> {
        let cm = c_matrix(p, q)?;
        let n = p + q;
        let c_inv = cm.inverse()?;
        let g = supq_permutation(p, q);
        let ipq = CMatrix::from_diagonal(&(0..n).map(|i| c(if i < p { 1.0 } else { -1.0 }, 0.0)).collect::<Vec<_>>());
        Ok(RealFormTag::SuPqConj(Box::new(SuPq { p, q, c: cm, c_inv, g, ipq })))
    }

    pub fn n(&self) -> usize {
        match self {
            RealFormTag::SlR(n) | RealFormTag::SlH(n) => *n,
            RealFormTag::SuPqConj(s) => s.p + s.q,
        }
    }

    pub fn name(&self) -> String {
        match self {
            RealFormTag::SlR(n) => format!("sl_R({n})"),
            RealFormTag::SlH(n) => format!("sl_H({n})"),
            RealFormTag::SuPqConj(s) => format!("su({},{})-conj", s.p, s.q),
        }
    }

    /// Largest entrywise violation of the form's fixed-point equations, trace included.
    pub fn form_residual(&self, x: &CMatrix) -> Result<f64> {
        let n = self.n();
        if x.n() != n {
            return Err(TodaError::DimensionMismatch { expected: n, actual: x.n() });
        }
        let trace = x.trace().norm();
        let r = match self {
            RealFormTag::SlR(_) => x.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            RealFormTag::SlH(_) => quaternion_residual(x),
            RealFormTag::SuPqConj(s) => {
                let y = &(&s.c_inv * x) * &s.c;
                (&(&(&s.ipq * &y.adjoint()) * &s.ipq) + &y).max_abs()
            }
        };
        Ok(r.max(trace))
    }

    pub fn is_in_form(&self, x: &CMatrix, tol: &Tolerance) -> Result<bool> {
        let r = self.form_residual(x)?;
        Ok(tol.close(r, x.frobenius().max(1.0)))
    }

    /// A random traceless element of the form with entries of size `scale`.
    pub fn random_member(&self, rng: &mut TodaRng, scale: f64) -> CMatrix {
        let n = self.n();
        let x = match self {
            RealFormTag::SlR(_) => random_real_matrix(rng, n, scale),
            RealFormTag::SlH(_) => random_quaternion_matrix(rng, n / 2, scale),
            RealFormTag::SuPqConj(s) => {
                let a = crate::sample::random_matrix(rng, n, scale);
                let y = &a - &(&(&s.ipq * &a.adjoint()) * &s.ipq);
                &(&s.c * &y) * &s.c_inv
            }
        };
        let shift = x.trace() / n as f64;
        match self {
            // Keep the trace correction inside the form: sl_H needs (λ, λ̄) on the diagonal.
            RealFormTag::SlH(_) => &x - &CMatrix::identity(n).scale(c(shift.re, 0.0)),
            _ => &x - &CMatrix::identity(n).scale(shift),
        }
    }
}

/// 2×2 blocks `[[x, y], [−ȳ, x̄]]`.
fn quaternion_residual(x: &CMatrix) -> f64 {
    let m = x.n() / 2;
    let mut r: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let (i, j) = (2 * a, 2 * b);
            r = r.max((x[(i + 1, j)] + x[(i, j + 1)].conj()).norm());
            r = r.max((x[(i + 1, j + 1)] - x[(i, j)].conj()).norm());
        }
    }
    r
}

/// Quaternionic `m×m` matrix as a complex `2m×2m` matrix, entries of size `scale`.
pub fn random_quaternion_matrix(rng: &mut TodaRng, m: usize, scale: f64) -> CMatrix {
    let mut x = CMatrix::zeros(2 * m);
    for a in 0..m {
        for b in 0..m {
            let (p, q) = (complex_normal(rng, scale), complex_normal(rng, scale));
            set_quaternion(&mut x, a, b, p, q);
        }
    }
    x
}

fn set_quaternion(x: &mut CMatrix, a: usize, b: usize, p: C64, q: C64) {
    let (i, j) = (2 * a, 2 * b);
    x[(i, j)] = p;
    x[(i, j + 1)] = q;
    x[(i + 1, j)] = -q.conj();
    x[(i + 1, j + 1)] = p.conj();
}

/// `toda_field(X)` stays in the form.
pub fn tangency_check(tag: &RealFormTag, x: &CMatrix, f: &HierarchyPoly, tol: &Tolerance) -> Result<bool> {
    if !tag.is_in_form(x, tol)? {
        return Err(TodaError::NotInForm);
    }
    let ctx = IwasawaContext::sl_complex(tag.n());
    let v = ctx.toda_field(x, f)?;
    let r = tag.form_residual(&v)?;
    Ok(tol.close(r, v.frobenius().max(x.frobenius()).max(1.0)))
}

/// Induced chart point on an `sl_m(H)` orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct RealChartPoint {
    pub y: CMatrix,
    pub z: CMatrix,
    /// Entries at `(2a+1, 2a)` (0-based), `a = 0..m`.
    pub z_im: Vec<C64>,
    pub center: ChartCenter,
}

impl RealChartPoint {
    pub fn m(&self) -> usize {
        self.center.n() / 2
    }

    pub fn z_im_matrix(&self) -> CMatrix {
        let mut w = CMatrix::zeros(self.center.n());
        for (a, &v) in self.z_im.iter().enumerate() {
            w[(2 * a + 1, 2 * a)] = v;
        }
        w
    }

    pub fn max_entry_dist(&self, other: &RealChartPoint) -> f64 {
        let zi = self.z_im.iter().zip(&other.z_im).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        (&self.y - &other.y).max_abs().max((&self.z - &other.z).max_abs()).max(zi)
    }
}

/// Violation of the `ℓ_0` support: nonzero entries inside diagonal blocks or off the quaternion pattern.
pub fn ell0_residual(w: &CMatrix) -> f64 {
    let m = w.n() / 2;
    let mut r = w.upper_residual().max(w.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max));
    for a in 0..m {
        r = r.max(w[(2 * a + 1, 2 * a)].norm());
    }
    r.max(quaternion_residual(&w.strictly_lower()))
}

fn require_slh_center(center: &ChartCenter) -> Result<()> {
    if is_slh_pattern(center.lambda(), center.tol()) {
        Ok(())
    } else {
        Err(TodaError::NotInForm)
    }
}

/// Unit lower `ζ` with entries only at `(2a+1, 2a)`.
fn block_zeta(entries: &[C64], n: usize) -> CMatrix {
    let mut z = CMatrix::identity(n);
    for (a, &v) in entries.iter().enumerate() {
        z[(2 * a + 1, 2 * a)] = v;
    }
    z
}

/// `(Y, Z, Z_Im)` for `X ∈ sl_m(H)`.
///
/// The complex chart's cell element is rotated by `m = κ(ζ)`, `ζ` the block
/// diagonal of its unit lower LU factor, so that `Z` of `m X m⁻¹` lands in `ℓ_0`;
/// `ζ` itself is recorded as `Z_Im = ζ⁻¹Λζ − Λ`.
pub fn slh_chart_forward(x: &CMatrix, center: &ChartCenter) -> Result<RealChartPoint> {
    require_slh_center(center)?;
    let n = center.n();
    let tol = center.tol();
    let tag = RealFormTag::SlH(n);
    if !tag.is_in_form(x, tol)? {
        return Err(TodaError::NotInForm);
    }
    let parts = chart_forward_parts(x, center)?;
    let entries: Vec<C64> = (0..n / 2).map(|a| parts.l_k[(2 * a + 1, 2 * a)]).collect();
    let zeta = block_zeta(&entries, n);
    let m = kappa(&zeta)?;
    let rotated = &(&m * x) * &m.adjoint();
    let pt = chart_forward(&rotated, center)?;
    let scale = center.spectral_radius().max(1.0) * (1.0 + pt.y.max_abs() + pt.z.max_abs());
    let residual = ell0_residual(&pt.y).max(ell0_residual(&pt.z)).max((&pt.y - &parts.point.y).max_abs());
    if !tol.close(residual, scale) {
        return Err(TodaError::StructureViolation { residual });
    }
    let z_im_full = &(&zeta.inverse_lower()? * center.as_matrix()) * &zeta - center.as_matrix();
    let z_im = (0..n / 2).map(|a| z_im_full[(2 * a + 1, 2 * a)]).collect();
    Ok(RealChartPoint { y: pt.y, z: pt.z, z_im, center: center.clone() })
}

pub fn slh_chart_inverse(rpt: &RealChartPoint) -> Result<CMatrix> {
    let center = &rpt.center;
    require_slh_center(center)?;
    let n = center.n();
    if rpt.z_im.len() != n / 2 {
        return Err(TodaError::DimensionMismatch { expected: n / 2, actual: rpt.z_im.len() });
    }
    let residual = ell0_residual(&rpt.y).max(ell0_residual(&rpt.z));
    if !center.tol().close(residual, 1.0 + rpt.y.max_abs() + rpt.z.max_abs()) {
        return Err(TodaError::StructureViolation { residual });
    }
    let zeta = strict_lower_conjugator(center, &rpt.z_im_matrix())?;
    let m = kappa(&zeta)?;
    let rotated = chart_inverse(&ChartPoint::new(rpt.y.clone(), rpt.z.clone(), center.clone())?)?;
    Ok(&(&m.adjoint() * &rotated) * &m)
}

/// Per-position exponential rates of the induced `sl_m(H)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    /// `Y'_{jk} = rate · Y_{jk}`; zero off `ℓ_0`.
    pub y: CMatrix,
    pub z: CMatrix,
    pub z_im: Vec<C64>,
}

pub fn slh_rates(center: &ChartCenter) -> Result<RateTable> {
    slh_rates_with(center, &HierarchyPoly::identity())
}

/// Rates for the hierarchy flow of `f`: `i·Im(f(μ_k) − f(μ_j))` on `Y`,
/// `Re(f(μ_j) − f(μ_k))` on `Z`, over block-lower positions `j > k`; zero on `Z_Im`.
pub fn slh_rates_with(center: &ChartCenter, f: &HierarchyPoly) -> Result<RateTable> {
    require_slh_center(center)?;
    let n = center.n();
    let fl: Vec<C64> = center.lambda().iter().map(|&l| f.eval(l)).collect();
    let mut y = CMatrix::zeros(n);
    let mut z = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            if j / 2 > k / 2 {
                y[(j, k)] = I * (fl[k] - fl[j]).im;
                z[(j, k)] = c((fl[j] - fl[k]).re, 0.0);
            }
        }
    }
    Ok(RateTable { y, z, z_im: vec![c(0.0, 0.0); n / 2] })
}

/// Exact flow of the induced coordinates.
pub fn slh_chart_flow(rpt: &RealChartPoint, f: &HierarchyPoly, t: f64) -> Result<RealChartPoint> {
    let rates = slh_rates_with(&rpt.center, f)?;
    let n = rpt.center.n();
    let y = CMatrix::from_fn(n, |i, j| rpt.y[(i, j)] * (rates.y[(i, j)] * t).exp());
    let z = CMatrix::from_fn(n, |i, j| rpt.z[(i, j)] * (rates.z[(i, j)] * t).exp());
    let z_im = rpt.z_im.iter().zip(&rates.z_im).map(|(v, r)| v * (r * t).exp()).collect();
    Ok(RealChartPoint { y, z, z_im, center: rpt.center.clone() })
}

/// Diagonal pattern of `h_0` for the conjugated `su(p,q)`: `c⁻¹Λc ∈ su(p,q)`.
fn supq_pattern(s: &SuPq, lambda: &[C64], tol: &Tolerance) -> bool {
    let tag = RealFormTag::SuPqConj(Box::new(s.clone()));
    let l = CMatrix::from_diagonal(lambda);
    tag.is_in_form(&l, tol).unwrap_or(false)
}

/// Weyl translates of the center admitted by the real form.
pub fn real_atlas_centers(tag: &RealFormTag, center: &ChartCenter) -> Result<Vec<ChartCenter>> {
    let n = tag.n();
    if center.n() != n {
        return Err(TodaError::DimensionMismatch { expected: n, actual: center.n() });
    }
    match tag {
        RealFormTag::SlR(_) => atlas_centers(center, Form::SlReal),
        RealFormTag::SlH(_) => atlas_centers(center, Form::SlH),
        RealFormTag::SuPqConj(s) => {
            if !supq_pattern(s, center.lambda(), center.tol()) {
                return Err(TodaError::NotInForm);
            }
            Ok((0..n)
                .permutations(n)
                .map(|p| center.permuted(&p))
                .filter(|ce| supq_pattern(s, ce.lambda(), ce.tol()))
                .collect())
        }
    }
}

/// `(λ_1, λ̄_1, …, λ_m, λ̄_m)` with real parts summing to zero, imaginary parts at least
/// `gap` from 0 and the `λ_a` pairwise `gap` apart.
pub fn random_slh_center(rng: &mut TodaRng, m: usize, gap: f64, tol: Tolerance) -> ChartCenter {
    loop {
        let mut lam: Vec<C64> = (0..m).map(|_| c(normal(rng), normal(rng))).collect();
        let mean = lam.iter().map(|l| l.re).sum::<f64>() / m as f64;
        lam.iter_mut().for_each(|l| l.re -= mean);
        let full: Vec<C64> = lam.iter().flat_map(|&l| [l, l.conj()]).collect();
        let ok = (0..full.len()).all(|i| (i + 1..full.len()).all(|j| (full[i] - full[j]).norm() >= gap));
        if ok {
            if let Ok(ce) = ChartCenter::new(full, tol) {
                return ce;
            }
        }
    }
}

/// `G Λ G⁻¹` with `G` a random invertible quaternionic matrix.
pub fn random_slh_orbit_point(rng: &mut TodaRng, center: &ChartCenter) -> CMatrix {
    let m = center.n() / 2;
    loop {
        let g = random_quaternion_matrix(rng, m, 1.0);
        if let Ok(gi) = g.inverse() {
            let x = &(&g * center.as_matrix()) * &gi;
            if x.is_finite() {
                return x;
            }
        }
    }
}

/// Random coordinates in `ℓ_0 × ℓ_0 × ℓ_Im`.
pub fn random_slh_chart_point(rng: &mut TodaRng, center: &ChartCenter, scale: f64) -> RealChartPoint {
    let n = center.n();
    let m = n / 2;
    let mut coords = || {
        let mut w = CMatrix::zeros(n);
        for a in 0..m {
            for b in 0..a {
                let (p, q) = (complex_normal(rng, scale), complex_normal(rng, scale));
                set_quaternion(&mut w, a, b, p, q);
            }
        }
        w
    };
    let y = coords();
    let z = coords();
    let z_im = (0..m).map(|_| complex_normal(rng, scale)).collect();
    RealChartPoint { y, z, z_im, center: center.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::chart_contains;
    use crate::flow::{integrate_rk, symes_flow, uniform_grid, RK_ATOL, RK_RTOL};
    use crate::sample::{random_real_spectrum, rng_for};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn slh_center(l: &[C64]) -> ChartCenter {
        ChartCenter::new(l.iter().flat_map(|&z| [z, z.conj()]).collect(), tol()).unwrap()
    }

    #[test]
    fn membership_examples() {
        let mut rng = rng_for(1, 0);
        let x = RealFormTag::SlR(3).random_member(&mut rng, 1.0);
        assert!(RealFormTag::SlR(3).is_in_form(&x, &tol()).unwrap());
        let d = CMatrix::from_diagonal(&[I, -I]);
        assert!(RealFormTag::SlH(2).is_in_form(&d, &tol()).unwrap());
        let d = CMatrix::from_diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(!RealFormTag::SlH(2).is_in_form(&d, &tol()).unwrap());
        assert_eq!(
            RealFormTag::SlR(3).is_in_form(&CMatrix::zeros(2), &tol()),
            Err(TodaError::DimensionMismatch { expected: 3, actual: 2 })
        );
        assert!(RealFormTag::sl_h(3).is_err());
    }

    #[test]
    fn c_matrix_smallest_case() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = CMatrix::from_real_rows(&[&[-s, s], &[s, s]]).unwrap();
        assert!(c_matrix(1, 1).unwrap().dist(&want) < 1e-15);
        assert_eq!(c_matrix(1, 2), Err(TodaError::BadSignature { p: 1, q: 2 }));
        assert_eq!(c_matrix(2, 0), Err(TodaError::BadSignature { p: 2, q: 0 }));
    }

    #[test]
    fn c_matrix_two_one() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // B = [[1,0,0],[0,s,s],[0,-s,s]], rows permuted 1->2, 2->3, 3->1.
        let want = CMatrix::from_real_rows(&[&[0.0, -s, s], &[1.0, 0.0, 0.0], &[0.0, s, s]]).unwrap();
        let cm = c_matrix(2, 1).unwrap();
        assert!(cm.dist(&want) < 1e-15);
        assert!(cm.unitarity_residual() < 1e-15);
    }

    #[test]
    fn c_conjugates_diagonal_pattern_into_supq() {
        let mut rng = rng_for(2, 0);
        for (p, q) in [(1, 1), (2, 1), (3, 1), (2, 2), (3, 2), (4, 2)] {
            let tag = RealFormTag::su_pq_conj(p, q).unwrap();
            let lq: Vec<C64> = (0..q).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let mut lam = lq.clone();
            lam.extend((0..p - q).map(|_| I * normal(&mut rng)));
            lam.extend(lq.iter().rev().map(|l| -l.conj()));
            let shift = lam.iter().sum::<C64>() / (p + q) as f64;
            // The trace of the pattern is purely imaginary; removing it keeps the pattern.
            assert!(shift.re.abs() < 1e-12);
            lam.iter_mut().for_each(|l| *l -= shift);
            let d = CMatrix::from_diagonal(&lam);
            assert!(tag.is_in_form(&d, &tol()).unwrap(), "p={p} q={q}");
        }
    }

    #[test]
    fn toda_field_tangent_to_forms() {
        let f = HierarchyPoly::identity();
        let tags = [RealFormTag::SlR(4), RealFormTag::SlH(4), RealFormTag::su_pq_conj(2, 1).unwrap()];
        let mut rng = rng_for(3, 0);
        for tag in &tags {
            for _ in 0..100 {
                let x = tag.random_member(&mut rng, 1.0);
                assert!(tag.is_in_form(&x, &tol()).unwrap(), "{}", tag.name());
                assert!(tangency_check(tag, &x, &f, &tol()).unwrap(), "{}", tag.name());
            }
        }
        let off = CMatrix::from_diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(tangency_check(&RealFormTag::SlH(2), &off, &f, &tol()), Err(TodaError::NotInForm));
    }

    #[test]
    fn rk_flow_stays_in_form() {
        let f = HierarchyPoly::identity();
        let ctx4 = IwasawaContext::sl_complex(4);
        let ctx3 = IwasawaContext::sl_complex(3);
        let grid = uniform_grid(0.0, 2.0, 11).unwrap();
        let mut rng = rng_for(4, 0);
        for tag in [RealFormTag::SlR(4), RealFormTag::SlH(4), RealFormTag::su_pq_conj(2, 1).unwrap()] {
            let x0 = tag.random_member(&mut rng, 0.7);
            let ctx = if tag.n() == 4 { &ctx4 } else { &ctx3 };
            let traj = integrate_rk(ctx, &x0, &f, &grid, RK_RTOL, RK_ATOL).unwrap();
            for x in &traj.samples {
                assert!(tag.form_residual(x).unwrap() < 1e-9, "{}", tag.name());
            }
        }
    }

    #[test]
    fn slh_origin_and_ruling() {
        let ce = slh_center(&[c(1.0, 1.0), c(-1.0, 0.5)]);
        let o = slh_chart_forward(ce.as_matrix(), &ce).unwrap();
        assert!(o.y.max_abs() < 1e-12 && o.z.max_abs() < 1e-12);
        assert!(o.z_im.iter().all(|z| z.norm() < 1e-12));
        let mut rng = rng_for(5, 0);
        let w = random_slh_chart_point(&mut rng, &ce, 1.0).y;
        let x = ce.as_matrix() + &w;
        let p = slh_chart_forward(&x, &ce).unwrap();
        assert!(p.y.dist(&w) < 1e-10 && p.z.dist(&w) < 1e-10);
        assert!(p.z_im.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn slh_round_trip() {
        let mut rng = rng_for(6, 0);
        for m in 1..=3 {
            for _ in 0..20 {
                let ce = random_slh_center(&mut rng, m, 0.3, tol());
                let rpt = random_slh_chart_point(&mut rng, &ce, 0.7);
                let x = slh_chart_inverse(&rpt).unwrap();
                assert!(RealFormTag::SlH(2 * m).form_residual(&x).unwrap() < 1e-9 * x.frobenius().max(1.0));
                let back = slh_chart_forward(&x, &ce).unwrap();
                assert!(back.max_entry_dist(&rpt) < 1e-9, "{}", back.max_entry_dist(&rpt));
            }
        }
    }

    #[test]
    fn slh_rate_examples() {
        let ce = slh_center(&[c(0.0, 1.0)]);
        let r = slh_rates(&ce).unwrap();
        assert_eq!(r.z_im, vec![c(0.0, 0.0)]);
        assert_eq!(r.y.max_abs(), 0.0);
        assert_eq!(r.z.max_abs(), 0.0);
        let ce = ChartCenter::new(vec![c(1.0, 1.0), c(1.0, -1.0), c(-1.0, -1.0), c(-1.0, 1.0)], tol()).unwrap();
        let r = slh_rates(&ce).unwrap();
        // λ_1 = 1+i, λ_2 = −1−i: Y_31 rate is i·Im(λ_1 − λ_2) = 2i.
        assert!((r.y[(2, 0)] - c(0.0, 2.0)).norm() < 1e-15);
        assert!((r.z[(2, 0)] - c(-2.0, 0.0)).norm() < 1e-15);
        let real = slh_center(&[c(1.0, 0.5), c(-1.0, 0.5)]);
        let r = slh_rates(&real).unwrap();
        assert!(r.z.max_abs() > 0.0);
        assert!(r.y[(2, 0)].norm() < 1e-15 && r.y[(3, 1)].norm() < 1e-15);
    }

    #[test]
    fn slh_law_along_symes_flow() {
        let f = HierarchyPoly::identity();
        let mut rng = rng_for(7, 0);
        for _ in 0..10 {
            let ce = random_slh_center(&mut rng, 2, 0.3, tol());
            let p0 = random_slh_chart_point(&mut rng, &ce, 0.7);
            let x0 = slh_chart_inverse(&p0).unwrap();
            for t in [0.25, 0.5, 1.0] {
                let xt = symes_flow(&x0, &f, t, None).unwrap();
                let got = slh_chart_forward(&xt, &ce).unwrap();
                let want = slh_chart_flow(&p0, &f, t).unwrap();
                assert!(got.max_entry_dist(&want) < 1e-7);
                let zi = got.z_im.iter().zip(&p0.z_im).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(zi < 1e-8);
            }
        }
    }

    #[test]
    fn slh_rates_match_finite_differences() {
        let f = HierarchyPoly::identity();
        let mut rng = rng_for(8, 0);
        let ce = random_slh_center(&mut rng, 2, 0.3, tol());
        let p0 = random_slh_chart_point(&mut rng, &ce, 0.5);
        let x0 = slh_chart_inverse(&p0).unwrap();
        let h = 1e-5;
        let fwd = slh_chart_forward(&symes_flow(&x0, &f, h, None).unwrap(), &ce).unwrap();
        let bwd = slh_chart_forward(&symes_flow(&x0, &f, -h, None).unwrap(), &ce).unwrap();
        let rates = slh_rates(&ce).unwrap();
        for j in 0..4 {
            for k in 0..j {
                let dy = (fwd.y[(j, k)] - bwd.y[(j, k)]) / (2.0 * h);
                let dz = (fwd.z[(j, k)] - bwd.z[(j, k)]) / (2.0 * h);
                assert!((dy - rates.y[(j, k)] * p0.y[(j, k)]).norm() < 1e-6);
                assert!((dz - rates.z[(j, k)] * p0.z[(j, k)]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn slr_law_real_center() {
        let f = HierarchyPoly::identity();
        let mut rng = rng_for(9, 0);
        let ce = ChartCenter::new(random_real_spectrum(&mut rng, 3, 1.0, 0.3), tol()).unwrap();
        let y0 = CMatrix::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0], &[-0.3, 0.8, 0.0]]).unwrap();
        let z0 = CMatrix::from_real_rows(&[&[0.0, 0.0, 0.0], &[-0.2, 0.0, 0.0], &[0.4, 0.1, 0.0]]).unwrap();
        let x0 = chart_inverse(&ChartPoint::new(y0.clone(), z0, ce.clone()).unwrap()).unwrap();
        assert!(RealFormTag::SlR(3).form_residual(&x0).unwrap() < 1e-12);
        for t in [0.5, 1.0, 2.0] {
            let xt = symes_flow(&x0, &f, t, None).unwrap();
            assert!(chart_forward(&xt, &ce).unwrap().y.dist(&y0) < 1e-9);
        }
    }

    #[test]
    fn real_atlas_counts() {
        let mut rng = rng_for(10, 0);
        let ce = ChartCenter::new(random_real_spectrum(&mut rng, 3, 1.0, 0.3), tol()).unwrap();
        assert_eq!(real_atlas_centers(&RealFormTag::SlR(3), &ce).unwrap().len(), 6);
        let ce1 = slh_center(&[c(0.0, 1.5)]);
        let a1 = real_atlas_centers(&RealFormTag::SlH(2), &ce1).unwrap();
        assert_eq!(a1.len(), 2);
        assert_eq!(a1[1].lambda(), &[c(0.0, -1.5), c(0.0, 1.5)]);
        let ce2 = random_slh_center(&mut rng, 2, 0.3, tol());
        assert_eq!(real_atlas_centers(&RealFormTag::SlH(4), &ce2).unwrap().len(), 8);
        let cplx = ChartCenter::new(vec![c(1.0, 0.0), c(-1.0, 0.0)], tol()).unwrap();
        assert_eq!(real_atlas_centers(&RealFormTag::SlH(2), &cplx), Err(TodaError::NotInForm));
    }

    #[test]
    fn supq_atlas_preserves_pattern() {
        let tag = RealFormTag::su_pq_conj(2, 1).unwrap();
        let ce = ChartCenter::new(vec![c(1.0, 0.5), c(0.0, -1.0), c(-1.0, 0.5)], tol()).unwrap();
        let centers = real_atlas_centers(&tag, &ce).unwrap();
        // Swapping the conjugate pair and negating real parts: Λ_q ↔ −Λ̄_q.
        assert_eq!(centers.len(), 2);
        for ce in &centers {
            assert!(tag.is_in_form(ce.as_matrix(), &tol()).unwrap());
        }
    }

    #[test]
    fn slh_orbit_points_are_covered() {
        let mut rng = rng_for(11, 0);
        let ce = random_slh_center(&mut rng, 2, 0.3, tol());
        let centers = real_atlas_centers(&RealFormTag::SlH(4), &ce).unwrap();
        for _ in 0..50 {
            let x = random_slh_orbit_point(&mut rng, &ce);
            assert!(centers.iter().any(|ce| slh_chart_forward(&x, ce).is_ok()));
            assert!(centers.iter().any(|ce| chart_contains(&x, ce)));
        }
    }
}
