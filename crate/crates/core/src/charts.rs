//! The `(Y, Z)` coordinates on a conjugacy class with simple spectrum.
//!
//! A point `X` in the chart of `Λ` is written `X = c (Λ+Y) c⁻¹ = u (Λ+Z) u⁻¹` with
//! `c` in the big cell `C` of the unitary group, `u` in `D = ν(L)`, and `Y, Z`
//! strictly lower triangular.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::eigen::eig_ordered;
use crate::error::{Result, TodaError};
use crate::factor::{gram_schmidt_qr, ldu, ql_kla, principal_minors, relative_minors};
use crate::iwasawa::{HierarchyPoly, IwasawaContext};
use crate::matrix::{c, CMatrix, Tolerance, C64};

/// Ordered simple spectrum `Λ` anchoring one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCenter {
    lambda: Vec<C64>,
    as_matrix: CMatrix,
    tol: Tolerance,
}

impl ChartCenter {
    pub fn new(lambda: Vec<C64>, tol: Tolerance) -> Result<Self> {
        let n = lambda.len();
        if n == 0 {
            return Err(TodaError::InvalidInput("empty spectrum".into()));
        }
        if lambda.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite eigenvalue".into()));
        }
        let sum: C64 = lambda.iter().sum();
        let mass: f64 = lambda.iter().map(|z| z.norm()).sum();
        if !tol.close(sum.norm(), mass.max(1.0)) {
            return Err(TodaError::InvalidInput(format!("spectrum sums to {sum}, not zero")));
        }
        let as_matrix = CMatrix::from_diagonal(&lambda);
        let center = ChartCenter { lambda, as_matrix, tol };
        let gap = center.match_tolerance();
        for i in 0..n {
            for j in i + 1..n {
                if (center.lambda[i] - center.lambda[j]).norm() <= gap {
                    return Err(TodaError::NotSimpleSpectrum);
                }
            }
        }
        Ok(center)
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[C64] {
        &self.lambda
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.as_matrix
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    pub fn spectral_radius(&self) -> f64 {
        self.lambda.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalue matching radius: `abs + √rel·max(1, ρ(Λ))`.
    ///
    /// Eigenvalues of a backward-perturbed input move by roughly the perturbation
    /// times the eigenvector condition, so `rel·ρ` alone rejects integrator output.
    pub fn match_tolerance(&self) -> f64 {
        self.tol.abs + self.tol.rel.sqrt() * self.spectral_radius().max(1.0)
    }

    /// The center with its entries reordered: entry `j` becomes `λ_{perm[j]}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let lambda: Vec<C64> = perm.iter().map(|&p| self.lambda[p]).collect();
        ChartCenter { as_matrix: CMatrix::from_diagonal(&lambda), lambda, tol: self.tol }
    }

    pub fn with_tol(&self, tol: Tolerance) -> Self {
        ChartCenter { tol, ..self.clone() }
    }
}

/// Chart coordinates `(Y, Z)`, both strictly lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub y: CMatrix,
    pub z: CMatrix,
    pub center: ChartCenter,
}

impl ChartPoint {
    pub fn new(y: CMatrix, z: CMatrix, center: ChartCenter) -> Result<Self> {
        let n = center.n();
        for m in [&y, &z] {
            if m.n() != n {
                return Err(TodaError::DimensionMismatch { expected: n, actual: m.n() });
            }
            if m.upper_residual() != 0.0 || m.diagonal().iter().any(|d| d.norm() != 0.0) {
                return Err(TodaError::InvalidInput("chart coordinates must be strictly lower triangular".into()));
            }
            if !m.is_finite() {
                return Err(TodaError::InvalidInput("non-finite chart coordinate".into()));
            }
        }
        Ok(ChartPoint { y, z, center })
    }

    /// The center itself, `(0, 0)`.
    pub fn origin(center: ChartCenter) -> Self {
        let n = center.n();
        ChartPoint { y: CMatrix::zeros(n), z: CMatrix::zeros(n), center }
    }

    /// Largest entrywise distance to another point of the same chart.
    pub fn max_entry_dist(&self, other: &ChartPoint) -> f64 {
        (&self.y - &other.y).max_abs().max((&self.z - &other.z).max_abs())
    }
}

/// Unit lower `l` with `l (Λ+W) l⁻¹ = Λ`.
///
/// Row `i` of `l M = Λ l` (with `M = Λ+W`) gives, for `j < i`,
/// `l_ij (λ_i − λ_j) = Σ_{j<k≤i} l_ik M_kj`; solved right to left along each row.
pub fn strict_lower_conjugator(center: &ChartCenter, w: &CMatrix) -> Result<CMatrix> {
    let n = center.n();
    if w.n() != n {
        return Err(TodaError::DimensionMismatch { expected: n, actual: w.n() });
    }
    let lam = center.lambda();
    let gap = center.match_tolerance();
    let m = center.as_matrix() + &w.strictly_lower();
    let mut l = CMatrix::identity(n);
    for i in 0..n {
        for j in (0..i).rev() {
            let d = lam[i] - lam[j];
            if d.norm() <= gap {
                return Err(TodaError::NotSimpleSpectrum);
            }
            let mut s = c(0.0, 0.0);
            for k in j + 1..=i {
                s += l[(i, k)] * m[(k, j)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Everything computed by the inverse chart.
#[derive(Debug, Clone)]
pub struct InverseParts {
    pub x: CMatrix,
    /// Cell element `k` of `l_1⁻¹ l_2 = k u`; `X = k⁻¹ (Λ+Y) k`.
    pub k: CMatrix,
    /// `u` of `l_1⁻¹ l_2 = k u`; `X = u (Λ+Z) u⁻¹`.
    pub u: CMatrix,
    /// `‖k⁻¹(Λ+Y)k − u(Λ+Z)u⁻¹‖_F`.
    pub consistency: f64,
}

pub fn chart_inverse_parts(pt: &ChartPoint) -> Result<InverseParts> {
    let center = &pt.center;
    let l1 = strict_lower_conjugator(center, &pt.y)?;
    let l2 = strict_lower_conjugator(center, &pt.z)?;
    let l1_inv = l1.inverse_lower()?;
    let (k, u) = gram_schmidt_qr(&(&l1_inv * &l2))?.into_parts();
    let ly = center.as_matrix() + &pt.y;
    let lz = center.as_matrix() + &pt.z;
    let x = &(&k.adjoint() * &ly) * &k;
    let u_inv = u.inverse_upper()?;
    let x_alt = &(&u * &lz) * &u_inv;
    let consistency = x.dist(&x_alt);
    Ok(InverseParts { x, k, u, consistency })
}

/// `φ⁻¹(Y, Z) = k⁻¹ (Λ+Y) k` where `l_1⁻¹ l_2 = k u`.
///
/// Fails with `ConditioningExceeded` when the two expressions for `X` disagree by
/// more than the tolerance allows at the conditioning of `u`.
pub fn chart_inverse(pt: &ChartPoint) -> Result<CMatrix> {
    let parts = chart_inverse_parts(pt)?;
    let cond = parts.u.frobenius() * parts.u.inverse_upper()?.frobenius();
    if !pt.center.tol().close(parts.consistency, parts.x.frobenius().max(1.0) * cond) {
        return Err(TodaError::ConditioningExceeded { discrepancy: parts.consistency });
    }
    Ok(parts.x)
}

/// Everything computed by the forward chart.
#[derive(Debug, Clone)]
pub struct ForwardParts {
    pub point: ChartPoint,
    /// Cell element with `X = c (Λ+Y) c⁻¹`.
    pub c: CMatrix,
    /// `D`-element with `X = u (Λ+Z) u⁻¹`.
    pub u: CMatrix,
    /// Unit lower factor of `c⁻¹ = l_k d_k u_k`.
    pub l_k: CMatrix,
    /// Relative leading minors of the unitary factor of the eigenvector matrix.
    pub minors: Vec<f64>,
    /// Largest entry of `lΛl⁻¹ − Λ` and `l_2⁻¹Λl_2 − Λ` on or above the diagonal.
    pub triangularity: f64,
}

fn lower_excess(m: &CMatrix) -> f64 {
    m.upper_residual().max(m.diagonal().iter().map(|d| d.norm()).fold(0.0, f64::max))
}

pub fn chart_forward_parts(x: &CMatrix, center: &ChartCenter) -> Result<ForwardParts> {
    let n = center.n();
    let tol = center.tol();
    let lam = center.as_matrix();
    let v = eig_ordered(x, center)?;
    let (k0, l0, _a0) = ql_kla(&v)?.into_parts();
    let minors = relative_minors(&k0);
    if let Some(j) = minors.iter().position(|&r| !(r >= tol.minor_floor)) {
        return Err(TodaError::ChartBoundary { minor: j + 1 });
    }
    let delta = principal_minors(&k0);
    let mut phases = Vec::with_capacity(n);
    let mut prev = 0.0;
    for d in &delta {
        let a = d.arg();
        phases.push(C64::from_polar(1.0, a - prev));
        prev = a;
    }
    let t = CMatrix::from_diagonal(&phases);
    let t_inv = t.adjoint();
    let cell = &k0 * &t_inv;
    let l = &(&t * &l0) * &t_inv;
    let l_inv = l.inverse_lower()?;
    let ly = &(&l * lam) * &l_inv;
    let y_full = &ly - lam;
    let k = cell.adjoint();
    let (l_k, d_k, u_k) = match ldu(&k, tol) {
        Ok(f) => f.into_parts(),
        Err(TodaError::MinorVanishes(j)) => return Err(TodaError::ChartBoundary { minor: j }),
        Err(e) => return Err(e),
    };
    let l2 = &l_inv * &l_k;
    let l2_inv = l2.inverse_lower()?;
    let z_full = &(&l2_inv * lam) * &l2 - lam;
    let u = (&d_k * &u_k).inverse_upper()?;
    let triangularity = lower_excess(&y_full).max(lower_excess(&z_full));
    let point = ChartPoint { y: y_full.strictly_lower(), z: z_full.strictly_lower(), center: center.clone() };
    Ok(ForwardParts { point, c: cell, u, l_k, minors, triangularity })
}

/// `φ(X) = (Y, Z)`.
pub fn chart_forward(x: &CMatrix, center: &ChartCenter) -> Result<ChartPoint> {
    Ok(chart_forward_parts(x, center)?.point)
}

/// True iff `chart_forward` succeeds.
pub fn chart_contains(x: &CMatrix, center: &ChartCenter) -> bool {
    chart_forward(x, center).is_ok()
}

/// Which diagonal pattern an atlas must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    SlComplex,
    SlReal,
    SlH,
}

/// `(λ_1, λ̄_1, …, λ_m, λ̄_m)` within tolerance.
pub fn is_slh_pattern(lambda: &[C64], tol: &Tolerance) -> bool {
    lambda.len() % 2 == 0
        && lambda
            .chunks(2)
            .all(|p| tol.close((p[1] - p[0].conj()).norm(), p[0].norm().max(1.0)))
}

/// Permutations of `2m` indices that map each pair `{2a, 2a+1}` (0-based) onto a pair.
pub fn paired_permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for blocks in (0..m).permutations(m) {
        for flips in 0..(1usize << m) {
            let mut perm = Vec::with_capacity(2 * m);
            for (a, &b) in blocks.iter().enumerate() {
                let (first, second) = if flips >> a & 1 == 1 { (2 * b + 1, 2 * b) } else { (2 * b, 2 * b + 1) };
                perm.push(first);
                perm.push(second);
            }
            out.push(perm);
        }
    }
    out
}

/// Weyl translates of the center: the diagonal reorderings allowed by the form.
pub fn atlas_centers(center: &ChartCenter, form: Form) -> Result<Vec<ChartCenter>> {
    let n = center.n();
    let tol = center.tol();
    match form {
        Form::SlComplex => Ok((0..n).permutations(n).map(|p| center.permuted(&p)).collect()),
        Form::SlReal => {
            let scale = center.spectral_radius().max(1.0);
            if center.lambda().iter().any(|z| !tol.close(z.im.abs(), scale)) {
                return Err(TodaError::NotInForm);
            }
            Ok((0..n).permutations(n).map(|p| center.permuted(&p)).collect())
        }
        Form::SlH => {
            if !is_slh_pattern(center.lambda(), tol) {
                return Err(TodaError::NotInForm);
            }
            Ok(paired_permutations(n / 2).iter().map(|p| center.permuted(p)).collect())
        }
    }
}

/// Indices of the first atlas center (in `atlas_centers` order) whose chart contains `X`.
pub fn find_chart(x: &CMatrix, centers: &[ChartCenter]) -> Option<usize> {
    centers.iter().position(|ce| chart_contains(x, ce))
}

/// A monotone set of lower-triangular positions (0-based `(i, j)`, `i ≥ j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    n: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl Profile {
    /// `p = {(i, j) : i ≥ j, ∃ (i', j') ∈ S with i ≤ i', j ≥ j'}`.
    pub fn close(n: usize, generators: &[(usize, usize)]) -> Result<Self> {
        for &(i, j) in generators {
            if i < j || i >= n {
                return Err(TodaError::InvalidInput(format!("profile generator ({i}, {j}) is not a lower position")));
            }
        }
        let mut pairs = BTreeSet::new();
        for i in 0..n {
            for j in 0..=i {
                if generators.iter().any(|&(gi, gj)| i <= gi && j >= gj) {
                    pairs.insert((i, j));
                }
            }
        }
        Ok(Profile { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < j || self.pairs.contains(&(i, j))
    }

    /// Largest entry of `X` outside the support of `V_p` (upper triangle plus `p`).
    pub fn excess(&self, x: &CMatrix) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                if !self.contains(i, j) {
                    r = r.max(x[(i, j)].norm());
                }
            }
        }
        r
    }

    pub fn in_vp(&self, x: &CMatrix, tol: &Tolerance) -> bool {
        x.n() == self.n && self.excess(x) <= tol.abs
    }
}

/// `X ∈ V_p ⇒ [X, π_k f(X)] ∈ V_p`, evaluated numerically (vacuously true off `V_p`).
pub fn profile_tangent(ctx: &IwasawaContext, p: &Profile, x: &CMatrix, f: &HierarchyPoly) -> Result<bool> {
    if !p.in_vp(x, &ctx.tol) {
        return Ok(true);
    }
    let v = ctx.toda_field(x, f)?;
    Ok(p.in_vp(&v, &ctx.tol))
}
