//! Eigendecomposition onto an ordered chart center.

use crate::charts::ChartCenter;
use crate::error::{Result, TodaError};
use crate::matrix::{c, CMatrix, C64};

const SCHUR_MAX_ITER: usize = 10_000;
const REFINE_STEPS: usize = 2;

/// Complex Schur form `X = Q T Q*`.
fn schur(x: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let s = x
        .inner()
        .clone()
        .try_schur(f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(TodaError::ConvergenceFailure)?;
    let (q, t) = s.unpack();
    Ok((CMatrix::wrap(q), CMatrix::wrap(t)))
}

pub fn eigenvalues(x: &CMatrix) -> Result<Vec<C64>> {
    Ok(schur(x)?.1.diagonal())
}

/// Unit eigenvectors of an upper triangular matrix with distinct diagonal, by back substitution.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.n();
    let scale = t.max_abs().max(f64::MIN_POSITIVE);
    let mut v = CMatrix::zeros(n);
    for k in 0..n {
        let tkk = t[(k, k)];
        v[(k, k)] = c(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = c(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * v[(j, k)];
            }
            let mut d = t[(i, i)] - tkk;
            if d.norm() < f64::EPSILON * scale {
                d = c(f64::EPSILON * scale, 0.0);
            }
            v[(i, k)] = -s / d;
        }
        let norm = (0..=k).map(|i| v[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..=k {
            v[(i, k)] /= norm;
        }
    }
    v
}

/// Newton steps on `(X - λ) v = 0` with the largest component of `v` pinned.
///
/// Schur vectors are only normwise accurate; tiny components of a graded
/// eigenvector come back with relative errors far above rounding. Forming the
/// residual directly recovers them.
fn refine_column(x: &CMatrix, v: &mut CMatrix, j: usize, lambda: C64) {
    let n = x.n();
    let p = (0..n).max_by(|&a, &b| v[(a, j)].norm().total_cmp(&v[(b, j)].norm())).unwrap_or(0);
    for _ in 0..REFINE_STEPS {
        let mut a = nalgebra::DMatrix::<C64>::zeros(n + 1, n + 1);
        let mut rhs = nalgebra::DVector::<C64>::zeros(n + 1);
        for i in 0..n {
            let mut r = -lambda * v[(i, j)];
            for k in 0..n {
                r += x[(i, k)] * v[(k, j)];
                a[(i, k)] = x[(i, k)];
            }
            a[(i, i)] -= lambda;
            a[(i, n)] = -v[(i, j)];
            rhs[i] = -r;
        }
        a[(n, p)] = c(1.0, 0.0);
        let Some(d) = a.lu().solve(&rhs) else { return };
        if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return;
        }
        for i in 0..n {
            v[(i, j)] += d[i];
        }
    }
}

/// Greedy nearest assignment: `perm[j]` is the computed eigenvalue index matched to `target[j]`.
///
/// Returns the permutation and the worst matched distance.
pub fn match_spectrum(computed: &[C64], target: &[C64]) -> (Vec<usize>, f64) {
    let n = target.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, mu) in computed.iter().enumerate() {
        for (j, la) in target.iter().enumerate() {
            pairs.push(((mu - la).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; computed.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if perm[j] == usize::MAX && !used[i] {
            perm[j] = i;
            used[i] = true;
            worst = worst.max(d);
        }
    }
    (perm, worst)
}

/// `V` with `V⁻¹ X V = diag(Λ)` in the center's order and `det V = 1`.
pub fn eig_ordered(x: &CMatrix, center: &ChartCenter) -> Result<CMatrix> {
    let n = center.n();
    if x.n() != n {
        return Err(TodaError::DimensionMismatch { expected: n, actual: x.n() });
    }
    let match_tol = center.match_tolerance();
    let (q, t) = schur(x)?;
    let mu = t.diagonal();
    for i in 0..n {
        for j in i + 1..n {
            if (mu[i] - mu[j]).norm() <= match_tol {
                return Err(TodaError::NotSimpleSpectrum);
            }
        }
    }
    let (perm, worst) = match_spectrum(&mu, center.lambda());
    if worst > match_tol {
        return Err(TodaError::SpectrumMismatch { worst });
    }
    let w = &q * &triangular_eigenvectors(&t);
    let mut v = CMatrix::from_fn(n, |i, j| w[(i, perm[j])]);
    for j in 0..n {
        refine_column(x, &mut v, j, center.lambda()[j]);
    }
    let d = v.det();
    if d.norm() == 0.0 || !d.re.is_finite() {
        return Err(TodaError::Singular);
    }
    let root = d.powf(1.0 / n as f64);
    v = v.scale(root.inv());
    Ok(v)
}

/// Hausdorff distance between two finite point sets in the complex plane.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let one_side = |p: &[C64], q: &[C64]| {
        p.iter()
            .map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_side(a, b).max(one_side(b, a))
}
