//! Structured factorizations: `g = k u` (QR), `g = k l a` (KLA), `g = l d u` (LDU),
//! plus leading principal minors and the two cell predicates.

use crate::error::{Result, TodaError};
use crate::matrix::{c, CMatrix, Tolerance, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Unitary,
    UnitLower,
    UnitUpper,
    PositiveDiagonal,
    Diagonal,
    UpperPositiveDiagonal,
}

impl Role {
    pub fn holds(self, m: &CMatrix, tol: &Tolerance) -> bool {
        match self {
            Role::Unitary => tol.close(m.unitarity_residual(), 1.0),
            Role::UnitLower => m.is_unit_lower(tol),
            Role::UnitUpper => m.is_unit_upper(tol),
            Role::Diagonal => m.is_diagonal(tol),
            Role::PositiveDiagonal => {
                m.is_diagonal(tol)
                    && m.diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= tol.abs + tol.rel * d.re)
            }
            Role::UpperPositiveDiagonal => m.is_in_u(tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub factors: [CMatrix; 2],
    pub roles: [Role; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorTriple {
    pub factors: [CMatrix; 3],
    pub roles: [Role; 3],
}

impl FactorPair {
    pub fn product(&self) -> CMatrix {
        &self.factors[0] * &self.factors[1]
    }

    pub fn roles_hold(&self, tol: &Tolerance) -> bool {
        self.roles.iter().zip(&self.factors).all(|(r, m)| r.holds(m, tol))
    }

    pub fn into_parts(self) -> (CMatrix, CMatrix) {
        let [a, b] = self.factors;
        (a, b)
    }
}

impl FactorTriple {
    pub fn product(&self) -> CMatrix {
        &(&self.factors[0] * &self.factors[1]) * &self.factors[2]
    }

    pub fn roles_hold(&self, tol: &Tolerance) -> bool {
        self.roles.iter().zip(&self.factors).all(|(r, m)| r.holds(m, tol))
    }

    pub fn into_parts(self) -> (CMatrix, CMatrix, CMatrix) {
        let [a, b, d] = self.factors;
        (a, b, d)
    }
}

/// `g = k u`, `k` unitary, `u` upper triangular with positive diagonal.
///
/// Modified Gram–Schmidt with one reorthogonalization pass. A column counts as
/// dependent when its residual falls below `n·eps` times its own norm, so the
/// test is blind to column scaling (which `κ` is too).
pub fn gram_schmidt_qr(g: &CMatrix) -> Result<FactorPair> {
    let n = g.n();
    let mut q = CMatrix::zeros(n);
    let mut r = CMatrix::zeros(n);
    let mut v = vec![c(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            v[i] = g[(i, j)];
        }
        let col_norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for p in 0..j {
                let mut s = c(0.0, 0.0);
                for i in 0..n {
                    s += q[(i, p)].conj() * v[i];
                }
                r[(p, j)] += s;
                for i in 0..n {
                    v[i] -= s * q[(i, p)];
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > (n as f64) * f64::EPSILON * col_norm) {
            return Err(TodaError::Singular);
        }
        r[(j, j)] = c(norm, 0.0);
        for i in 0..n {
            q[(i, j)] = v[i] / norm;
        }
    }
    Ok(FactorPair { factors: [q, r], roles: [Role::Unitary, Role::UpperPositiveDiagonal] })
}

/// `κ(g)`: the unitary factor of `g = k u`.
pub fn kappa(g: &CMatrix) -> Result<CMatrix> {
    Ok(gram_schmidt_qr(g)?.into_parts().0)
}

/// `ν(g)`: the triangular factor of `g = k u`.
pub fn nu(g: &CMatrix) -> Result<CMatrix> {
    Ok(gram_schmidt_qr(g)?.into_parts().1)
}

/// `g = k l a`: `k` unitary, `l` unit lower, `a` positive diagonal.
///
/// Computed as the QR factorization of the index-reversed matrix.
pub fn ql_kla(g: &CMatrix) -> Result<FactorTriple> {
    let n = g.n();
    let p = CMatrix::reversal(n);
    let (kr, ur) = gram_schmidt_qr(&(&(&p * g) * &p))?.into_parts();
    let k = &(&p * &kr) * &p;
    let lower = &(&p * &ur) * &p;
    let a_diag = lower.diagonal();
    let l = CMatrix::from_fn(n, |i, j| if i >= j { lower[(i, j)] / a_diag[j] } else { c(0.0, 0.0) });
    let a = CMatrix::from_diagonal(&a_diag);
    Ok(FactorTriple { factors: [k, l, a], roles: [Role::Unitary, Role::UnitLower, Role::PositiveDiagonal] })
}

/// Euclidean norms of the rows of the leading `j×j` block, `j = 1..n`, as running products.
fn row_norm_products(g: &CMatrix) -> Vec<f64> {
    let n = g.n();
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let mut prod = 1.0;
        for i in 0..j {
            let s: f64 = (0..j).map(|k| g[(i, k)].norm_sqr()).sum();
            prod *= s.sqrt();
        }
        out.push(prod);
    }
    out
}

/// `Δ_j` = determinant of the leading `j×j` block, `j = 1..n`.
pub fn principal_minors(g: &CMatrix) -> Vec<C64> {
    (1..=g.n()).map(|j| g.leading(j).det()).collect()
}

/// `|Δ_j| / Π_{i≤j} ‖row_i of the leading j×j block‖`, in `[0, 1]` by Hadamard's inequality.
pub fn relative_minors(g: &CMatrix) -> Vec<f64> {
    let minors = principal_minors(g);
    row_norm_products(g)
        .into_iter()
        .zip(minors)
        .map(|(s, d)| if s == 0.0 { 0.0 } else { d.norm() / s })
        .collect()
}

/// Doolittle `g = l d u` without pivoting.
///
/// Fails with `MinorVanishes(j)` (1-based) at the first leading minor whose
/// relative magnitude is below `tol.minor_floor`.
pub fn ldu(g: &CMatrix, tol: &Tolerance) -> Result<FactorTriple> {
    let n = g.n();
    let scales = row_norm_products(g);
    let mut work = g.clone();
    let mut l = CMatrix::identity(n);
    let mut delta = c(1.0, 0.0);
    for j in 0..n {
        let pivot = work[(j, j)];
        delta *= pivot;
        let rel = if scales[j] == 0.0 { 0.0 } else { delta.norm() / scales[j] };
        if !(rel >= tol.minor_floor) || pivot == c(0.0, 0.0) {
            return Err(TodaError::MinorVanishes(j + 1));
        }
        for i in j + 1..n {
            let m = work[(i, j)] / pivot;
            l[(i, j)] = m;
            for k in j..n {
                let t = work[(j, k)];
                work[(i, k)] -= m * t;
            }
        }
    }
    let d_diag = work.diagonal();
    let u = CMatrix::from_fn(n, |i, j| if j > i { work[(i, j)] / d_diag[i] } else if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let d = CMatrix::from_diagonal(&d_diag);
    Ok(FactorTriple { factors: [l, d, u], roles: [Role::UnitLower, Role::Diagonal, Role::UnitUpper] })
}

/// Membership in the big cell `C`: unitary with every leading minor real positive.
pub fn in_cell_c(k: &CMatrix, tol: &Tolerance) -> bool {
    if !tol.close(k.unitarity_residual(), 1.0) {
        return false;
    }
    let minors = principal_minors(k);
    let rel = relative_minors(k);
    minors.iter().zip(rel).all(|(d, r)| {
        r > tol.minor_floor && d.re > 0.0 && d.im.abs() <= tol.abs + tol.rel * d.norm()
    })
}

/// Membership in `D = ν(L)`: all leading minors of `(u* u)⁻¹` equal 1.
///
/// The comparison is relative to the condition number of `u`, the scale at
/// which those minors can be resolved.
pub fn in_cell_d(u: &CMatrix, tol: &Tolerance) -> Result<bool> {
    if !u.is_in_u(tol) {
        return Err(TodaError::NotInU);
    }
    let u_inv = u.inverse_upper()?;
    let cond = (u.frobenius() * u_inv.frobenius()).max(1.0);
    let m = &u_inv * &u_inv.adjoint();
    Ok(principal_minors(&m).iter().all(|d| tol.close((d - c(1.0, 0.0)).norm(), cond)))
}
