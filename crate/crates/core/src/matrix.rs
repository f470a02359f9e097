use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, TodaError};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Tolerance policy shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Relative threshold below which a leading principal minor counts as zero.
    pub minor_floor: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-10, minor_floor: 1e-10 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64, minor_floor: f64) -> Result<Self> {
        for (name, v) in [("abs", abs), ("rel", rel), ("minor_floor", minor_floor)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(TodaError::InvalidInput(format!("tolerance {name} = {v}")));
            }
        }
        Ok(Tolerance { abs, rel, minor_floor })
    }

    pub fn with_rel(self, rel: f64) -> Self {
        Tolerance { rel, ..self }
    }

    /// `residual <= abs + rel * scale`.
    #[inline]
    pub fn close(&self, residual: f64, scale: f64) -> bool {
        residual <= self.abs + self.rel * scale
    }
}

/// Dense square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.n(), self.n())?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.n())
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    /// Checked constructor from a row-major entry list.
    pub fn from_row_slice(n: usize, entries: &[C64]) -> Result<Self> {
        if n == 0 {
            return Err(TodaError::InvalidInput("dimension must be positive".into()));
        }
        if entries.len() != n * n {
            return Err(TodaError::DimensionMismatch { expected: n * n, actual: entries.len() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(CMatrix(DMatrix::from_row_slice(n, n, entries)))
    }

    /// Checked constructor from real row-major data.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut v = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(TodaError::DimensionMismatch { expected: n, actual: r.len() });
            }
            v.extend(r.iter().map(|&x| c(x, 0.0)));
        }
        Self::from_row_slice(n, &v)
    }

    /// Checked constructor from complex rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let mut v = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(TodaError::DimensionMismatch { expected: n, actual: r.len() });
            }
            v.extend_from_slice(r);
        }
        Self::from_row_slice(n, &v)
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(TodaError::InvalidInput(format!("matrix is {}x{}", m.nrows(), m.ncols())));
        }
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(CMatrix(m))
    }

    /// Unchecked wrap used internally where finiteness is guaranteed or checked later.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        CMatrix(m)
    }

    pub fn zeros(n: usize) -> Self {
        CMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let n = d.len();
        CMatrix(DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) }))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(DMatrix::from_fn(n, n, f))
    }

    /// Anti-identity (reversal permutation).
    pub fn reversal(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i + j + 1 == n { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(TodaError::InvalidInput("non-finite matrix entry".into()))
        }
    }

    pub fn row_major(&self) -> Vec<C64> {
        let n = self.n();
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        CMatrix(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        CMatrix(self.0.map(|z| z.conj()))
    }

    pub fn map(&self, f: impl FnMut(C64) -> C64) -> Self {
        CMatrix(self.0.map(f))
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n()).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn det(&self) -> C64 {
        self.0.clone().determinant()
    }

    /// Inverse by partially pivoted LU; `Singular` if the pivot ratio collapses.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n();
        let lu = self.0.clone().lu();
        let u = lu.u();
        let mut dmax: f64 = 0.0;
        let mut dmin = f64::INFINITY;
        for i in 0..n {
            let d = u[(i, i)].norm();
            dmax = dmax.max(d);
            dmin = dmin.min(d);
        }
        if !(dmin > f64::EPSILON * dmax * n as f64) || dmax == 0.0 {
            return Err(TodaError::Singular);
        }
        let inv = lu.try_inverse().ok_or(TodaError::Singular)?;
        CMatrix(inv).ensure_finite().map_err(|_| TodaError::Singular)
    }

    /// Inverse of a lower triangular matrix by forward substitution; the upper triangle is ignored.
    pub fn inverse_lower(&self) -> Result<Self> {
        let inv = self.0.solve_lower_triangular(&DMatrix::identity(self.n(), self.n())).ok_or(TodaError::Singular)?;
        CMatrix(inv).ensure_finite().map_err(|_| TodaError::Singular)
    }

    /// Inverse of an upper triangular matrix by back substitution; the lower triangle is ignored.
    pub fn inverse_upper(&self) -> Result<Self> {
        let inv = self.0.solve_upper_triangular(&DMatrix::identity(self.n(), self.n())).ok_or(TodaError::Singular)?;
        CMatrix(inv).ensure_finite().map_err(|_| TodaError::Singular)
    }

    /// `g X g⁻¹`.
    pub fn conjugate_by(&self, g: &CMatrix) -> Result<Self> {
        Ok(g * self * &g.inverse()?)
    }

    pub fn commutator(&self, other: &CMatrix) -> Self {
        CMatrix(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn strictly_lower(&self) -> Self {
        Self::from_fn(self.n(), |i, j| if i > j { self[(i, j)] } else { c(0.0, 0.0) })
    }

    pub fn strictly_upper(&self) -> Self {
        Self::from_fn(self.n(), |i, j| if i < j { self[(i, j)] } else { c(0.0, 0.0) })
    }

    pub fn diag_part(&self) -> Self {
        Self::from_fn(self.n(), |i, j| if i == j { self[(i, j)] } else { c(0.0, 0.0) })
    }

    /// Leading `j×j` block.
    pub fn leading(&self, j: usize) -> Self {
        CMatrix(self.0.view((0, 0), (j, j)).into_owned())
    }

    /// Largest modulus of entries strictly above the diagonal.
    pub fn upper_residual(&self) -> f64 {
        let n = self.n();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                r = r.max(self[(i, j)].norm());
            }
        }
        r
    }

    /// Largest modulus of entries strictly below the diagonal.
    pub fn lower_residual(&self) -> f64 {
        self.transpose().upper_residual()
    }

    /// `‖A - B‖_F`.
    pub fn dist(&self, other: &CMatrix) -> f64 {
        (self - other).frobenius()
    }

    pub fn unitarity_residual(&self) -> f64 {
        (&self.adjoint() * self - CMatrix::identity(self.n())).max_abs()
    }

    pub fn skew_hermitian_residual(&self) -> f64 {
        (self + &self.adjoint()).max_abs()
    }

    pub fn is_unit_lower(&self, tol: &Tolerance) -> bool {
        let n = self.n();
        self.upper_residual() <= tol.abs
            && (0..n).all(|i| (self[(i, i)] - c(1.0, 0.0)).norm() <= tol.abs + tol.rel)
    }

    pub fn is_unit_upper(&self, tol: &Tolerance) -> bool {
        self.transpose().is_unit_lower(tol)
    }

    /// Upper triangular with strictly positive real diagonal.
    pub fn is_in_u(&self, tol: &Tolerance) -> bool {
        let scale = self.max_abs().max(1.0);
        self.lower_residual() <= tol.abs + tol.rel * scale
            && (0..self.n()).all(|i| {
                let d = self[(i, i)];
                d.re > 0.0 && d.im.abs() <= tol.abs + tol.rel * d.re
            })
    }

    pub fn is_diagonal(&self, tol: &Tolerance) -> bool {
        let scale = self.max_abs().max(1.0);
        self.upper_residual().max(self.lower_residual()) <= tol.abs + tol.rel * scale
    }
}

impl Deref for CMatrix {
    type Target = DMatrix<C64>;
    fn deref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, ij: (usize, usize)) -> &C64 {
        &self.0[ij]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, ij: (usize, usize)) -> &mut C64 {
        &mut self.0[ij]
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident) => {
        impl $tr<&CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: &CMatrix) -> CMatrix {
                CMatrix((&self.0).$f(&rhs.0))
            }
        }
        impl $tr<CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: CMatrix) -> CMatrix {
                CMatrix(self.0.$f(rhs.0))
            }
        }
        impl $tr<&CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: &CMatrix) -> CMatrix {
                CMatrix(self.0.$f(&rhs.0))
            }
        }
        impl $tr<CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: CMatrix) -> CMatrix {
                CMatrix((&self.0).$f(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-self.0)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-self.0.clone())
    }
}

impl Mul<C64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, s: C64) -> CMatrix {
        CMatrix(&self.0 * s)
    }
}

impl Mul<f64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, s: f64) -> CMatrix {
        CMatrix(&self.0 * c(s, 0.0))
    }
}

impl Mul<C64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, s: C64) -> CMatrix {
        CMatrix(self.0 * s)
    }
}

impl Mul<f64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, s: f64) -> CMatrix {
        CMatrix(self.0 * c(s, 0.0))
    }
}
