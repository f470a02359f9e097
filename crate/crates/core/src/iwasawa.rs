//! Iwasawa splittings `g = k ⊕ u` and the Toda hierarchy fields they induce.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Result, TodaError};
use crate::matrix::{c, CMatrix, Tolerance, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraKind {
    SlComplex(usize),
    SlReal(usize),
    /// Complex skew-symmetric 5×5 matrices with compact part `so_R(5)`.
    SoC5,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwasawaContext {
    pub kind: AlgebraKind,
    pub tol: Tolerance,
}

/// `f(x) = Σ c_j x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyPoly {
    coeffs: Vec<C64>,
}

impl HierarchyPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(TodaError::InvalidInput("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite polynomial coefficient".into()));
        }
        Ok(HierarchyPoly { coeffs })
    }

    /// `f(x) = x`, the Toda field itself.
    pub fn identity() -> Self {
        HierarchyPoly { coeffs: vec![c(0.0, 0.0), c(1.0, 0.0)] }
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(c(0.0, 0.0), |acc, &a| acc * z + a)
    }

    /// `f(X)` by Horner's rule.
    pub fn eval_matrix(&self, x: &CMatrix) -> CMatrix {
        let n = x.n();
        let id = CMatrix::identity(n);
        self.coeffs
            .iter()
            .rev()
            .fold(CMatrix::zeros(n), |acc, &a| &(&acc * x) + &id.scale(a))
    }

    /// True when only odd powers appear, so `f` maps skew-symmetric matrices to themselves.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(|z| *z == c(0.0, 0.0))
    }
}

impl Default for HierarchyPoly {
    fn default() -> Self {
        Self::identity()
    }
}

impl IwasawaContext {
    pub fn new(kind: AlgebraKind, tol: Tolerance) -> Result<Self> {
        match kind {
            AlgebraKind::SlComplex(0) | AlgebraKind::SlReal(0) => {
                Err(TodaError::InvalidInput("dimension must be positive".into()))
            }
            _ => Ok(IwasawaContext { kind, tol }),
        }
    }

    pub fn sl_complex(n: usize) -> Self {
        IwasawaContext { kind: AlgebraKind::SlComplex(n), tol: Tolerance::default() }
    }

    pub fn n(&self) -> usize {
        match self.kind {
            AlgebraKind::SlComplex(n) | AlgebraKind::SlReal(n) => n,
            AlgebraKind::SoC5 => 5,
        }
    }

    /// Worst violation of the algebra's defining conditions, relative to `max(1, ‖X‖_F)`.
    pub fn algebra_residual(&self, x: &CMatrix) -> f64 {
        if x.n() != self.n() {
            return f64::INFINITY;
        }
        let scale = x.frobenius().max(1.0);
        let trace = x.trace().norm();
        let extra = match self.kind {
            AlgebraKind::SlComplex(_) => 0.0,
            AlgebraKind::SlReal(_) => x.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            AlgebraKind::SoC5 => (x + &x.transpose()).max_abs(),
        };
        trace.max(extra) / scale
    }

    pub fn in_algebra(&self, x: &CMatrix) -> bool {
        let r = self.algebra_residual(x);
        let scale = x.frobenius().max(1.0);
        r * scale <= self.tol.abs + self.tol.rel * scale
    }

    fn require(&self, x: &CMatrix) -> Result<()> {
        if x.n() != self.n() {
            return Err(TodaError::DimensionMismatch { expected: self.n(), actual: x.n() });
        }
        if self.in_algebra(x) {
            Ok(())
        } else {
            Err(TodaError::NotInAlgebra)
        }
    }

    /// `π_k X`.
    pub fn project_k(&self, x: &CMatrix) -> Result<CMatrix> {
        self.require(x)?;
        Ok(self.project_k_raw(x))
    }

    /// `π_u X = X − π_k X`.
    pub fn project_u(&self, x: &CMatrix) -> Result<CMatrix> {
        Ok(x - &self.project_k(x)?)
    }

    /// The splitting formula without membership checks. For the `sl` kinds it is
    /// valid on all of `gl_n`, which is what the hierarchy needs for `f(X)`.
    pub(crate) fn project_k_raw(&self, x: &CMatrix) -> CMatrix {
        match self.kind {
            AlgebraKind::SlComplex(_) | AlgebraKind::SlReal(_) => sl_project_k(x),
            AlgebraKind::SoC5 => so5_project_k(x),
        }
    }

    /// `[X, π_k f(X)]`.
    pub fn toda_field(&self, x: &CMatrix, f: &HierarchyPoly) -> Result<CMatrix> {
        self.require(x)?;
        let fx = f.eval_matrix(x);
        if self.kind == AlgebraKind::SoC5 && !self.in_algebra(&(&fx - &CMatrix::identity(5).scale(fx.trace() / 5.0))) {
            return Err(TodaError::NotInAlgebra);
        }
        Ok(self.field_raw(x, f))
    }

    pub(crate) fn field_raw(&self, x: &CMatrix, f: &HierarchyPoly) -> CMatrix {
        let p = self.project_k_raw(&f.eval_matrix(x));
        x.commutator(&p)
    }
}

/// `L_s − L_s* + i Im(diag X)` with `L_s` the strictly lower part.
fn sl_project_k(x: &CMatrix) -> CMatrix {
    let n = x.n();
    CMatrix::from_fn(n, |i, j| {
        if i > j {
            x[(i, j)]
        } else if i < j {
            -x[(j, i)].conj()
        } else {
            c(0.0, x[(i, i)].im)
        }
    })
}

/// Real coordinates of a skew-symmetric 5×5 matrix: (re, im) of the ten entries above the diagonal.
fn so5_coords(x: &CMatrix) -> [f64; 20] {
    let mut v = [0.0; 20];
    let mut k = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            v[k] = x[(i, j)].re;
            v[k + 10] = x[(i, j)].im;
            k += 1;
        }
    }
    v
}

fn skew_embed_block(block: [[C64; 2]; 2], r: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(5);
    for a in 0..2 {
        for b in 0..2 {
            m[(r + a, col + b)] = block[a][b];
            m[(col + b, r + a)] = -block[a][b];
        }
    }
    m
}

fn skew_embed_column(v: [C64; 2], r: usize) -> CMatrix {
    let mut m = CMatrix::zeros(5);
    for a in 0..2 {
        m[(r + a, 4)] = v[a];
        m[(4, r + a)] = -v[a];
    }
    m
}

/// Root vectors `Y_{e1−e2}, Y_{e1+e2}, Y_{e1}, Y_{e2}` of `so_C(5)` for the Cartan subalgebra `a_0`.
pub fn so5_root_vectors() -> [CMatrix; 4] {
    let one = c(1.0, 0.0);
    [
        skew_embed_block([[one, I], [-I, one]], 0, 2),
        skew_embed_block([[one, -I], [-I, -one]], 0, 2),
        skew_embed_column([one, -I], 0),
        skew_embed_column([one, -I], 2),
    ]
}

/// Basis `A_1, A_2` of the Cartan subalgebra `a_0`.
pub fn so5_cartan_basis() -> [CMatrix; 2] {
    let mut a1 = CMatrix::zeros(5);
    a1[(0, 1)] = I;
    a1[(1, 0)] = -I;
    let mut a2 = CMatrix::zeros(5);
    a2[(2, 3)] = I;
    a2[(3, 2)] = -I;
    [a1, a2]
}

/// Inverse of the real 20×20 matrix whose columns are the coordinates of the basis
/// `so_R(5)` (10 elementary real skew matrices), `a_0` (2), and `n` (`Y`, `iY` for each root vector).
fn so5_solver() -> &'static DMatrix<f64> {
    static SOLVER: OnceLock<DMatrix<f64>> = OnceLock::new();
    SOLVER.get_or_init(|| {
        let mut cols: Vec<[f64; 20]> = Vec::with_capacity(20);
        for k in 0..10 {
            let mut e = [0.0; 20];
            e[k] = 1.0;
            cols.push(e);
        }
        for a in so5_cartan_basis() {
            cols.push(so5_coords(&a));
        }
        for y in so5_root_vectors() {
            cols.push(so5_coords(&y));
            cols.push(so5_coords(&y.scale(I)));
        }
        let b = DMatrix::from_fn(20, 20, |i, j| cols[j][i]);
        b.try_inverse().expect("so_R(5) + a_0 + n spans so_C(5)")
    })
}

/// Compact part of the splitting `so_C(5) = so_R(5) ⊕ a_0 ⊕ n`.
fn so5_project_k(x: &CMatrix) -> CMatrix {
    let v = so5_coords(x);
    let coef = so5_solver() * nalgebra::DVector::from_row_slice(&v);
    let mut out = CMatrix::zeros(5);
    let mut k = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            out[(i, j)] = c(coef[k], 0.0);
            out[(j, i)] = c(-coef[k], 0.0);
            k += 1;
        }
    }
    out
}

/// `Λ = diag(λ_1 J, λ_2 J, 0)` with `J = [[0, i], [−i, 0]]`; spectrum `{±λ_1, ±λ_2, 0}`.
pub fn so5_center_matrix(l1: C64, l2: C64) -> CMatrix {
    let mut m = CMatrix::zeros(5);
    m[(0, 1)] = I * l1;
    m[(1, 0)] = -I * l1;
    m[(2, 3)] = I * l2;
    m[(3, 2)] = -I * l2;
    m
}
