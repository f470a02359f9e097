use crate::charts::ChartCenter;
use crate::eigen::eig_ordered;
use crate::error::{Result, TodaError};
use crate::matrix::CMatrix;

/// `exp(tX)`.
///
/// With a center, `V diag(e^{tλ}) V⁻¹` from the ordered eigenbasis; otherwise (or
/// if `X` does not diagonalize onto the center) scaling and squaring with a
/// Padé core.
pub fn matexp(x: &CMatrix, t: f64, center: Option<&ChartCenter>) -> Result<CMatrix> {
    if let Some(ce) = center {
        if let Ok(v) = eig_ordered(x, ce) {
            let vi = v.inverse()?;
            let d: Vec<_> = ce.lambda().iter().map(|l| (l * t).exp()).collect();
            let e = &(&v * &CMatrix::from_diagonal(&d)) * &vi;
            return e.ensure_finite().map_err(|_| TodaError::ConvergenceFailure);
        }
    }
    let scaled = x * t;
    CMatrix::wrap(scaled.inner().exp()).ensure_finite().map_err(|_| TodaError::ConvergenceFailure)
}
