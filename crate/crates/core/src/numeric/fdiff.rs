//! Central finite differences, used as the oracle for every hand-written
//! backward pass.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// Central-difference gradient of `f` at `params`.
///
/// `f` receives a perturbed copy of `params`, one coordinate at a time, and must
/// be deterministic.
pub fn finite_diff_slice<F>(params: &[f64], h: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Numeric(format!("finite-difference step must be > 0, got {h}")));
    }
    let mut theta = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let plus = f(&theta);
        theta[i] = orig - h;
        let minus = f(&theta);
        theta[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!(
                "objective not finite at coordinate {i}: f(+h)={plus}, f(-h)={minus}"
            )));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

pub fn finite_diff_grad<F>(mut f: F, params: &DenseMatrix, h: f64) -> Result<DenseMatrix>
where
    F: FnMut(&DenseMatrix) -> f64,
{
    let (rows, cols) = params.shape();
    let grad = finite_diff_slice(params.as_slice(), h, |theta| {
        let m = DenseMatrix::from_vec(rows, cols, theta.to_vec()).expect("shape preserved");
        f(&m)
    })?;
    DenseMatrix::from_vec(rows, cols, grad)
}

/// Largest elementwise relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
