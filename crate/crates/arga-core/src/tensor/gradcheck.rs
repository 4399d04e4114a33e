use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::dense::DenseMatrix;

/// Default perturbation for central differences; small enough to bound the
/// O(eps²) truncation error, large enough to survive f64 cancellation.
pub const FD_EPSILON: f64 = 1e-5;

/// Central-difference gradient estimate of a scalar-valued function, one
/// entry at a time: (loss(x + eps·e) − loss(x − eps·e)) / (2·eps).
///
/// The oracle every analytic backward pass in this crate is checked against.
/// `loss_fn` must be deterministic; a non-finite loss at any probe point is
/// an error.
pub fn finite_difference_gradient<S, F>(
    mut loss_fn: F,
    at: &DenseMatrix<S>,
    eps: S,
) -> Result<DenseMatrix<S>>
where
    S: Scalar,
    F: FnMut(&DenseMatrix<S>) -> Result<S>,
{
    if eps <= S::zero() {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let mut probe = at.clone();
    let mut grad = DenseMatrix::zeros(at.rows(), at.cols());
    for idx in 0..at.data().len() {
        let original = probe.data()[idx];
        probe.data_mut()[idx] = original + eps;
        let up = loss_fn(&probe)?;
        probe.data_mut()[idx] = original - eps;
        let down = loss_fn(&probe)?;
        probe.data_mut()[idx] = original;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss while probing entry {idx}: {up} / {down}"
            )));
        }
        grad.data_mut()[idx] = (up - down) / (S::from_f64_lossy(2.0) * eps);
    }
    Ok(grad)
}

/// Worst relative disagreement between two gradients, with the denominator
/// floored at 1e-8 so near-zero entries compare absolutely.
pub fn max_relative_error<S: Scalar>(
    analytic: &DenseMatrix<S>,
    numeric: &DenseMatrix<S>,
) -> Result<S> {
    if analytic.shape() != numeric.shape() {
        return Err(Error::shape(
            "max_relative_error",
            analytic.shape(),
            numeric.shape(),
        ));
    }
    let floor = S::from_f64_lossy(1e-8);
    let mut worst = S::zero();
    for (&a, &b) in analytic.data().iter().zip(numeric.data()) {
        let denom = a.abs().max(b.abs()).max(floor);
        worst = worst.max((a - b).abs() / denom);
    }
    Ok(worst)
}
