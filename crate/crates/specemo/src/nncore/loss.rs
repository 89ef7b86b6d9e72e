//! Softmax cross-entropy with the standard max-subtraction
//! stabilization.

use super::{shape_err, NnError, Scalar, Tensor};

/// Mean negative log-likelihood over the batch and its gradient:
/// grad = (softmax - onehot) / N.
pub fn softmax_xent<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    let [n, k] = *logits.shape() else {
        return Err(shape_err("softmax_xent", format!("logits must be [N, K], got {:?}", logits.shape())));
    };
    if labels.len() != n {
        return Err(shape_err(
            "softmax_xent",
            format!("{n} logit rows but {} labels", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(NnError::LabelOutOfRange { label: bad, k });
    }

    let mut grad = softmax_rows(logits)?;
    let mut loss = T::zero();
    let inv_n = T::from_f64(1.0 / n as f64);
    for (ni, &label) in labels.iter().enumerate() {
        let row = &mut grad.data_mut()[ni * k..][..k];
        let p = row[label];
        // p >= exp(stabilized logit) > 0, but guard the log anyway
        loss -= p.max(T::from_f64(1e-300)).ln();
        row[label] -= T::one();
        for v in row.iter_mut() {
            *v *= inv_n;
        }
    }
    loss *= inv_n;
    grad.assert_finite("softmax_xent");
    Ok((loss, grad))
}

/// Row-wise softmax probabilities.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let [n, k] = *logits.shape() else {
        return Err(shape_err("softmax", format!("logits must be [N, K], got {:?}", logits.shape())));
    };
    let mut out = logits.clone();
    for ni in 0..n {
        let row = &mut out.data_mut()[ni * k..][..k];
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out.assert_finite("softmax");
    Ok(out)
}
