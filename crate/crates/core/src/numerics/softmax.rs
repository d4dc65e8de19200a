use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use crate::scalar::Scalar;

/// Row-wise softmax with max subtraction. Entries below `ε²` are flushed to
/// zero so that downstream products stay out of the subnormal range.
pub fn softmax_forward<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    logits.ensure_matrix("softmax_forward")?;
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        let tiny = T::epsilon() * T::epsilon();
        for v in row.iter_mut() {
            *v /= total;
            if *v < tiny {
                *v = T::zero();
            }
        }
    }
    Ok(out)
}

/// Jacobian-vector product: `dl = p ⊙ (g − ⟨p, g⟩)` per row.
pub fn softmax_backward<T: Scalar>(probs: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if probs.shape() != grad_out.shape() {
        return Err(Error::dim("softmax_backward", probs.shape(), grad_out.shape()));
    }
    probs.ensure_matrix("softmax_backward")?;
    let mut out = Tensor::zeros(probs.shape());
    for i in 0..probs.rows() {
        let p = probs.row(i);
        let g = grad_out.row(i);
        let dot: T = p.iter().zip(g).map(|(&a, &b)| a * b).sum();
        for ((o, &pk), &gk) in out.row_mut(i).iter_mut().zip(p).zip(g) {
            *o = pk * (gk - dot);
        }
    }
    Ok(out)
}
