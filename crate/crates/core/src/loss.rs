use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean softmax cross-entropy over a batch of raw logits.
///
/// Works on logits rather than probabilities: the fused form
/// `log-sum-exp(z) - z_label` avoids materializing a softmax and its
/// numerically delicate log. Returns the scalar loss and the gradient with
/// respect to the logits, `(softmax(z) - onehot(label)) / batch`.
pub fn cross_entropy<E: Scalar>(logits: &Tensor<E>, labels: &[usize]) -> Result<(E, Tensor<E>)> {
    if logits.rank() != 2 {
        return Err(CoreError::InvalidTensor(format!(
            "cross-entropy expects [batch, classes] logits, got shape {:?}",
            logits.shape()
        )));
    }
    let (n, c) = (logits.shape()[0], logits.shape()[1]);
    if n == 0 {
        return Err(CoreError::EmptyBatch);
    }
    if labels.len() != n {
        return Err(CoreError::InvalidArgument(format!(
            "{} labels for a batch of {n}",
            labels.len()
        )));
    }
    if c < 2 {
        return Err(CoreError::InvalidArgument(format!(
            "cross-entropy needs at least 2 classes, got {c}"
        )));
    }
    for &label in labels {
        if label >= c {
            return Err(CoreError::LabelOutOfRange { label, classes: c });
        }
    }

    let inv_n = E::one() / E::of_f64(n as f64);
    let mut grad = Tensor::zeros(logits.shape());
    let mut total = E::zero();
    for i in 0..n {
        let row = &logits.data()[i * c..(i + 1) * c];
        let max = row.iter().cloned().fold(E::neg_infinity(), E::max);
        let mut sum = E::zero();
        for &z in row {
            sum = sum + (z - max).exp();
        }
        let lse = max + sum.ln();
        total = total + lse - row[labels[i]];
        let g_row = &mut grad.data_mut()[i * c..(i + 1) * c];
        for j in 0..c {
            let p = (row[j] - max).exp() / sum;
            let y = if j == labels[i] { E::one() } else { E::zero() };
            g_row[j] = (p - y) * inv_n;
        }
    }
    let loss = total * inv_n;
    if !loss.is_finite() {
        return Err(CoreError::NonFiniteLoss(format!(
            "cross-entropy produced {}",
            loss.as_f64()
        )));
    }
    Ok((loss, grad))
}

/// Margin-based contrastive loss over paired embeddings.
///
/// For embeddings `a[i]`, `b[i]` at Euclidean distance `d`:
/// similar pairs contribute `d^2`, dissimilar pairs `max(0, margin - d)^2`,
/// averaged over the batch. Returns the loss and the gradients with respect
/// to each side. A dissimilar pair at exactly zero distance has no defined
/// push direction, so its gradient is zero.
pub fn contrastive_loss<E: Scalar>(
    a: &Tensor<E>,
    b: &Tensor<E>,
    same: &[bool],
    margin: E,
) -> Result<(E, Tensor<E>, Tensor<E>)> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(CoreError::InvalidTensor(format!(
            "contrastive loss expects [batch, dim] embeddings, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.shape() != b.shape() {
        return Err(CoreError::InvalidTensor(format!(
            "embedding branches disagree: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (n, d) = (a.shape()[0], a.shape()[1]);
    if n == 0 {
        return Err(CoreError::EmptyBatch);
    }
    if same.len() != n {
        return Err(CoreError::InvalidArgument(format!(
            "{} pair labels for a batch of {n}",
            same.len()
        )));
    }
    if margin <= E::zero() {
        return Err(CoreError::InvalidArgument(format!(
            "margin must be positive, got {}",
            margin.as_f64()
        )));
    }

    let inv_n = E::one() / E::of_f64(n as f64);
    let two = E::of_f64(2.0);
    let mut grad_a = Tensor::zeros(a.shape());
    let mut grad_b = Tensor::zeros(b.shape());
    let mut total = E::zero();
    for i in 0..n {
        let ra = &a.data()[i * d..(i + 1) * d];
        let rb = &b.data()[i * d..(i + 1) * d];
        let mut sq = E::zero();
        for j in 0..d {
            let diff = ra[j] - rb[j];
            sq = sq + diff * diff;
        }
        let dist = sq.sqrt();
        if same[i] {
            total = total + sq;
            // d(d^2)/da = 2(a - b)
            let ga = &mut grad_a.data_mut()[i * d..(i + 1) * d];
            let gb = &mut grad_b.data_mut()[i * d..(i + 1) * d];
            for j in 0..d {
                let g = two * (ra[j] - rb[j]) * inv_n;
                ga[j] = g;
                gb[j] = -g;
            }
        } else {
            let slack = margin - dist;
            if slack > E::zero() {
                total = total + slack * slack;
                if dist > E::zero() {
                    // d(max(0, m-d)^2)/da = -2(m-d)/d * (a - b)
                    let coef = -two * slack / dist * inv_n;
                    let ga = &mut grad_a.data_mut()[i * d..(i + 1) * d];
                    let gb = &mut grad_b.data_mut()[i * d..(i + 1) * d];
                    for j in 0..d {
                        let g = coef * (ra[j] - rb[j]);
                        ga[j] = g;
                        gb[j] = -g;
                    }
                }
                // dist == 0: coincident dissimilar pair, gradient left at zero
            }
        }
    }
    let loss = total * inv_n;
    if !loss.is_finite() {
        return Err(CoreError::NonFiniteLoss(format!(
            "contrastive loss produced {}",
            loss.as_f64()
        )));
    }
    Ok((loss, grad_a, grad_b))
}
