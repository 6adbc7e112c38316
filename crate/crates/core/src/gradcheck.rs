use crate::error::{CoreError, Result};
use crate::loss::{contrastive_loss, cross_entropy};
use crate::network::Network;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Upper bound on parameters a finite-difference sweep will visit; two full
/// forward passes per parameter makes anything larger a mistake, not a test.
const MAX_CHECKED_PARAMS: usize = 20_000;

/// A differentiable scalar objective over a network, used to compare
/// backpropagated gradients against central finite differences.
pub trait Objective<E: Scalar> {
    /// Forward-only evaluation.
    fn loss(&self, net: &Network<E>) -> Result<E>;
    /// Forward plus backward, accumulating parameter gradients into `net`.
    fn loss_and_backward(&self, net: &mut Network<E>) -> Result<E>;
}

/// `loss = sum(weights ⊙ output)` — exercises every output coordinate with
/// a distinct upstream gradient, catching transposition mistakes that a
/// uniform sum would miss.
pub struct WeightedOutput<E> {
    pub input: Tensor<E>,
    pub weights: Tensor<E>,
}

impl<E: Scalar> Objective<E> for WeightedOutput<E> {
    fn loss(&self, net: &Network<E>) -> Result<E> {
        let y = net.forward_infer(&self.input)?;
        weighted_sum(&y, &self.weights)
    }

    fn loss_and_backward(&self, net: &mut Network<E>) -> Result<E> {
        let (y, trace) = net.forward(&self.input)?;
        let loss = weighted_sum(&y, &self.weights)?;
        net.backward(&trace, &self.weights)?;
        Ok(loss)
    }
}

fn weighted_sum<E: Scalar>(y: &Tensor<E>, w: &Tensor<E>) -> Result<E> {
    if y.shape() != w.shape() {
        return Err(CoreError::InvalidTensor(format!(
            "objective weights shaped {:?} but network produced {:?}",
            w.shape(),
            y.shape()
        )));
    }
    let mut s = E::zero();
    for (&a, &b) in y.data().iter().zip(w.data()) {
        s = s + a * b;
    }
    Ok(s)
}

/// Mean cross-entropy between the network's logits and integer labels.
pub struct SoftmaxCrossEntropy<E> {
    pub input: Tensor<E>,
    pub labels: Vec<usize>,
}

impl<E: Scalar> Objective<E> for SoftmaxCrossEntropy<E> {
    fn loss(&self, net: &Network<E>) -> Result<E> {
        let (logits, _) = net.forward_logits(&self.input)?;
        Ok(cross_entropy(&logits, &self.labels)?.0)
    }

    fn loss_and_backward(&self, net: &mut Network<E>) -> Result<E> {
        let (logits, trace) = net.forward_logits(&self.input)?;
        let (loss, grad) = cross_entropy(&logits, &self.labels)?;
        net.backward(&trace, &grad)?;
        Ok(loss)
    }
}

/// Contrastive loss over two branches of the *same* network (shared
/// weights): gradients from both traces accumulate into one parameter set.
pub struct ContrastivePair<E> {
    pub left: Tensor<E>,
    pub right: Tensor<E>,
    pub same: Vec<bool>,
    pub margin: E,
}

impl<E: Scalar> Objective<E> for ContrastivePair<E> {
    fn loss(&self, net: &Network<E>) -> Result<E> {
        let a = net.forward_infer(&self.left)?;
        let b = net.forward_infer(&self.right)?;
        Ok(contrastive_loss(&a, &b, &self.same, self.margin)?.0)
    }

    fn loss_and_backward(&self, net: &mut Network<E>) -> Result<E> {
        let (a, trace_a) = net.forward(&self.left)?;
        let (b, trace_b) = net.forward(&self.right)?;
        let (loss, grad_a, grad_b) = contrastive_loss(&a, &b, &self.same, self.margin)?;
        net.backward(&trace_b, &grad_b)?;
        net.backward(&trace_a, &grad_a)?;
        Ok(loss)
    }
}

/// Compare backpropagated gradients against central differences
/// `(f(θ+ε) - f(θ-ε)) / 2ε` for every trainable parameter, returning the
/// worst relative error `|a - n| / max(|a|, |n|, 1e-8)`.
///
/// Frozen layers are skipped: their analytic gradients are zero by design
/// while the numeric probe would still see the loss move. Meant to run in
/// f64 on small networks; errors out rather than sweep huge ones.
pub fn grad_check<O: Objective<f64>>(
    net: &mut Network<f64>,
    objective: &O,
    epsilon: f64,
) -> Result<f64> {
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "finite-difference step must be positive, got {epsilon}"
        )));
    }
    let n_params = net.param_count();
    if n_params > MAX_CHECKED_PARAMS {
        return Err(CoreError::GradCheck(format!(
            "network has {n_params} parameters; finite differences over more than \
             {MAX_CHECKED_PARAMS} would take 2x that many forward passes"
        )));
    }

    net.zero_grads();
    objective.loss_and_backward(net)?;
    let analytic: Vec<Vec<f64>> = net
        .layers()
        .iter()
        .flat_map(|l| l.grads())
        .map(|g| g.data().to_vec())
        .collect();
    net.zero_grads();

    let frozen = net.frozen_mask().to_vec();
    let mut worst = 0.0f64;
    let mut flat_slot = 0usize;
    for layer_idx in 0..net.len() {
        let n_tensors = net.layers()[layer_idx].params().len();
        for t in 0..n_tensors {
            let n_vals = net.layers()[layer_idx].params()[t].len();
            if frozen[layer_idx] {
                flat_slot += 1;
                continue;
            }
            for k in 0..n_vals {
                let original = net.layers_mut()[layer_idx].params_mut()[t].0.data()[k];

                net.layers_mut()[layer_idx].params_mut()[t].0.data_mut()[k] = original + epsilon;
                let plus = objective.loss(net)?;
                net.layers_mut()[layer_idx].params_mut()[t].0.data_mut()[k] = original - epsilon;
                let minus = objective.loss(net)?;
                net.layers_mut()[layer_idx].params_mut()[t].0.data_mut()[k] = original;

                let numeric = (plus - minus) / (2.0 * epsilon);
                let a = analytic[flat_slot][k];
                if !numeric.is_finite() || !a.is_finite() {
                    return Err(CoreError::GradCheck(format!(
                        "non-finite gradient at layer {layer_idx} param {t} index {k}: \
                         analytic {a}, numeric {numeric}"
                    )));
                }
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
                if rel > worst {
                    worst = rel;
                }
            }
            flat_slot += 1;
        }
    }
    Ok(worst)
}
