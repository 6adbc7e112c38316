use crate::error::{CoreError, Result};
use crate::layer::{Layer, LayerCache};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Sequential stack of layers with a per-layer frozen mask.
///
/// Forward passes return a [`Trace`] so that several passes can be taken
/// through the same network before any backward pass (two-branch losses
/// with shared weights rely on this). Backward accumulates parameter
/// gradients, so gradients from multiple traces sum until the optimizer
/// consumes and clears them.
#[derive(Debug, Clone)]
pub struct Network<E> {
    layers: Vec<Layer<E>>,
    frozen: Vec<bool>,
    grads_ready: bool,
}

/// Activations cached during one forward pass, consumed by `backward`.
#[derive(Debug)]
pub struct Trace<E> {
    caches: Vec<LayerCache<E>>,
    start: usize,
    end: usize,
}

impl<E: Scalar> Network<E> {
    pub fn new(layers: Vec<Layer<E>>) -> Self {
        let frozen = vec![false; layers.len()];
        Self {
            layers,
            frozen,
            grads_ready: false,
        }
    }

    pub fn layers(&self) -> &[Layer<E>] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Freeze layers `[0, upto)`: their parameters stop receiving gradients
    /// and the optimizer leaves them untouched.
    pub fn freeze_prefix(&mut self, upto: usize) -> Result<()> {
        if upto > self.layers.len() {
            return Err(CoreError::InvalidArgument(format!(
                "cannot freeze {upto} layers of a {}-layer network",
                self.layers.len()
            )));
        }
        for f in &mut self.frozen[..upto] {
            *f = true;
        }
        Ok(())
    }

    pub fn set_frozen(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.layers.len() {
            return Err(CoreError::InvalidArgument(format!(
                "frozen mask length {} does not match layer count {}",
                mask.len(),
                self.layers.len()
            )));
        }
        self.frozen = mask;
        Ok(())
    }

    pub fn is_frozen(&self, idx: usize) -> bool {
        self.frozen[idx]
    }

    /// Number of scalar parameters across all layers.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(|p| p.len())
            .sum()
    }

    /// Index just past the last non-softmax layer: the slice `[0, logits_end)`
    /// produces raw scores suitable for a fused cross-entropy.
    pub fn logits_end(&self) -> usize {
        match self.layers.last() {
            Some(Layer::Softmax) => self.layers.len() - 1,
            _ => self.layers.len(),
        }
    }

    /// Run layers `[start, end)`, stashing caches for backward.
    pub fn forward_range(&self, x: &Tensor<E>, start: usize, end: usize) -> Result<(Tensor<E>, Trace<E>)> {
        if start > end || end > self.layers.len() {
            return Err(CoreError::InvalidArgument(format!(
                "layer range [{start}, {end}) out of bounds for {} layers",
                self.layers.len()
            )));
        }
        let mut caches = Vec::with_capacity(end - start);
        let mut cur = x.clone();
        for idx in start..end {
            let (out, cache) = self.layers[idx].forward(&cur).map_err(|e| self.chain(idx, e))?;
            caches.push(cache);
            cur = out;
        }
        Ok((cur, Trace { caches, start, end }))
    }

    /// Full forward pass with trace.
    pub fn forward(&self, x: &Tensor<E>) -> Result<(Tensor<E>, Trace<E>)> {
        self.forward_range(x, 0, self.layers.len())
    }

    /// Forward pass without retaining a trace (inference).
    pub fn forward_infer(&self, x: &Tensor<E>) -> Result<Tensor<E>> {
        Ok(self.forward(x)?.0)
    }

    /// Forward pass stopping before a trailing softmax, if present.
    pub fn forward_logits(&self, x: &Tensor<E>) -> Result<(Tensor<E>, Trace<E>)> {
        self.forward_range(x, 0, self.logits_end())
    }

    /// Backpropagate `grad` through the layers covered by `trace`,
    /// accumulating parameter gradients for unfrozen layers.
    pub fn backward(&mut self, trace: &Trace<E>, grad: &Tensor<E>) -> Result<Tensor<E>> {
        let mut g = grad.clone();
        for (offset, cache) in trace.caches.iter().enumerate().rev() {
            let idx = trace.start + offset;
            let accumulate = !self.frozen[idx];
            g = self.layers[idx]
                .backward(cache, &g, accumulate)
                .map_err(|e| self.chain(idx, e))?;
        }
        if trace.end > trace.start {
            self.grads_ready = true;
        }
        Ok(g)
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub(crate) fn clear_grads_ready(&mut self) {
        self.grads_ready = false;
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
        self.grads_ready = false;
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<E>] {
        &mut self.layers
    }

    /// Frozen-aware wrapper for a layer failure, naming both neighbours so
    /// mismatched chains read as "output of X does not fit input of Y".
    fn chain(&self, idx: usize, err: CoreError) -> CoreError {
        if let CoreError::InvalidArgument(detail) = &err {
            let upstream = if idx == 0 {
                "network input".to_string()
            } else {
                format!("layer {} ({})", idx - 1, self.layers[idx - 1].describe())
            };
            CoreError::LayerChain {
                upstream,
                downstream: format!("layer {} ({})", idx, self.layers[idx].describe()),
                detail: detail.clone(),
            }
        } else {
            err
        }
    }

    /// Rebuild the network at a different precision (parameters copied via
    /// f64; gradient slots reset).
    pub fn cast<F: Scalar>(&self) -> Network<F> {
        Network {
            layers: self.layers.iter().map(|l| l.cast()).collect(),
            frozen: self.frozen.clone(),
            grads_ready: false,
        }
    }

    /// Append a layer (unfrozen).
    pub fn push(&mut self, layer: Layer<E>) {
        self.layers.push(layer);
        self.frozen.push(false);
    }

    /// Split off the first `n` layers as a new network, preserving their
    /// frozen flags. Used to lift a trained feature stack into a new model.
    pub fn prefix(&self, n: usize) -> Result<Network<E>> {
        if n > self.layers.len() {
            return Err(CoreError::InvalidArgument(format!(
                "cannot take {n}-layer prefix of a {}-layer network",
                self.layers.len()
            )));
        }
        Ok(Network {
            layers: self.layers[..n].to_vec(),
            frozen: self.frozen[..n].to_vec(),
            grads_ready: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::Linear;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_linear() -> Network<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        Network::new(vec![
            Layer::Linear(Linear::new(2, 3, &mut rng)),
            Layer::Relu,
            Layer::Linear(Linear::new(3, 2, &mut rng)),
            Layer::Softmax,
        ])
    }

    #[test]
    fn logits_end_skips_trailing_softmax() {
        let net = two_linear();
        assert_eq!(net.logits_end(), 3);
        assert_eq!(net.len(), 4);
    }

    #[test]
    fn forward_shapes_flow_through() {
        let net = two_linear();
        let x = Tensor::from_vec(vec![5, 2], vec![0.1f64; 10]).unwrap();
        let y = net.forward_infer(&x).unwrap();
        assert_eq!(y.shape(), &[5, 2]);
    }

    #[test]
    fn mismatched_shapes_name_both_layers() {
        let net = two_linear();
        let x = Tensor::from_vec(vec![1, 5], vec![0.0f64; 5]).unwrap();
        let err = net.forward_infer(&x).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("network input"), "got: {msg}");
        assert!(msg.contains("linear (2->3)"), "got: {msg}");
    }

    #[test]
    fn frozen_layers_accumulate_no_gradient() {
        let mut net = two_linear();
        net.freeze_prefix(2).unwrap();
        let x = Tensor::from_vec(vec![1, 2], vec![1.0f64, -0.5]).unwrap();
        let (y, trace) = net.forward(&x).unwrap();
        // uniform upstream would vanish through softmax; tilt it
        let g = Tensor::from_vec(y.shape().to_vec(), vec![1.0f64, -1.0]).unwrap();
        net.backward(&trace, &g).unwrap();
        let frozen_grads = net.layers()[0].grads();
        assert!(frozen_grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));
        let live_grads = net.layers()[2].grads();
        assert!(live_grads.iter().any(|g| g.data().iter().any(|&v| v != 0.0)));
    }

    #[test]
    fn two_traces_accumulate_gradients() {
        let mut net = two_linear();
        let x = Tensor::from_vec(vec![1, 2], vec![1.0f64, 2.0]).unwrap();
        let (y, t1) = net.forward(&x).unwrap();
        let g = Tensor::from_vec(y.shape().to_vec(), vec![0.5f64, -1.5]).unwrap();
        net.backward(&t1, &g).unwrap();
        let once: Vec<f64> = net.layers()[2].grads()[0].data().to_vec();
        assert!(once.iter().any(|&v| v != 0.0));
        let (_, t2) = net.forward(&x).unwrap();
        net.backward(&t2, &g).unwrap();
        let twice: Vec<f64> = net.layers()[2].grads()[0].data().to_vec();
        for (a, b) in once.iter().zip(&twice) {
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
    }
}
