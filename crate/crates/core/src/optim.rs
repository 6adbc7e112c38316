use crate::error::{CoreError, Result};
use crate::network::Network;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Stochastic gradient descent with optional classical momentum.
///
/// With momentum `mu`: `v <- mu * v - lr * g; w <- w + v`. Velocity buffers
/// are allocated lazily on the first step and keyed by parameter order, so
/// an optimizer must not be reused across networks of different shape.
#[derive(Debug, Clone)]
pub struct Sgd<E> {
    learning_rate: E,
    momentum: Option<E>,
    velocity: Vec<Tensor<E>>,
    steps_taken: usize,
}

impl<E: Scalar> Sgd<E> {
    pub fn new(learning_rate: E) -> Result<Self> {
        if learning_rate <= E::zero() || !learning_rate.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "learning rate must be positive and finite, got {}",
                learning_rate.as_f64()
            )));
        }
        Ok(Self {
            learning_rate,
            momentum: None,
            velocity: Vec::new(),
            steps_taken: 0,
        })
    }

    pub fn with_momentum(mut self, momentum: E) -> Result<Self> {
        if momentum < E::zero() || momentum >= E::one() {
            return Err(CoreError::InvalidArgument(format!(
                "momentum must lie in [0, 1), got {}",
                momentum.as_f64()
            )));
        }
        self.momentum = if momentum == E::zero() {
            None
        } else {
            Some(momentum)
        };
        Ok(self)
    }

    pub fn learning_rate(&self) -> E {
        self.learning_rate
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Apply one update from the accumulated gradients, then clear them.
    ///
    /// Refuses to run when no backward pass has produced gradients since the
    /// last step — stepping on stale zeros silently corrupts momentum state,
    /// so it is treated as a caller bug.
    pub fn step(&mut self, net: &mut Network<E>) -> Result<()> {
        if !net.grads_ready() {
            return Err(CoreError::StepBeforeBackward);
        }
        let lr = self.learning_rate;
        let mu = self.momentum;
        let mut slot = 0usize;
        let frozen = net.frozen_mask().to_vec();
        for (idx, layer) in net.layers_mut().iter_mut().enumerate() {
            let layer_frozen = frozen[idx];
            for (param, grad) in layer.params_mut() {
                if self.velocity.len() == slot {
                    self.velocity.push(Tensor::zeros(param.shape()));
                }
                if !layer_frozen {
                    match mu {
                        Some(mu) => {
                            let vel = &mut self.velocity[slot];
                            for ((w, g), v) in param
                                .data_mut()
                                .iter_mut()
                                .zip(grad.data())
                                .zip(vel.data_mut())
                            {
                                *v = mu * *v - lr * *g;
                                *w = *w + *v;
                            }
                        }
                        None => {
                            for (w, g) in param.data_mut().iter_mut().zip(grad.data()) {
                                *w = *w - lr * *g;
                            }
                        }
                    }
                }
                for g in grad.data_mut() {
                    *g = E::zero();
                }
                slot += 1;
            }
        }
        net.clear_grads_ready();
        self.steps_taken += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::{Layer, Linear};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Single 1->1 linear: y = w + b at x = 1. Loss (y-3)^2 pushes the
    /// same gradient into both parameters, so y moves by -2*lr*g per step
    /// and the hand iteration below tracks y, not w alone.
    fn scalar_net(y0: f64) -> Network<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lin = Linear::<f64>::new(1, 1, &mut rng);
        lin.weights.data_mut()[0] = y0;
        Network::new(vec![Layer::Linear(lin)])
    }

    fn current_y(net: &Network<f64>) -> f64 {
        let x = Tensor::from_vec(vec![1, 1], vec![1.0]).unwrap();
        net.forward_infer(&x).unwrap().data()[0]
    }

    fn quadratic_step(net: &mut Network<f64>, opt: &mut Sgd<f64>) -> f64 {
        let x = Tensor::from_vec(vec![1, 1], vec![1.0]).unwrap();
        let (y, trace) = net.forward(&x).unwrap();
        let grad = Tensor::from_vec(vec![1, 1], vec![2.0 * (y.data()[0] - 3.0)]).unwrap();
        net.backward(&trace, &grad).unwrap();
        opt.step(net).unwrap();
        current_y(net)
    }

    #[test]
    fn quadratic_descends_to_hand_iterated_values() {
        // y <- y - 2*lr*2(y - 3); lr = 0.125 gives y - 0.5(y-3),
        // from 0: 1.5, 2.25, 2.625
        let mut net = scalar_net(0.0);
        let mut opt = Sgd::new(0.125).unwrap();
        assert!((quadratic_step(&mut net, &mut opt) - 1.5).abs() < 1e-12);
        assert!((quadratic_step(&mut net, &mut opt) - 2.25).abs() < 1e-12);
        assert!((quadratic_step(&mut net, &mut opt) - 2.625).abs() < 1e-12);
    }

    #[test]
    fn momentum_matches_hand_iteration() {
        // combined velocity V = v_w + v_b obeys V' = mu*V - 2*lr*g:
        // g0 = -6, V1 = 1.5, y1 = 1.5; g1 = -3, V2 = 0.75 + 0.75, y2 = 3.0
        let mut net = scalar_net(0.0);
        let mut opt = Sgd::new(0.125).unwrap().with_momentum(0.5).unwrap();
        assert!((quadratic_step(&mut net, &mut opt) - 1.5).abs() < 1e-12);
        assert!((quadratic_step(&mut net, &mut opt) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn step_without_backward_is_an_error() {
        let mut net = scalar_net(0.0);
        let mut opt = Sgd::new(0.1).unwrap();
        assert!(matches!(
            opt.step(&mut net),
            Err(CoreError::StepBeforeBackward)
        ));
    }

    #[test]
    fn step_clears_gradients() {
        let mut net = scalar_net(0.0);
        let mut opt = Sgd::new(0.1).unwrap();
        quadratic_step(&mut net, &mut opt);
        assert!(net.layers()[0].grads()[0].data().iter().all(|&g| g == 0.0));
        assert!(!net.grads_ready());
    }

    #[test]
    fn frozen_params_do_not_move() {
        let mut net = scalar_net(1.0);
        net.freeze_prefix(1).unwrap();
        let mut opt = Sgd::new(0.25).unwrap();
        let y = quadratic_step(&mut net, &mut opt);
        assert_eq!(y, 1.0);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        assert!(Sgd::<f64>::new(0.0).is_err());
        assert!(Sgd::<f64>::new(-1.0).is_err());
        assert!(Sgd::<f64>::new(0.1).unwrap().with_momentum(1.0).is_err());
        assert!(Sgd::<f64>::new(0.1).unwrap().with_momentum(-0.1).is_err());
    }
}
