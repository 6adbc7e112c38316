//! Minimal neural-network engine for few-shot embedding experiments.
//!
//! Everything is built on one dense row-major [`Tensor`] type, generic over
//! [`Scalar`] so the same layer code trains in `f32` and verifies gradients
//! in `f64`. Networks are flat layer stacks; forward passes return a
//! [`network::Trace`] instead of mutating the network, which lets
//! two-branch objectives (shared-weight embedding pairs) take several
//! forward passes before backpropagating through each.
//!
//! The [`gradcheck`] module compares every backpropagated gradient against
//! central finite differences and is the ground truth the rest of the
//! crate is held to.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod network;
pub mod optim;
pub mod scalar;
pub mod tensor;

pub use checkpoint::{load_network, save_network, NETWORK_MAGIC, NETWORK_VERSION};
pub use error::{CoreError, Result};
pub use gradcheck::{grad_check, ContrastivePair, Objective, SoftmaxCrossEntropy, WeightedOutput};
pub use layer::{Conv2d, Layer, LayerCache, Linear, MaxPool2d};
pub use loss::{contrastive_loss, cross_entropy};
pub use network::{Network, Trace};
pub use optim::Sgd;
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Derive a fresh 64-bit seed from a base seed and a stream index.
///
/// SplitMix64 finalizer over `base + golden-ratio * (index + 1)`: cheap,
/// stateless, and avalanche-complete, so per-epoch and per-sample RNGs
/// never share low-bit structure with their neighbours.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
