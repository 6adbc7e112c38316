//! Network builders for the five model kinds.
//!
//! All builders draw initial weights from the caller's RNG in a fixed
//! layer order, so a seeded RNG yields bit-identical networks.

use fsem_core::{Conv2d, Layer, Linear, MaxPool2d, Network};
use rand::Rng;

use crate::error::{ModelsError, Result};
use crate::recipe::ModelRecipe;

/// Image geometry the builders size their layers against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl InputShape {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width * self.channels
    }

    /// Five halving pools shrink each side by 32×; the input must survive
    /// that whole.
    fn check_conv_ready(&self) -> Result<()> {
        if self.height != self.width {
            return Err(ModelsError::IncompatibleInput(format!(
                "convolutional models need square images, got {}x{}",
                self.height, self.width
            )));
        }
        if self.height < 32 || self.height % 32 != 0 {
            return Err(ModelsError::IncompatibleInput(format!(
                "side length {} must be a positive multiple of 32 so five 2x2 \
                 pooling stages divide it evenly",
                self.height
            )));
        }
        Ok(())
    }
}

/// Number of layers in the convolutional stack: five (conv → relu → pool)
/// blocks.
pub const CONV_STACK_LEN: usize = 15;

/// Features entering the first linear layer after the convolutional stack.
fn conv_stack_output_features(input: InputShape, recipe: &ModelRecipe) -> usize {
    let side = input.height / 32;
    side * side * recipe.conv_channels[4]
}

/// Five blocks of 3×3 same-padding convolution, relu, and 2×2 max-pool.
fn push_conv_stack<R: Rng>(
    net: &mut Network<f32>,
    input: InputShape,
    recipe: &ModelRecipe,
    rng: &mut R,
) {
    let mut in_channels = input.channels;
    for &out_channels in &recipe.conv_channels {
        net.push(Layer::Conv2d(Conv2d::new(
            in_channels,
            out_channels,
            (3, 3),
            (1, 1),
            (1, 1),
            rng,
        )));
        net.push(Layer::Relu);
        net.push(Layer::MaxPool2d(MaxPool2d { window: (2, 2) }));
        in_channels = out_channels;
    }
}

/// Flatten → single linear layer → softmax.
pub fn build_logistic_regression<R: Rng>(
    input: InputShape,
    classes: usize,
    rng: &mut R,
) -> Network<f32> {
    let mut net = Network::new(Vec::new());
    net.push(Layer::Flatten);
    net.push(Layer::Linear(Linear::new(input.pixels(), classes, rng)));
    net.push(Layer::Softmax);
    net
}

/// Five conv blocks, flatten, four hidden linear layers with relu, then a
/// linear classifier head under softmax.
pub fn build_cnn<R: Rng>(
    input: InputShape,
    classes: usize,
    recipe: &ModelRecipe,
    rng: &mut R,
) -> Result<Network<f32>> {
    input.check_conv_ready()?;
    let mut net = Network::new(Vec::new());
    push_conv_stack(&mut net, input, recipe, rng);
    net.push(Layer::Flatten);
    let mut in_features = conv_stack_output_features(input, recipe);
    for &width in &recipe.linear_widths {
        net.push(Layer::Linear(Linear::new(in_features, width, rng)));
        net.push(Layer::Relu);
        in_features = width;
    }
    net.push(Layer::Linear(Linear::new(in_features, classes, rng)));
    net.push(Layer::Softmax);
    Ok(net)
}

/// The convolutional stack alone — what `pretrain_backbone` hands back.
pub fn build_conv_stack<R: Rng>(
    input: InputShape,
    recipe: &ModelRecipe,
    rng: &mut R,
) -> Result<Network<f32>> {
    input.check_conv_ready()?;
    let mut net = Network::new(Vec::new());
    push_conv_stack(&mut net, input, recipe, rng);
    Ok(net)
}

/// Shared-weight embedding tower: conv stack, flatten, one linear layer
/// into the metric space. No softmax — the output *is* the embedding.
pub fn build_siamese<R: Rng>(
    input: InputShape,
    recipe: &ModelRecipe,
    rng: &mut R,
) -> Result<Network<f32>> {
    input.check_conv_ready()?;
    let mut net = Network::new(Vec::new());
    push_conv_stack(&mut net, input, recipe, rng);
    net.push(Layer::Flatten);
    net.push(Layer::Linear(Linear::new(
        conv_stack_output_features(input, recipe),
        recipe.embedding_dim,
        rng,
    )));
    Ok(net)
}

/// Confirm `backbone` is a bare convolutional stack sized for `input`,
/// and report the feature count it feeds forward.
fn backbone_output_features(backbone: &Network<f32>, input: InputShape) -> Result<usize> {
    if backbone.len() != CONV_STACK_LEN {
        return Err(ModelsError::IncompatibleInput(format!(
            "backbone must be a {CONV_STACK_LEN}-layer convolutional stack, got {} layers",
            backbone.len()
        )));
    }
    input.check_conv_ready()?;
    let last_conv = backbone.layers().iter().rev().find_map(|l| match l {
        Layer::Conv2d(c) => Some(c.out_channels),
        _ => None,
    });
    let channels = last_conv.ok_or_else(|| {
        ModelsError::IncompatibleInput("backbone contains no convolution layers".into())
    })?;
    let side = input.height / 32;
    Ok(side * side * channels)
}

/// Clone the backbone, freeze every cloned layer, and append a fresh
/// flatten → linear → softmax classifier head.
pub fn build_transfer<R: Rng>(
    backbone: &Network<f32>,
    input: InputShape,
    classes: usize,
    rng: &mut R,
) -> Result<Network<f32>> {
    let features = backbone_output_features(backbone, input)?;
    let mut net = backbone.clone();
    net.freeze_prefix(net.len())?;
    net.push(Layer::Flatten);
    net.push(Layer::Linear(Linear::new(features, classes, rng)));
    net.push(Layer::Softmax);
    Ok(net)
}

/// Clone the backbone, freeze it, and append a fresh flatten → linear
/// embedding head.
pub fn build_siamese_transfer<R: Rng>(
    backbone: &Network<f32>,
    input: InputShape,
    recipe: &ModelRecipe,
    rng: &mut R,
) -> Result<Network<f32>> {
    let features = backbone_output_features(backbone, input)?;
    let mut net = backbone.clone();
    net.freeze_prefix(net.len())?;
    net.push(Layer::Flatten);
    net.push(Layer::Linear(Linear::new(features, recipe.embedding_dim, rng)));
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipe::ModelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape32() -> InputShape {
        InputShape::new(32, 32, 1)
    }

    fn count_layers(net: &Network<f32>) -> (usize, usize) {
        let conv = net.layers().iter().filter(|l| matches!(l, Layer::Conv2d(_))).count();
        let linear = net.layers().iter().filter(|l| matches!(l, Layer::Linear(_))).count();
        (conv, linear)
    }

    #[test]
    fn cnn_has_five_conv_and_five_linear_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let recipe = ModelRecipe::new(ModelKind::Cnn);
        let net = build_cnn(shape32(), 3, &recipe, &mut rng).unwrap();
        assert_eq!(count_layers(&net), (5, 5));
        assert!(matches!(net.layers().last(), Some(Layer::Softmax)));
    }

    #[test]
    fn logistic_regression_is_one_linear_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = build_logistic_regression(shape32(), 4, &mut rng);
        assert_eq!(count_layers(&net), (0, 1));
        assert_eq!(net.len(), 3);
    }

    #[test]
    fn siamese_tower_has_no_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let recipe = ModelRecipe::new(ModelKind::Siamese);
        let net = build_siamese(shape32(), &recipe, &mut rng).unwrap();
        assert!(!net.layers().iter().any(|l| matches!(l, Layer::Softmax)));
        let x = fsem_core::Tensor::zeros(&[2, 32, 32, 1]);
        let out = net.forward_infer(&x).unwrap();
        assert_eq!(out.shape(), &[2, recipe.embedding_dim]);
    }

    #[test]
    fn non_square_and_odd_sizes_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let recipe = ModelRecipe::new(ModelKind::Cnn);
        assert!(build_cnn(InputShape::new(32, 64, 1), 3, &recipe, &mut rng).is_err());
        assert!(build_cnn(InputShape::new(48, 48, 1), 3, &recipe, &mut rng).is_err());
        assert!(build_cnn(InputShape::new(64, 64, 1), 3, &recipe, &mut rng).is_ok());
    }

    #[test]
    fn transfer_head_sits_on_a_frozen_backbone() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let recipe = ModelRecipe::new(ModelKind::Transfer);
        let backbone = build_conv_stack(shape32(), &recipe, &mut rng).unwrap();
        let net = build_transfer(&backbone, shape32(), 3, &mut rng).unwrap();
        assert_eq!(net.len(), CONV_STACK_LEN + 3);
        for idx in 0..CONV_STACK_LEN {
            assert!(net.is_frozen(idx));
        }
        assert!(!net.is_frozen(CONV_STACK_LEN + 1));
    }

    #[test]
    fn backbone_with_wrong_shape_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let not_a_stack = build_logistic_regression(shape32(), 3, &mut rng);
        assert!(build_transfer(&not_a_stack, shape32(), 3, &mut rng).is_err());
    }
}
