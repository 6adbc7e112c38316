use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// A parameterized or pure transformation in a sequential network.
///
/// Convolution and pooling operate on `[N, H, W, C]` batches; linear and
/// softmax on `[N, F]`; relu and sigmoid on any shape. Each parameter
/// tensor has a gradient slot of identical shape.
#[derive(Debug, Clone)]
pub enum Layer<E> {
    Conv2d(Conv2d<E>),
    Linear(Linear<E>),
    Relu,
    Sigmoid,
    Softmax,
    MaxPool2d(MaxPool2d),
    Flatten,
}

/// Per-layer values stashed by a forward pass for use in backward.
#[derive(Debug, Clone)]
pub enum LayerCache<E> {
    Conv2d { input: Tensor<E> },
    Linear { input: Tensor<E> },
    Relu { input: Tensor<E> },
    Sigmoid { output: Tensor<E> },
    Softmax { output: Tensor<E> },
    MaxPool2d { input_shape: Vec<usize>, argmax: Vec<usize> },
    Flatten { input_shape: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct Conv2d<E> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    /// `[kh, kw, in_channels, out_channels]`
    pub weights: Tensor<E>,
    /// `[out_channels]`
    pub bias: Tensor<E>,
    pub grad_weights: Tensor<E>,
    pub grad_bias: Tensor<E>,
}

#[derive(Debug, Clone)]
pub struct Linear<E> {
    pub in_features: usize,
    pub out_features: usize,
    /// `[in_features, out_features]`
    pub weights: Tensor<E>,
    /// `[out_features]`
    pub bias: Tensor<E>,
    pub grad_weights: Tensor<E>,
    pub grad_bias: Tensor<E>,
}

/// Non-overlapping max pooling: stride equals the window.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub window: (usize, usize),
}

/// Fan-in-scaled uniform initialization (He-style bound for relu stacks).
fn init_uniform<E: Scalar, R: Rng>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<E> {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<E> = (0..n)
        .map(|_| E::of_f64(rng.gen_range(-limit..limit)))
        .collect();
    Tensor::from_vec(shape.to_vec(), data).expect("shape/data agree by construction")
}

impl<E: Scalar> Conv2d<E> {
    pub fn new<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        rng: &mut R,
    ) -> Self {
        let fan_in = kernel.0 * kernel.1 * in_channels;
        let weights = init_uniform(&[kernel.0, kernel.1, in_channels, out_channels], fan_in, rng);
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            grad_weights: Tensor::zeros(weights.shape()),
            grad_bias: Tensor::zeros(&[out_channels]),
            bias: Tensor::zeros(&[out_channels]),
            weights,
        }
    }

    fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel;
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        if h + 2 * ph < kh || w + 2 * pw < kw {
            return Err(CoreError::InvalidArgument(format!(
                "input {h}x{w} smaller than kernel {kh}x{kw} with padding ({ph},{pw})"
            )));
        }
        Ok(((h + 2 * ph - kh) / sh + 1, (w + 2 * pw - kw) / sw + 1))
    }
}

impl<E: Scalar> Linear<E> {
    pub fn new<R: Rng>(in_features: usize, out_features: usize, rng: &mut R) -> Self {
        let weights = init_uniform(&[in_features, out_features], in_features, rng);
        Self {
            in_features,
            out_features,
            grad_weights: Tensor::zeros(weights.shape()),
            grad_bias: Tensor::zeros(&[out_features]),
            bias: Tensor::zeros(&[out_features]),
            weights,
        }
    }
}

impl<E: Scalar> Layer<E> {
    /// Short human description used in chaining errors and manifests.
    pub fn describe(&self) -> String {
        match self {
            Layer::Conv2d(c) => format!(
                "conv {}x{} stride {:?} pad {:?} ({}->{})",
                c.kernel.0, c.kernel.1, c.stride, c.padding, c.in_channels, c.out_channels
            ),
            Layer::Linear(l) => format!("linear ({}->{})", l.in_features, l.out_features),
            Layer::Relu => "relu".into(),
            Layer::Sigmoid => "sigmoid".into(),
            Layer::Softmax => "softmax".into(),
            Layer::MaxPool2d(p) => format!("max-pool {}x{}", p.window.0, p.window.1),
            Layer::Flatten => "flatten".into(),
        }
    }

    /// Parameter/gradient-slot pairs, in a fixed order (weights, then bias).
    pub fn params_mut(&mut self) -> Vec<(&mut Tensor<E>, &mut Tensor<E>)> {
        match self {
            Layer::Conv2d(c) => vec![
                (&mut c.weights, &mut c.grad_weights),
                (&mut c.bias, &mut c.grad_bias),
            ],
            Layer::Linear(l) => vec![
                (&mut l.weights, &mut l.grad_weights),
                (&mut l.bias, &mut l.grad_bias),
            ],
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<E>> {
        match self {
            Layer::Conv2d(c) => vec![&c.weights, &c.bias],
            Layer::Linear(l) => vec![&l.weights, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn grads(&self) -> Vec<&Tensor<E>> {
        match self {
            Layer::Conv2d(c) => vec![&c.grad_weights, &c.grad_bias],
            Layer::Linear(l) => vec![&l.grad_weights, &l.grad_bias],
            _ => Vec::new(),
        }
    }

    pub fn zero_grads(&mut self) {
        for (_, g) in self.params_mut() {
            for v in g.data_mut() {
                *v = E::zero();
            }
        }
    }

    pub fn forward(&self, x: &Tensor<E>) -> Result<(Tensor<E>, LayerCache<E>)> {
        match self {
            Layer::Conv2d(c) => conv_forward(c, x),
            Layer::Linear(l) => linear_forward(l, x),
            Layer::Relu => {
                let mut out = x.clone();
                for v in out.data_mut() {
                    if *v <= E::zero() {
                        *v = E::zero();
                    }
                }
                Ok((out, LayerCache::Relu { input: x.clone() }))
            }
            Layer::Sigmoid => {
                let mut out = x.clone();
                for v in out.data_mut() {
                    *v = E::one() / (E::one() + (-*v).exp());
                }
                Ok((out.clone(), LayerCache::Sigmoid { output: out }))
            }
            Layer::Softmax => {
                let out = softmax_rows(x)?;
                Ok((out.clone(), LayerCache::Softmax { output: out }))
            }
            Layer::MaxPool2d(p) => pool_forward(p, x),
            Layer::Flatten => {
                if x.rank() < 2 {
                    return Err(CoreError::InvalidArgument(
                        "flatten expects a batched input of rank >= 2".into(),
                    ));
                }
                let n = x.shape()[0];
                let rest: usize = x.shape()[1..].iter().product();
                let out = x.reshape(&[n, rest])?;
                Ok((
                    out,
                    LayerCache::Flatten {
                        input_shape: x.shape().to_vec(),
                    },
                ))
            }
        }
    }

    /// Propagate `grad_out` back through the layer, returning the gradient
    /// with respect to the layer input. Parameter gradients accumulate into
    /// the gradient slots only when `accumulate_params` is set (frozen
    /// layers pass gradients through but record none).
    pub fn backward(
        &mut self,
        cache: &LayerCache<E>,
        grad_out: &Tensor<E>,
        accumulate_params: bool,
    ) -> Result<Tensor<E>> {
        match (self, cache) {
            (Layer::Conv2d(c), LayerCache::Conv2d { input }) => {
                conv_backward(c, input, grad_out, accumulate_params)
            }
            (Layer::Linear(l), LayerCache::Linear { input }) => {
                linear_backward(l, input, grad_out, accumulate_params)
            }
            (Layer::Relu, LayerCache::Relu { input }) => {
                let mut gx = grad_out.clone();
                for (g, &v) in gx.data_mut().iter_mut().zip(input.data()) {
                    if v <= E::zero() {
                        *g = E::zero();
                    }
                }
                Ok(gx)
            }
            (Layer::Sigmoid, LayerCache::Sigmoid { output }) => {
                let mut gx = grad_out.clone();
                for (g, &y) in gx.data_mut().iter_mut().zip(output.data()) {
                    *g = *g * y * (E::one() - y);
                }
                Ok(gx)
            }
            (Layer::Softmax, LayerCache::Softmax { output }) => {
                // dx_i = p_i * (g_i - sum_j g_j p_j), rowwise
                let (n, c) = (output.shape()[0], output.shape()[1]);
                let mut gx = Tensor::zeros(output.shape());
                for i in 0..n {
                    let p = &output.data()[i * c..(i + 1) * c];
                    let g = &grad_out.data()[i * c..(i + 1) * c];
                    let mut dot = E::zero();
                    for j in 0..c {
                        dot = dot + g[j] * p[j];
                    }
                    let gx_row = &mut gx.data_mut()[i * c..(i + 1) * c];
                    for j in 0..c {
                        gx_row[j] = p[j] * (g[j] - dot);
                    }
                }
                Ok(gx)
            }
            (Layer::MaxPool2d(_), LayerCache::MaxPool2d { input_shape, argmax }) => {
                let mut gx = Tensor::zeros(input_shape);
                for (o, &src) in argmax.iter().enumerate() {
                    gx.data_mut()[src] = gx.data()[src] + grad_out.data()[o];
                }
                Ok(gx)
            }
            (Layer::Flatten, LayerCache::Flatten { input_shape }) => {
                grad_out.reshape(input_shape)
            }
            _ => Err(CoreError::InvalidArgument(
                "layer cache does not match layer kind".into(),
            )),
        }
    }

    /// Convert parameter precision (for verification-mode gradient checks).
    pub fn cast<F: Scalar>(&self) -> Layer<F> {
        match self {
            Layer::Conv2d(c) => Layer::Conv2d(Conv2d {
                in_channels: c.in_channels,
                out_channels: c.out_channels,
                kernel: c.kernel,
                stride: c.stride,
                padding: c.padding,
                weights: c.weights.cast(),
                bias: c.bias.cast(),
                grad_weights: Tensor::zeros(c.grad_weights.shape()),
                grad_bias: Tensor::zeros(c.grad_bias.shape()),
            }),
            Layer::Linear(l) => Layer::Linear(Linear {
                in_features: l.in_features,
                out_features: l.out_features,
                weights: l.weights.cast(),
                bias: l.bias.cast(),
                grad_weights: Tensor::zeros(l.grad_weights.shape()),
                grad_bias: Tensor::zeros(l.grad_bias.shape()),
            }),
            Layer::Relu => Layer::Relu,
            Layer::Sigmoid => Layer::Sigmoid,
            Layer::Softmax => Layer::Softmax,
            Layer::MaxPool2d(p) => Layer::MaxPool2d(p.clone()),
            Layer::Flatten => Layer::Flatten,
        }
    }
}

/// Rowwise softmax of a `[N, C]` tensor, max-shifted for stability.
pub fn softmax_rows<E: Scalar>(x: &Tensor<E>) -> Result<Tensor<E>> {
    if x.rank() != 2 {
        return Err(CoreError::InvalidArgument(format!(
            "softmax expects [batch, classes], got shape {:?}",
            x.shape()
        )));
    }
    let (n, c) = (x.shape()[0], x.shape()[1]);
    let mut out = Tensor::zeros(x.shape());
    for i in 0..n {
        let row = &x.data()[i * c..(i + 1) * c];
        let max = row.iter().cloned().fold(E::neg_infinity(), E::max);
        let mut sum = E::zero();
        let out_row = &mut out.data_mut()[i * c..(i + 1) * c];
        for j in 0..c {
            let e = (row[j] - max).exp();
            out_row[j] = e;
            sum = sum + e;
        }
        for v in out_row.iter_mut() {
            *v = *v / sum;
        }
    }
    Ok(out)
}

fn expect_rank4<E: Scalar>(x: &Tensor<E>, who: &str) -> Result<(usize, usize, usize, usize)> {
    if x.rank() != 4 {
        return Err(CoreError::InvalidArgument(format!(
            "{who} expects [batch, height, width, channels], got shape {:?}",
            x.shape()
        )));
    }
    let s = x.shape();
    Ok((s[0], s[1], s[2], s[3]))
}

fn conv_forward<E: Scalar>(c: &Conv2d<E>, x: &Tensor<E>) -> Result<(Tensor<E>, LayerCache<E>)> {
    let (n, h, w, ci) = expect_rank4(x, "convolution")?;
    if ci != c.in_channels {
        return Err(CoreError::InvalidArgument(format!(
            "convolution expects {} input channels, got {}",
            c.in_channels, ci
        )));
    }
    let (oh, ow) = c.output_hw(h, w)?;
    let (kh, kw) = c.kernel;
    let (sh, sw) = c.stride;
    let (ph, pw) = c.padding;
    let co = c.out_channels;
    let mut out = Tensor::zeros(&[n, oh, ow, co]);
    let wdat = c.weights.data();
    let xdat = x.data();
    let mut acc = vec![E::zero(); co];
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for v in acc.iter_mut() {
                    *v = E::zero();
                }
                for ky in 0..kh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let x_base = ((b * h + iy as usize) * w + ix as usize) * ci;
                        let w_base = ((ky * kw + kx) * ci) * co;
                        for ic in 0..ci {
                            let xv = xdat[x_base + ic];
                            let w_row = &wdat[w_base + ic * co..w_base + (ic + 1) * co];
                            for (a, &wv) in acc.iter_mut().zip(w_row) {
                                *a = *a + xv * wv;
                            }
                        }
                    }
                }
                let o_base = ((b * oh + oy) * ow + ox) * co;
                let bias = c.bias.data();
                let out_row = &mut out.data_mut()[o_base..o_base + co];
                for oc in 0..co {
                    out_row[oc] = acc[oc] + bias[oc];
                }
            }
        }
    }
    Ok((out, LayerCache::Conv2d { input: x.clone() }))
}

fn conv_backward<E: Scalar>(
    c: &mut Conv2d<E>,
    input: &Tensor<E>,
    grad_out: &Tensor<E>,
    accumulate_params: bool,
) -> Result<Tensor<E>> {
    let (n, h, w, ci) = expect_rank4(input, "convolution backward")?;
    let (oh, ow) = c.output_hw(h, w)?;
    if grad_out.shape() != [n, oh, ow, c.out_channels] {
        return Err(CoreError::InvalidArgument(format!(
            "upstream gradient shape {:?} does not match convolution output [{n}, {oh}, {ow}, {}]",
            grad_out.shape(),
            c.out_channels
        )));
    }
    let (kh, kw) = c.kernel;
    let (sh, sw) = c.stride;
    let (ph, pw) = c.padding;
    let co = c.out_channels;
    let mut gx = Tensor::zeros(input.shape());
    let xdat = input.data();
    let gdat = grad_out.data();
    let wdat = c.weights.data();

    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let g_base = ((b * oh + oy) * ow + ox) * co;
                let g_row = &gdat[g_base..g_base + co];
                if accumulate_params {
                    let gb = c.grad_bias.data_mut();
                    for (oc, &g) in g_row.iter().enumerate() {
                        gb[oc] = gb[oc] + g;
                    }
                }
                for ky in 0..kh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let x_base = ((b * h + iy as usize) * w + ix as usize) * ci;
                        let w_base = ((ky * kw + kx) * ci) * co;
                        for ic in 0..ci {
                            let xv = xdat[x_base + ic];
                            let w_row = &wdat[w_base + ic * co..w_base + (ic + 1) * co];
                            let mut gsum = E::zero();
                            for (oc, &g) in g_row.iter().enumerate() {
                                gsum = gsum + g * w_row[oc];
                            }
                            gx.data_mut()[x_base + ic] = gx.data()[x_base + ic] + gsum;
                            if accumulate_params {
                                let gw = c.grad_weights.data_mut();
                                let gw_row = &mut gw[w_base + ic * co..w_base + (ic + 1) * co];
                                for (oc, &g) in g_row.iter().enumerate() {
                                    gw_row[oc] = gw_row[oc] + xv * g;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(gx)
}

fn linear_forward<E: Scalar>(l: &Linear<E>, x: &Tensor<E>) -> Result<(Tensor<E>, LayerCache<E>)> {
    if x.rank() != 2 {
        return Err(CoreError::InvalidArgument(format!(
            "linear expects [batch, features], got shape {:?}",
            x.shape()
        )));
    }
    if x.shape()[1] != l.in_features {
        return Err(CoreError::InvalidArgument(format!(
            "linear expects {} input features, got {}",
            l.in_features,
            x.shape()[1]
        )));
    }
    let mut out = x.matmul(&l.weights)?;
    let (n, of) = (out.shape()[0], out.shape()[1]);
    let bias = l.bias.data();
    for i in 0..n {
        let row = &mut out.data_mut()[i * of..(i + 1) * of];
        for (v, &b) in row.iter_mut().zip(bias) {
            *v = *v + b;
        }
    }
    Ok((out, LayerCache::Linear { input: x.clone() }))
}

fn linear_backward<E: Scalar>(
    l: &mut Linear<E>,
    input: &Tensor<E>,
    grad_out: &Tensor<E>,
    accumulate_params: bool,
) -> Result<Tensor<E>> {
    let n = input.shape()[0];
    if grad_out.shape() != [n, l.out_features] {
        return Err(CoreError::InvalidArgument(format!(
            "upstream gradient shape {:?} does not match linear output [{n}, {}]",
            grad_out.shape(),
            l.out_features
        )));
    }
    let (fi, fo) = (l.in_features, l.out_features);
    if accumulate_params {
        // dW = x^T * g, accumulated; db = column sums of g
        let gw = l.grad_weights.data_mut();
        for b in 0..n {
            let x_row = &input.data()[b * fi..(b + 1) * fi];
            let g_row = &grad_out.data()[b * fo..(b + 1) * fo];
            for (i, &xv) in x_row.iter().enumerate() {
                let gw_row = &mut gw[i * fo..(i + 1) * fo];
                for (o, &g) in g_row.iter().enumerate() {
                    gw_row[o] = gw_row[o] + xv * g;
                }
            }
        }
        let gb = l.grad_bias.data_mut();
        for b in 0..n {
            let g_row = &grad_out.data()[b * fo..(b + 1) * fo];
            for (o, &g) in g_row.iter().enumerate() {
                gb[o] = gb[o] + g;
            }
        }
    }
    // dx = g * W^T
    let mut gx = Tensor::zeros(&[n, fi]);
    let wdat = l.weights.data();
    for b in 0..n {
        let g_row = &grad_out.data()[b * fo..(b + 1) * fo];
        let gx_row = &mut gx.data_mut()[b * fi..(b + 1) * fi];
        for (i, gxv) in gx_row.iter_mut().enumerate() {
            let w_row = &wdat[i * fo..(i + 1) * fo];
            let mut s = E::zero();
            for (o, &g) in g_row.iter().enumerate() {
                s = s + g * w_row[o];
            }
            *gxv = s;
        }
    }
    Ok(gx)
}

fn pool_forward<E: Scalar>(p: &MaxPool2d, x: &Tensor<E>) -> Result<(Tensor<E>, LayerCache<E>)> {
    let (n, h, w, c) = expect_rank4(x, "max-pool")?;
    let (kh, kw) = p.window;
    if h < kh || w < kw {
        return Err(CoreError::InvalidArgument(format!(
            "input {h}x{w} smaller than pooling window {kh}x{kw}"
        )));
    }
    let (oh, ow) = (h / kh, w / kw);
    let mut out = Tensor::zeros(&[n, oh, ow, c]);
    let mut argmax = vec![0usize; n * oh * ow * c];
    let xdat = x.data();
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = E::neg_infinity();
                    let mut best_idx = 0usize;
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = oy * kh + ky;
                            let ix = ox * kw + kx;
                            let idx = ((b * h + iy) * w + ix) * c + ch;
                            if xdat[idx] > best {
                                best = xdat[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o_idx = ((b * oh + oy) * ow + ox) * c + ch;
                    out.data_mut()[o_idx] = best;
                    argmax[o_idx] = best_idx;
                }
            }
        }
    }
    Ok((
        out,
        LayerCache::MaxPool2d {
            input_shape: x.shape().to_vec(),
            argmax,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relu_definition() {
        let x = Tensor::from_vec(vec![1, 3], vec![-1.0f32, 0.0, 2.0]).unwrap();
        let (y, _) = Layer::Relu.forward(&x).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn relu_backward_masks_upstream() {
        let x = Tensor::from_vec(vec![1, 2], vec![-1.0f64, 2.0]).unwrap();
        let mut layer = Layer::Relu;
        let (_, cache) = layer.forward(&x).unwrap();
        let up = Tensor::from_vec(vec![1, 2], vec![1.0f64, 1.0]).unwrap();
        let gx = layer.backward(&cache, &up, true).unwrap();
        assert_eq!(gx.data(), &[0.0, 1.0]);
    }

    #[test]
    fn identity_linear_passes_input_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut lin = Linear::<f64>::new(3, 3, &mut rng);
        for v in lin.weights.data_mut() {
            *v = 0.0;
        }
        for i in 0..3 {
            lin.weights.set2(i, i, 1.0);
        }
        let layer = Layer::Linear(lin);
        let x = Tensor::from_vec(vec![1, 3], vec![0.5f64, -1.25, 3.0]).unwrap();
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_all_ones_sums_receptive_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut conv = Conv2d::<f64>::new(1, 1, (3, 3), (1, 1), (0, 0), &mut rng);
        for v in conv.weights.data_mut() {
            *v = 1.0;
        }
        let layer = Layer::Conv2d(conv);
        let x = Tensor::filled(&[1, 3, 3, 1], 1.0f64);
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        // hand sum of the 3x3 receptive field of ones
        assert_eq!(y.data()[0], 9.0);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = Tensor::from_vec(vec![2, 3], vec![1.0f64, 2.0, 3.0, -5.0, 0.0, 5.0]).unwrap();
        let p = softmax_rows(&x).unwrap();
        for i in 0..2 {
            let s: f64 = p.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn maxpool_selects_window_maxima() {
        let x = Tensor::from_vec(
            vec![1, 2, 4, 1],
            vec![1.0f32, 2.0, 5.0, 3.0, 4.0, 0.0, -1.0, 6.0],
        )
        .unwrap();
        let layer = Layer::MaxPool2d(MaxPool2d { window: (2, 2) });
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 1]);
        assert_eq!(y.data(), &[4.0, 6.0]);
    }

    #[test]
    fn linear_grad_is_outer_product_for_sum_loss() {
        // y = Wx, loss = sum(y) => dL/dW = outer(x, 1-vector) in [in, out] layout
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lin = Linear::<f64>::new(3, 2, &mut rng);
        let mut layer = Layer::Linear(lin);
        let x = Tensor::from_vec(vec![1, 3], vec![2.0f64, -1.0, 0.5]).unwrap();
        let (_, cache) = layer.forward(&x).unwrap();
        let up = Tensor::filled(&[1, 2], 1.0f64);
        layer.backward(&cache, &up, true).unwrap();
        let gw = layer.grads()[0];
        for i in 0..3 {
            for o in 0..2 {
                assert_eq!(gw.at2(i, o), x.data()[i]);
            }
        }
    }
}
