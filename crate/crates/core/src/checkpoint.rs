use crate::error::{CoreError, Result};
use crate::layer::{Conv2d, Layer, Linear, MaxPool2d};
use crate::network::Network;
use crate::tensor::Tensor;
use std::io::{Read, Write};

/// Four-byte tag opening every serialized network.
pub const NETWORK_MAGIC: &[u8; 4] = b"FSEM";
/// Current format version. Bumped on any layout change.
pub const NETWORK_VERSION: u32 = 1;

const KIND_CONV: u8 = 0;
const KIND_LINEAR: u8 = 1;
const KIND_RELU: u8 = 2;
const KIND_SIGMOID: u8 = 3;
const KIND_SOFTMAX: u8 = 4;
const KIND_MAXPOOL: u8 = 5;
const KIND_FLATTEN: u8 = 6;

/// Serialize a network: magic, version, then a layer manifest (kind, frozen
/// flag, dimensions) followed by all parameter payloads as little-endian
/// f32, weights before bias, in layer order. The payload section is a plain
/// byte-for-byte dump, so save/load round-trips are bit-identical.
pub fn save_network<W: Write>(net: &Network<f32>, out: &mut W) -> Result<()> {
    out.write_all(NETWORK_MAGIC)?;
    write_u32(out, NETWORK_VERSION)?;
    write_u32(out, net.len() as u32)?;
    for (idx, layer) in net.layers().iter().enumerate() {
        let frozen = net.is_frozen(idx) as u8;
        match layer {
            Layer::Conv2d(c) => {
                out.write_all(&[KIND_CONV, frozen])?;
                for v in [
                    c.in_channels,
                    c.out_channels,
                    c.kernel.0,
                    c.kernel.1,
                    c.stride.0,
                    c.stride.1,
                    c.padding.0,
                    c.padding.1,
                ] {
                    write_u32(out, v as u32)?;
                }
            }
            Layer::Linear(l) => {
                out.write_all(&[KIND_LINEAR, frozen])?;
                write_u32(out, l.in_features as u32)?;
                write_u32(out, l.out_features as u32)?;
            }
            Layer::Relu => out.write_all(&[KIND_RELU, frozen])?,
            Layer::Sigmoid => out.write_all(&[KIND_SIGMOID, frozen])?,
            Layer::Softmax => out.write_all(&[KIND_SOFTMAX, frozen])?,
            Layer::MaxPool2d(p) => {
                out.write_all(&[KIND_MAXPOOL, frozen])?;
                write_u32(out, p.window.0 as u32)?;
                write_u32(out, p.window.1 as u32)?;
            }
            Layer::Flatten => out.write_all(&[KIND_FLATTEN, frozen])?,
        }
    }
    for layer in net.layers() {
        for param in layer.params() {
            for &v in param.data() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Read a network previously written by [`save_network`].
pub fn load_network<R: Read>(input: &mut R) -> Result<Network<f32>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != NETWORK_MAGIC {
        return Err(CoreError::Checkpoint(format!(
            "bad magic {magic:?}, expected {NETWORK_MAGIC:?} — not a network checkpoint"
        )));
    }
    let version = read_u32(input)?;
    if version != NETWORK_VERSION {
        return Err(CoreError::Checkpoint(format!(
            "unsupported checkpoint version {version} (this build reads {NETWORK_VERSION})"
        )));
    }
    let layer_count = read_u32(input)? as usize;
    let mut manifest = Vec::with_capacity(layer_count);
    let mut frozen = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let mut head = [0u8; 2];
        input.read_exact(&mut head)?;
        frozen.push(head[1] != 0);
        manifest.push(match head[0] {
            KIND_CONV => {
                let mut dims = [0usize; 8];
                for d in &mut dims {
                    *d = read_u32(input)? as usize;
                }
                Layer::Conv2d(Conv2d {
                    in_channels: dims[0],
                    out_channels: dims[1],
                    kernel: (dims[2], dims[3]),
                    stride: (dims[4], dims[5]),
                    padding: (dims[6], dims[7]),
                    weights: Tensor::zeros(&[dims[2], dims[3], dims[0], dims[1]]),
                    bias: Tensor::zeros(&[dims[1]]),
                    grad_weights: Tensor::zeros(&[dims[2], dims[3], dims[0], dims[1]]),
                    grad_bias: Tensor::zeros(&[dims[1]]),
                })
            }
            KIND_LINEAR => {
                let fi = read_u32(input)? as usize;
                let fo = read_u32(input)? as usize;
                Layer::Linear(Linear {
                    in_features: fi,
                    out_features: fo,
                    weights: Tensor::zeros(&[fi, fo]),
                    bias: Tensor::zeros(&[fo]),
                    grad_weights: Tensor::zeros(&[fi, fo]),
                    grad_bias: Tensor::zeros(&[fo]),
                })
            }
            KIND_RELU => Layer::Relu,
            KIND_SIGMOID => Layer::Sigmoid,
            KIND_SOFTMAX => Layer::Softmax,
            KIND_MAXPOOL => {
                let kh = read_u32(input)? as usize;
                let kw = read_u32(input)? as usize;
                Layer::MaxPool2d(MaxPool2d { window: (kh, kw) })
            }
            KIND_FLATTEN => Layer::Flatten,
            other => {
                return Err(CoreError::Checkpoint(format!(
                    "unknown layer kind {other} in checkpoint"
                )))
            }
        });
    }
    let mut net = Network::new(manifest);
    net.set_frozen(frozen)?;
    for layer in net.layers_mut() {
        for (param, _) in layer.params_mut() {
            for v in param.data_mut() {
                let mut bytes = [0u8; 4];
                input.read_exact(&mut bytes).map_err(|e| {
                    CoreError::Checkpoint(format!("checkpoint truncated in payload: {e}"))
                })?;
                *v = f32::from_le_bytes(bytes);
            }
        }
    }
    Ok(net)
}

fn write_u32<W: Write>(out: &mut W, v: u32) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut bytes = [0u8; 4];
    input.read_exact(&mut bytes)?;
    Ok(u32::from_le_bytes(bytes))
}
