//! `GDL1` checkpoint format.
//!
//! ```text
//! magic      4 bytes  "GDL1"
//! version    u32      1
//! layers     u32      layer count
//! per layer:
//!   kind     u8       LayerKind tag
//!   n_cfg    u32      then n_cfg u32 hyperparameters (floats as f32 bits)
//!   n_tens   u32      then per tensor: rank u32, rank x u32 dims, f32 values
//! input rank u32      then rank x u32 per-sample input dims
//! ```
//!
//! All integers and floats are little-endian. Values are always stored as
//! `f32`, whatever the in-memory precision.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::layer::{Layer, LayerKind};
use crate::nn::network::Network;
use crate::nn::scalar::Scalar;
use crate::nn::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"GDL1";
pub const VERSION: u32 = 1;
const MAX_RANK: usize = 8;
const MAX_ELEMENTS: usize = 1 << 28;

pub fn encode<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, net.layers().len() as u32);
    for layer in net.layers() {
        out.push(layer.kind() as u8);
        let cfg = layer.config();
        put_u32(&mut out, cfg.len() as u32);
        cfg.iter().for_each(|&c| put_u32(&mut out, c));
        let tensors = layer.state_tensors();
        put_u32(&mut out, tensors.len() as u32);
        for t in tensors {
            put_u32(&mut out, t.shape().len() as u32);
            t.shape().iter().for_each(|&d| put_u32(&mut out, d as u32));
            for v in t.data() {
                out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
            }
        }
    }
    put_u32(&mut out, net.input_shape().len() as u32);
    net.input_shape().iter().for_each(|&d| put_u32(&mut out, d as u32));
    out
}

pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("checkpoint", "bad magic (expected GDL1)"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format("checkpoint", format!("unsupported version {version}")));
    }
    let n_layers = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for i in 0..n_layers {
        let tag = r.take(1)?[0];
        let kind = LayerKind::from_tag(tag)
            .ok_or_else(|| Error::format("checkpoint", format!("layer {i}: unknown kind tag {tag}")))?;
        let n_cfg = r.u32()? as usize;
        let cfg = (0..n_cfg).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n_t = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(n_t.min(16));
        for _ in 0..n_t {
            let shape = r.shape()?;
            let n: usize = shape.iter().product();
            let raw = r.take(n * 4)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| T::from_f64_lossy(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
                .collect();
            tensors.push(Tensor::from_vec(&shape, data)?);
        }
        layers.push(
            Layer::from_record(kind, &cfg, tensors)
                .map_err(|e| Error::format("checkpoint", format!("layer {i}: {e}")))?,
        );
    }
    let input_shape = r.shape()?;
    if r.pos != bytes.len() {
        return Err(Error::format("checkpoint", "trailing bytes"));
    }
    Network::from_layers_unchecked(input_shape, layers)
        .map_err(|e| Error::format("checkpoint", format!("inconsistent shapes: {e}")))
}

pub fn save<T: Scalar>(path: impl AsRef<Path>, net: &Network<T>) -> Result<()> {
    fs::File::create(path)?.write_all(&encode(net))?;
    Ok(())
}

pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("checkpoint", "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn shape(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()? as usize;
        if rank > MAX_RANK {
            return Err(Error::format("checkpoint", format!("rank {rank} too large")));
        }
        let shape = (0..rank).map(|_| self.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).is_none_or(|n| n > MAX_ELEMENTS) {
            return Err(Error::format("checkpoint", format!("tensor {shape:?} too large")));
        }
        Ok(shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init::Init;
    use crate::nn::dense::EmbedMode;
    use crate::nn::network::NetworkBuilder;

    fn sample_net() -> Network<f32> {
        NetworkBuilder::new(&[1, 8, 8], 4)
            .conv2d(3, 3, 2, 1, Init::He)
            .batch_norm()
            .leaky_relu(0.2)
            .dropout(0.25)
            .flatten()
            .dense(4, Init::Glorot)
            .aux_heads()
            .build()
            .unwrap()
    }

    #[test]
    fn roundtrip_preserves_fingerprint_and_bytes() {
        let net = sample_net();
        let bytes = encode(&net);
        assert_eq!(&bytes[..4], b"GDL1");
        let back: Network<f32> = decode(&bytes).unwrap();
        assert_eq!(back.fingerprint(), net.fingerprint());
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn embedding_mode_survives_roundtrip() {
        for mode in [EmbedMode::Multiply, EmbedMode::Concat] {
            let net: Network<f32> = NetworkBuilder::new(&[4], 2).embedding_with(3, mode).dense(2, Init::He).build().unwrap();
            let back: Network<f32> = decode(&encode(&net)).unwrap();
            assert_eq!(back.output_shape(), vec![2]);
            match &back.layers()[0] {
                Layer::Embedding(e) => assert_eq!(e.mode, mode),
                other => panic!("{:?}", other.kind()),
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&sample_net());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode::<f32>(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode::<f32>(&bad).is_err());
        assert!(decode::<f32>(&bytes[..bytes.len() - 3]).is_err());
        // change the stored input channel count so shapes no longer compose
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 12] = 2;
        assert!(decode::<f32>(&bad).is_err());
    }
}
