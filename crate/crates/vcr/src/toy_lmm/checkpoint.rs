//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    b"VCRTOYM\0"
//! version  u32 = 1
//! dims     u32 × 5: input, width, symbols, seq_len, hook_layer
//! params   f64 × n: encoder, w1, b1, w2, b2, then (head_w, head_b) per position
//! sha256   32 bytes over everything above
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ToyModel, Trainable, INPUT_DIM, SYMBOLS, WIDTH_D};

pub const MAGIC: &[u8; 8] = b"VCRTOYM\0";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a model checkpoint")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("unexpected dimensions {0:?}")]
    Dimensions([u32; 5]),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checksum mismatch")]
    Checksum,
}

pub(crate) fn digest(values: &[f64]) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

pub fn encode(model: &ToyModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [INPUT_DIM, WIDTH_D, SYMBOLS, model.seq_len, model.hook_layer] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in model.encoder.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in model.params.slices() {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&sum);
    out
}

pub fn decode(bytes: &[u8]) -> Result<ToyModel, CheckpointError> {
    const HEADER: usize = 8 + 4 + 20;
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(CheckpointError::Magic);
    }
    if bytes.len() < HEADER + 32 {
        return Err(CheckpointError::Truncated);
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let dims = [u32_at(12), u32_at(16), u32_at(20), u32_at(24), u32_at(28)];
    let ok = dims[0] as usize == INPUT_DIM
        && dims[1] as usize == WIDTH_D
        && dims[2] as usize == SYMBOLS
        && (1..=2).contains(&dims[3])
        && (1..=2).contains(&dims[4]);
    if !ok {
        return Err(CheckpointError::Dimensions(dims));
    }
    let seq_len = dims[3] as usize;
    let mut model = ToyModel {
        encoder: ndarray::Array2::zeros((WIDTH_D, INPUT_DIM)),
        params: Trainable::zeros(seq_len),
        hook_layer: dims[4] as usize,
        seq_len,
    };
    let n = model.encoder.len() + model.params.len();
    let body_end = HEADER + 8 * n;
    if bytes.len() != body_end + 32 {
        return Err(CheckpointError::Truncated);
    }
    let sum: [u8; 32] = Sha256::digest(&bytes[..body_end]).into();
    if sum[..] != bytes[body_end..] {
        return Err(CheckpointError::Checksum);
    }
    let mut values = bytes[HEADER..body_end].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for v in model.encoder.iter_mut() {
        *v = values.next().unwrap();
    }
    for s in model.params.slices_mut() {
        for v in s.iter_mut() {
            *v = values.next().unwrap();
        }
    }
    Ok(model)
}

pub fn save_checkpoint(model: &ToyModel, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    fs::write(path, encode(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ToyModel, CheckpointError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy_lmm::ModelConfig;

    #[test]
    fn roundtrip_is_exact() {
        let cfg = ModelConfig {
            seq_len: 2,
            hook_layer: 2,
            head_init_scale: 0.1,
            ..Default::default()
        };
        let m = ToyModel::init_with(9, &cfg).unwrap();
        assert_eq!(decode(&encode(&m)).unwrap(), m);
    }

    #[test]
    fn corruption_is_detected() {
        let m = ToyModel::init(1);
        let mut b = encode(&m);
        b[100] ^= 1;
        assert!(matches!(decode(&b), Err(CheckpointError::Checksum)));
        let b = encode(&m);
        assert!(matches!(decode(&b[..b.len() - 1]), Err(CheckpointError::Truncated)));
        assert!(matches!(decode(b"P6 not a model"), Err(CheckpointError::Magic)));
        let mut b = encode(&m);
        b[8] = 2;
        assert!(matches!(decode(&b), Err(CheckpointError::Version(2))));
    }
}
