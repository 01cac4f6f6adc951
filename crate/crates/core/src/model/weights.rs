//! Binary weight file.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic      b"MCDF"
//! version    u32                       (currently 1)
//! config     n_layers, d_model, n_heads, d_ff, n_t, max_len: u32; ln_eps: f64
//! n_tensors  u32
//! record*    name_len: u32, name: utf-8, rank: u32, dims: u64 * rank,
//!            payload: f64 * prod(dims)
//! checksum   u64, FNV-1a over the concatenated payload bytes of all records
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{tensor_layout, ModelConfig, ModelError, Parameters};
use crate::hash::Fnv1a64;

pub const MAGIC: &[u8; 4] = b"MCDF";
pub const FORMAT_VERSION: u32 = 1;

const MAX_RANK: usize = 8;

pub fn encode_weights(params: &Parameters) -> Vec<u8> {
    let cfg = params.config();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [
        cfg.n_layers,
        cfg.d_model,
        cfg.n_heads,
        cfg.d_ff,
        cfg.n_t,
        cfg.max_len,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&cfg.ln_eps.to_le_bytes());

    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    let mut checksum = Fnv1a64::new();
    for t in &tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
        for &d in &t.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        let start = out.len();
        for v in t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        checksum.update(&out[start..]);
    }
    out.extend_from_slice(&checksum.finish().to_le_bytes());
    out
}

/// Parses a weight file image. Safe on arbitrary input: every length is
/// checked against the remaining bytes before allocating.
pub fn decode_weights(bytes: &[u8]) -> Result<Parameters, ModelError> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let config = ModelConfig {
        n_layers: r.u32()? as usize,
        d_model: r.u32()? as usize,
        n_heads: r.u32()? as usize,
        d_ff: r.u32()? as usize,
        n_t: r.u32()? as usize,
        max_len: r.u32()? as usize,
        ln_eps: r.f64()?,
    };
    config.validate()?;

    let n_tensors = r.u32()? as usize;
    let expected = config
        .n_layers
        .checked_mul(12)
        .and_then(|v| v.checked_add(6))
        .filter(|&v| v == n_tensors)
        .ok_or_else(|| {
            ModelError::ShapeMismatch(format!(
                "{n_tensors} tensors recorded for a {}-layer model",
                config.n_layers
            ))
        })?;

    let mut checksum = Fnv1a64::new();
    let mut named = HashMap::with_capacity(expected);
    for _ in 0..expected {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| ModelError::Malformed("tensor name is not utf-8".into()))?
            .to_string();
        let rank = r.u32()? as usize;
        if rank > MAX_RANK {
            return Err(ModelError::Malformed(format!(
                "tensor {name} has rank {rank}"
            )));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            let d = usize::try_from(r.u64()?)
                .map_err(|_| ModelError::Malformed(format!("tensor {name} dimension overflows")))?;
            dims.push(d);
        }
        let n_bytes = dims
            .iter()
            .try_fold(8usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| ModelError::Malformed(format!("tensor {name} is too large")))?;
        let payload = r.take(n_bytes)?;
        checksum.update(payload);
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if named.insert(name.clone(), (dims, data)).is_some() {
            return Err(ModelError::Malformed(format!("duplicate tensor {name}")));
        }
    }
    let stored = r.u64()?;
    if !r.buf.is_empty() {
        return Err(ModelError::Malformed(format!(
            "{} trailing bytes after checksum",
            r.buf.len()
        )));
    }
    let computed = checksum.finish();
    if stored != computed {
        return Err(ModelError::ChecksumMismatch { stored, computed });
    }
    debug_assert_eq!(tensor_layout(&config).len(), expected);
    Parameters::from_named(config, named)
}

pub fn save_weights(params: &Parameters, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, encode_weights(params))?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<(ModelConfig, Parameters), ModelError> {
    let params = decode_weights(&fs::read(path)?)?;
    Ok((params.config().clone(), params))
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if n > self.buf.len() {
            return Err(ModelError::Malformed(format!(
                "truncated: wanted {n} bytes, {} left",
                self.buf.len()
            )));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}
