//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! magic "NRPA" | version u32
//! dims: 11 × u64  (|V|, |U|, |I|, d_w, d_id, K, d_a, window, k_fm, T, N)
//! metadata: u32 byte length, then UTF-8 `key = value` lines
//! tensors: f64 values of every tensor in ParamId::ALL order, row-major
//! ```
//!
//! The metadata block carries the training configuration; its
//! `activation` entry selects the convolution nonlinearity on load.

use std::path::Path;

use super::{Dims, ModelParams, ParamId};
use crate::error::{NrpaError, Result};
use crate::numeric::Activation;

pub const MAGIC: &[u8; 4] = b"NRPA";
pub const FORMAT_VERSION: u32 = 1;
const FIXED_HEADER: usize = 4 + 4 + 11 * 8 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub metadata: String,
}

impl Checkpoint {
    pub fn new(params: ModelParams, metadata: impl Into<String>) -> Self {
        Self {
            params,
            metadata: metadata.into(),
        }
    }

    /// Value of a `key = value` metadata line.
    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.lines().find_map(|line| {
            let (k, v) = line.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(FIXED_HEADER + self.metadata.len() + 8 * p.num_values());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for d in p.dims.as_array() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        out.extend_from_slice(self.metadata.as_bytes());
        for id in ParamId::ALL {
            for x in p.tensor(id) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |r: String| NrpaError::format("checkpoint", r);
        if bytes.len() < FIXED_HEADER {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let u32_at = |pos: usize| u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
        let u64_at = |pos: usize| u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let mut raw = [0usize; 11];
        for (k, slot) in raw.iter_mut().enumerate() {
            *slot =
                usize::try_from(u64_at(8 + 8 * k)).map_err(|_| bad("dimension overflows usize".into()))?;
        }
        let dims = Dims::from_array(raw);
        dims.validate().map_err(|e| bad(e.to_string()))?;
        let meta_len = u32_at(8 + 88) as usize;
        let meta_end = FIXED_HEADER
            .checked_add(meta_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("metadata block overruns the file".into()))?;
        let metadata = std::str::from_utf8(&bytes[FIXED_HEADER..meta_end])
            .map_err(|_| bad("metadata is not UTF-8".into()))?
            .to_owned();
        let values = dims
            .checked_param_count()
            .ok_or_else(|| bad("tensor sizes overflow".into()))?;
        let expected = values.checked_mul(8).and_then(|b| b.checked_add(meta_end));
        if expected != Some(bytes.len()) {
            return Err(bad(format!(
                "file has {} bytes but the header implies {}",
                bytes.len(),
                expected.map_or_else(|| "an impossible size".to_string(), |e| e.to_string())
            )));
        }
        let activation = match metadata_lookup(&metadata, "activation") {
            None => Activation::Relu,
            Some(a) => Activation::parse(a).ok_or_else(|| bad(format!("unknown activation `{a}`")))?,
        };
        let mut params = ModelParams::zeros(dims, activation);
        let mut pos = meta_end;
        for id in ParamId::ALL {
            for x in params.tensor_mut(id) {
                *x = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
                pos += 8;
            }
        }
        Ok(Checkpoint { params, metadata })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| NrpaError::Input(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Self::decode(&bytes)
    }
}

fn metadata_lookup<'a>(metadata: &'a str, key: &str) -> Option<&'a str> {
    metadata.lines().find_map(|line| {
        let (k, v) = line.split_once('=')?;
        (k.trim() == key).then(|| v.trim())
    })
}
