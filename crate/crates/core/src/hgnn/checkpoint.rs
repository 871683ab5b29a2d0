//! Binary checkpoint container.
//!
//! Layout: 8-byte magic `CTHGEGCN`, `u32` LE format version, `u64` LE header
//! length, a JSON header (shape, seed, config, tensor table), then every
//! parameter as a little-endian `f64`, tensors in table order, each row-major.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GcnModel, ModelShape, TensorSpec, TrainConfig};

const MAGIC: &[u8; 8] = b"CTHGEGCN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    shape: ModelShape,
    seed: u64,
    config: TrainConfig,
    tensors: Vec<TensorSpec>,
}

impl<F: Scalar> GcnModel<F> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            version: FORMAT_VERSION,
            shape: self.shape.clone(),
            seed: self.seed,
            config: self.config.clone(),
            tensors: self.layout_tensors.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(20 + json.len() + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &self.params {
            out.extend_from_slice(&p.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a model checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = bytes.get(20..20 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let model_len: usize = header.tensors.iter().map(TensorSpec::len).sum();
        let data = &bytes[20 + hlen..];
        if data.len() != 8 * model_len {
            return Err(bad("parameter block size does not match tensor table"));
        }
        let params = data
            .chunks_exact(8)
            .map(|c| F::lit(f64::from_le_bytes(c.try_into().unwrap())))
            .collect::<Vec<F>>();
        let model = GcnModel::from_parts(header.shape, params, header.seed, header.config);
        if model.layout_tensors != header.tensors {
            return Err(bad("tensor table does not match shape"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
