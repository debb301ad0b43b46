//! Model checkpoint container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      8 bytes  "ICUMODEL"
//! version    u32      1
//! header     u32 length + UTF-8 JSON:
//!              { "config": {...}, "columns": [...],
//!                "tensors": [{"name", "rows", "cols"}, ...] }
//! mean       one f64 per column
//! std        one f64 per column
//! tensors    rows*cols f64 each, row-major, in header order
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParams;
use super::predictor::{Model, Normalization};
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::variables::Variable;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ICUMODEL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    columns: Vec<String>,
    tensors: Vec<TensorEntry>,
}

pub fn encode_model(model: &Model) -> Vec<u8> {
    let header = Header {
        config: model.config.clone(),
        columns: model.normalization.columns.iter().map(|v| v.name().to_string()).collect(),
        tensors: model
            .params
            .named()
            .into_iter()
            .map(|(name, m)| TensorEntry {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
            })
            .collect(),
    };
    let mut w = ByteWriter::new();
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.str(&serde_json::to_string(&header).expect("header serializes"));
    for &m in &model.normalization.mean {
        w.f64(m);
    }
    for &s in &model.normalization.std {
        w.f64(s);
    }
    for (_, m) in model.params.named() {
        for &v in m.as_slice() {
            w.f64(v);
        }
    }
    w.into_inner()
}

pub fn decode_model(buf: &[u8]) -> Result<Model> {
    let mut r = ByteReader::new(buf);
    r.expect_magic(CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Container(format!("unsupported checkpoint version {version}")));
    }
    let header: Header =
        serde_json::from_str(&r.str()?).map_err(|e| Error::Container(format!("checkpoint header: {e}")))?;
    let columns: Vec<Variable> = header.columns.iter().map(|c| c.parse()).collect::<Result<_>>()?;
    let mean = (0..columns.len()).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let std = (0..columns.len()).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;

    let config = header.config;
    let mut params = ModelParams::zeros(config.attention_mode, config.input_dim(), config.hidden_dim);
    let slots = params.named_mut();
    if slots.len() != header.tensors.len() {
        return Err(Error::Container("tensor count does not match the config".into()));
    }
    for ((name, slot), entry) in slots.into_iter().zip(&header.tensors) {
        if entry.name != name || slot.shape() != (entry.rows, entry.cols) {
            return Err(Error::Container(format!("unexpected tensor {} {}x{}", entry.name, entry.rows, entry.cols)));
        }
        let data = (0..entry.rows * entry.cols).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        *slot = Matrix::from_vec(entry.rows, entry.cols, data)?;
    }
    r.finish()?;
    Model::new(config, Normalization { columns, mean, std }, params)
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::{AttentionMode, FeatureSubset};
    use crate::model::params::init_params;
    use crate::variables::OrganSystem;

    fn model(mode: AttentionMode) -> Model {
        let config = ModelConfig {
            hidden_dim: 3,
            attention_mode: mode,
            feature_subset: FeatureSubset::Organ(OrganSystem::Respiratory),
            learning_rate: 0.1 + 0.2,
            seed: 99,
            ..ModelConfig::default()
        };
        let cols = config.feature_subset.variables();
        let norm = Normalization {
            mean: vec![1.0 / 3.0, 2.5, -0.1, 7.0],
            std: vec![0.7, 1.0, 3.3, 1e-3],
            columns: cols,
        };
        Model::new(config.clone(), norm, init_params(&config).unwrap()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for mode in AttentionMode::ALL {
            let m = model(mode);
            let bytes = encode_model(&m);
            let back = decode_model(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(encode_model(&back), bytes);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode_model(&model(AttentionMode::SelfAttention));
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_model(&magic).is_err());
    }
}
