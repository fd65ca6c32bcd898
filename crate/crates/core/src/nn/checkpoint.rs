//! Binary checkpoint format.
//!
//! ```text
//! "PLNS"            4 bytes magic
//! version           u16 little-endian
//! header_len        u32 little-endian
//! header            header_len bytes of UTF-8 JSON
//! parameters        little-endian IEEE-754 values, tensors in header order
//! ```

use super::model::{AnyWeights, Model};
use super::spec::{LayerSpec, NetworkSpec, ParamShape, Shape};
use super::weights::{ModelWeights, ParamTensor, Precision, Scalar};
use super::NnError;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"PLNS";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub architecture: String,
    pub input_shape: Shape,
    pub layers: Vec<LayerSpec>,
    pub tensors: Vec<ParamShape>,
    pub precision: Precision,
    pub seed: u64,
}

pub fn encode(model: &Model) -> Result<Vec<u8>, NnError> {
    let spec = model.spec();
    let header = CheckpointHeader {
        architecture: spec
            .architecture()
            .map_or_else(|| "custom".to_string(), |a| a.to_string()),
        input_shape: spec.input_shape(),
        layers: spec.layers().to_vec(),
        tensors: spec.param_shapes().to_vec(),
        precision: model.precision(),
        seed: model.seed(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| NnError::CorruptCheckpoint(format!("header encode: {e}")))?;
    let width = match model.precision() {
        Precision::F32 => 4,
        Precision::F64 => 8,
    };
    let mut out = Vec::with_capacity(10 + header_json.len() + spec.param_count() * width);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    match model.weights() {
        AnyWeights::F32(w) => write_params(w, &mut out),
        AnyWeights::F64(w) => write_params(w, &mut out),
    }
    Ok(out)
}

fn write_params<T: Scalar>(w: &ModelWeights<T>, out: &mut Vec<u8>) {
    for t in w.tensors() {
        for v in &t.data {
            v.write_le(out);
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<Model, NnError> {
    let corrupt = |m: &str| NnError::CorruptCheckpoint(m.to_string());
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(corrupt("missing PLNS magic"));
    }
    if bytes.len() < 10 {
        return Err(corrupt("truncated preamble"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }
    let header_len = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let body = &bytes[10..];
    if body.len() < header_len {
        return Err(corrupt("truncated header"));
    }
    let header: CheckpointHeader = serde_json::from_slice(&body[..header_len])
        .map_err(|e| NnError::CorruptCheckpoint(format!("header: {e}")))?;
    let architecture = match header.architecture.as_str() {
        "custom" => None,
        other => Some(other.parse()?),
    };
    let spec = NetworkSpec::new(architecture, header.input_shape, header.layers.clone())?;
    if spec.param_shapes() != header.tensors.as_slice() {
        return Err(NnError::ShapeMismatch(
            "header tensor shapes disagree with the embedded layer spec".into(),
        ));
    }
    let params = &body[header_len..];
    let weights = match header.precision {
        Precision::F32 => AnyWeights::F32(read_params(&spec, params)?),
        Precision::F64 => AnyWeights::F64(read_params(&spec, params)?),
    };
    Model::new(spec, weights, header.seed)
}

fn read_params<T: Scalar>(spec: &NetworkSpec, bytes: &[u8]) -> Result<ModelWeights<T>, NnError> {
    let expected = spec.param_count() * T::BYTES;
    if bytes.len() != expected {
        return Err(NnError::CorruptCheckpoint(format!(
            "parameter block is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut chunks = bytes.chunks_exact(T::BYTES);
    let tensors = spec
        .param_shapes()
        .iter()
        .map(|s| ParamTensor {
            dims: s.dims.clone(),
            data: chunks.by_ref().take(s.numel()).map(T::read_le).collect(),
        })
        .collect();
    ModelWeights::from_tensors(spec, tensors)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<(), NnError> {
    let bytes = encode(model)?;
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model, NnError> {
    decode(&std::fs::read(path)?)
}
