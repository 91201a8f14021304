use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, WebFormer};
use crate::numerics::{ParamStore, Tensor};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";
const FORMAT: &str = "webformer-checkpoint";
const DTYPE: &str = "f32";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the blob.
    pub offset: usize,
    /// Number of elements.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tensors: Vec<TensorEntry>,
    /// Sum of all tensor element counts.
    pub total_count: usize,
    pub config: ModelConfig,
    pub vocab_hash: String,
}

/// Writes `manifest.json` and `params.bin` (little-endian f32, row-major,
/// tensors concatenated in manifest order) into `dir`.
pub fn save_checkpoint(
    dir: impl AsRef<Path>,
    model: &WebFormer<f32>,
    vocab_hash: &str,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let store = &model.store;
    let mut tensors = Vec::with_capacity(store.len());
    let mut blob = Vec::with_capacity(store.numel() * 4);
    for id in store.ids() {
        let value = store.value(id);
        tensors.push(TensorEntry {
            name: store.name(id).to_string(),
            shape: value.shape().to_vec(),
            dtype: DTYPE.to_string(),
            offset: blob.len(),
            count: value.len(),
        });
        for v in value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format: FORMAT.to_string(),
        version: 1,
        total_count: store.numel(),
        tensors,
        config: model.config.clone(),
        vocab_hash: vocab_hash.to_string(),
    };
    fs::write(dir.join(PARAMS_FILE), &blob)?;
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCheckpoint(msg.into())
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<(WebFormer<f32>, Manifest)> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| corrupt(format!("unreadable manifest: {e}")))?;
    if manifest.format != FORMAT || manifest.version != 1 {
        return Err(corrupt(format!(
            "unsupported format {} v{}",
            manifest.format, manifest.version
        )));
    }
    let blob = fs::read(dir.join(PARAMS_FILE))?;
    let counted: usize = manifest.tensors.iter().map(|t| t.count).sum();
    if counted != manifest.total_count {
        return Err(corrupt(format!(
            "tensor counts sum to {counted}, manifest says {}",
            manifest.total_count
        )));
    }
    if blob.len() != manifest.total_count * 4 {
        return Err(corrupt(format!(
            "blob has {} bytes, manifest needs {}",
            blob.len(),
            manifest.total_count * 4
        )));
    }
    let mut store = ParamStore::new();
    let mut offset = 0;
    for t in &manifest.tensors {
        if t.dtype != DTYPE {
            return Err(corrupt(format!(
                "{}: unsupported dtype {}",
                t.name, t.dtype
            )));
        }
        if t.shape.iter().product::<usize>() != t.count {
            return Err(corrupt(format!(
                "{}: shape {:?} does not hold {} values",
                t.name, t.shape, t.count
            )));
        }
        if t.offset != offset {
            return Err(corrupt(format!(
                "{}: offset {} but expected {offset}",
                t.name, t.offset
            )));
        }
        let bytes = &blob[offset..offset + t.count * 4];
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let value =
            Tensor::from_vec(&t.shape, data).map_err(|e| corrupt(format!("{}: {e}", t.name)))?;
        store
            .insert(&t.name, value)
            .map_err(|e| corrupt(format!("{}: {e}", t.name)))?;
        offset += t.count * 4;
    }
    let model = WebFormer::from_store(manifest.config.clone(), store)
        .map_err(|e| corrupt(format!("parameters do not match the config: {e}")))?;
    Ok((model, manifest))
}
