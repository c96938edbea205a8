//! Model checkpoints: one JSON document holding the architecture, the
//! frozen statistics, and every named parameter with its shape.
//!
//! Serialization is deterministic (parameters are kept in a sorted map
//! and floats print in shortest round-trip form), so identical models
//! produce byte-identical files and loading is value-exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::interleaver::Interleaver;
use crate::ndgrad::Tensor;

use super::arch::{ArchConfig, VariantKind};
use super::model::{AutoencoderModel, FrozenStats};
use super::NeuralError;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    kind: VariantKind,
    arch_config: ArchConfig,
    seed: u64,
    frozen_stats: Option<FrozenStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interleaver: Option<Vec<usize>>,
    parameters: BTreeMap<String, StoredTensor>,
}

pub fn to_json(model: &AutoencoderModel) -> String {
    let doc = CheckpointDoc {
        format_version: CHECKPOINT_FORMAT_VERSION,
        kind: model.kind,
        arch_config: model.arch.clone(),
        seed: model.seed,
        frozen_stats: model.frozen.clone(),
        interleaver: model.interleaver.as_ref().map(|il| il.perm().to_vec()),
        parameters: model
            .params
            .iter()
            .map(|(name, t)| {
                (
                    name.clone(),
                    StoredTensor {
                        shape: t.shape().to_vec(),
                        data: t.data().to_vec(),
                    },
                )
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("checkpoint serialization cannot fail")
}

pub fn from_json(json: &str) -> Result<AutoencoderModel, NeuralError> {
    let doc: CheckpointDoc =
        serde_json::from_str(json).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    if doc.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(NeuralError::Checkpoint(format!(
            "format version {} is not supported (expected {CHECKPOINT_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let mut params = BTreeMap::new();
    for (name, t) in doc.parameters {
        params.insert(
            name,
            Tensor::new(t.shape, t.data).map_err(|e| NeuralError::Checkpoint(e.to_string()))?,
        );
    }
    let interleaver = doc
        .interleaver
        .map(Interleaver::from_perm)
        .transpose()
        .map_err(NeuralError::Checkpoint)?;
    Ok(AutoencoderModel {
        kind: doc.kind,
        arch: doc.arch_config,
        seed: doc.seed,
        params,
        frozen: doc.frozen_stats,
        interleaver,
    })
}

pub fn save(model: &AutoencoderModel, path: &Path) -> Result<(), NeuralError> {
    std::fs::write(path, to_json(model)).map_err(|e| NeuralError::Checkpoint(e.to_string()))
}

pub fn load(path: &Path) -> Result<AutoencoderModel, NeuralError> {
    let json =
        std::fs::read_to_string(path).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    from_json(&json)
}
