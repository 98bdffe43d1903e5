//! Versioned on-disk container for trained models.
//!
//! Both model families serialize into one self-describing JSON envelope:
//! a format marker, a version number, the label alphabet, and a tagged
//! payload carrying every parameter together with an echo of the training
//! configuration. A feature-based model also embeds the lexicon it was
//! trained with, so prediction needs nothing beyond the model file.
//!
//! All runtime maps are ordered and floats are written in shortest
//! round-trip form, so encoding is byte-deterministic: encoding the same
//! model twice, or re-encoding a decoded model, yields identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Tag;
use crate::crf::{CrfModel, CrfTrainConfig};
use crate::features::Lexicon;
use crate::neural::{LstmCrfModel, NeuralTrainConfig};

/// Marker distinguishing this container from arbitrary JSON.
pub const MODEL_FORMAT: &str = "medspan-model";

/// Current container revision. Bumped on any breaking layout change.
pub const MODEL_VERSION: u32 = 1;

/// Failure modes of reading or writing a model container.
#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("cannot access model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unrecognized model format {found:?}, expected {MODEL_FORMAT:?}")]
    UnrecognizedFormat { found: String },
    #[error("model version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("model labels {found:?} do not match this build's tag set")]
    LabelMismatch { found: Vec<String> },
}

/// The family-specific part of a model file. The `type` tag makes the
/// container self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelPayload {
    Crf {
        config: CrfTrainConfig,
        lexicon: Lexicon,
        model: CrfModel,
    },
    Lstm {
        config: NeuralTrainConfig,
        model: LstmCrfModel,
    },
}

impl ModelPayload {
    /// Short family name, as accepted by the `--model-type` flag.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelPayload::Crf { .. } => "crf",
            ModelPayload::Lstm { .. } => "lstm",
        }
    }
}

/// A complete model file: format marker, version, label alphabet, and
/// payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    /// Tag alphabet in index order; checked on load.
    pub labels: Vec<String>,
    pub payload: ModelPayload,
}

impl ModelFile {
    fn new(payload: ModelPayload) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            labels: expected_labels(),
            payload,
        }
    }

    /// Wraps a trained feature-based model together with its lexicon and
    /// the configuration that produced it.
    pub fn new_crf(config: CrfTrainConfig, lexicon: Lexicon, model: CrfModel) -> ModelFile {
        ModelFile::new(ModelPayload::Crf { config, lexicon, model })
    }

    /// Wraps a trained neural model with the configuration that produced
    /// it.
    pub fn new_lstm(config: NeuralTrainConfig, model: LstmCrfModel) -> ModelFile {
        ModelFile::new(ModelPayload::Lstm { config, model })
    }
}

fn expected_labels() -> Vec<String> {
    Tag::ALL.iter().map(|t| t.as_str().to_string()).collect()
}

/// First-pass view of a candidate file: only the header fields, so
/// format and version problems are reported before the payload is
/// touched.
#[derive(Debug, Deserialize)]
struct Probe {
    #[serde(default)]
    format: String,
    #[serde(default)]
    version: u32,
}

/// Renders a model file to its canonical byte representation.
pub fn encode_model(file: &ModelFile) -> String {
    let mut text = serde_json::to_string(file).expect("model structures serialize infallibly");
    text.push('\n');
    text
}

/// Parses and validates a model container from its text form.
pub fn decode_model(text: &str) -> Result<ModelFile, ModelIoError> {
    let probe: Probe = serde_json::from_str(text)?;
    if probe.format != MODEL_FORMAT {
        return Err(ModelIoError::UnrecognizedFormat { found: probe.format });
    }
    if probe.version != MODEL_VERSION {
        return Err(ModelIoError::VersionMismatch {
            expected: MODEL_VERSION,
            found: probe.version,
        });
    }
    let file: ModelFile = serde_json::from_str(text)?;
    if file.labels != expected_labels() {
        return Err(ModelIoError::LabelMismatch { found: file.labels });
    }
    Ok(file)
}

/// Writes a model container to disk in canonical form.
pub fn save_model(path: &Path, file: &ModelFile) -> Result<(), ModelIoError> {
    fs::write(path, encode_model(file))?;
    Ok(())
}

/// Reads and validates a model container from disk.
pub fn load_model(path: &Path) -> Result<ModelFile, ModelIoError> {
    decode_model(&fs::read_to_string(path)?)
}
