use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::pipeline::MotgnnModel;
use crate::error::{MotgnnError, Result};

pub const CHECKPOINT_FORMAT: &str = "motgnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointOut<'a> {
    format: &'static str,
    version: u32,
    model: &'a MotgnnModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct CheckpointIn {
    model: MotgnnModel,
}

/// Writes the model, graphs and ensembles as one JSON document.
pub fn save_checkpoint<W: Write>(model: &MotgnnModel, out: W) -> Result<()> {
    let doc = CheckpointOut {
        format: CHECKPOINT_FORMAT,
        version: CHECKPOINT_VERSION,
        model,
    };
    serde_json::to_writer(out, &doc).map_err(|e| MotgnnError::Checkpoint(format!("cannot write checkpoint: {e}")))
}

pub fn load_checkpoint<R: Read>(mut input: R) -> Result<MotgnnModel> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| MotgnnError::Checkpoint(format!("unreadable checkpoint: {e}")))?;
    let header: Header =
        serde_json::from_str(&text).map_err(|e| MotgnnError::Checkpoint(format!("malformed checkpoint: {e}")))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(MotgnnError::Checkpoint(format!("not a checkpoint (format `{}`)", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(MotgnnError::Checkpoint(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            header.version
        )));
    }
    let doc: CheckpointIn =
        serde_json::from_str(&text).map_err(|e| MotgnnError::Checkpoint(format!("malformed checkpoint: {e}")))?;
    doc.model
        .validate()
        .map_err(|e| MotgnnError::Checkpoint(format!("inconsistent checkpoint: {e}")))?;
    Ok(doc.model)
}
