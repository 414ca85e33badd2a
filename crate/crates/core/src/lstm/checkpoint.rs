//! Plain-text checkpoint format:
//!
//! ```text
//! loadcast-lstm-checkpoint 1
//! config <ModelConfig as JSON>
//! meta <free-form JSON>
//! tensor <name> <len>
//! <len whitespace-separated values>
//! ...
//! end
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a load
//! reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::model::{LstmModel, ModelConfig, BLOCK_NAMES};
use crate::error::ModelError;

const MAGIC: &str = "loadcast-lstm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn checkpoint_to_string(model: &LstmModel, meta: &serde_json::Value) -> String {
    let mut out = String::new();
    let config = serde_json::to_string(&model.config).expect("model config serializes");
    let _ = writeln!(out, "{MAGIC} {CHECKPOINT_VERSION}");
    let _ = writeln!(out, "config {config}");
    let _ = writeln!(out, "meta {meta}");
    for (name, values) in model.blocks() {
        let _ = writeln!(out, "tensor {name} {}", values.len());
        let line: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

pub fn checkpoint_from_str(text: &str) -> Result<(LstmModel, serde_json::Value), String> {
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| format!("truncated before {what}"));

    let header = next("header")?;
    let version = header
        .strip_prefix(MAGIC)
        .map(str::trim)
        .ok_or("not a loadcast checkpoint")?;
    if version != CHECKPOINT_VERSION.to_string() {
        return Err(format!("unsupported checkpoint version `{version}`"));
    }
    let config: ModelConfig = serde_json::from_str(
        next("config")?
            .strip_prefix("config ")
            .ok_or("missing config line")?,
    )
    .map_err(|e| format!("bad config: {e}"))?;
    let meta: serde_json::Value = serde_json::from_str(
        next("meta")?.strip_prefix("meta ").ok_or("missing meta line")?,
    )
    .map_err(|e| format!("bad meta: {e}"))?;

    let mut model = LstmModel::zeros(config).map_err(|e| e.to_string())?;
    for (expected, block) in BLOCK_NAMES.iter().zip(model.blocks_mut()) {
        let (_, values) = block;
        let head = next("tensor header")?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some("tensor") || parts.next() != Some(*expected) {
            return Err(format!("expected tensor `{expected}`, found `{head}`"));
        }
        let len: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad length for `{expected}`"))?;
        if len != values.len() {
            return Err(format!(
                "tensor `{expected}` has {len} values, config implies {}",
                values.len()
            ));
        }
        let body = next("tensor values")?;
        let parsed: Vec<f64> = body
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| format!("bad value `{s}` in `{expected}`")))
            .collect::<Result<_, _>>()?;
        if parsed.len() != len {
            return Err(format!("tensor `{expected}` has {} values, header says {len}", parsed.len()));
        }
        values.copy_from_slice(&parsed);
    }
    if next("end")?.trim() != "end" {
        return Err("missing end marker".into());
    }
    Ok((model, meta))
}

pub fn save_checkpoint(path: &Path, model: &LstmModel, meta: &serde_json::Value) -> Result<(), ModelError> {
    std::fs::write(path, checkpoint_to_string(model, meta)).map_err(|e| ModelError::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn load_checkpoint(path: &Path) -> Result<(LstmModel, serde_json::Value), ModelError> {
    let fail = |message: String| ModelError::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    checkpoint_from_str(&text).map_err(fail)
}
