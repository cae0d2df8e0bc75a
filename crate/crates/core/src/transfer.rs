//! Offline transfer: lift the terminal artifact out of a finished run log
//! and carry it into every prompt of a search on another problem.
//!
//! Top-down sources contribute their final knowledge text, bottom-up
//! sources their final program. Run logs are only ever read.

use crate::exec::{Candidate, Task};
use crate::llm::{fill, template, Bindings, Injection, RenderError};
use crate::search::Paradigm;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("cannot read run log {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run log is corrupt at byte {offset} (line {line}): {message}")]
    Parse { offset: usize, line: usize, message: String },
    #[error("run log has no run header record")]
    MissingHeader,
    #[error("run log has no final record; the source run did not complete")]
    MissingFinal,
    #[error("requested a {requested:?} artifact from a {found:?} run")]
    ParadigmMismatch { requested: Paradigm, found: Paradigm },
    #[error("the source run's final {0} is empty")]
    EmptyArtifact(&'static str),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Task metadata recorded at the top of every run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTask {
    pub id: String,
    pub prob_name: String,
    pub func_name: String,
    pub func_sign: String,
    pub func_desc: String,
    pub seed_code: String,
}

impl From<&Task> for SourceTask {
    fn from(t: &Task) -> Self {
        SourceTask {
            id: t.id.clone(),
            prob_name: t.prob_name.clone(),
            func_name: t.func_name.clone(),
            func_sign: t.func_sign.clone(),
            func_desc: t.func_desc.clone(),
            seed_code: t.seed_code.clone(),
        }
    }
}

/// The first record of a run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub task: SourceTask,
    pub paradigm: Paradigm,
    pub engine: String,
}

/// A finished run's terminal artifact and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceArtifact {
    pub paradigm: Paradigm,
    pub task_id: String,
    pub prob_name: String,
    pub func_name: String,
    pub func_sign: String,
    pub func_desc: String,
    pub func_seed: String,
    /// Knowledge for top-down sources, code for bottom-up ones.
    pub artifact: String,
    /// The final program, whatever the paradigm.
    pub code: String,
    pub score: f64,
}

pub fn load_terminal_artifact(path: &Path, paradigm: Paradigm) -> Result<SourceArtifact, TransferError> {
    let text = std::fs::read_to_string(path).map_err(|source| TransferError::Io { path: path.to_owned(), source })?;
    parse_terminal_artifact(&text, paradigm)
}

/// Extract the artifact from JSONL run-log text. The header is the first
/// `run` record and the artifact comes from the last `final` record. Dual
/// runs carry both artifacts and satisfy either request.
pub fn parse_terminal_artifact(text: &str, paradigm: Paradigm) -> Result<SourceArtifact, TransferError> {
    let mut header: Option<RunHeader> = None;
    let mut best: Option<Candidate> = None;
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let at = offset;
        offset += line.len();
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| TransferError::Parse { offset: at, line: i + 1, message };
        let record: Value = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        match record.get("event").and_then(Value::as_str) {
            Some("run") if header.is_none() => {
                header = Some(serde_json::from_value(record).map_err(|e| corrupt(e.to_string()))?);
            }
            Some("final") => {
                let c = record.get("best").cloned().ok_or_else(|| corrupt("final record without best".into()))?;
                best = Some(serde_json::from_value(c).map_err(|e| corrupt(e.to_string()))?);
            }
            _ => {}
        }
    }
    let header = header.ok_or(TransferError::MissingHeader)?;
    let best = best.ok_or(TransferError::MissingFinal)?;
    if header.paradigm != paradigm && header.paradigm != Paradigm::Dual {
        return Err(TransferError::ParadigmMismatch { requested: paradigm, found: header.paradigm });
    }
    let code = best.code.clone().unwrap_or_default();
    let artifact = match paradigm {
        Paradigm::BottomUp => code.clone(),
        _ => best.knowledge.clone().unwrap_or_default(),
    };
    if artifact.trim().is_empty() {
        return Err(TransferError::EmptyArtifact(if paradigm == Paradigm::BottomUp { "code" } else { "knowledge" }));
    }
    let t = header.task;
    Ok(SourceArtifact {
        paradigm,
        task_id: t.id,
        prob_name: t.prob_name,
        func_name: t.func_name,
        func_sign: t.func_sign,
        func_desc: t.func_desc,
        func_seed: t.seed_code,
        artifact,
        code,
        score: best.score,
    })
}

/// The source block appended to every prompt that does not already quote
/// the artifact verbatim.
pub fn injection(src: &SourceArtifact, bindings: &Bindings) -> Result<Injection, TransferError> {
    let id = match src.paradigm {
        Paradigm::BottomUp => "transfer/source-code-block",
        _ => "transfer/source-knowledge-block",
    };
    let t = template(id).expect("transfer blocks are registered");
    let block = fill(id, t.user_text, bindings)?;
    Ok(Injection { marker: src.artifact.clone(), block })
}
