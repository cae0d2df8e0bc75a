//! Append-only JSONL event stream for search runs.
//!
//! Records carry no timestamps and serialize with sorted keys, so two runs
//! with the same inputs produce byte-identical logs.

use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;

#[derive(Default)]
pub struct EventLog {
    lines: Vec<String>,
    sink: Option<Box<dyn Write + Send>>,
    error: Option<String>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog").field("lines", &self.lines.len()).finish_non_exhaustive()
    }
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also stream every record to `sink` as it is appended.
    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        EventLog { sink: Some(sink), ..Self::default() }
    }

    pub fn push(&mut self, record: Value) {
        let line = record.to_string();
        if let Some(sink) = &mut self.sink {
            if let Err(e) = writeln!(sink, "{line}").and_then(|()| sink.flush()) {
                self.error.get_or_insert_with(|| e.to_string());
            }
        }
        self.lines.push(line);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// First write failure of the sink, if any. In-memory records are kept
    /// regardless.
    pub fn sink_error(&self) -> Option<&str> {
        self.error.as_deref()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the JSONL text, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    /// Records whose `event` field equals `kind`.
    pub fn records(&self, kind: &str) -> Vec<Value> {
        self.lines
            .iter()
            .filter_map(|l| serde_json::from_str::<Value>(l).ok())
            .filter(|v| v["event"] == kind)
            .collect()
    }
}

/// JSON number for finite scores, null otherwise.
pub fn score_json(score: f64) -> Value {
    serde_json::Number::from_f64(score).map_or(Value::Null, Value::Number)
}
