//! Child-process execution with a wall-clock timeout.
//!
//! There is no OS-level jail: isolation is a separate process, a scratch
//! working directory, and a kill on timeout.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::Duration;
use thiserror::Error;
use wait_timeout::ChildExt;

/// Largest stdout or stderr capture kept, in bytes.
pub const OUTPUT_CAP: u64 = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecSpec {
    /// Command prefix for the candidate-language runtime; the harness
    /// script and its arguments are appended.
    pub interpreter: Vec<String>,
    pub timeout_secs: f64,
    /// Advisory only; not enforced.
    pub memory_note: Option<String>,
    /// Concurrent candidate evaluations within one batch.
    pub workers: usize,
}

impl Default for ExecSpec {
    fn default() -> Self {
        ExecSpec { interpreter: vec!["python3".into()], timeout_secs: 60.0, memory_note: None, workers: 1 }
    }
}

impl ExecSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.interpreter.is_empty() {
            return Err("exec.interpreter must name a program".into());
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(format!("exec.timeout_secs must be positive, got {}", self.timeout_secs));
        }
        if self.workers == 0 {
            return Err("exec.workers must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SandboxError {
    #[error("could not start `{program}`: {reason}")]
    Spawn { program: String, reason: String },
    #[error("timed out after {0:.1}s")]
    Timeout(f64),
    #[error("exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone)]
pub struct ProcessOutput {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

fn tail(bytes: &[u8], limit: usize) -> String {
    let text = String::from_utf8_lossy(bytes);
    let text = text.trim_end();
    match text.char_indices().rev().nth(limit) {
        Some((i, _)) => format!("...{}", &text[i..]),
        None => text.to_owned(),
    }
}

fn drain(mut pipe: impl Read + Send + 'static) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = (&mut pipe).take(OUTPUT_CAP).read_to_end(&mut buf);
        // keep draining so the child never blocks on a full pipe
        let _ = std::io::copy(&mut pipe, &mut std::io::sink());
        buf
    })
}

/// Run `argv` in `workdir` with `input` on stdin. A nonzero exit or a
/// timeout is an error; on timeout the child is killed and its output
/// discarded.
pub fn run_process(argv: &[String], workdir: &Path, input: &[u8], timeout: Duration) -> Result<ProcessOutput, SandboxError> {
    let (program, args) = argv.split_first().ok_or_else(|| SandboxError::Spawn { program: String::new(), reason: "empty command".into() })?;
    let mut child = Command::new(program)
        .args(args)
        .current_dir(workdir)
        .env("PYTHONHASHSEED", "0")
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SandboxError::Spawn { program: program.clone(), reason: e.to_string() })?;

    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input = input.to_vec();
    let writer = thread::spawn(move || {
        // a child that exits early closes the pipe; that shows up in its status
        let _ = stdin.write_all(&input);
    });
    let out = drain(child.stdout.take().expect("stdout is piped"));
    let err = drain(child.stderr.take().expect("stderr is piped"));

    let status: ExitStatus = match child.wait_timeout(timeout).map_err(|e| SandboxError::Io(e.to_string()))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            // readers may stay blocked if the child left grandchildren
            // holding the pipes, so they are not joined
            return Err(SandboxError::Timeout(timeout.as_secs_f64()));
        }
    };
    let _ = writer.join();
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if !status.success() {
        return Err(SandboxError::Exit { status: status.to_string(), stderr: tail(&stderr, 2000) });
    }
    Ok(ProcessOutput { stdout, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Instant;

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn echoes_stdin() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_process(&sh("cat"), dir.path(), b"hello", Duration::from_secs(5)).unwrap();
        assert_eq!(out.stdout, b"hello");
    }

    #[test]
    fn nonzero_exit_carries_stderr() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_process(&sh("echo broken >&2; exit 3"), dir.path(), b"", Duration::from_secs(5)).unwrap_err();
        match err {
            SandboxError::Exit { stderr, .. } => assert_eq!(stderr, "broken"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infinite_loop_is_killed_on_time() {
        let dir = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let err = run_process(&sh("while :; do :; done"), dir.path(), b"", Duration::from_millis(300)).unwrap_err();
        assert!(matches!(err, SandboxError::Timeout(_)));
        assert!(start.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn missing_program_is_a_spawn_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_process(&["/nonexistent/interpreter".to_string()], dir.path(), b"", Duration::from_secs(1)).unwrap_err();
        assert!(matches!(err, SandboxError::Spawn { .. }));
    }
}
