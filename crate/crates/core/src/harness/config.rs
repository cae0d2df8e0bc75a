//! Versioned run configuration. Unknown keys are rejected everywhere.

use crate::exec::{ExecSpec, Task};
use crate::llm::HttpConfig;
use crate::search::{EvoConfig, Paradigm, TreeConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONFIG_SCHEMA: &str = "ahd-run/1";

#[derive(Debug, Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineConfig {
    Evo(EvoConfig),
    Mcts(TreeConfig),
}

impl EngineConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EngineConfig::Evo(_) => "evo",
            EngineConfig::Mcts(_) => "mcts",
        }
    }

    pub fn paradigm(&self) -> Paradigm {
        match self {
            EngineConfig::Evo(c) => c.paradigm,
            EngineConfig::Mcts(c) => c.paradigm,
        }
    }

    pub fn set_paradigm(&mut self, paradigm: Paradigm) {
        match self {
            EngineConfig::Evo(c) => c.paradigm = paradigm,
            EngineConfig::Mcts(c) => c.paradigm = paradigm,
        }
    }

    /// Hard cap on model calls: exactly the planned count.
    pub fn call_budget(&self) -> u64 {
        match self {
            EngineConfig::Evo(c) => c.planned_calls(),
            EngineConfig::Mcts(c) => c.planned_calls(),
        }
    }

    /// Hard cap on evaluations: exactly the planned count.
    pub fn eval_budget(&self) -> u64 {
        match self {
            EngineConfig::Evo(c) => c.planned_evaluations(),
            EngineConfig::Mcts(c) => c.planned_programs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorConfig {
    /// Native stand-ins selected by a `# builtin:` line.
    Builtin {
        #[serde(default = "one")]
        workers: usize,
    },
    Subprocess(ExecSpec),
}

fn one() -> usize {
    1
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig::Subprocess(ExecSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderConfig {
    /// Canned responses; the path is relative to the config file.
    Replay { fixture: PathBuf },
    Http(HttpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    /// Event log of the finished source run.
    pub source_run: PathBuf,
}

fn default_retries() -> u32 {
    3
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// A registered task id.
    pub task: String,
    /// Override of the training instance size.
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub n_instances: Option<usize>,
    pub seed: u64,
    pub engine: EngineConfig,
    #[serde(default)]
    pub evaluator: EvaluatorConfig,
    /// Cache scores by program text within the run.
    #[serde(default = "default_true")]
    pub memo: bool,
    pub provider: ProviderConfig,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Largest prompt, in bytes, sent to the provider.
    #[serde(default)]
    pub prompt_cap: Option<usize>,
    /// Program scored as the reference in place of the task's seed.
    #[serde(default)]
    pub baseline_code: Option<String>,
    #[serde(default)]
    pub transfer: Option<TransferConfig>,
    /// Relative to the config file.
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Load and resolve relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let ProviderConfig::Replay { fixture } = &mut self.provider {
            fix(fixture);
        }
        if let Some(t) = &mut self.transfer {
            fix(&mut t.source_run);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!("schema must be \"{CONFIG_SCHEMA}\", got \"{}\"", self.schema));
        }
        if Task::builtin(&self.task).is_none() {
            return bad(format!("unknown task \"{}\"; known: {}", self.task, crate::exec::task_ids().join(", ")));
        }
        if self.size == Some(0) || self.n_instances == Some(0) {
            return bad("size and n_instances must be at least 1".into());
        }
        match &self.engine {
            EngineConfig::Evo(c) => c.validate(),
            EngineConfig::Mcts(c) => c.validate(),
        }
        .map_err(|e| ConfigError(e.to_string()))?;
        match &self.evaluator {
            EvaluatorConfig::Builtin { workers: 0 } => return bad("evaluator.workers must be at least 1".into()),
            EvaluatorConfig::Subprocess(spec) => spec.validate().map_err(ConfigError)?,
            _ => {}
        }
        if self.prompt_cap == Some(0) {
            return bad("prompt_cap must be positive".into());
        }
        if self.transfer.is_some() && self.engine.paradigm() == Paradigm::Dual {
            return bad("transfer runs are bottom-up or top-down".into());
        }
        Ok(())
    }

    /// The task with size and count overrides applied.
    pub fn task(&self) -> Task {
        let mut t = Task::builtin(&self.task).expect("validated task id");
        if let Some(n) = self.size {
            t.recipe = t.recipe.resized(n);
        }
        if let Some(n) = self.n_instances {
            t.n_instances = n;
        }
        t
    }

    /// First 16 hex digits of the SHA-256 of the canonical (key-sorted)
    /// JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self).expect("config serializes").to_string();
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}
