//! One search run from a config: build the pieces, run the engine, write
//! the event log, the transcript, the summary and the trajectory CSV.

use super::config::{ConfigError, EngineConfig, EvaluatorConfig, ProviderConfig, RunConfig};
use super::report::{write_trajectory_csv, ReportError};
use crate::exec::{BuiltinEvaluator, Candidate, Evaluator, Executor, SubprocessEvaluator};
use crate::instances::InstanceError;
use crate::llm::{ChatProvider, Fixture, Gateway, HttpProvider, ProviderError, ReplayProvider};
use crate::rng::derive_seed;
use crate::search::{run_evo, run_mcts, EventLog, Paradigm, PromptContext, SearchError, SearchOutcome, SearchState};
use crate::transfer::{injection, load_terminal_artifact, RunHeader, SourceArtifact, SourceTask, TransferError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{LineWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const EVENTS_FILE: &str = "events.jsonl";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Instances(#[from] InstanceError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl RunError {
    /// Errors the user fixes by editing the config or the command line.
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config(_) | RunError::Transfer(_))
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_owned(), source }
}

/// Stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn of(config: &RunConfig) -> Self {
        Provenance { config_hash: config.hash(), seed: config.seed, version: VERSION.to_owned() }
    }
}

/// Per-component seeds split from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub instances: u64,
    pub engine: u64,
    pub sparse: u64,
    pub backbone: u64,
}

impl Seeds {
    pub fn split(master: u64) -> Self {
        Seeds {
            instances: derive_seed(master, "instances"),
            engine: derive_seed(master, "engine"),
            sparse: derive_seed(master, "sparse"),
            backbone: derive_seed(master, "backbone"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub provenance: Provenance,
    pub task: String,
    pub engine: String,
    pub paradigm: Paradigm,
    #[serde(default)]
    pub source_task: Option<String>,
    pub best: Candidate,
    /// `None` when the reference program failed.
    pub baseline_score: Option<f64>,
    /// Best loss after initialization and after each round.
    pub trajectory: Vec<f64>,
    /// Losses of evaluated candidates in creation order.
    pub evaluated_scores: Vec<f64>,
    pub calls: u64,
    pub call_budget: u64,
    pub evaluations: u64,
    pub eval_budget: u64,
    pub programs: u64,
    pub calls_per_template: BTreeMap<String, u64>,
    /// SHA-256 of the event log.
    pub events_digest: String,
}

impl RunSummary {
    pub fn load(dir: &Path) -> Result<Self, RunError> {
        let path = dir.join(SUMMARY_FILE);
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        serde_json::from_str(&text).map_err(|e| RunError::Io { path, source: e.into() })
    }
}

fn provider(config: &RunConfig, seed_code: &str) -> Result<Box<dyn ChatProvider>, RunError> {
    Ok(match &config.provider {
        ProviderConfig::Replay { fixture } => Box::new(ReplayProvider::new(Fixture::load(fixture)?, seed_code)),
        ProviderConfig::Http(http) => Box::new(HttpProvider::new(http.clone())?),
    })
}

fn evaluator(config: &RunConfig) -> (Box<dyn Evaluator>, usize) {
    match &config.evaluator {
        EvaluatorConfig::Builtin { workers } => (Box::new(BuiltinEvaluator), *workers),
        EvaluatorConfig::Subprocess(spec) => (Box::new(SubprocessEvaluator::new(spec.clone())), spec.workers),
    }
}

fn create(path: &Path) -> Result<LineWriter<File>, RunError> {
    File::create(path).map(LineWriter::new).map_err(io(path))
}

/// Run the configured search to completion.
///
/// The summary file is removed first and only written back once the
/// engine finishes, so its presence marks a completed run.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    config.validate()?;
    let provenance = Provenance::of(config);
    let seeds = Seeds::split(config.seed);
    let task = config.task();
    let paradigm = config.engine.paradigm();

    let source: Option<SourceArtifact> = match &config.transfer {
        Some(t) => {
            if t.source_run == config.output_dir.join(EVENTS_FILE) {
                return Err(ConfigError("the source run log would be overwritten by this run".into()).into());
            }
            Some(load_terminal_artifact(&t.source_run, paradigm)?)
        }
        None => None,
    };

    let instances = task.training_instances(seeds.instances)?;
    let (eval, workers) = evaluator(config);
    let mut executor = Executor::new(task.clone(), instances, eval, seeds.backbone).with_workers(workers);
    if config.memo {
        executor = executor.with_memo();
    }
    let baseline_code = config.baseline_code.as_deref().unwrap_or(&task.seed_code);
    let baseline_score = executor.score(baseline_code).unwrap_or(f64::INFINITY);

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let summary_path = dir.join(SUMMARY_FILE);
    if summary_path.exists() {
        std::fs::remove_file(&summary_path).map_err(io(&summary_path))?;
    }

    let mut prompts = PromptContext::new(&task, baseline_score);
    if let Some(src) = &source {
        prompts = prompts.with_source(src);
    }

    let transcript_path = dir.join(TRANSCRIPT_FILE);
    let mut transcript = create(&transcript_path)?;
    writeln!(transcript, "{}", json!({ "provenance": provenance })).map_err(io(&transcript_path))?;
    let mut gateway = Gateway::new(provider(config, baseline_code)?, config.engine.call_budget())
        .with_retries(config.retries)
        .with_sink(Box::new(transcript));
    if let Some(cap) = config.prompt_cap {
        gateway = gateway.with_prompt_cap(cap);
    }
    if let Some(src) = &source {
        gateway = gateway.with_injection(injection(src, &prompts.bind::<String>([]))?);
    }

    let events_path = dir.join(EVENTS_FILE);
    let mut log = EventLog::with_sink(Box::new(create(&events_path)?));
    let header = RunHeader { task: SourceTask::from(&task), paradigm, engine: config.engine.name().to_owned() };
    let mut record = serde_json::to_value(&header).expect("header serializes");
    record["event"] = json!("run");
    record["provenance"] = json!(provenance);
    record["baseline_score"] = crate::search::score_json(baseline_score);
    record["source_task"] = json!(source.as_ref().map(|s| &s.task_id));
    log.push(record);

    let mut evals = crate::exec::EvalLedger::new(config.engine.eval_budget());
    let state = SearchState::new(&mut gateway, &executor, &mut evals, &mut log, prompts, seeds.engine, seeds.sparse);
    let outcome: SearchOutcome = match &config.engine {
        EngineConfig::Evo(c) => run_evo(c, state, baseline_score)?,
        EngineConfig::Mcts(c) => run_mcts(c, state, baseline_score)?.0,
    };
    if let Some(e) = log.sink_error() {
        return Err(SearchError::Log(e.to_owned()).into());
    }

    let summary = RunSummary {
        provenance,
        task: task.id.clone(),
        engine: config.engine.name().to_owned(),
        paradigm,
        source_task: source.map(|s| s.task_id),
        best: outcome.best,
        baseline_score: baseline_score.is_finite().then_some(baseline_score),
        trajectory: outcome.trajectory,
        evaluated_scores: outcome.candidates.iter().filter_map(Candidate::reported_score).collect(),
        calls: outcome.calls,
        call_budget: config.engine.call_budget(),
        evaluations: outcome.evaluations,
        eval_budget: config.engine.eval_budget(),
        programs: outcome.candidates.len() as u64,
        calls_per_template: gateway.ledger().per_template().clone(),
        events_digest: log.digest(),
    };
    let traj_path = dir.join(TRAJECTORY_FILE);
    write_trajectory_csv(&traj_path, &summary.evaluated_scores, &summary.provenance)?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, text + "\n").map_err(io(&summary_path))?;
    Ok(summary)
}
