//! Scoring candidate programs: the evaluator backends and the batch
//! executor that commits results to the evaluation ledger.

use super::sandbox::{run_process, ExecSpec, SandboxError};
use super::{BudgetExhausted, Candidate, EvalLedger, Mode, Task};
use crate::backbones::{
    aco_solve, constructive_solve, gls_solve, grasp_solve, AcoTarget, ArtifactError, BackboneError, Greedy,
    HeuristicArtifact,
};
use crate::instances::{DistMatrix, ProblemInstance};
use crate::rng::{derive_indexed, rng_from_seed};
use serde_json::Value;
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;
use thiserror::Error;

pub const ARTIFACT_HARNESS: &str = include_str!("../../assets/harness/artifact.py");
pub const ROLLOUT_HARNESS: &str = include_str!("../../assets/harness/rollout.py");

/// Why a candidate could not be scored. Every variant makes the candidate
/// invalid; none of them aborts a search.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalFailure {
    #[error("no code to run")]
    MissingCode,
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("unparseable output: {0}")]
    Output(String),
    #[error("bad artifact: {0}")]
    Artifact(#[from] ArtifactError),
    #[error("backbone: {0}")]
    Backbone(String),
    #[error("non-finite objective {0}")]
    NonFinite(f64),
    #[error("builtin: {0}")]
    Builtin(String),
}

impl From<BackboneError> for EvalFailure {
    fn from(e: BackboneError) -> Self {
        EvalFailure::Backbone(e.to_string())
    }
}

/// Runs candidate code. Implementations must be deterministic in their
/// inputs.
pub trait Evaluator: Send + Sync {
    /// Artifact mode: the program's artifact for one instance.
    fn artifact(&self, code: &str, task: &Task, instance: &ProblemInstance) -> Result<HeuristicArtifact, EvalFailure>;
    /// Rollout mode: one native objective per instance.
    fn rollout(&self, code: &str, task: &Task, instances: &[ProblemInstance]) -> Result<Vec<f64>, EvalFailure>;
}

/// Runs candidates as child processes through the shipped harness scripts.
#[derive(Debug, Clone)]
pub struct SubprocessEvaluator {
    pub spec: ExecSpec,
}

impl SubprocessEvaluator {
    pub fn new(spec: ExecSpec) -> Self {
        SubprocessEvaluator { spec }
    }

    fn run(&self, harness: &str, code: &str, extra: &[&str], input: &[u8]) -> Result<Value, EvalFailure> {
        let dir = tempfile::tempdir().map_err(|e| SandboxError::Io(e.to_string()))?;
        let write = |name: &str, text: &str| std::fs::write(dir.path().join(name), text).map_err(|e| SandboxError::Io(e.to_string()));
        write("harness.py", harness)?;
        write("candidate.py", code)?;
        let mut argv = self.spec.interpreter.clone();
        argv.extend(["harness.py", "candidate.py"].map(String::from));
        argv.extend(extra.iter().map(|s| s.to_string()));
        let out = run_process(&argv, dir.path(), input, Duration::from_secs_f64(self.spec.timeout_secs))?;
        let text = String::from_utf8_lossy(&out.stdout);
        let line = text.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
        serde_json::from_str(line).map_err(|e| EvalFailure::Output(format!("{e}: {}", truncate(line, 200))))
    }
}

fn truncate(s: &str, n: usize) -> &str {
    s.char_indices().nth(n).map_or(s, |(i, _)| &s[..i])
}

impl Evaluator for SubprocessEvaluator {
    fn artifact(&self, code: &str, task: &Task, instance: &ProblemInstance) -> Result<HeuristicArtifact, EvalFailure> {
        let kind = task.artifact_kind().ok_or_else(|| EvalFailure::Output("task has no artifact kind".into()))?;
        let kind_tag = serde_json::to_value(kind).expect("kinds serialize");
        let mut doc = self.run(ARTIFACT_HARNESS, code, &[&task.func_name, kind_tag.as_str().unwrap_or_default()], instance.to_json().as_bytes())?;
        let artifact = doc.get_mut("artifact").map(Value::take).ok_or_else(|| EvalFailure::Output("missing `artifact` field".into()))?;
        Ok(HeuristicArtifact::from_json_value(artifact)?)
    }

    fn rollout(&self, code: &str, task: &Task, instances: &[ProblemInstance]) -> Result<Vec<f64>, EvalFailure> {
        let docs: Vec<Value> = instances
            .iter()
            .map(|i| serde_json::from_str(&i.to_json()).expect("instance json is valid"))
            .collect();
        let input = serde_json::json!({ "task": task.id, "instances": docs }).to_string();
        let doc = self.run(ROLLOUT_HARNESS, code, &[&task.func_name], input.as_bytes())?;
        let objectives: Vec<f64> = doc
            .get("objectives")
            .cloned()
            .map(serde_json::from_value)
            .ok_or_else(|| EvalFailure::Output("missing `objectives` field".into()))?
            .map_err(|e| EvalFailure::Output(e.to_string()))?;
        if objectives.len() != instances.len() {
            return Err(EvalFailure::Output(format!("{} objectives for {} instances", objectives.len(), instances.len())));
        }
        Ok(objectives)
    }
}

/// Native stand-ins for candidate programs, selected by a
/// `# builtin: <name>` line in the code. Runs without an interpreter,
/// so searches driven by canned responses finish quickly and exactly.
///
/// Artifact names: `uniform`, `inverse_distance` (`1/(d+1e-9)`),
/// `inverse_distance_sq`, `distance`, `centrality` (inverse mean row
/// distance) and `coverage` (demand within the cover radius).
/// Rollout name: `greedy`. Code without a known name is invalid.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinEvaluator;

/// The name after the first `# builtin:` marker, if any.
pub fn builtin_directive(code: &str) -> Option<&str> {
    code.lines().find_map(|l| l.trim().strip_prefix("# builtin:")).map(str::trim)
}

pub(crate) fn instance_dist(instance: &ProblemInstance) -> Option<&DistMatrix> {
    match instance {
        ProblemInstance::Tsp(i) => Some(&i.dist),
        ProblemInstance::Vrp(i) => Some(&i.dist),
        ProblemInstance::Op(i) => Some(&i.dist),
        ProblemInstance::Qap(i) => Some(&i.dist),
        ProblemInstance::Dlp(i) => Some(&i.dist),
        ProblemInstance::Jssp(_) | ProblemInstance::Sco(_) => None,
    }
}

impl Evaluator for BuiltinEvaluator {
    fn artifact(&self, code: &str, task: &Task, instance: &ProblemInstance) -> Result<HeuristicArtifact, EvalFailure> {
        let name = builtin_directive(code).ok_or_else(|| EvalFailure::Builtin("no `# builtin:` line".into()))?;
        let kind = task.artifact_kind().ok_or_else(|| EvalFailure::Builtin("task has no artifact kind".into()))?;
        let d = instance_dist(instance).ok_or_else(|| EvalFailure::Builtin("instance has no distances".into()))?;
        let n = d.n();
        let matrix = |f: &dyn Fn(f64) -> f64| HeuristicArtifact::matrix_fn(kind, n, |i, j| f(d.get(i, j)));
        let artifact = match (name, kind.is_matrix()) {
            ("uniform", true) => matrix(&|_| 1.0),
            ("uniform", false) => HeuristicArtifact::scores(vec![1.0; n]),
            ("inverse_distance", true) => matrix(&|x| 1.0 / (x + 1e-9)),
            ("inverse_distance_sq", true) => matrix(&|x| 1.0 / ((x + 1e-9) * (x + 1e-9))),
            ("distance", true) => matrix(&|x| x),
            ("centrality", false) => {
                HeuristicArtifact::scores((0..n).map(|i| 1.0 / (d.row(i).iter().sum::<f64>() / n as f64 + 1e-9)).collect())
            }
            ("coverage", false) => {
                let ProblemInstance::Dlp(dlp) = instance else {
                    return Err(EvalFailure::Builtin("coverage needs a location instance".into()));
                };
                let radius = dlp.cover_radius.unwrap_or(0.0);
                let weight = |j: usize| dlp.demands.as_ref().map_or(1.0, |w| w[j]);
                HeuristicArtifact::scores(
                    (0..n).map(|i| (0..n).filter(|&j| d.get(i, j) <= radius).map(weight).sum()).collect(),
                )
            }
            _ => return Err(EvalFailure::Builtin(format!("no {kind:?} builtin named `{name}`"))),
        };
        Ok(artifact?)
    }

    fn rollout(&self, code: &str, _task: &Task, instances: &[ProblemInstance]) -> Result<Vec<f64>, EvalFailure> {
        match builtin_directive(code) {
            Some("greedy") => instances.iter().map(|i| Ok(constructive_solve(i, &mut Greedy)?)).collect(),
            Some(other) => Err(EvalFailure::Builtin(format!("no rollout builtin named `{other}`"))),
            None => Err(EvalFailure::Builtin("no `# builtin:` line".into())),
        }
    }
}

/// Native objective of an artifact on one instance.
pub fn backbone_objective(task: &Task, instance: &ProblemInstance, artifact: &HeuristicArtifact, seed: u64) -> Result<f64, EvalFailure> {
    use super::Backbone;
    let rng = &mut rng_from_seed(seed);
    let objective = match (&task.backbone, instance) {
        (Backbone::Aco { params }, ProblemInstance::Tsp(t)) => aco_solve(AcoTarget::Tsp(t), artifact, params, rng)?.best_cost,
        (Backbone::Aco { params }, ProblemInstance::Vrp(v)) => aco_solve(AcoTarget::Vrp(v), artifact, params, rng)?.best_cost,
        (Backbone::Gls { params }, ProblemInstance::Tsp(t)) => gls_solve(t, artifact, params)?.best_length,
        (Backbone::Grasp { params }, ProblemInstance::Dlp(d)) => grasp_solve(d, artifact, params, rng)?.best_objective,
        (backbone, inst) => {
            return Err(EvalFailure::Backbone(format!("{backbone:?} cannot solve a {} instance", inst.kind())))
        }
    };
    Ok(objective)
}

/// Mean loss of `code` over `instances`. Instance `i` runs its backbone
/// with seed `derive_indexed(backbone_seed, i)`, so every candidate faces
/// the same randomness.
pub fn score_code(
    evaluator: &dyn Evaluator,
    code: &str,
    task: &Task,
    instances: &[ProblemInstance],
    backbone_seed: u64,
) -> Result<f64, EvalFailure> {
    if instances.is_empty() {
        return Err(EvalFailure::Output("no instances to evaluate on".into()));
    }
    let objectives = match task.mode() {
        Mode::Rollout => evaluator.rollout(code, task, instances)?,
        Mode::Artifact => instances
            .iter()
            .enumerate()
            .map(|(i, inst)| {
                let artifact = evaluator.artifact(code, task, inst)?;
                backbone_objective(task, inst, &artifact, derive_indexed(backbone_seed, i as u64))
            })
            .collect::<Result<_, _>>()?,
    };
    let mut total = 0.0;
    for (inst, obj) in instances.iter().zip(&objectives) {
        if !obj.is_finite() {
            return Err(EvalFailure::NonFinite(*obj));
        }
        total += inst.sense().to_loss(*obj);
    }
    Ok(total / instances.len() as f64)
}

/// A task, its training instances and an evaluator, bound together.
pub struct Executor {
    pub task: Task,
    pub instances: Vec<ProblemInstance>,
    pub backbone_seed: u64,
    pub workers: usize,
    evaluator: Box<dyn Evaluator>,
    memo: Option<Mutex<HashMap<String, Result<f64, EvalFailure>>>>,
}

impl Executor {
    pub fn new(task: Task, instances: Vec<ProblemInstance>, evaluator: Box<dyn Evaluator>, backbone_seed: u64) -> Self {
        Executor { task, instances, backbone_seed, workers: 1, evaluator, memo: None }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Reuse results for byte-identical code. Scores are deterministic, so
    /// this changes only wall time; the ledger is still charged per
    /// candidate.
    pub fn with_memo(mut self) -> Self {
        self.memo = Some(Mutex::new(HashMap::new()));
        self
    }

    /// Score code without touching any ledger.
    pub fn score(&self, code: &str) -> Result<f64, EvalFailure> {
        if let Some(memo) = &self.memo {
            if let Some(hit) = memo.lock().expect("memo lock").get(code) {
                return hit.clone();
            }
        }
        let result = score_code(self.evaluator.as_ref(), code, &self.task, &self.instances, self.backbone_seed);
        if let Some(memo) = &self.memo {
            memo.lock().expect("memo lock").insert(code.to_owned(), result.clone());
        }
        result
    }

    fn apply(&self, candidate: &mut Candidate) {
        match candidate.code.as_deref().map(|c| self.score(c)) {
            Some(Ok(score)) => candidate.set_evaluated(score),
            Some(Err(failure)) => candidate.set_invalid(failure.to_string()),
            None => candidate.set_invalid(EvalFailure::MissingCode.to_string()),
        }
    }

    /// Evaluate one candidate, charging one evaluation. A candidate without
    /// code is charged and marked invalid.
    pub fn evaluate(&self, candidate: &mut Candidate, ledger: &mut EvalLedger) -> Result<(), BudgetExhausted> {
        ledger.charge(&self.task.id, 1)?;
        self.apply(candidate);
        Ok(())
    }

    /// Evaluate every candidate in `batch`, charging the whole batch up
    /// front.
    pub fn evaluate_batch(&self, batch: &mut [Candidate], ledger: &mut EvalLedger) -> Result<(), BudgetExhausted> {
        let all: Vec<usize> = (0..batch.len()).collect();
        self.evaluate_selected(batch, &all, ledger)
    }

    /// Evaluate only the listed members of `batch`, charging one evaluation
    /// each.
    pub fn evaluate_selected(&self, batch: &mut [Candidate], selected: &[usize], ledger: &mut EvalLedger) -> Result<(), BudgetExhausted> {
        ledger.charge(&self.task.id, selected.len() as u64)?;
        self.score_selected(batch, selected);
        Ok(())
    }

    /// Score the listed members of `batch` without touching any ledger.
    /// Runs up to `workers` candidates at once; each result depends only on
    /// its own code, so the outcome is independent of scheduling.
    pub fn score_selected(&self, batch: &mut [Candidate], selected: &[usize]) {
        let mut picked: Vec<&mut Candidate> = batch
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| selected.contains(i))
            .map(|(_, c)| c)
            .collect();
        if self.workers <= 1 || picked.len() <= 1 {
            picked.into_iter().for_each(|c| self.apply(c));
            return;
        }
        let per = picked.len().div_ceil(self.workers);
        std::thread::scope(|s| {
            for chunk in picked.chunks_mut(per) {
                s.spawn(move || chunk.iter_mut().for_each(|c| self.apply(c)));
            }
        });
    }
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("task", &self.task.id)
            .field("instances", &self.instances.len())
            .field("backbone_seed", &self.backbone_seed)
            .field("workers", &self.workers)
            .finish_non_exhaustive()
    }
}
