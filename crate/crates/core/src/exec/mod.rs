//! Candidate records, sandboxed evaluation and the evaluation ledger.

mod candidate;
mod evaluate;
mod ledger;
mod sandbox;
mod task;

pub use candidate::{Candidate, CandidateId, Origin, Status, TreeOp};
pub use evaluate::{
    backbone_objective, builtin_directive, score_code, BuiltinEvaluator, EvalFailure, Evaluator, Executor,
    SubprocessEvaluator, ARTIFACT_HARNESS, ROLLOUT_HARNESS,
};
pub use ledger::{sparse_count, sparse_mark, BudgetExhausted, EvalLedger};
pub use sandbox::{run_process, ExecSpec, ProcessOutput, SandboxError, OUTPUT_CAP};
pub use task::{task_ids, Backbone, InstanceRecipe, Mode, Task};
