//! Search engines over candidate heuristics.

mod context;
mod events;
mod evo;
mod mcts;

pub use context::{fmt_score, order, ranked, status_text, Paradigm, PromptContext, SearchError, SearchState};
pub use events::{score_json, EventLog};
pub use evo::{run_evo, DualCounts, EvoConfig};
pub use mcts::{
    exploration_factor, run_mcts, score_guidance, widening_threshold, EliteArchive, NodeId, Tree, TreeConfig, TreeNode,
};

use crate::exec::Candidate;
use serde::{Deserialize, Serialize};

/// Result of one completed search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Best evaluated candidate. Top-down runs carry its knowledge.
    pub best: Candidate,
    /// Best-so-far loss, one entry per round.
    pub trajectory: Vec<f64>,
    pub baseline_score: f64,
    /// Every generated candidate in creation order.
    pub candidates: Vec<Candidate>,
    pub calls: u64,
    pub evaluations: u64,
}
