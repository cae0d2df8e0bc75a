//! Native solver backbones that turn a candidate's heuristic artifact into
//! an objective value: ant colony optimization, guided local search, GRASP,
//! and the step-wise constructive harness.

mod aco;
mod artifact;
mod constructive;
mod gls;
mod grasp;

pub use aco::{aco_solve, aco_solve_traced, transition_weights, AcoOutcome, AcoParams, AcoSolution, AcoTarget};
pub use artifact::{ArtifactError, ArtifactKind, HeuristicArtifact};
pub use constructive::{
    construct_cts, construct_cvrp, construct_ftr, construct_jssp, construct_oas, construct_op,
    construct_qap, construct_tsp, construct_wpf, constructive_solve, CtsStep, CvrpStep, FtrStep,
    Greedy, JsspStep, OasStep, OpStep, Policy, QapStep, TspStep, WpfStep,
};
pub use gls::{gls_solve, two_opt, GlsOutcome, GlsParams, GlsRound};
pub use grasp::{grasp_solve, GraspOutcome, GraspParams};

use crate::instances::InstanceError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackboneError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("ant at node {node} has no reachable successor with positive weight")]
    DeadEnd { node: usize },
    #[error("selector chose an infeasible option: {0}")]
    InfeasibleChoice(String),
    #[error("policy does not support {0}")]
    Unsupported(&'static str),
    #[error("{0}")]
    Unsolvable(String),
}
