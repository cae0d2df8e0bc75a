//! Combinatorial optimization instances: data model, seeded generators,
//! objective evaluators, exhaustive oracles and a TSPLIB reader.

mod dist;
mod dlp;
mod jssp;
mod op;
mod oracle;
mod qap;
mod sco;
mod tsp;
mod tsplib;
mod vrp;

pub use dist::{euclidean, DistMatrix, Point};
pub use dlp::{default_p, eval_dlp, gen_dlp, DlpInstance, DlpVariant};
pub use jssp::{eval_jssp, gen_jssp, JsspInstance};
pub use op::{eval_op, gen_op, OpInstance};
pub use oracle::{brute_force_optimum, ORACLE_LIMITS};
pub use qap::{eval_qap, gen_qap, QapInstance};
pub use sco::{
    gen_sco, gen_sco_with, sco_rollout, sco_step, ScoInstance, ScoParams, ScoPayload, ScoState,
    ScoVariant,
};
pub use tsp::{
    eval_tour, gen_tsp, gen_tsp_traced, nn_tour, nn_tour_length, TspDistribution, TspInstance,
    TspTrace,
};
pub use tsplib::parse_tsplib;
pub use vrp::{eval_routes, gen_vrp, within_limit, VrpInstance, VrpVariant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema identifier written into every instance document.
pub const INSTANCE_SCHEMA: &str = "ahd.instance/1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("{what} requires n >= {min}, got {n}")]
    TooSmall { what: &'static str, min: usize, n: usize },
    #[error("unknown {kind} tag `{tag}`")]
    UnknownTag { kind: &'static str, tag: String },
    #[error("capacity {capacity} is below the largest demand {max_demand}")]
    CapacityBelowDemand { capacity: f64, max_demand: u32 },
    #[error("round trip to customer {customer} ({length:.6}) exceeds the duration limit {limit:.6}")]
    DurationUnreachable { customer: usize, length: f64, limit: f64 },
    #[error("facility count p={p} must satisfy 1 <= p < n={n}")]
    BadFacilityCount { p: usize, n: usize },
    #[error("not a valid permutation: {0}")]
    NotAPermutation(String),
    #[error("node {0} is not a customer of this instance")]
    UnknownNode(usize),
    #[error("customer {0} is visited more than once")]
    DuplicateCustomer(usize),
    #[error("customer {0} is never visited")]
    MissingCustomer(usize),
    #[error("route {route} carries load {load} over capacity {capacity}")]
    CapacityExceeded { route: usize, load: f64, capacity: f64 },
    #[error("route {route} has length {length:.6} over the duration limit {limit:.6}")]
    DurationExceeded { route: usize, length: f64, limit: f64 },
    #[error("tour length {length:.6} exceeds the travel budget {budget:.6}")]
    BudgetExceeded { length: f64, budget: f64 },
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("action {action} is not feasible at step {step}")]
    InfeasibleAction { action: usize, step: usize },
    #[error("{problem} instance too large for exhaustive search ({detail})")]
    TooLarge { problem: &'static str, detail: String },
    #[error("unsupported TSPLIB edge weight type `{0}`")]
    UnsupportedEdgeWeight(String),
    #[error("malformed TSPLIB input at line {line}: {msg}")]
    MalformedTsplib { line: usize, msg: String },
    #[error("TSPLIB DIMENSION is {declared} but {found} coordinates were read")]
    DimensionMismatch { declared: usize, found: usize },
    #[error("instance document: {0}")]
    Document(String),
}

/// Optimization direction of a problem's native objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Convert a native objective into a loss (lower is better).
    pub fn to_loss(self, objective: f64) -> f64 {
        match self {
            Sense::Minimize => objective,
            Sense::Maximize => -objective,
        }
    }

    pub fn from_loss(self, loss: f64) -> f64 {
        self.to_loss(loss)
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemInstance {
    Tsp(TspInstance),
    Vrp(VrpInstance),
    Op(OpInstance),
    Jssp(JsspInstance),
    Qap(QapInstance),
    Dlp(DlpInstance),
    Sco(ScoInstance),
}

impl ProblemInstance {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemInstance::Tsp(_) => "tsp",
            ProblemInstance::Vrp(_) => "vrp",
            ProblemInstance::Op(_) => "op",
            ProblemInstance::Jssp(_) => "jssp",
            ProblemInstance::Qap(_) => "qap",
            ProblemInstance::Dlp(_) => "dlp",
            ProblemInstance::Sco(_) => "sco",
        }
    }

    pub fn sense(&self) -> Sense {
        match self {
            ProblemInstance::Tsp(_)
            | ProblemInstance::Vrp(_)
            | ProblemInstance::Jssp(_)
            | ProblemInstance::Qap(_) => Sense::Minimize,
            ProblemInstance::Op(_) | ProblemInstance::Sco(_) => Sense::Maximize,
            ProblemInstance::Dlp(d) => d.variant.sense(),
        }
    }

    /// Number of nodes, jobs×machines operations, facilities or items.
    pub fn size(&self) -> usize {
        match self {
            ProblemInstance::Tsp(i) => i.n(),
            ProblemInstance::Vrp(i) => i.n(),
            ProblemInstance::Op(i) => i.n(),
            ProblemInstance::Jssp(i) => i.jobs() * i.machines(),
            ProblemInstance::Qap(i) => i.n(),
            ProblemInstance::Dlp(i) => i.n(),
            ProblemInstance::Sco(i) => i.n(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("instances always serialize");
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("schema".into(), serde_json::Value::String(INSTANCE_SCHEMA.into()));
        }
        serde_json::to_string(&value).expect("instances always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| InstanceError::Document(e.to_string()))?;
        let map = value
            .as_object_mut()
            .ok_or_else(|| InstanceError::Document("expected a JSON object".into()))?;
        match map.remove("schema") {
            Some(serde_json::Value::String(s)) if s == INSTANCE_SCHEMA => {}
            Some(other) => {
                return Err(InstanceError::Document(format!("unsupported schema {other}")))
            }
            None => return Err(InstanceError::Document("missing `schema` field".into())),
        }
        serde_json::from_value(value).map_err(|e| InstanceError::Document(e.to_string()))
    }
}

macro_rules! impl_from_instance {
    ($($t:ident => $v:ident),*) => {
        $(impl From<$t> for ProblemInstance {
            fn from(i: $t) -> Self { ProblemInstance::$v(i) }
        })*
    };
}
impl_from_instance!(
    TspInstance => Tsp, VrpInstance => Vrp, OpInstance => Op, JsspInstance => Jssp,
    QapInstance => Qap, DlpInstance => Dlp, ScoInstance => Sco
);

/// Check that `perm` is a bijection on `0..n`.
pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<(), InstanceError> {
    if perm.len() != n {
        return Err(InstanceError::NotAPermutation(format!(
            "length {} for {n} elements",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n {
            return Err(InstanceError::NotAPermutation(format!("index {p} out of range")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(InstanceError::NotAPermutation(format!("index {p} repeated")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn documents_round_trip_with_schema() {
        let inst: ProblemInstance = gen_tsp(5, TspDistribution::Uniform, &mut rng_from_seed(1))
            .unwrap()
            .into();
        let text = inst.to_json();
        assert!(text.contains("\"schema\":\"ahd.instance/1\""));
        assert!(text.contains("\"problem\":\"tsp\""));
        assert_eq!(ProblemInstance::from_json(&text).unwrap(), inst);
    }

    #[test]
    fn documents_without_schema_are_rejected() {
        let err = ProblemInstance::from_json(r#"{"problem":"tsp"}"#).unwrap_err();
        assert!(err.to_string().contains("schema"));
    }
}
