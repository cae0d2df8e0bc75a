use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type CandidateId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Evaluated,
    /// Generated but deliberately not run (sparse evaluation). The score is
    /// a sorting placeholder.
    Unevaluated,
    Invalid,
}

/// Tree-search expansion operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TreeOp {
    /// First children of the empty root.
    #[serde(rename = "i1")]
    Initial,
    /// Fresh root child contrasted against existing subtrees.
    #[serde(rename = "e1")]
    Explore,
    /// Recombination with an elite reference.
    #[serde(rename = "e2")]
    EliteBlend,
    /// Structural variant of the selected node.
    #[serde(rename = "m1")]
    Rework,
    /// Parameter-level variant of the selected node.
    #[serde(rename = "m2")]
    Retune,
    /// Synthesis over the root-to-node path.
    #[serde(rename = "s1")]
    PathSynthesis,
}

impl TreeOp {
    pub fn tag(self) -> &'static str {
        match self {
            TreeOp::Initial => "i1",
            TreeOp::Explore => "e1",
            TreeOp::EliteBlend => "e2",
            TreeOp::Rework => "m1",
            TreeOp::Retune => "m2",
            TreeOp::PathSynthesis => "s1",
        }
    }
}

/// The operator that produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// The task's baseline function.
    Seed,
    Init,
    Crossover,
    Mutation,
    Distill,
    Ground,
    Tree(TreeOp),
    Transfer,
}

/// A knowledge text, a program, or both, with its empirical score.
///
/// Scores are losses: lower is better, and maximization objectives are
/// negated before they land here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CandidateId,
    pub knowledge: Option<String>,
    pub code: Option<String>,
    #[serde(serialize_with = "score_out", deserialize_with = "score_in")]
    pub score: f64,
    pub status: Status,
    pub origin: Origin,
    pub parents: Vec<CandidateId>,
    /// Failure reason for invalid candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn score_out<S: Serializer>(score: &f64, s: S) -> Result<S::Ok, S::Error> {
    if score.is_finite() {
        s.serialize_f64(*score)
    } else {
        s.serialize_none()
    }
}

fn score_in<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl Candidate {
    /// A fresh, not yet scored candidate.
    pub fn new(id: CandidateId, origin: Origin, knowledge: Option<String>, code: Option<String>, parents: Vec<CandidateId>) -> Self {
        Candidate { id, knowledge, code, score: f64::INFINITY, status: Status::Unevaluated, origin, parents, note: None }
    }

    pub fn set_evaluated(&mut self, score: f64) {
        debug_assert!(score.is_finite());
        self.score = score;
        self.status = Status::Evaluated;
        self.note = None;
    }

    pub fn set_invalid(&mut self, reason: impl Into<String>) {
        self.score = f64::INFINITY;
        self.status = Status::Invalid;
        self.note = Some(reason.into());
    }

    pub fn is_evaluated(&self) -> bool {
        self.status == Status::Evaluated
    }

    /// The score if it is a real measurement; placeholders and failures
    /// give `None`.
    pub fn reported_score(&self) -> Option<f64> {
        self.is_evaluated().then_some(self.score)
    }
}
