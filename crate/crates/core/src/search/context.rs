//! State shared by every search engine: prompt bindings, proposal and
//! evaluation plumbing, the elitist and the candidate archive.

use super::events::{score_json, EventLog};
use crate::exec::{sparse_mark, BudgetExhausted, Candidate, CandidateId, EvalLedger, Executor, Origin, Status};
use crate::llm::{bindings_hash, Bindings, Gateway, GatewayError, Proposal, Shape};
use crate::rng::{rng_from_seed, Rng};
use crate::transfer::SourceArtifact;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

/// Which object the search varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    /// Code first; knowledge is a post-hoc description.
    #[serde(rename = "bu")]
    BottomUp,
    /// Knowledge first; code realizes it.
    #[serde(rename = "td")]
    TopDown,
    /// Coupled knowledge and code populations.
    #[serde(rename = "dual")]
    Dual,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Evaluations(#[from] BudgetExhausted),
    #[error("no valid candidate after initialization ({generated} generated); first failure: {first_failure}")]
    NoValidInit { generated: usize, first_failure: String },
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("event log: {0}")]
    Log(String),
}

/// Render a loss for a prompt.
pub fn fmt_score(score: f64) -> String {
    if score.is_finite() {
        format!("{score:.6}")
    } else {
        "invalid".to_owned()
    }
}

/// Task-level bindings common to every prompt of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptContext {
    base: Bindings,
    transfer: bool,
}

impl PromptContext {
    pub fn new(task: &crate::exec::Task, baseline_score: f64) -> Self {
        let base = [
            ("func_name", task.func_name.clone()),
            ("prob_name", task.prob_name.clone()),
            ("func_desc", task.func_desc.clone()),
            ("func_sign", task.func_sign.clone()),
            ("func_seed", task.seed_code.trim_end().to_owned()),
            ("objective_desc", task.objective_desc.clone()),
            ("hint", task.hint.clone()),
            ("baseline_score", fmt_score(baseline_score)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        PromptContext { base, transfer: false }
    }

    /// Add the source-problem block and target aliases used by transfer
    /// templates.
    pub fn with_source(mut self, src: &SourceArtifact) -> Self {
        let alias: Vec<(String, String)> = ["func_name", "prob_name", "func_desc", "func_sign", "func_seed", "hint"]
            .iter()
            .map(|k| (format!("tgt_{k}"), self.base[*k].clone()))
            .collect();
        self.base.extend(alias);
        for (k, v) in [
            ("src_prob_name", &src.prob_name),
            ("src_func_name", &src.func_name),
            ("src_func_sign", &src.func_sign),
            ("src_func_desc", &src.func_desc),
            ("source_knowledge", &src.artifact),
            ("source_code", &src.code),
        ] {
            self.base.insert(k.to_owned(), v.clone());
        }
        self.transfer = true;
        self
    }

    pub fn is_transfer(&self) -> bool {
        self.transfer
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.base.get(key).map(String::as_str)
    }

    /// Base bindings plus `extra`; extra keys win.
    pub fn bind<K: Into<String>>(&self, extra: impl IntoIterator<Item = (K, String)>) -> Bindings {
        let mut b = self.base.clone();
        b.extend(extra.into_iter().map(|(k, v)| (k.into(), v)));
        b
    }
}

/// Engine plumbing: calls, evaluations, ids, the elitist and the log.
pub struct SearchState<'a> {
    pub gateway: &'a mut Gateway,
    pub executor: &'a Executor,
    pub evals: &'a mut EvalLedger,
    pub log: &'a mut EventLog,
    pub prompts: PromptContext,
    /// Fraction of each generated batch to evaluate; `None` evaluates all.
    pub eta: Option<f64>,
    rng: Rng,
    sparse_rng: Rng,
    next_id: CandidateId,
    best: Option<Candidate>,
    archive: Vec<Candidate>,
}

impl std::fmt::Debug for SearchState<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SearchState").field("next_id", &self.next_id).field("best", &self.best).finish_non_exhaustive()
    }
}

impl<'a> SearchState<'a> {
    pub fn new(
        gateway: &'a mut Gateway,
        executor: &'a Executor,
        evals: &'a mut EvalLedger,
        log: &'a mut EventLog,
        prompts: PromptContext,
        engine_seed: u64,
        sparse_seed: u64,
    ) -> Self {
        SearchState {
            gateway,
            executor,
            evals,
            log,
            prompts,
            eta: None,
            rng: rng_from_seed(engine_seed),
            sparse_rng: rng_from_seed(sparse_seed),
            next_id: 0,
            best: None,
            archive: Vec::new(),
        }
    }

    pub fn rng(&mut self) -> &mut Rng {
        &mut self.rng
    }

    /// Best evaluated candidate so far; earlier candidates win ties.
    pub fn best(&self) -> Option<&Candidate> {
        self.best.as_ref()
    }

    pub fn best_score(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |c| c.score)
    }

    /// Every candidate generated so far, in creation order, with final
    /// status.
    pub fn archive(&self) -> &[Candidate] {
        &self.archive
    }

    pub fn into_archive(self) -> Vec<Candidate> {
        self.archive
    }

    fn log_proposal(&mut self, template: &str, bindings: &Bindings, proposal: &Proposal, candidate: Option<CandidateId>) {
        let seq = self.gateway.ledger().used();
        self.log.push(json!({
            "event": "proposal",
            "call": seq,
            "template": template,
            "bindings": bindings_hash(bindings),
            "candidate": candidate,
            "knowledge": proposal.knowledge,
            "code": proposal.code,
        }));
    }

    /// A reflection call: returns the text, or an empty string when the
    /// reply was blank.
    pub fn reflect(&mut self, template: &str, bindings: Bindings) -> Result<String, SearchError> {
        let p = self.gateway.propose(template, &bindings, Shape::Knowledge)?;
        self.log_proposal(template, &bindings, &p, None);
        Ok(p.knowledge.unwrap_or_default())
    }

    /// A generation call producing a new, unscored candidate. For
    /// knowledge-and-code calls a reply without knowledge is invalid, and
    /// the evaluation slot is still spent.
    pub fn generate(
        &mut self,
        template: &str,
        bindings: Bindings,
        shape: Shape,
        origin: Origin,
        parents: Vec<CandidateId>,
    ) -> Result<Candidate, SearchError> {
        let p = self.gateway.propose(template, &bindings, shape)?;
        let id = self.next_id;
        self.next_id += 1;
        self.log_proposal(template, &bindings, &p, Some(id));
        let knowledge = if shape == Shape::Code { None } else { p.knowledge };
        let mut c = Candidate::new(id, origin, knowledge, p.code, parents);
        if shape == Shape::KnowledgeCode && c.knowledge.is_none() {
            c.set_invalid("response carried no knowledge");
        }
        Ok(c)
    }

    /// A follow-up call that fills in one field of an existing candidate
    /// (a description for code, or code for knowledge).
    pub fn complete(&mut self, template: &str, bindings: Bindings, shape: Shape, candidate: CandidateId) -> Result<Proposal, SearchError> {
        let p = self.gateway.propose(template, &bindings, shape)?;
        self.log_proposal(template, &bindings, &p, Some(candidate));
        Ok(p)
    }

    /// Score a generated batch and archive it. With sparse evaluation only
    /// a sampled subset is run and charged; the rest stay unevaluated.
    pub fn evaluate(&mut self, batch: &mut [Candidate]) -> Result<(), SearchError> {
        let selected: Vec<usize> = match self.eta {
            Some(eta) => sparse_mark(batch, eta, &mut self.sparse_rng),
            None => (0..batch.len()).collect(),
        };
        self.evals.charge(&self.executor.task.id, selected.len() as u64)?;
        let runnable: Vec<usize> = selected.iter().copied().filter(|&i| batch[i].status != Status::Invalid).collect();
        self.executor.score_selected(batch, &runnable);
        for (i, c) in batch.iter_mut().enumerate() {
            if !selected.contains(&i) && c.status != Status::Invalid {
                c.status = Status::Unevaluated;
                c.score = f64::INFINITY;
            }
        }
        for c in batch.iter() {
            self.log.push(json!({
                "event": "evaluation",
                "candidate": c.id,
                "origin": c.origin,
                "parents": c.parents,
                "status": c.status,
                "score": score_json(c.score),
                "note": c.note,
            }));
            if c.is_evaluated() && c.score < self.best_score() {
                self.best = Some(c.clone());
            }
            self.archive.push(c.clone());
        }
        if let Some(e) = self.log.sink_error() {
            return Err(SearchError::Log(e.to_owned()));
        }
        Ok(())
    }

    /// Record a candidate that reuses an existing score (no call, no
    /// evaluation).
    pub fn adopt(&mut self, mut c: Candidate, origin: Origin, parents: Vec<CandidateId>) -> Candidate {
        c.id = self.next_id;
        self.next_id += 1;
        c.origin = origin;
        c.parents = parents;
        self.log.push(json!({
            "event": "adopt",
            "candidate": c.id,
            "parents": c.parents,
            "score": score_json(c.score),
        }));
        self.archive.push(c.clone());
        c
    }

    /// `count` index pairs over a pool of `n`: distinct members within a
    /// pair, drawn with replacement across pairs. A pool of one pairs with
    /// itself.
    pub fn pairs(&mut self, n: usize, count: usize) -> Vec<(usize, usize)> {
        assert!(n > 0, "pairing needs a non-empty pool");
        (0..count)
            .map(|_| {
                if n == 1 {
                    return (0, 0);
                }
                let i = self.rng.random_range(0..n);
                let mut j = self.rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect()
    }
}

/// Whether a pair carries a performance preference: both evaluated with
/// different scores.
pub fn ranked(a: &Candidate, b: &Candidate) -> bool {
    a.is_evaluated() && b.is_evaluated() && a.score != b.score
}

/// Order a pair as (worse, better). Equal scores keep the earlier pool
/// member as better.
pub fn order(pool: &[Candidate], (i, j): (usize, usize)) -> (&Candidate, &Candidate) {
    let (a, b) = (&pool[i], &pool[j]);
    if a.score > b.score || (a.score == b.score && i > j) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Status line shown for a member of an unranked pair.
pub fn status_text(c: &Candidate) -> String {
    match c.status {
        Status::Evaluated => format!("evaluated, score {}", fmt_score(c.score)),
        Status::Unevaluated => "not evaluated".to_owned(),
        Status::Invalid => "failed to run".to_owned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: u64, score: Option<f64>) -> Candidate {
        let mut c = Candidate::new(id, Origin::Init, None, Some("x".into()), vec![]);
        if let Some(s) = score {
            c.set_evaluated(s);
        }
        c
    }

    #[test]
    fn order_puts_the_higher_loss_first() {
        let pool = [cand(0, Some(2.0)), cand(1, Some(1.0)), cand(2, Some(1.0))];
        assert_eq!(order(&pool, (0, 1)).0.id, 0);
        assert_eq!(order(&pool, (1, 0)).0.id, 0);
        // tie: later pool member is the worse one
        assert_eq!(order(&pool, (1, 2)).0.id, 2);
        assert_eq!(order(&pool, (2, 1)).0.id, 2);
    }

    #[test]
    fn ranking_needs_two_distinct_evaluated_scores() {
        assert!(ranked(&cand(0, Some(1.0)), &cand(1, Some(2.0))));
        assert!(!ranked(&cand(0, Some(1.0)), &cand(1, Some(1.0))));
        assert!(!ranked(&cand(0, Some(1.0)), &cand(1, None)));
    }
}
