//! Tree search over candidates: UCT selection with a budget-decaying
//! exploration weight, progressive widening, six expansion operators, max
//! backup and an elite archive.
//!
//! Every generated node costs exactly two model calls and one evaluation.
//! Bottom-up nodes are written as code and then described; top-down nodes
//! are written as knowledge and then implemented.

use super::context::{fmt_score, Paradigm, SearchError, SearchState};
use super::events::score_json;
use super::SearchOutcome;
use crate::exec::{Candidate, Origin, TreeOp};
use crate::llm::Shape;
use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    /// Root children created before the main loop.
    pub init_children: usize,
    /// Total generated candidates; each costs one evaluation.
    pub max_candidates: usize,
    pub elite_size: usize,
    /// Copies of each local-variant operator per expansion.
    pub k: usize,
    /// Base exploration coefficient.
    pub lambda0: f64,
    /// Progressive-widening exponent.
    pub alpha: f64,
    pub max_depth: usize,
    pub paradigm: Paradigm,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            init_children: 4,
            max_candidates: 200,
            elite_size: 10,
            k: 2,
            lambda0: 0.1,
            alpha: 0.5,
            max_depth: 10,
            paradigm: Paradigm::TopDown,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_owned()));
        if self.init_children == 0 || self.max_candidates == 0 || self.elite_size == 0 || self.k == 0 || self.max_depth == 0 {
            return bad("tree sizes and budgets must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return bad("lambda0 must be positive");
        }
        if self.paradigm == Paradigm::Dual {
            return bad("tree search runs bottom-up or top-down");
        }
        Ok(())
    }

    pub fn planned_calls(&self) -> u64 {
        2 * self.max_candidates as u64
    }

    pub fn planned_programs(&self) -> u64 {
        self.max_candidates as u64
    }

    /// Operators applied to a selected non-root leaf.
    pub fn schedule(&self) -> Vec<TreeOp> {
        let mut ops = vec![TreeOp::EliteBlend];
        ops.extend(std::iter::repeat_n(TreeOp::Rework, self.k));
        ops.extend(std::iter::repeat_n(TreeOp::Retune, self.k));
        ops.push(TreeOp::PathSynthesis);
        ops
    }
}

/// Exploration weight given `used` of `cap` evaluations.
pub fn exploration_factor(used: usize, cap: usize) -> f64 {
    1.0 - used as f64 / cap as f64
}

/// Children a node with `visits` visits may hold before widening.
pub fn widening_threshold(visits: u64, alpha: f64) -> usize {
    (visits as f64).powf(alpha).floor() as usize
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// `None` only at the root.
    pub candidate: Option<Candidate>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub visits: u64,
    /// Negated loss, raised to the best descendant value by backup. Invalid
    /// nodes hold negative infinity.
    pub value: f64,
    pub depth: usize,
}

impl TreeNode {
    fn is_valid(&self) -> bool {
        self.candidate.as_ref().is_some_and(Candidate::is_evaluated)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Default for Tree {
    fn default() -> Self {
        Self::new()
    }
}

impl Tree {
    pub fn new() -> Self {
        Tree {
            nodes: vec![TreeNode {
                candidate: None,
                parent: None,
                children: Vec::new(),
                visits: 0,
                value: f64::NEG_INFINITY,
                depth: 0,
            }],
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Attach an evaluated (or failed) candidate under `parent` and back its
    /// value up to the root.
    pub fn attach(&mut self, parent: NodeId, candidate: Candidate) -> NodeId {
        let value = if candidate.is_evaluated() { -candidate.score } else { f64::NEG_INFINITY };
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(TreeNode { candidate: Some(candidate), parent: Some(parent), children: Vec::new(), visits: 0, value, depth });
        self.nodes[parent].children.push(id);
        self.backup(id);
        id
    }

    /// Count one visit on every node from `id` to the root and lift each
    /// ancestor's value to at least its best child's.
    pub fn backup(&mut self, id: NodeId) {
        let mut cur = Some(id);
        let mut best = self.nodes[id].value;
        while let Some(v) = cur {
            let node = &mut self.nodes[v];
            node.visits += 1;
            node.value = node.value.max(best);
            best = node.value;
            cur = node.parent;
        }
    }

    /// Every node's value is at least that of each child.
    pub fn values_dominate_children(&self) -> bool {
        self.nodes.iter().all(|n| n.children.iter().all(|&c| n.value >= self.nodes[c].value))
    }

    fn path(&self, mut id: NodeId) -> Vec<NodeId> {
        let mut p = vec![id];
        while let Some(parent) = self.nodes[id].parent {
            p.push(parent);
            id = parent;
        }
        p.reverse();
        p
    }

    /// Descend from the root by UCT, skipping invalid children and those
    /// at the depth cap. Returns the node to expand and, in root-first
    /// order, nodes on the path that are owed a widening child.
    ///
    /// Child score: sibling-normalized value plus
    /// `rho * lambda0 * sqrt(ln(N_parent + 1) / N_child)`; unvisited
    /// children go first; ties pick the earliest child.
    pub fn select(&self, rho: f64, config: &TreeConfig) -> (NodeId, Vec<NodeId>) {
        let mut widen = Vec::new();
        let mut v = Self::ROOT;
        loop {
            let node = &self.nodes[v];
            if node.children.len() < widening_threshold(node.visits, config.alpha) && node.depth < config.max_depth {
                widen.push(v);
            }
            let open: Vec<NodeId> = node
                .children
                .iter()
                .copied()
                .filter(|&c| self.nodes[c].is_valid() && self.nodes[c].depth < config.max_depth)
                .collect();
            if open.is_empty() {
                widen.retain(|&w| w != v);
                return (v, widen);
            }
            let (lo, hi) = open.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
                (lo.min(self.nodes[c].value), hi.max(self.nodes[c].value))
            });
            let mut pick = open[0];
            let mut pick_score = f64::NEG_INFINITY;
            for &c in &open {
                let child = &self.nodes[c];
                let score = if child.visits == 0 {
                    f64::INFINITY
                } else {
                    let norm = if hi > lo { (child.value - lo) / (hi - lo) } else { 1.0 };
                    norm + rho * config.lambda0 * (((node.visits + 1) as f64).ln() / child.visits as f64).sqrt()
                };
                if score > pick_score {
                    pick = c;
                    pick_score = score;
                }
            }
            v = pick;
        }
    }
}

/// The best evaluated candidates seen, ascending by loss, earlier ids first
/// on ties.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EliteArchive {
    cap: usize,
    members: Vec<Candidate>,
}

impl EliteArchive {
    pub fn new(cap: usize) -> Self {
        EliteArchive { cap, members: Vec::new() }
    }

    pub fn offer(&mut self, c: &Candidate) {
        if !c.is_evaluated() {
            return;
        }
        let at = self.members.partition_point(|m| (m.score, m.id) <= (c.score, c.id));
        if at < self.cap {
            self.members.insert(at, c.clone());
            self.members.truncate(self.cap);
        }
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }
}

/// Relative standing of a loss within the archive, in thirds.
pub fn score_guidance(score: f64, archive: &EliteArchive) -> &'static str {
    let m = archive.members();
    let (Some(first), Some(last)) = (m.first(), m.last()) else {
        return "No other results are available for comparison yet.";
    };
    let (lo, hi) = (first.score, last.score);
    let pos = if hi > lo { (score - lo) / (hi - lo) } else { 0.0 };
    if pos <= 1.0 / 3.0 {
        "This is among the strongest results so far."
    } else if pos <= 2.0 / 3.0 {
        "This sits in the middle of the results so far."
    } else {
        "This is among the weaker results so far, so a larger change is warranted."
    }
}

fn text(s: &Option<String>) -> String {
    s.clone().unwrap_or_default()
}

fn node_block(i: usize, c: &Candidate, with_code: bool) -> String {
    let mut s = format!("## Heuristic {} | score: {}\n{}", i + 1, fmt_score(c.score), text(&c.knowledge));
    if with_code {
        s.push_str("\n\n");
        s.push_str(&text(&c.code));
    }
    s
}

struct Engine<'s, 'a> {
    st: &'s mut SearchState<'a>,
    config: &'s TreeConfig,
    tree: Tree,
    elite: EliteArchive,
    generated: usize,
}

impl Engine<'_, '_> {
    fn budget_left(&self) -> bool {
        self.generated < self.config.max_candidates
    }

    fn template(&self, op: TreeOp) -> String {
        let family = match (self.config.paradigm, self.st.prompts.is_transfer()) {
            (Paradigm::TopDown, true) => "mcts_cpt",
            (Paradigm::TopDown, false) => "mcts_td",
            _ => "mcts_bu",
        };
        format!("{family}/{}", op.tag())
    }

    fn candidate(&self, id: NodeId) -> &Candidate {
        self.tree.node(id).candidate.as_ref().expect("non-root node")
    }

    /// Best valid node of each root subtree, in subtree order.
    fn subtree_bests(&self) -> Vec<Candidate> {
        self.tree
            .node(Tree::ROOT)
            .children
            .iter()
            .filter_map(|&r| {
                let mut stack = vec![r];
                let mut best: Option<&Candidate> = None;
                while let Some(n) = stack.pop() {
                    let node = self.tree.node(n);
                    if let Some(c) = node.candidate.as_ref().filter(|c| c.is_evaluated()) {
                        if best.is_none_or(|b| (c.score, c.id) < (b.score, b.id)) {
                            best = Some(c);
                        }
                    }
                    stack.extend(&node.children);
                }
                best.cloned()
            })
            .collect()
    }

    fn bindings(&mut self, op: TreeOp, parent: NodeId) -> (Vec<(&'static str, String)>, Vec<u64>) {
        let mut b: Vec<(&'static str, String)> = Vec::new();
        let mut parents = Vec::new();
        match op {
            TreeOp::Initial => {}
            TreeOp::Explore => {
                let nodes = self.subtree_bests();
                let listed = nodes.iter().enumerate().map(|(i, c)| node_block(i, c, true)).collect::<Vec<_>>().join("\n\n");
                let scores = nodes.iter().enumerate().map(|(i, c)| node_block(i, c, false)).collect::<Vec<_>>().join("\n\n");
                b.push(("n_nodes", nodes.len().to_string()));
                b.push(("knowledge_nodes_with_code", listed));
                b.push(("target_adaptation_scores", scores));
                parents.extend(nodes.iter().map(|c| c.id));
            }
            TreeOp::EliteBlend => {
                let node = self.candidate(parent).clone();
                let others: Vec<&Candidate> = self.elite.members().iter().filter(|c| c.id != node.id).collect();
                let reference = others.choose(self.st.rng()).copied().cloned().unwrap_or_else(|| node.clone());
                b.extend([
                    ("reference_score", fmt_score(reference.score)),
                    ("reference_knowledge", text(&reference.knowledge)),
                    ("reference_code", text(&reference.code)),
                    ("source_knowledge_a", text(&reference.knowledge)),
                    ("parent_score", fmt_score(node.score)),
                    ("parent_knowledge", text(&node.knowledge)),
                    ("parent_code", text(&node.code)),
                    ("source_knowledge_b", text(&node.knowledge)),
                ]);
                parents.push(node.id);
                if reference.id != node.id {
                    parents.push(reference.id);
                }
            }
            TreeOp::Rework | TreeOp::Retune => {
                let node = self.candidate(parent).clone();
                b.extend([
                    ("node_score", fmt_score(node.score)),
                    ("node_knowledge", text(&node.knowledge)),
                    ("node_code", text(&node.code)),
                    ("parent_score", fmt_score(node.score)),
                    ("parent_knowledge", text(&node.knowledge)),
                    ("score_guidance", score_guidance(node.score, &self.elite).to_owned()),
                ]);
                parents.push(node.id);
            }
            TreeOp::PathSynthesis => {
                let path: Vec<Candidate> = self.tree.path(parent).into_iter().skip(1).map(|n| self.candidate(n).clone()).collect();
                let with_code = path.iter().enumerate().map(|(i, c)| node_block(i, c, true)).collect::<Vec<_>>().join("\n\n");
                let with_scores = path.iter().enumerate().map(|(i, c)| node_block(i, c, false)).collect::<Vec<_>>().join("\n\n");
                b.push(("n_stages", path.len().to_string()));
                b.push(("path_knowledge_with_code", with_code));
                b.push(("path_knowledge_with_scores", with_scores));
                parents.extend(path.last().map(|c| c.id));
            }
        }
        if self.st.prompts.is_transfer() {
            let src = self.st.prompts.get("source_knowledge").unwrap_or_default().to_owned();
            b.push(("source_knowledge_set", src));
        }
        (b, parents)
    }

    /// Two calls, one evaluation, one backup.
    fn grow(&mut self, op: TreeOp, parent: NodeId) -> Result<(), SearchError> {
        let (extra, parents) = self.bindings(op, parent);
        let binds = self.st.prompts.bind(extra);
        let origin = Origin::Tree(op);
        let template = self.template(op);
        let mut child = match self.config.paradigm {
            Paradigm::TopDown => {
                let mut c = self.st.generate(&template, binds, Shape::Knowledge, origin, parents)?;
                let (r1, r2) = self.references();
                let impl_template = if self.st.prompts.is_transfer() { "mcts_cpt/implement" } else { "mcts_td/implement" };
                let binds = self.st.prompts.bind([
                    ("knowledge", text(&c.knowledge)),
                    ("ref_score_1", r1.0),
                    ("ref_code_1", r1.1),
                    ("ref_score_2", r2.0),
                    ("ref_code_2", r2.1),
                ]);
                let p = self.st.complete(impl_template, binds, Shape::Code, c.id)?;
                c.code = p.code;
                if c.knowledge.is_none() {
                    c.set_invalid("response carried no knowledge");
                }
                c
            }
            _ => self.st.generate(&template, binds, Shape::Code, origin, parents)?,
        };
        let mut batch = [child];
        self.st.evaluate(&mut batch)?;
        [child] = batch;
        if self.config.paradigm != Paradigm::TopDown {
            let binds = self.st.prompts.bind([("code", text(&child.code))]);
            let p = self.st.complete("mcts_bu/describe", binds, Shape::Knowledge, child.id)?;
            child.knowledge = p.knowledge;
        }
        self.generated += 1;
        self.tree.attach(parent, child);
        Ok(())
    }

    /// The two best archived programs, or the baseline when the archive is
    /// short.
    fn references(&self) -> ((String, String), (String, String)) {
        let seed = || {
            (
                self.st.prompts.get("baseline_score").unwrap_or_default().to_owned(),
                self.st.prompts.get("func_seed").unwrap_or_default().to_owned(),
            )
        };
        let m = self.elite.members();
        let pick = |i: usize| m.get(i).map(|c| (fmt_score(c.score), text(&c.code))).unwrap_or_else(seed);
        (pick(0), pick(1))
    }

    fn refresh_elite(&mut self, from: usize) {
        for n in from..self.tree.len() {
            if let Some(c) = self.tree.node(n).candidate.clone() {
                self.elite.offer(&c);
            }
        }
    }

    fn root_op(&self) -> TreeOp {
        if self.subtree_bests().len() >= 2 {
            TreeOp::Explore
        } else {
            TreeOp::Initial
        }
    }

    fn snapshot(&mut self, round: usize) {
        let nodes: Vec<_> = (1..self.tree.len())
            .map(|n| {
                let node = self.tree.node(n);
                json!({
                    "candidate": node.candidate.as_ref().map(|c| c.id),
                    "parent": node.parent.and_then(|p| self.tree.node(p).candidate.as_ref().map(|c| c.id)),
                    "visits": node.visits,
                    "value": score_json(node.value),
                })
            })
            .collect();
        self.st.log.push(json!({
            "event": "tree",
            "round": round,
            "root_visits": self.tree.node(Tree::ROOT).visits,
            "nodes": nodes,
            "elite": self.elite.members().iter().map(|c| c.id).collect::<Vec<_>>(),
            "best_score": score_json(self.st.best_score()),
        }));
    }
}

/// Run a tree search to `max_candidates` generated programs.
///
/// The trajectory holds the best loss after initialization and after each
/// selection round.
pub fn run_mcts(config: &TreeConfig, mut st: SearchState<'_>, baseline_score: f64) -> Result<(SearchOutcome, Tree), SearchError> {
    config.validate()?;
    let mut e = Engine { st: &mut st, config, tree: Tree::new(), elite: EliteArchive::new(config.elite_size), generated: 0 };

    while e.generated < config.init_children.min(config.max_candidates) {
        e.grow(TreeOp::Initial, Tree::ROOT)?;
    }
    e.refresh_elite(1);
    if e.st.best().is_none() {
        let first_failure = e.st.archive().iter().find_map(|c| c.note.clone()).unwrap_or_default();
        return Err(SearchError::NoValidInit { generated: e.generated, first_failure });
    }
    let mut trajectory = vec![e.st.best_score()];
    e.snapshot(0);

    let mut round = 0;
    while e.budget_left() {
        round += 1;
        let rho = exploration_factor(e.generated, config.max_candidates);
        let (leaf, widen) = e.tree.select(rho, config);
        let before = e.tree.len();
        let mut work: Vec<(TreeOp, NodeId)> = widen
            .iter()
            .map(|&w| (if w == Tree::ROOT { e.root_op() } else { TreeOp::EliteBlend }, w))
            .collect();
        if leaf == Tree::ROOT {
            let op = e.root_op();
            work.extend(std::iter::repeat_n((op, leaf), 2 * config.k + 2));
        } else {
            work.extend(config.schedule().into_iter().map(|op| (op, leaf)));
        }
        for (op, at) in work {
            if !e.budget_left() {
                break;
            }
            e.grow(op, at)?;
        }
        e.refresh_elite(before);
        trajectory.push(e.st.best_score());
        e.snapshot(round);
    }

    let tree = std::mem::take(&mut e.tree);
    let best = e.elite.members().first().cloned().expect("elite holds the initial best");
    let elite_ids: Vec<u64> = e.elite.members().iter().map(|c| c.id).collect();
    let calls = st.gateway.ledger().used();
    let evaluations = st.evals.used();
    let candidates = st.archive().to_vec();
    st.log.push(json!({
        "event": "final",
        "best": best,
        "elite": elite_ids,
        "trajectory": trajectory.iter().map(|&s| score_json(s)).collect::<Vec<_>>(),
        "calls": calls,
        "evaluations": evaluations,
        "programs": candidates.len(),
    }));
    Ok((SearchOutcome { best, trajectory, baseline_score, candidates, calls, evaluations }, tree))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: u64, score: f64) -> Candidate {
        let mut c = Candidate::new(id, Origin::Init, None, Some("x".into()), vec![]);
        c.set_evaluated(score);
        c
    }

    #[test]
    fn exploration_and_widening_formulas() {
        assert_eq!(exploration_factor(50, 200), 0.75);
        assert_eq!(widening_threshold(9, 0.5), 3);
        assert_eq!(widening_threshold(8, 0.5), 2);
    }

    #[test]
    fn max_backup_on_a_chain() {
        let mut t = Tree::new();
        let a = t.attach(Tree::ROOT, cand(0, 5.0));
        t.attach(a, cand(1, 3.0));
        assert_eq!(t.node(a).value, -3.0);
        assert_eq!(t.node(Tree::ROOT).visits, 2);
        assert!(t.values_dominate_children());
    }

    #[test]
    fn exploitation_only_picks_the_better_child() {
        let mut t = Tree::new();
        t.attach(Tree::ROOT, cand(0, 2.0));
        let good = t.attach(Tree::ROOT, cand(1, 1.0));
        let cfg = TreeConfig { alpha: 0.01, ..TreeConfig::default() };
        assert_eq!(t.select(0.0, &cfg).0, good);
    }

    #[test]
    fn invalid_children_are_not_descended() {
        let mut t = Tree::new();
        let mut bad = Candidate::new(0, Origin::Init, None, None, vec![]);
        bad.set_invalid("x");
        t.attach(Tree::ROOT, bad);
        assert_eq!(t.node(1).value, f64::NEG_INFINITY);
        assert_eq!(t.select(1.0, &TreeConfig::default()).0, Tree::ROOT);
    }

    #[test]
    fn widening_is_collected_along_the_path() {
        let mut t = Tree::new();
        let a = t.attach(Tree::ROOT, cand(0, 1.0));
        let b = t.attach(a, cand(1, 1.0));
        for i in 0..3 {
            t.attach(b, cand(2 + i, 2.0));
        }
        // root: 5 visits, 1 child -> owed widening; a: 5 visits, 1 child -> owed
        let (_, widen) = t.select(0.0, &TreeConfig::default());
        assert_eq!(widen, [Tree::ROOT, a]);
    }

    #[test]
    fn elite_keeps_the_smallest_scores() {
        let mut e = EliteArchive::new(2);
        for (id, s) in [(0, 3.0), (1, 1.0), (2, 2.0), (3, 1.0)] {
            e.offer(&cand(id, s));
        }
        assert_eq!(e.members().iter().map(|c| c.id).collect::<Vec<_>>(), [1, 3]);
    }

    #[test]
    fn schedule_and_budget() {
        let c = TreeConfig::default();
        assert_eq!(c.schedule().len(), 2 * c.k + 2);
        assert_eq!(2 * c.schedule().len(), 4 * c.k + 4);
        assert_eq!(c.planned_calls(), 400);
        assert_eq!(c.planned_programs(), 200);
    }

    #[test]
    fn guidance_thirds() {
        let mut e = EliteArchive::new(10);
        for (id, s) in [(0, 0.0), (1, 3.0)] {
            e.offer(&cand(id, s));
        }
        assert!(score_guidance(0.5, &e).contains("strongest"));
        assert!(score_guidance(1.5, &e).contains("middle"));
        assert!(score_guidance(2.9, &e).contains("weaker"));
    }
}
