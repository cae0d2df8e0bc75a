//! Population search: bottom-up, top-down and dual, each optionally with
//! sparse evaluation.
//!
//! One bottom-up or top-down iteration issues, in this order: per pair a
//! short-term reflection then a crossover (`2M` calls), one long-term
//! reflection, then `N = max(1, floor(mu*M))` mutations. The two paradigms
//! differ only in templates and in what a proposal must contain.

use super::context::{fmt_score, order, ranked, status_text, Paradigm, SearchError, SearchState};
use super::events::score_json;
use super::SearchOutcome;
use crate::exec::{sparse_count, Candidate, Origin, Status};
use crate::llm::Shape;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Offspring per iteration for each dual-search operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualCounts {
    pub knowledge_crossover: usize,
    pub distill: usize,
    pub code_crossover: usize,
    pub ground: usize,
}

impl Default for DualCounts {
    fn default() -> Self {
        DualCounts { knowledge_crossover: 4, distill: 1, code_crossover: 4, ground: 1 }
    }
}

impl DualCounts {
    pub fn total(&self) -> usize {
        self.knowledge_crossover + self.distill + self.code_crossover + self.ground
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvoConfig {
    pub init_size: usize,
    pub iterations: usize,
    pub population_size: usize,
    pub mutation_rate: f64,
    pub paradigm: Paradigm,
    /// Evaluated fraction of each generated batch. Absent means all.
    pub eta: Option<f64>,
    /// Cap on retained unevaluated individuals; defaults to the population
    /// size.
    pub unk_slots: Option<usize>,
    pub dual: DualCounts,
}

impl Default for EvoConfig {
    fn default() -> Self {
        EvoConfig {
            init_size: 10,
            iterations: 30,
            population_size: 5,
            mutation_rate: 1.0,
            paradigm: Paradigm::TopDown,
            eta: None,
            unk_slots: None,
            dual: DualCounts::default(),
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_owned()));
        if self.init_size == 0 || self.iterations == 0 || self.population_size == 0 {
            return bad("init_size, iterations and population_size must be at least 1");
        }
        if !(self.mutation_rate >= 0.0 && self.mutation_rate.is_finite()) {
            return bad("mutation_rate must be finite and nonnegative");
        }
        if self.eta.is_some_and(|e| !(0.0..=1.0).contains(&e)) {
            return bad("eta must lie in [0, 1]");
        }
        if self.paradigm == Paradigm::Dual && self.dual.total() == 0 {
            return bad("dual search needs at least one offspring per iteration");
        }
        Ok(())
    }

    /// Mutation offspring per iteration.
    pub fn mutation_count(&self) -> usize {
        ((self.mutation_rate * self.population_size as f64).floor() as usize).max(1)
    }

    fn unk_cap(&self) -> usize {
        self.unk_slots.unwrap_or(self.population_size)
    }

    fn dual_init_split(&self) -> (usize, usize) {
        let k = self.init_size.div_ceil(2);
        (k, self.init_size - k)
    }

    /// Model calls for a full run.
    pub fn planned_calls(&self) -> u64 {
        let per_iter = match self.paradigm {
            Paradigm::BottomUp | Paradigm::TopDown => 2 * self.population_size + 1 + self.mutation_count(),
            Paradigm::Dual => {
                let d = &self.dual;
                2 * d.knowledge_crossover + d.distill + 2 * d.code_crossover + d.ground + 1
            }
        };
        (self.init_size + self.iterations * per_iter) as u64
    }

    /// Programs generated over a full run.
    pub fn planned_programs(&self) -> u64 {
        let per_iter = match self.paradigm {
            Paradigm::BottomUp | Paradigm::TopDown => self.population_size + self.mutation_count(),
            Paradigm::Dual => self.dual.total(),
        };
        (self.init_size + self.iterations * per_iter) as u64
    }

    /// Evaluations charged over a full run.
    pub fn planned_evaluations(&self) -> u64 {
        let b = |n: usize| self.eta.map_or(n, |eta| sparse_count(eta, n)) as u64;
        let t = self.iterations as u64;
        match self.paradigm {
            Paradigm::BottomUp | Paradigm::TopDown => {
                b(self.init_size) + t * (b(self.population_size) + b(self.mutation_count()))
            }
            Paradigm::Dual => {
                let (k0, c0) = self.dual_init_split();
                let d = &self.dual;
                b(k0) + b(c0) + t * (b(d.knowledge_crossover + d.distill) + b(d.code_crossover + d.ground))
            }
        }
    }
}

struct Templates {
    init: &'static str,
    st: &'static str,
    lt: &'static str,
    cx: &'static str,
    mt: &'static str,
    st_unranked: &'static str,
    cx_unranked: &'static str,
    shape: Shape,
}

const BOTTOM_UP: Templates = Templates {
    init: "dual/init-code",
    st: "dual/short-term-code-reflection",
    lt: "dual/long-term-reflection",
    cx: "dual/code-crossover",
    mt: "reevo_bu/mutation",
    st_unranked: "sparse/bottom-up-uncertain-short-term-reflection",
    cx_unranked: "sparse/bottom-up-uncertain-crossover",
    shape: Shape::Code,
};

const TOP_DOWN: Templates = Templates {
    init: "reevo_td/init",
    st: "reevo_td/short-term-reflection",
    lt: "reevo_td/long-term-reflection",
    cx: "reevo_td/crossover",
    mt: "reevo_td/mutation",
    st_unranked: "sparse/top-down-uncertain-short-term-reflection",
    cx_unranked: "sparse/top-down-uncertain-crossover",
    shape: Shape::KnowledgeCode,
};

const TOP_DOWN_TRANSFER: Templates = Templates {
    init: "reevo_cpt/init",
    st: "reevo_cpt/short-term-reflection",
    lt: "reevo_cpt/long-term-reflection",
    cx: "reevo_cpt/crossover",
    mt: "reevo_cpt/mutation",
    ..TOP_DOWN
};

/// Dual search uses the top-down sparse templates on the knowledge side and
/// the bottom-up ones on the code side.
const DUAL_KNOWLEDGE: Templates = Templates {
    init: "dual/init-knowledge",
    st: "dual/short-term-knowledge-reflection",
    lt: "dual/long-term-reflection",
    cx: "dual/knowledge-crossover",
    mt: "dual/distillation",
    ..TOP_DOWN
};

const DUAL_CODE: Templates = Templates {
    init: "dual/init-code",
    st: "dual/short-term-code-reflection",
    lt: "dual/long-term-reflection",
    cx: "dual/code-crossover",
    mt: "dual/grounding",
    ..BOTTOM_UP
};

fn text(s: &Option<String>) -> String {
    s.clone().unwrap_or_default()
}

fn ids(cs: &[Candidate]) -> Vec<u64> {
    cs.iter().map(|c| c.id).collect()
}

/// Evaluated and unevaluated members of one population.
#[derive(Debug, Default)]
struct Population {
    evaluated: Vec<Candidate>,
    unevaluated: Vec<Candidate>,
}

impl Population {
    /// Pairing pool: evaluated members first, then unevaluated.
    fn pool(&self) -> Vec<Candidate> {
        self.evaluated.iter().chain(&self.unevaluated).cloned().collect()
    }

    /// Keep valid evaluated offspring and queue unevaluated ones; invalid
    /// ones are dropped.
    fn extend(&mut self, batch: Vec<Candidate>, unk_cap: usize) {
        for c in batch {
            match c.status {
                Status::Evaluated => self.evaluated.push(c),
                Status::Unevaluated => self.unevaluated.push(c),
                Status::Invalid => {}
            }
        }
        let excess = self.unevaluated.len().saturating_sub(unk_cap);
        self.unevaluated.drain(..excess);
    }

    /// Valid crossover offspring become the evaluated population, topped up
    /// with the best previous members when fewer than `size` survive.
    fn replace(&mut self, batch: Vec<Candidate>, size: usize, unk_cap: usize) {
        let mut previous = std::mem::take(&mut self.evaluated);
        self.extend(batch, unk_cap);
        self.evaluated.truncate(size);
        if self.evaluated.len() < size {
            previous.sort_by(|a, b| a.score.total_cmp(&b.score));
            let need = size - self.evaluated.len();
            self.evaluated.extend(previous.into_iter().take(need));
        }
    }

    fn best(&self) -> Option<&Candidate> {
        self.evaluated.iter().fold(None, |best: Option<&Candidate>, c| match best {
            Some(b) if b.score <= c.score => Some(b),
            _ => Some(c),
        })
    }
}

/// One pair's reflection and crossover calls.
fn cross_pair(
    st: &mut SearchState<'_>,
    t: &Templates,
    pool: &[Candidate],
    pair: (usize, usize),
    best_score: f64,
) -> Result<(String, Candidate), SearchError> {
    let (a, b) = (&pool[pair.0], &pool[pair.1]);
    if ranked(a, b) || st.eta.is_none() {
        let (worse, better) = order(pool, pair);
        let shared = [
            ("worse_score", fmt_score(worse.score)),
            ("better_score", fmt_score(better.score)),
            ("worse_knowledge", text(&worse.knowledge)),
            ("better_knowledge", text(&better.knowledge)),
            ("worse_code", text(&worse.code)),
            ("better_code", text(&better.code)),
            ("source_knowledge_a", text(&worse.knowledge)),
            ("source_knowledge_b", text(&better.knowledge)),
            ("best_target_score", fmt_score(best_score)),
        ];
        let reflection = st.reflect(t.st, st.prompts.bind(shared.clone()))?;
        let mut binds = st.prompts.bind(shared);
        binds.insert("st_reflection".into(), reflection.clone());
        let child = st.generate(t.cx, binds, t.shape, Origin::Crossover, vec![worse.id, better.id])?;
        Ok((reflection, child))
    } else {
        let shared = [
            ("status_a", status_text(a)),
            ("status_b", status_text(b)),
            ("knowledge_a", text(&a.knowledge)),
            ("knowledge_b", text(&b.knowledge)),
            ("code_a", text(&a.code)),
            ("code_b", text(&b.code)),
        ];
        let reflection = st.reflect(t.st_unranked, st.prompts.bind(shared.clone()))?;
        let mut binds = st.prompts.bind(shared);
        binds.insert("st_reflection".into(), reflection.clone());
        let child = st.generate(t.cx_unranked, binds, t.shape, Origin::Crossover, vec![a.id, b.id])?;
        Ok((reflection, child))
    }
}

/// A side whose members all failed borrows the other side's pool so the
/// call schedule stays fixed.
fn nonempty_pool(side: &Population, other: &Population) -> Vec<Candidate> {
    let pool = side.pool();
    if pool.is_empty() {
        other.pool()
    } else {
        pool
    }
}

fn numbered(reflections: &[String]) -> String {
    reflections.iter().enumerate().map(|(i, r)| format!("{}. {r}", i + 1)).collect::<Vec<_>>().join("\n")
}

fn lt_prior(r: &str) -> String {
    if r.is_empty() {
        "(none yet)".to_owned()
    } else {
        r.to_owned()
    }
}

fn lt_plus_hint(r: &str, hint: &str) -> String {
    match (r.is_empty(), hint.is_empty()) {
        (true, _) => hint.to_owned(),
        (false, true) => r.to_owned(),
        (false, false) => format!("{r}\n{hint}"),
    }
}

fn init_failure(st: &SearchState<'_>, generated: usize) -> SearchError {
    let first_failure = st
        .archive()
        .iter()
        .find_map(|c| c.note.clone())
        .unwrap_or_else(|| "no candidate was evaluated".to_owned());
    SearchError::NoValidInit { generated, first_failure }
}

fn finish(st: SearchState<'_>, trajectory: Vec<f64>, baseline_score: f64) -> SearchOutcome {
    let best = st.best().cloned().expect("initialization guarantees an evaluated candidate");
    let calls = st.gateway.ledger().used();
    let evaluations = st.evals.used();
    let candidates = st.archive().to_vec();
    st.log.push(json!({
        "event": "final",
        "best": best,
        "trajectory": trajectory.iter().map(|&s| score_json(s)).collect::<Vec<_>>(),
        "calls": calls,
        "evaluations": evaluations,
        "programs": candidates.len(),
    }));
    SearchOutcome { best, trajectory, baseline_score, candidates, calls, evaluations }
}

/// Run a bottom-up or top-down population search to completion.
///
/// The returned trajectory holds the best evaluated loss after
/// initialization and after each iteration.
pub fn run_evo(config: &EvoConfig, mut st: SearchState<'_>, baseline_score: f64) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    st.eta = config.eta;
    if config.paradigm == Paradigm::Dual {
        return run_dual(config, st, baseline_score);
    }
    let t = match (config.paradigm, st.prompts.is_transfer()) {
        (Paradigm::TopDown, true) => &TOP_DOWN_TRANSFER,
        (Paradigm::TopDown, false) => &TOP_DOWN,
        _ => &BOTTOM_UP,
    };
    let (m, n, unk) = (config.population_size, config.mutation_count(), config.unk_cap());
    let hint = st.prompts.get("hint").unwrap_or_default().to_owned();

    let mut init = Vec::with_capacity(config.init_size);
    for _ in 0..config.init_size {
        init.push(st.generate(t.init, st.prompts.bind([("lt_reflection", hint.clone())]), t.shape, Origin::Init, vec![])?);
    }
    st.evaluate(&mut init)?;
    let mut pop = Population::default();
    pop.extend(init, unk);
    if st.best().is_none() {
        return Err(init_failure(&st, config.init_size));
    }
    let mut trajectory = vec![st.best_score()];
    let mut long_term = String::new();

    for iteration in 1..=config.iterations {
        let pool = pop.pool();
        let pairs = st.pairs(pool.len(), m);
        let mut reflections = Vec::with_capacity(m);
        let mut children = Vec::with_capacity(m);
        for pair in pairs {
            let best_score = st.best_score();
            let (r, child) = cross_pair(&mut st, t, &pool, pair, best_score)?;
            reflections.push(r);
            children.push(child);
        }
        st.evaluate(&mut children)?;
        pop.replace(children, m, unk);

        let lt_binds = st.prompts.bind([
            ("prior_lt_reflection", lt_prior(&long_term)),
            ("st_reflections", numbered(&reflections)),
        ]);
        let updated = st.reflect(t.lt, lt_binds)?;
        if !updated.is_empty() {
            long_term = updated;
        }

        let elite = st.best().cloned().expect("elitist exists after init");
        let mut mutants = Vec::with_capacity(n);
        for _ in 0..n {
            let binds = st.prompts.bind([
                ("lt_reflection_plus_hint", lt_plus_hint(&long_term, &hint)),
                ("elitist_score", fmt_score(elite.score)),
                ("elitist_knowledge", text(&elite.knowledge)),
                ("elitist_code", text(&elite.code)),
                ("best_target_score", fmt_score(elite.score)),
            ]);
            mutants.push(st.generate(t.mt, binds, t.shape, Origin::Mutation, vec![elite.id])?);
        }
        st.evaluate(&mut mutants)?;
        pop.extend(mutants, unk);

        trajectory.push(st.best_score());
        let elitist = st.best().expect("elitist exists after init");
        st.log.push(json!({
            "event": "iteration",
            "t": iteration,
            "population": ids(&pop.evaluated),
            "unevaluated": ids(&pop.unevaluated),
            "elitist": elitist.id,
            "elitist_score": score_json(elitist.score),
            "long_term_reflection": long_term,
        }));
    }
    Ok(finish(st, trajectory, baseline_score))
}

fn run_dual(config: &EvoConfig, mut st: SearchState<'_>, baseline_score: f64) -> Result<SearchOutcome, SearchError> {
    let (kt, ct) = (&DUAL_KNOWLEDGE, &DUAL_CODE);
    let d = config.dual;
    let unk = config.unk_cap();
    let hint = st.prompts.get("hint").unwrap_or_default().to_owned();
    let (k0, c0) = config.dual_init_split();

    let mut k_init = Vec::with_capacity(k0);
    for _ in 0..k0 {
        k_init.push(st.generate(kt.init, st.prompts.bind([("lt_reflection", hint.clone())]), kt.shape, Origin::Init, vec![])?);
    }
    st.evaluate(&mut k_init)?;
    let mut kp = Population::default();
    kp.extend(k_init, unk);

    let mut c_init = Vec::with_capacity(c0);
    for _ in 0..c0 {
        c_init.push(st.generate(ct.init, st.prompts.bind([("lt_reflection", hint.clone())]), ct.shape, Origin::Init, vec![])?);
    }
    st.evaluate(&mut c_init)?;
    let mut cp = Population::default();
    cp.extend(c_init, unk);
    // The code population also starts from the best knowledge state's code,
    // reusing its score rather than re-running it.
    if let Some(k_best) = kp.best().cloned() {
        let parent = k_best.id;
        let mut adopted = k_best;
        adopted.knowledge = None;
        let adopted = st.adopt(adopted, Origin::Ground, vec![parent]);
        cp.evaluated.push(adopted);
    }
    if st.best().is_none() {
        return Err(init_failure(&st, config.init_size));
    }
    let mut trajectory = vec![st.best_score()];
    let mut long_term = String::new();

    for iteration in 1..=config.iterations {
        let mut reflections = Vec::new();

        // knowledge side: crossover, then distillation from both elites
        let mut k_children = Vec::with_capacity(d.knowledge_crossover + d.distill);
        if d.knowledge_crossover > 0 {
            let pool = nonempty_pool(&kp, &cp);
            for pair in st.pairs(pool.len(), d.knowledge_crossover) {
                let best_score = st.best_score();
            let (r, child) = cross_pair(&mut st, kt, &pool, pair, best_score)?;
                reflections.push(r);
                k_children.push(child);
            }
        }
        let k_star = kp.best().cloned();
        let c_star = cp.best().cloned();
        for _ in 0..d.distill {
            let (ks, cs) = (k_star.as_ref(), c_star.as_ref());
            let binds = st.prompts.bind([
                ("elite_knowledge_score", fmt_score(ks.map_or(f64::INFINITY, |c| c.score))),
                ("elite_knowledge", ks.map(|c| text(&c.knowledge)).unwrap_or_default()),
                ("elite_code_score", fmt_score(cs.map_or(f64::INFINITY, |c| c.score))),
                ("elite_code", cs.map(|c| text(&c.code)).unwrap_or_default()),
                ("lt_reflection", lt_plus_hint(&long_term, &hint)),
            ]);
            let parents = ks.iter().chain(cs.iter()).map(|c| c.id).collect();
            k_children.push(st.generate(kt.mt, binds, kt.shape, Origin::Distill, parents)?);
        }
        st.evaluate(&mut k_children)?;
        kp.extend(k_children, unk);

        // code side: crossover, then grounding in the refreshed knowledge elite
        let mut c_children = Vec::with_capacity(d.code_crossover + d.ground);
        if d.code_crossover > 0 {
            let pool = nonempty_pool(&cp, &kp);
            for pair in st.pairs(pool.len(), d.code_crossover) {
                let best_score = st.best_score();
            let (r, child) = cross_pair(&mut st, ct, &pool, pair, best_score)?;
                reflections.push(r);
                c_children.push(child);
            }
        }
        let k_star = kp.best().cloned();
        let c_star = cp.best().cloned();
        for _ in 0..d.ground {
            let (ks, cs) = (k_star.as_ref(), c_star.as_ref());
            let binds = st.prompts.bind([
                ("knowledge", ks.map(|c| text(&c.knowledge)).unwrap_or_default()),
                ("code_score", fmt_score(cs.map_or(f64::INFINITY, |c| c.score))),
                ("code", cs.map(|c| text(&c.code)).unwrap_or_default()),
                ("lt_reflection", lt_plus_hint(&long_term, &hint)),
            ]);
            let parents = ks.iter().chain(cs.iter()).map(|c| c.id).collect();
            c_children.push(st.generate(ct.mt, binds, ct.shape, Origin::Ground, parents)?);
        }
        st.evaluate(&mut c_children)?;
        cp.extend(c_children, unk);

        let lt_binds = st.prompts.bind([
            ("prior_lt_reflection", lt_prior(&long_term)),
            ("st_reflections", numbered(&reflections)),
        ]);
        let updated = st.reflect(kt.lt, lt_binds)?;
        if !updated.is_empty() {
            long_term = updated;
        }

        trajectory.push(st.best_score());
        let elitist = st.best().expect("elitist exists after init");
        st.log.push(json!({
            "event": "iteration",
            "t": iteration,
            "knowledge_population": ids(&kp.evaluated),
            "code_population": ids(&cp.evaluated),
            "unevaluated": ids(&kp.unevaluated).into_iter().chain(ids(&cp.unevaluated)).collect::<Vec<_>>(),
            "elitist": elitist.id,
            "elitist_score": score_json(elitist.score),
            "long_term_reflection": long_term,
        }));
    }
    Ok(finish(st, trajectory, baseline_score))
}
