//! GRASP for the discrete location variants.

use super::{ArtifactKind, BackboneError, HeuristicArtifact};
use crate::instances::{DlpInstance, DlpVariant, InstanceError, Sense};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraspParams {
    pub n_iterations: usize,
    /// 1 keeps only the best-scored candidates, 0 keeps all of them.
    pub rcl_alpha: f64,
    /// Weight of the static guidance in the greedy score; the dynamic
    /// marginal improvement gets the rest.
    pub static_weight: f64,
}

impl Default for GraspParams {
    fn default() -> Self {
        GraspParams { n_iterations: 50, rcl_alpha: 0.3, static_weight: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct GraspOutcome {
    pub best_objective: f64,
    pub best_set: Vec<usize>,
    /// Objective after local search, per iteration.
    pub iteration_objectives: Vec<f64>,
}

const IMPROVE_EPS: f64 = 1e-12;

fn normalize(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        v.iter().map(|x| (x - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Indices whose score is at least `min + alpha·(max − min)`.
pub(crate) fn rcl(scores: &[f64], alpha: f64) -> Vec<usize> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = lo + alpha * (hi - lo);
    (0..scores.len()).filter(|&k| scores[k] >= threshold).collect()
}

/// Objective in "higher is better" form.
fn goodness(sense: Sense, v: f64) -> f64 {
    match sense {
        Sense::Minimize => -v,
        Sense::Maximize => v,
    }
}

fn construct(inst: &DlpInstance, guidance: &HeuristicArtifact, params: &GraspParams, rng: &mut Rng) -> Vec<usize> {
    let n = inst.n();
    let sense = inst.variant.sense();
    let mut set: Vec<usize> = Vec::with_capacity(inst.p);
    let mut chosen = vec![false; n];
    if inst.variant == DlpVariant::Dispersion {
        let (mut bi, mut bj, mut bd) = (0, 1, f64::NEG_INFINITY);
        for i in 0..n {
            for j in i + 1..n {
                if inst.dist.get(i, j) > bd {
                    (bi, bj, bd) = (i, j, inst.dist.get(i, j));
                }
            }
        }
        set.extend([bi, bj]);
        chosen[bi] = true;
        chosen[bj] = true;
    }
    while set.len() < inst.p {
        let cands: Vec<usize> = (0..n).filter(|&c| !chosen[c]).collect();
        let (stat, dynamic): (Vec<f64>, Vec<f64>) = cands
            .iter()
            .map(|&c| match inst.variant {
                DlpVariant::Dispersion => {
                    let s = set.iter().map(|&s| guidance.get(c, s)).sum::<f64>() / set.len() as f64;
                    let d = set.iter().map(|&s| inst.dist.get(c, s)).fold(f64::INFINITY, f64::min);
                    (s, d)
                }
                _ => {
                    set.push(c);
                    let v = inst.objective(&set);
                    set.pop();
                    (guidance.score(c), goodness(sense, v))
                }
            })
            .unzip();
        let (stat, dynamic) = (normalize(&stat), normalize(&dynamic));
        let w = params.static_weight;
        let score: Vec<f64> = stat.iter().zip(&dynamic).map(|(s, d)| w * s + (1.0 - w) * d).collect();
        let list = rcl(&score, params.rcl_alpha);
        let c = cands[list[rng.random_range(0..list.len())]];
        chosen[c] = true;
        set.push(c);
    }
    set
}

/// Nearest and second-nearest open facility (positions in `set`) per client.
fn nearest_two(inst: &DlpInstance, set: &[usize]) -> Vec<(usize, f64, f64)> {
    (0..inst.n())
        .map(|i| {
            let (mut k1, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
            for (k, &f) in set.iter().enumerate() {
                let d = inst.dist.get(i, f);
                if d < d1 {
                    d2 = d1;
                    (k1, d1) = (k, d);
                } else if d < d2 {
                    d2 = d;
                }
            }
            (k1, d1, d2)
        })
        .collect()
}

fn swap_value(inst: &DlpInstance, set: &[usize], near: &[(usize, f64, f64)], out: usize, incoming: usize) -> f64 {
    let served = |i: usize| {
        let (k1, d1, d2) = near[i];
        let base = if k1 == out { d2 } else { d1 };
        base.min(inst.dist.get(i, incoming))
    };
    let n = inst.n();
    match inst.variant {
        DlpVariant::Median => (0..n).map(served).sum(),
        DlpVariant::Center => (0..n).map(served).fold(0.0, f64::max),
        DlpVariant::Cover => {
            let r = inst.cover_radius.unwrap_or(0.0);
            let w = inst.demands.as_deref();
            (0..n).filter(|&i| served(i) <= r).map(|i| w.map_or(1.0, |w| w[i])).sum()
        }
        DlpVariant::Dispersion => {
            let mut m = f64::INFINITY;
            for a in 0..set.len() {
                let fa = if a == out { incoming } else { set[a] };
                for (b, &sb) in set.iter().enumerate().skip(a + 1) {
                    let fb = if b == out { incoming } else { sb };
                    m = m.min(inst.dist.get(fa, fb));
                }
            }
            m
        }
    }
}

/// First-improvement 1-swap local search; every accepted swap strictly
/// improves the objective.
fn local_search(inst: &DlpInstance, set: &mut [usize]) -> f64 {
    let sense = inst.variant.sense();
    let n = inst.n();
    let mut current = inst.objective(set);
    let mut chosen = vec![false; n];
    for &f in set.iter() {
        chosen[f] = true;
    }
    'outer: loop {
        let near = nearest_two(inst, set);
        for out in 0..set.len() {
            for incoming in 0..n {
                if chosen[incoming] {
                    continue;
                }
                let v = swap_value(inst, set, &near, out, incoming);
                if goodness(sense, v) > goodness(sense, current) + IMPROVE_EPS {
                    chosen[set[out]] = false;
                    chosen[incoming] = true;
                    set[out] = incoming;
                    current = inst.objective(set);
                    continue 'outer;
                }
            }
        }
        return current;
    }
}

pub fn grasp_solve(inst: &DlpInstance, guidance: &HeuristicArtifact, params: &GraspParams, rng: &mut Rng) -> Result<GraspOutcome, BackboneError> {
    let n = inst.n();
    if inst.p == 0 || inst.p >= n {
        return Err(InstanceError::BadFacilityCount { p: inst.p, n }.into());
    }
    if inst.variant == DlpVariant::Dispersion && inst.p < 2 {
        return Err(BackboneError::Params("p-dispersion needs p >= 2".into()));
    }
    if params.n_iterations == 0 || !(0.0..=1.0).contains(&params.rcl_alpha) || !(0.0..=1.0).contains(&params.static_weight) {
        return Err(BackboneError::Params("n_iterations >= 1, rcl_alpha and static_weight in [0,1]".into()));
    }
    let kind = if inst.variant == DlpVariant::Dispersion { ArtifactKind::GuideMatrix } else { ArtifactKind::NodeScores };
    guidance.expect(kind, n)?;
    let sense = inst.variant.sense();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut iteration_objectives = Vec::with_capacity(params.n_iterations);
    for _ in 0..params.n_iterations {
        let mut set = construct(inst, guidance, params, rng);
        let v = local_search(inst, &mut set);
        iteration_objectives.push(v);
        if best.as_ref().is_none_or(|(b, _)| sense.better(v, *b)) {
            set.sort_unstable();
            best = Some((v, set));
        }
    }
    let (best_objective, best_set) = best.expect("n_iterations >= 1");
    Ok(GraspOutcome { best_objective, best_set, iteration_objectives })
}
