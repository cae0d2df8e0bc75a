//! Ant System with an elitist deposit.

use super::{ArtifactKind, BackboneError, HeuristicArtifact};
use crate::instances::{eval_routes, within_limit, DistMatrix, TspInstance, VrpInstance, VrpVariant};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcoParams {
    pub n_ants: usize,
    pub n_iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub evaporation: f64,
    pub deposit: f64,
}

impl Default for AcoParams {
    fn default() -> Self {
        AcoParams { n_ants: 20, n_iterations: 50, alpha: 1.0, beta: 1.0, evaporation: 0.1, deposit: 1.0 }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<(), BackboneError> {
        if self.n_ants == 0 || self.n_iterations == 0 {
            return Err(BackboneError::Params("n_ants and n_iterations must be >= 1".into()));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(BackboneError::Params(format!("evaporation {} not in (0,1)", self.evaporation)));
        }
        if !(self.deposit > 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(BackboneError::Params("deposit must be positive, exponents finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum AcoTarget<'a> {
    Tsp(&'a TspInstance),
    Vrp(&'a VrpInstance),
}

impl AcoTarget<'_> {
    fn dist(&self) -> &DistMatrix {
        match self {
            AcoTarget::Tsp(t) => &t.dist,
            AcoTarget::Vrp(v) => &v.dist,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AcoSolution {
    Tour(Vec<usize>),
    Routes(Vec<Vec<usize>>),
}

#[derive(Debug, Clone)]
pub struct AcoOutcome {
    pub best_cost: f64,
    pub best: AcoSolution,
    /// Best-so-far cost after each iteration.
    pub history: Vec<f64>,
    /// (min, max) pheromone after each iteration's update.
    pub pheromone_range: Vec<(f64, f64)>,
    /// Every solution constructed, in order; kept only when requested.
    pub constructed: Vec<AcoSolution>,
}

/// Transition weights `τ^α·η^β` from `from` to each of `candidates`.
pub fn transition_weights(tau: &DistMatrix, eta: &HeuristicArtifact, alpha: f64, beta: f64, from: usize, candidates: &[usize]) -> Vec<f64> {
    candidates
        .iter()
        .map(|&j| tau.get(from, j).powf(alpha) * eta.get(from, j).powf(beta))
        .collect()
}

fn sample(weights: &[f64], rng: &mut Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    let mut last = None;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if r < w {
                return Some(k);
            }
            r -= w;
            last = Some(k);
        }
    }
    last
}

struct Colony<'a> {
    target: AcoTarget<'a>,
    eta_pow: Vec<f64>,
    tau_pow: Vec<f64>,
    n: usize,
}

impl Colony<'_> {
    #[inline]
    fn weight(&self, i: usize, j: usize) -> f64 {
        self.tau_pow[i * self.n + j] * self.eta_pow[i * self.n + j]
    }

    fn weights(&self, from: usize, cands: &[usize]) -> Vec<f64> {
        cands.iter().map(|&j| self.weight(from, j)).collect()
    }

    fn tour(&self, rng: &mut Rng) -> Result<Vec<usize>, BackboneError> {
        let n = self.n;
        let start = rng.random_range(0..n);
        let mut tour = vec![start];
        let mut left: Vec<usize> = (0..n).filter(|&j| j != start).collect();
        let mut cur = start;
        while !left.is_empty() {
            let w = self.weights(cur, &left);
            let k = sample(&w, rng).ok_or(BackboneError::DeadEnd { node: cur })?;
            cur = left.remove(k);
            tour.push(cur);
        }
        Ok(tour)
    }

    fn routes(&self, vrp: &VrpInstance, rng: &mut Rng) -> Result<Vec<Vec<usize>>, BackboneError> {
        let d = &vrp.dist;
        let mut left: Vec<usize> = (1..self.n).collect();
        let mut routes = Vec::new();
        let mut route: Vec<usize> = Vec::new();
        let (mut cur, mut load, mut length) = (0usize, 0.0, 0.0);
        while !left.is_empty() {
            let feasible: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&j| {
                    within_limit(load + f64::from(vrp.demands[j]), vrp.capacity)
                        && vrp
                            .max_duration
                            .is_none_or(|l| within_limit(length + d.get(cur, j) + d.get(j, 0), l))
                })
                .collect();
            let pick = if feasible.is_empty() { None } else { sample(&self.weights(cur, &feasible), rng) };
            match pick {
                Some(k) => {
                    let j = feasible[k];
                    length += d.get(cur, j);
                    load += f64::from(vrp.demands[j]);
                    route.push(j);
                    left.retain(|&x| x != j);
                    cur = j;
                }
                None if cur != 0 => {
                    routes.push(std::mem::take(&mut route));
                    cur = 0;
                    load = 0.0;
                    length = 0.0;
                }
                None if feasible.is_empty() => {
                    return Err(BackboneError::Unsolvable("a customer cannot be served by any route".into()))
                }
                None => return Err(BackboneError::DeadEnd { node: 0 }),
            }
        }
        if !route.is_empty() {
            routes.push(route);
        }
        Ok(routes)
    }
}

fn edges(sol: &AcoSolution, open: bool) -> Vec<(usize, usize)> {
    match sol {
        AcoSolution::Tour(t) => (0..t.len()).map(|k| (t[k], t[(k + 1) % t.len()])).collect(),
        AcoSolution::Routes(rs) => {
            let mut e = Vec::new();
            for r in rs {
                let mut prev = 0;
                for &c in r {
                    e.push((prev, c));
                    prev = c;
                }
                if !open {
                    e.push((prev, 0));
                }
            }
            e
        }
    }
}

/// Run the colony. Pheromone starts at 1 everywhere; each iteration all ants
/// construct solutions, pheromone evaporates by `evaporation`, then every
/// ant deposits `deposit/cost` on its edges (both directions) and the
/// best-so-far solution receives an extra `deposit/best_cost`.
pub fn aco_solve(target: AcoTarget<'_>, eta: &HeuristicArtifact, params: &AcoParams, rng: &mut Rng) -> Result<AcoOutcome, BackboneError> {
    aco_run(target, eta, params, rng, false)
}

/// As [`aco_solve`], also keeping every constructed solution.
pub fn aco_solve_traced(target: AcoTarget<'_>, eta: &HeuristicArtifact, params: &AcoParams, rng: &mut Rng) -> Result<AcoOutcome, BackboneError> {
    aco_run(target, eta, params, rng, true)
}

pub(crate) fn aco_run(
    target: AcoTarget<'_>,
    eta: &HeuristicArtifact,
    params: &AcoParams,
    rng: &mut Rng,
    keep_constructed: bool,
) -> Result<AcoOutcome, BackboneError> {
    params.validate()?;
    let dist = target.dist();
    let n = dist.n();
    eta.expect(ArtifactKind::EdgeMatrix, n)?;
    let open = matches!(target, AcoTarget::Vrp(v) if v.variant == VrpVariant::Open);
    let eta_pow: Vec<f64> = eta.values().iter().map(|&v| v.powf(params.beta)).collect();
    let mut tau = DistMatrix::from_fn(n, |_, _| 1.0);
    let mut colony = Colony { target, eta_pow, tau_pow: vec![1.0; n * n], n };
    let mut best: Option<(f64, AcoSolution)> = None;
    let mut history = Vec::with_capacity(params.n_iterations);
    let mut pheromone_range = Vec::with_capacity(params.n_iterations);
    let mut constructed = Vec::new();
    if n <= 1 {
        let sol = AcoSolution::Tour((0..n).collect());
        return Ok(AcoOutcome { best_cost: 0.0, best: sol, history: vec![0.0], pheromone_range: vec![(1.0, 1.0)], constructed });
    }
    for _ in 0..params.n_iterations {
        colony.tau_pow = tau.as_slice().iter().map(|&t| t.powf(params.alpha)).collect();
        let mut ants = Vec::with_capacity(params.n_ants);
        for _ in 0..params.n_ants {
            let (sol, cost) = match colony.target {
                AcoTarget::Tsp(_) => {
                    let t = colony.tour(rng)?;
                    let c = dist.cycle_length(&t);
                    (AcoSolution::Tour(t), c)
                }
                AcoTarget::Vrp(v) => {
                    let r = colony.routes(v, rng)?;
                    let c = eval_routes(v, &r)?;
                    (AcoSolution::Routes(r), c)
                }
            };
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, sol.clone()));
            }
            ants.push((sol, cost));
        }
        for i in 0..n {
            for j in 0..n {
                tau.set(i, j, tau.get(i, j) * (1.0 - params.evaporation));
            }
        }
        let (best_cost, best_sol) = best.as_ref().expect("at least one ant");
        let deposits = ants.iter().map(|(s, c)| (s, *c)).chain(std::iter::once((best_sol, *best_cost)));
        for (sol, cost) in deposits {
            if cost > 0.0 {
                let amount = params.deposit / cost;
                for (a, b) in edges(sol, open) {
                    tau.set(a, b, tau.get(a, b) + amount);
                    if a != b {
                        tau.set(b, a, tau.get(b, a) + amount);
                    }
                }
            }
        }
        let (lo, hi) = tau.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        pheromone_range.push((lo, hi));
        history.push(*best_cost);
        if keep_constructed {
            constructed.extend(ants.into_iter().map(|(s, _)| s));
        }
    }
    let (best_cost, best) = best.expect("at least one iteration");
    Ok(AcoOutcome { best_cost, best, history, pheromone_range, constructed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{brute_force_optimum, eval_tour, gen_tsp, gen_vrp, TspDistribution};
    use crate::rng::rng_from_seed;

    fn ones(n: usize) -> HeuristicArtifact {
        HeuristicArtifact::matrix_fn(ArtifactKind::EdgeMatrix, n, |_, _| 1.0).unwrap()
    }

    #[test]
    fn selection_probabilities_follow_weights() {
        let tau = DistMatrix::from_fn(3, |_, _| 1.0);
        let eta = HeuristicArtifact::matrix(ArtifactKind::EdgeMatrix, 3, vec![0.0, 2.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        let w = transition_weights(&tau, &eta, 1.0, 1.0, 0, &[1, 2]);
        let total: f64 = w.iter().sum();
        assert!((w[0] / total - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] / total - 1.0 / 3.0).abs() < 1e-15);
        let mut rng = rng_from_seed(1);
        let hits = (0..30_000).filter(|_| sample(&w, &mut rng) == Some(0)).count();
        assert!((hits as f64 / 30_000.0 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn single_ant_tour_is_valid() {
        let t = gen_tsp(7, TspDistribution::Uniform, &mut rng_from_seed(4)).unwrap();
        let params = AcoParams { n_ants: 1, n_iterations: 1, ..AcoParams::default() };
        let out = aco_solve(AcoTarget::Tsp(&t), &ones(7), &params, &mut rng_from_seed(9)).unwrap();
        let AcoSolution::Tour(tour) = &out.best else { panic!("tsp yields a tour") };
        assert_eq!(eval_tour(&t, tour).unwrap(), out.best_cost);
        assert!(out.best_cost >= brute_force_optimum(&t.clone().into()).unwrap() - 1e-12);
    }

    #[test]
    fn zero_heuristic_is_a_dead_end_for_tsp() {
        let t = gen_tsp(5, TspDistribution::Uniform, &mut rng_from_seed(4)).unwrap();
        let zero = HeuristicArtifact::matrix_fn(ArtifactKind::EdgeMatrix, 5, |_, _| 0.0).unwrap();
        let err = aco_solve(AcoTarget::Tsp(&t), &zero, &AcoParams::default(), &mut rng_from_seed(1)).unwrap_err();
        assert!(matches!(err, BackboneError::DeadEnd { .. }));
    }

    #[test]
    fn same_seed_same_result() {
        let v = gen_vrp(15, VrpVariant::Capacitated, 30.0, &mut rng_from_seed(2)).unwrap();
        let eta = HeuristicArtifact::matrix_fn(ArtifactKind::EdgeMatrix, 15, |i, j| 1.0 / v.dist.get(i, j)).unwrap();
        let p = AcoParams { n_iterations: 5, ..AcoParams::default() };
        let a = aco_solve(AcoTarget::Vrp(&v), &eta, &p, &mut rng_from_seed(3)).unwrap();
        let b = aco_solve(AcoTarget::Vrp(&v), &eta, &p, &mut rng_from_seed(3)).unwrap();
        assert_eq!(a.best_cost, b.best_cost);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn params_are_validated() {
        let t = gen_tsp(5, TspDistribution::Uniform, &mut rng_from_seed(4)).unwrap();
        for p in [
            AcoParams { evaporation: 1.0, ..AcoParams::default() },
            AcoParams { n_ants: 0, ..AcoParams::default() },
        ] {
            assert!(matches!(aco_solve(AcoTarget::Tsp(&t), &ones(5), &p, &mut rng_from_seed(1)), Err(BackboneError::Params(_))));
        }
        assert!(aco_solve(AcoTarget::Tsp(&t), &ones(4), &AcoParams::default(), &mut rng_from_seed(1)).is_err());
    }
}
