//! Guided local search for the TSP on top of first-improvement 2-opt.

use super::{ArtifactKind, BackboneError, HeuristicArtifact};
use crate::instances::{nn_tour, DistMatrix, TspInstance};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlsParams {
    /// Fixed penalty weight. When absent, `lambda_scale` times the mean edge
    /// length of the initial local optimum is used.
    pub lambda: Option<f64>,
    pub lambda_scale: f64,
    pub n_perturbations: usize,
    /// Maximum improving moves per local search call.
    pub ls_moves_cap: usize,
    pub penalized_per_round: usize,
}

impl Default for GlsParams {
    fn default() -> Self {
        GlsParams { lambda: None, lambda_scale: 0.1, n_perturbations: 30, ls_moves_cap: 1000, penalized_per_round: 1 }
    }
}

/// Bookkeeping for one perturbation round, taken after re-optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct GlsRound {
    pub length: f64,
    /// Augmented objective as tracked incrementally by the local search.
    pub augmented: f64,
    /// Sum of penalties over the current tour's edges.
    pub penalty_sum: u64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone)]
pub struct GlsOutcome {
    pub best_length: f64,
    pub best_tour: Vec<usize>,
    /// Length of the first 2-opt local optimum.
    pub initial_length: f64,
    pub lambda: f64,
    pub rounds: Vec<GlsRound>,
    pub penalties: Vec<u32>,
}

struct Landscape<'a> {
    dist: &'a DistMatrix,
    penalty: Vec<u32>,
    lambda: f64,
}

impl Landscape<'_> {
    #[inline]
    fn w(&self, i: usize, j: usize) -> f64 {
        let n = self.dist.n();
        self.dist.get(i, j) + self.lambda * f64::from(self.penalty[i * n + j])
    }

    fn augmented(&self, tour: &[usize]) -> f64 {
        let n = tour.len();
        (0..n).map(|k| self.w(tour[k], tour[(k + 1) % n])).sum()
    }

    fn penalty_sum(&self, tour: &[usize]) -> u64 {
        let n = tour.len();
        let m = self.dist.n();
        (0..n).map(|k| u64::from(self.penalty[tour[k] * m + tour[(k + 1) % n]])).sum()
    }
}

/// First-improvement 2-opt on `dist + λ·P`, scanning `(i, j)` in index
/// order and restarting after every accepted move. Returns the change in
/// the augmented objective.
fn local_search(land: &Landscape<'_>, tour: &mut [usize], cap: usize) -> f64 {
    let n = tour.len();
    let mut total = 0.0;
    let mut moves = 0;
    if n < 4 {
        return 0.0;
    }
    'scan: while moves < cap {
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c, d) = (tour[i], tour[i + 1], tour[j], tour[(j + 1) % n]);
                let delta = land.w(a, c) + land.w(b, d) - land.w(a, b) - land.w(c, d);
                if delta < -1e-12 {
                    tour[i + 1..=j].reverse();
                    total += delta;
                    moves += 1;
                    continue 'scan;
                }
            }
        }
        break;
    }
    total
}

/// Plain 2-opt local optimum of `tour` under `dist`.
pub fn two_opt(dist: &DistMatrix, tour: &mut [usize]) {
    let land = Landscape { dist, penalty: vec![0; dist.n() * dist.n()], lambda: 0.0 };
    local_search(&land, tour, usize::MAX);
}

pub fn gls_solve(inst: &TspInstance, guide: &HeuristicArtifact, params: &GlsParams) -> Result<GlsOutcome, BackboneError> {
    let n = inst.n();
    guide.expect(ArtifactKind::GuideMatrix, n)?;
    if params.lambda.is_some_and(|l| !(l >= 0.0 && l.is_finite())) || params.lambda_scale < 0.0 {
        return Err(BackboneError::Params("lambda must be finite and nonnegative".into()));
    }
    let dist = &inst.dist;
    let mut land = Landscape { dist, penalty: vec![0; n * n], lambda: 0.0 };
    let mut tour = nn_tour(dist);
    local_search(&land, &mut tour, params.ls_moves_cap);
    let initial_length = dist.cycle_length(&tour);
    land.lambda = params
        .lambda
        .unwrap_or_else(|| if n == 0 { 0.0 } else { params.lambda_scale * initial_length / n as f64 });
    let mut best_tour = tour.clone();
    let mut best_length = initial_length;
    let mut augmented = initial_length;
    let mut rounds = Vec::with_capacity(params.n_perturbations);
    for _ in 0..params.n_perturbations {
        let mut util: Vec<(f64, usize, usize)> = (0..n)
            .map(|k| {
                let (a, b) = (tour[k], tour[(k + 1) % n]);
                let (i, j) = (a.min(b), a.max(b));
                (guide.get(i, j) / (1.0 + f64::from(land.penalty[i * n + j])), i, j)
            })
            .filter(|(u, i, j)| *u > 0.0 && i != j)
            .collect();
        util.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for &(_, i, j) in util.iter().take(params.penalized_per_round) {
            land.penalty[i * n + j] += 1;
            land.penalty[j * n + i] += 1;
            let on_tour = (0..n).filter(|&k| {
                let (a, b) = (tour[k], tour[(k + 1) % n]);
                (a.min(b), a.max(b)) == (i, j)
            });
            augmented += land.lambda * on_tour.count() as f64;
        }
        augmented += local_search(&land, &mut tour, params.ls_moves_cap);
        debug_assert!((augmented - land.augmented(&tour)).abs() < 1e-6 * augmented.abs().max(1.0));
        let length = dist.cycle_length(&tour);
        if length < best_length {
            best_length = length;
            best_tour.clone_from(&tour);
        }
        rounds.push(GlsRound { length, augmented, penalty_sum: land.penalty_sum(&tour), best_so_far: best_length });
    }
    Ok(GlsOutcome { best_length, best_tour, initial_length, lambda: land.lambda, rounds, penalties: land.penalty })
}

impl GlsOutcome {
    /// Largest gap between the tracked augmented objective and
    /// `length + λ·penalty_sum` over all rounds.
    pub fn bookkeeping_error(&self) -> f64 {
        self.rounds
            .iter()
            .map(|r| (r.augmented - r.length - self.lambda * r.penalty_sum as f64).abs())
            .fold(0.0, f64::max)
    }
}
