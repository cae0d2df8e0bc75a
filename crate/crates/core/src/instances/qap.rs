use super::{check_permutation, euclidean, DistMatrix, InstanceError, Point};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapInstance {
    pub flow: Vec<Vec<u32>>,
    pub dist: DistMatrix,
}

impl QapInstance {
    pub fn n(&self) -> usize {
        self.flow.len()
    }
}

/// Draw order: a full n×n matrix `A` with entries U{0..9} in row-major
/// order, then n location points (x then y, U[0,1)). The flow is
/// `A + Aᵀ` with the diagonal zeroed.
pub fn gen_qap(n: usize, rng: &mut Rng) -> Result<QapInstance, InstanceError> {
    if n == 0 {
        return Err(InstanceError::TooSmall { what: "gen_qap", min: 1, n });
    }
    let raw: Vec<Vec<u32>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..=9)).collect()).collect();
    let flow = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0 } else { raw[i][j] + raw[j][i] }).collect())
        .collect();
    let points: Vec<Point> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            [x, y]
        })
        .collect();
    Ok(QapInstance { flow, dist: euclidean(&points) })
}

/// Assignment cost `Σ_a Σ_b flow[a][b]·dist[π(a)][π(b)]` over all ordered
/// facility pairs, so a symmetric flow is counted in both directions.
/// `assignment[a]` is the location of facility `a`.
pub fn eval_qap(inst: &QapInstance, assignment: &[usize]) -> Result<f64, InstanceError> {
    check_permutation(assignment, inst.n())?;
    Ok(qap_cost(inst, assignment))
}

pub(crate) fn qap_cost(inst: &QapInstance, assignment: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, row) in inst.flow.iter().enumerate() {
        for (b, &f) in row.iter().enumerate() {
            if f != 0 {
                total += f64::from(f) * inst.dist.get(assignment[a], assignment[b]);
            }
        }
    }
    total
}
