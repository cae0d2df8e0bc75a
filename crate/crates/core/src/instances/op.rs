use super::vrp::{within_limit, DEPOT};
use super::{euclidean, nn_tour_length, DistMatrix, InstanceError, Point};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub const BUDGET_FRACTION: f64 = 0.35;
pub const MAX_PRIZE: u32 = 29;

/// Orienteering instance; node 0 is the depot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpInstance {
    pub coords: Vec<Point>,
    pub dist: DistMatrix,
    pub prizes: Vec<u32>,
    pub budget: f64,
}

impl OpInstance {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// Length of the closed walk depot → `seq` → depot.
    pub fn walk_length(&self, seq: &[usize]) -> f64 {
        match (seq.first(), seq.last()) {
            (Some(&a), Some(&b)) => self.dist.get(0, a) + self.dist.path_length(seq) + self.dist.get(b, 0),
            _ => 0.0,
        }
    }
}

/// Draw order: node coordinates (x then y) for nodes 1..n, then prizes
/// U{1..29} for nodes 1..n.
pub fn gen_op(n: usize, rng: &mut Rng) -> Result<OpInstance, InstanceError> {
    if n < 2 {
        return Err(InstanceError::TooSmall { what: "gen_op", min: 2, n });
    }
    let mut coords = vec![DEPOT];
    for _ in 1..n {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        coords.push([x, y]);
    }
    let mut prizes = vec![0];
    for _ in 1..n {
        prizes.push(rng.random_range(1..=MAX_PRIZE));
    }
    let dist = euclidean(&coords);
    let budget = BUDGET_FRACTION * nn_tour_length(&dist);
    Ok(OpInstance { coords, dist, prizes, budget })
}

/// Collected prize of the walk depot → `seq` → depot.
pub fn eval_op(inst: &OpInstance, seq: &[usize]) -> Result<f64, InstanceError> {
    let n = inst.n();
    let mut seen = vec![false; n];
    let mut prize = 0.0;
    for &c in seq {
        if c == 0 || c >= n {
            return Err(InstanceError::UnknownNode(c));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(InstanceError::DuplicateCustomer(c));
        }
        prize += f64::from(inst.prizes[c]);
    }
    let length = inst.walk_length(seq);
    if !within_limit(length, inst.budget) {
        return Err(InstanceError::BudgetExceeded { length, budget: inst.budget });
    }
    Ok(prize)
}
