use super::{euclidean, nn_tour_length, DistMatrix, InstanceError, Point};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

pub const DEPOT: Point = [0.5, 0.5];
pub const MAX_DEMAND: u32 = 14;
/// Route-duration limit as a fraction of the nearest-neighbor tour length.
pub const DURATION_FRACTION: f64 = 0.4;
/// Slack for floating-point comparisons against capacity, duration and budget limits.
pub const LIMIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VrpVariant {
    Capacitated,
    Open,
    DurationLimited,
}

impl FromStr for VrpVariant {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "capacitated" | "cvrp" => Ok(Self::Capacitated),
            "open" | "ovrp" => Ok(Self::Open),
            "duration_limited" | "lvrp" => Ok(Self::DurationLimited),
            other => Err(InstanceError::UnknownTag { kind: "VRP variant", tag: other.into() }),
        }
    }
}

/// Node 0 is the depot; `n` counts the depot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrpInstance {
    pub coords: Vec<Point>,
    pub dist: DistMatrix,
    pub demands: Vec<u32>,
    pub capacity: f64,
    pub variant: VrpVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_duration: Option<f64>,
}

impl VrpInstance {
    pub fn n(&self) -> usize {
        self.coords.len()
    }
}

pub fn within_limit(value: f64, limit: f64) -> bool {
    value <= limit + LIMIT_EPS
}

/// Generate a VRP instance with `n` nodes including the depot.
///
/// Draw order: customer coordinates (x then y, U[0,1)) for nodes 1..n, then
/// customer demands U{1..14} for nodes 1..n. The depot sits at (0.5, 0.5).
pub fn gen_vrp(n: usize, variant: VrpVariant, capacity: f64, rng: &mut Rng) -> Result<VrpInstance, InstanceError> {
    if n < 2 {
        return Err(InstanceError::TooSmall { what: "gen_vrp", min: 2, n });
    }
    let mut coords = vec![DEPOT];
    for _ in 1..n {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        coords.push([x, y]);
    }
    let mut demands = vec![0];
    for _ in 1..n {
        demands.push(rng.random_range(1..=MAX_DEMAND));
    }
    let max_demand = demands.iter().copied().max().unwrap_or(0);
    if capacity < f64::from(max_demand) {
        return Err(InstanceError::CapacityBelowDemand { capacity, max_demand });
    }
    let dist = euclidean(&coords);
    let max_duration = match variant {
        VrpVariant::DurationLimited => {
            let limit = DURATION_FRACTION * nn_tour_length(&dist);
            for c in 1..n {
                let length = 2.0 * dist.get(0, c);
                if !within_limit(length, limit) {
                    return Err(InstanceError::DurationUnreachable { customer: c, length, limit });
                }
            }
            Some(limit)
        }
        _ => None,
    };
    Ok(VrpInstance { coords, dist, demands, capacity, variant, max_duration })
}

/// Cost of a route plan. Each route lists customers only; the depot legs are
/// implied. Open routes end at their last customer.
pub fn eval_routes(inst: &VrpInstance, routes: &[Vec<usize>]) -> Result<f64, InstanceError> {
    let n = inst.n();
    let mut seen = vec![false; n];
    let mut total = 0.0;
    for (r, route) in routes.iter().enumerate() {
        if route.is_empty() {
            continue;
        }
        let mut load = 0.0;
        for &c in route {
            if c == 0 || c >= n {
                return Err(InstanceError::UnknownNode(c));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(InstanceError::DuplicateCustomer(c));
            }
            load += f64::from(inst.demands[c]);
        }
        if !within_limit(load, inst.capacity) {
            return Err(InstanceError::CapacityExceeded { route: r, load, capacity: inst.capacity });
        }
        let mut length = inst.dist.get(0, route[0]) + inst.dist.path_length(route);
        let back = inst.dist.get(route[route.len() - 1], 0);
        if let Some(limit) = inst.max_duration {
            if !within_limit(length + back, limit) {
                return Err(InstanceError::DurationExceeded { route: r, length: length + back, limit });
            }
        }
        if inst.variant != VrpVariant::Open {
            length += back;
        }
        total += length;
    }
    if let Some(c) = (1..n).find(|&c| !seen[c]) {
        return Err(InstanceError::MissingCustomer(c));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn two_node(variant: VrpVariant) -> VrpInstance {
        let coords = vec![DEPOT, [0.5, 0.8]];
        VrpInstance {
            dist: euclidean(&coords),
            coords,
            demands: vec![0, 3],
            capacity: 5.0,
            variant,
            max_duration: None,
        }
    }

    #[test]
    fn single_customer_costs() {
        let d = 0.8 - 0.5;
        let closed = eval_routes(&two_node(VrpVariant::Capacitated), &[vec![1]]).unwrap();
        assert!((closed - 2.0 * d).abs() < 1e-12);
        let open = eval_routes(&two_node(VrpVariant::Open), &[vec![1]]).unwrap();
        assert!((open - d).abs() < 1e-12);
    }

    #[test]
    fn errors_are_distinguishable() {
        let mut inst = gen_vrp(5, VrpVariant::Capacitated, 50.0, &mut rng_from_seed(2)).unwrap();
        assert_eq!(eval_routes(&inst, &[vec![1, 2], vec![2, 3, 4]]), Err(InstanceError::DuplicateCustomer(2)));
        assert_eq!(eval_routes(&inst, &[vec![1, 2, 3]]), Err(InstanceError::MissingCustomer(4)));
        assert_eq!(eval_routes(&inst, &[vec![0, 1]]), Err(InstanceError::UnknownNode(0)));
        inst.capacity = 1.0;
        assert!(matches!(eval_routes(&inst, &[vec![1, 2], vec![3, 4]]), Err(InstanceError::CapacityExceeded { route: 0, .. })));
        inst.capacity = 100.0;
        inst.max_duration = Some(1e-3);
        assert!(matches!(eval_routes(&inst, &[vec![1, 2, 3, 4]]), Err(InstanceError::DurationExceeded { .. })));
    }

    #[test]
    fn demands_and_depot() {
        let inst = gen_vrp(50, VrpVariant::Capacitated, 50.0, &mut rng_from_seed(4)).unwrap();
        assert_eq!(inst.demands[0], 0);
        assert!(inst.demands[1..].iter().all(|&d| (1..=14).contains(&d)));
        assert_eq!(inst.coords[0], DEPOT);
        assert!(inst.max_duration.is_none());
    }

    #[test]
    fn duration_limit_is_forty_percent_of_nn() {
        let inst = gen_vrp(50, VrpVariant::DurationLimited, 50.0, &mut rng_from_seed(4)).unwrap();
        let l = inst.max_duration.unwrap();
        assert!((l - 0.4 * nn_tour_length(&inst.dist)).abs() < 1e-12);
    }

    #[test]
    fn capacity_below_demand_is_rejected() {
        let err = gen_vrp(50, VrpVariant::Capacitated, 5.0, &mut rng_from_seed(4)).unwrap_err();
        assert!(matches!(err, InstanceError::CapacityBelowDemand { .. }));
    }

    #[test]
    fn open_equals_closed_minus_last_legs() {
        let mut inst = gen_vrp(9, VrpVariant::Capacitated, 200.0, &mut rng_from_seed(8)).unwrap();
        let routes = vec![vec![3, 1, 2], vec![5, 4], vec![8, 7, 6]];
        let closed = eval_routes(&inst, &routes).unwrap();
        inst.variant = VrpVariant::Open;
        let open = eval_routes(&inst, &routes).unwrap();
        let last: f64 = routes.iter().map(|r| inst.dist.get(*r.last().unwrap(), 0)).sum();
        assert!((closed - last - open).abs() < 1e-12);
    }
}
