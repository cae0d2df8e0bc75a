//! Fixed construction loops driven by a step selector.
//!
//! Each loop exposes the same state fields a candidate's selector function
//! receives in rollout mode, so native policies and candidate programs see
//! identical decisions.

use super::BackboneError;
use crate::instances::{
    eval_qap, eval_routes, sco_step, within_limit, DistMatrix, JsspInstance, OpInstance, Point,
    ProblemInstance, QapInstance, ScoInstance, ScoPayload, ScoState, TspInstance, VrpInstance,
};

pub struct TspStep<'a> {
    pub current: usize,
    pub start: usize,
    pub unvisited: &'a [usize],
    pub dist: &'a DistMatrix,
}

pub struct CvrpStep<'a> {
    pub current: usize,
    pub depot: usize,
    pub feasible_customers: &'a [usize],
    pub dist: &'a DistMatrix,
    pub demands: &'a [u32],
    pub remaining_capacity: f64,
    pub vehicle_capacity: f64,
}

pub struct OpStep<'a> {
    pub current: usize,
    pub depot: usize,
    pub feasible_nodes: &'a [usize],
    pub dist: &'a DistMatrix,
    pub prizes: &'a [u32],
    pub remaining_budget: f64,
}

pub struct JsspStep<'a> {
    /// (job, operation index) pairs whose predecessors are done.
    pub ready_operations: &'a [(usize, usize)],
    pub processing_times: &'a [Vec<u32>],
    pub machine_assignments: &'a [Vec<usize>],
    pub machine_available: &'a [u64],
    pub job_available: &'a [u64],
}

pub struct QapStep<'a> {
    pub unassigned_facilities: &'a [usize],
    pub unassigned_locations: &'a [usize],
    pub flow: &'a [Vec<u32>],
    pub dist: &'a DistMatrix,
    pub current_assignment: &'a [Option<usize>],
}

pub struct CtsStep<'a> {
    pub available_talks: &'a [usize],
    pub qualities: &'a [f64],
    pub topics: &'a [Vec<f64>],
    /// Zero vector before the first talk.
    pub previous_topic: &'a [f64],
}

pub struct FtrStep<'a> {
    pub locations: &'a [Point],
    pub popularities: &'a [f64],
    /// `+∞` for locations never visited.
    pub steps_since_last_visit: &'a [f64],
    /// `None` before the first stop.
    pub last_location: Option<usize>,
}

pub struct OasStep<'a> {
    pub base_values: &'a [f64],
    pub fatigue_rates: &'a [f64],
    /// Display counts so far.
    pub fatigue_levels: &'a [u32],
    pub remaining_slots: usize,
}

pub struct WpfStep<'a> {
    /// Unpicked orders affordable at the current fatigue level.
    pub available_orders: &'a [usize],
    pub values: &'a [f64],
    pub base_times: &'a [f64],
    /// Remaining budget divided by the current fatigue multiplier.
    pub effective_budget: f64,
}

/// A step selector for any subset of problems. Unsupported problems return
/// `None`.
pub trait Policy {
    fn tsp(&mut self, _s: &TspStep<'_>) -> Option<usize> {
        None
    }
    fn cvrp(&mut self, _s: &CvrpStep<'_>) -> Option<usize> {
        None
    }
    fn op(&mut self, _s: &OpStep<'_>) -> Option<usize> {
        None
    }
    fn jssp(&mut self, _s: &JsspStep<'_>) -> Option<(usize, usize)> {
        None
    }
    fn qap(&mut self, _s: &QapStep<'_>) -> Option<(usize, usize)> {
        None
    }
    fn cts(&mut self, _s: &CtsStep<'_>) -> Option<usize> {
        None
    }
    fn ftr(&mut self, _s: &FtrStep<'_>) -> Option<usize> {
        None
    }
    fn oas(&mut self, _s: &OasStep<'_>) -> Option<usize> {
        None
    }
    fn wpf(&mut self, _s: &WpfStep<'_>) -> Option<usize> {
        None
    }
}

fn infeasible(what: String) -> BackboneError {
    BackboneError::InfeasibleChoice(what)
}

/// Tour from node 0 choosing each next city with the selector.
pub fn construct_tsp(inst: &TspInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let n = inst.n();
    let mut unvisited: Vec<usize> = (1..n).collect();
    let mut tour = vec![0];
    let mut current = 0;
    while !unvisited.is_empty() {
        let step = TspStep { current, start: 0, unvisited: &unvisited, dist: &inst.dist };
        let next = policy.tsp(&step).ok_or(BackboneError::Unsupported("tsp"))?;
        let pos = unvisited.iter().position(|&c| c == next).ok_or_else(|| infeasible(format!("city {next}")))?;
        unvisited.remove(pos);
        tour.push(next);
        current = next;
    }
    Ok(inst.dist.cycle_length(&tour))
}

/// Routes from the depot; the vehicle returns when no unvisited customer
/// fits the remaining capacity or when the selector picks the depot.
pub fn construct_cvrp(inst: &VrpInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let n = inst.n();
    let mut unvisited: Vec<usize> = (1..n).collect();
    let mut routes: Vec<Vec<usize>> = Vec::new();
    let mut route = Vec::new();
    let mut current = 0;
    let mut remaining = inst.capacity;
    while !unvisited.is_empty() {
        let feasible: Vec<usize> = unvisited
            .iter()
            .copied()
            .filter(|&c| within_limit(f64::from(inst.demands[c]), remaining))
            .collect();
        if feasible.is_empty() {
            if current == 0 {
                return Err(BackboneError::Unsolvable("customer demand exceeds capacity".into()));
            }
            routes.push(std::mem::take(&mut route));
            current = 0;
            remaining = inst.capacity;
            continue;
        }
        let step = CvrpStep {
            current,
            depot: 0,
            feasible_customers: &feasible,
            dist: &inst.dist,
            demands: &inst.demands,
            remaining_capacity: remaining,
            vehicle_capacity: inst.capacity,
        };
        let next = policy.cvrp(&step).ok_or(BackboneError::Unsupported("cvrp"))?;
        if next == 0 && current != 0 {
            routes.push(std::mem::take(&mut route));
            current = 0;
            remaining = inst.capacity;
            continue;
        }
        if !feasible.contains(&next) {
            return Err(infeasible(format!("customer {next}")));
        }
        unvisited.retain(|&c| c != next);
        route.push(next);
        remaining -= f64::from(inst.demands[next]);
        current = next;
    }
    if !route.is_empty() {
        routes.push(route);
    }
    Ok(eval_routes(inst, &routes)?)
}

/// Walk from the depot while some node can still be reached and returned
/// from within the budget; choosing the depot ends the walk.
pub fn construct_op(inst: &OpInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let n = inst.n();
    let d = &inst.dist;
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut current = 0;
    let mut used = 0.0;
    let mut prize = 0.0;
    loop {
        let remaining = inst.budget - used;
        let feasible: Vec<usize> = (1..n)
            .filter(|&j| !visited[j] && within_limit(d.get(current, j) + d.get(j, 0), remaining))
            .collect();
        if feasible.is_empty() {
            break;
        }
        let step = OpStep { current, depot: 0, feasible_nodes: &feasible, dist: d, prizes: &inst.prizes, remaining_budget: remaining };
        let next = policy.op(&step).ok_or(BackboneError::Unsupported("op"))?;
        if next == 0 {
            break;
        }
        if !feasible.contains(&next) {
            return Err(infeasible(format!("node {next}")));
        }
        used += d.get(current, next);
        prize += f64::from(inst.prizes[next]);
        visited[next] = true;
        current = next;
    }
    Ok(prize)
}

/// Dispatch ready operations one at a time; each starts as soon as both
/// its job and its machine are free. Returns the makespan.
pub fn construct_jssp(inst: &JsspInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let (jobs, machines) = (inst.jobs(), inst.machines());
    let mut next_op = vec![0usize; jobs];
    let mut job_available = vec![0u64; jobs];
    let mut machine_available = vec![0u64; machines];
    for _ in 0..jobs * machines {
        let ready: Vec<(usize, usize)> = (0..jobs).filter(|&j| next_op[j] < machines).map(|j| (j, next_op[j])).collect();
        let step = JsspStep {
            ready_operations: &ready,
            processing_times: &inst.processing_times,
            machine_assignments: &inst.machine_order,
            machine_available: &machine_available,
            job_available: &job_available,
        };
        let (j, k) = policy.jssp(&step).ok_or(BackboneError::Unsupported("jssp"))?;
        if !ready.contains(&(j, k)) {
            return Err(infeasible(format!("operation ({j}, {k})")));
        }
        let m = inst.machine_order[j][k];
        let end = job_available[j].max(machine_available[m]) + u64::from(inst.processing_times[j][k]);
        job_available[j] = end;
        machine_available[m] = end;
        next_op[j] += 1;
    }
    Ok(job_available.into_iter().max().unwrap_or(0) as f64)
}

/// Assign one (facility, location) pair per step.
pub fn construct_qap(inst: &QapInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let n = inst.n();
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut facilities: Vec<usize> = (0..n).collect();
    let mut locations: Vec<usize> = (0..n).collect();
    while !facilities.is_empty() {
        let step = QapStep {
            unassigned_facilities: &facilities,
            unassigned_locations: &locations,
            flow: &inst.flow,
            dist: &inst.dist,
            current_assignment: &assignment,
        };
        let (f, l) = policy.qap(&step).ok_or(BackboneError::Unsupported("qap"))?;
        if !facilities.contains(&f) || !locations.contains(&l) {
            return Err(infeasible(format!("pair ({f}, {l})")));
        }
        facilities.retain(|&x| x != f);
        locations.retain(|&x| x != l);
        assignment[f] = Some(l);
    }
    let perm: Vec<usize> = assignment.into_iter().map(|l| l.expect("all assigned")).collect();
    Ok(eval_qap(inst, &perm)?)
}

fn sco_loop(inst: &ScoInstance, mut choose: impl FnMut(&ScoState, &[usize]) -> Result<usize, BackboneError>) -> Result<f64, BackboneError> {
    let mut state = ScoState::initial(inst);
    let mut total = 0.0;
    loop {
        let feasible = state.feasible(inst);
        if feasible.is_empty() {
            return Ok(total);
        }
        let a = choose(&state, &feasible)?;
        let (next, r) = sco_step(inst, &state, a).map_err(|e| infeasible(e.to_string()))?;
        total += r;
        state = next;
    }
}

pub fn construct_cts(inst: &ScoInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let ScoPayload::Cts { qualities, topics, .. } = &inst.payload else {
        return Err(BackboneError::Unsupported("non-CTS instance"));
    };
    let zero = vec![0.0; topics.first().map_or(0, Vec::len)];
    sco_loop(inst, |s, feasible| {
        let previous_topic = s.previous.map_or(zero.as_slice(), |p| topics[p].as_slice());
        policy
            .cts(&CtsStep { available_talks: feasible, qualities, topics, previous_topic })
            .ok_or(BackboneError::Unsupported("cts"))
    })
}

pub fn construct_ftr(inst: &ScoInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let ScoPayload::Ftr { locations, popularities, .. } = &inst.payload else {
        return Err(BackboneError::Unsupported("non-FTR instance"));
    };
    sco_loop(inst, |s, _| {
        let since = s.steps_since_visit();
        policy
            .ftr(&FtrStep { locations, popularities, steps_since_last_visit: &since, last_location: s.previous })
            .ok_or(BackboneError::Unsupported("ftr"))
    })
}

pub fn construct_oas(inst: &ScoInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let ScoPayload::Oas { base_values, fatigue_rates, horizon } = &inst.payload else {
        return Err(BackboneError::Unsupported("non-OAS instance"));
    };
    sco_loop(inst, |s, _| {
        policy
            .oas(&OasStep { base_values, fatigue_rates, fatigue_levels: &s.counts, remaining_slots: horizon + 1 - s.step })
            .ok_or(BackboneError::Unsupported("oas"))
    })
}

pub fn construct_wpf(inst: &ScoInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    let ScoPayload::Wpf { values, base_times, .. } = &inst.payload else {
        return Err(BackboneError::Unsupported("non-WPF instance"));
    };
    sco_loop(inst, |s, feasible| {
        let effective_budget = s.budget / s.fatigue(inst);
        policy
            .wpf(&WpfStep { available_orders: feasible, values, base_times, effective_budget })
            .ok_or(BackboneError::Unsupported("wpf"))
    })
}

/// Run the construction loop for any instance and return its native
/// objective.
pub fn constructive_solve(inst: &ProblemInstance, policy: &mut dyn Policy) -> Result<f64, BackboneError> {
    match inst {
        ProblemInstance::Tsp(t) => construct_tsp(t, policy),
        ProblemInstance::Vrp(v) => construct_cvrp(v, policy),
        ProblemInstance::Op(o) => construct_op(o, policy),
        ProblemInstance::Jssp(j) => construct_jssp(j, policy),
        ProblemInstance::Qap(q) => construct_qap(q, policy),
        ProblemInstance::Sco(s) => match s.payload {
            ScoPayload::Cts { .. } => construct_cts(s, policy),
            ScoPayload::Ftr { .. } => construct_ftr(s, policy),
            ScoPayload::Oas { .. } => construct_oas(s, policy),
            ScoPayload::Wpf { .. } => construct_wpf(s, policy),
        },
        ProblemInstance::Dlp(_) => Err(BackboneError::Unsupported("dlp construction")),
    }
}

fn argmax_by(items: &[usize], mut key: impl FnMut(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in items {
        let k = key(i);
        if best.is_none_or(|(_, b)| k > b) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

/// Myopic greedy rules; ties go to the earliest candidate.
///
/// TSP and CVRP take the nearest feasible node, OP the best prize per unit
/// distance, JSSP the shortest processing time, QAP places the facility
/// with the largest total flow at the location of least added cost, and
/// the sequential problems take the largest immediate reward.
#[derive(Debug, Default, Clone, Copy)]
pub struct Greedy;

impl Policy for Greedy {
    fn tsp(&mut self, s: &TspStep<'_>) -> Option<usize> {
        argmax_by(s.unvisited, |j| -s.dist.get(s.current, j))
    }

    fn cvrp(&mut self, s: &CvrpStep<'_>) -> Option<usize> {
        argmax_by(s.feasible_customers, |j| -s.dist.get(s.current, j))
    }

    fn op(&mut self, s: &OpStep<'_>) -> Option<usize> {
        argmax_by(s.feasible_nodes, |j| f64::from(s.prizes[j]) / (s.dist.get(s.current, j) + 1e-9))
    }

    fn jssp(&mut self, s: &JsspStep<'_>) -> Option<(usize, usize)> {
        let idx: Vec<usize> = (0..s.ready_operations.len()).collect();
        argmax_by(&idx, |k| {
            let (j, o) = s.ready_operations[k];
            -f64::from(s.processing_times[j][o])
        })
        .map(|k| s.ready_operations[k])
    }

    fn qap(&mut self, s: &QapStep<'_>) -> Option<(usize, usize)> {
        let f = argmax_by(s.unassigned_facilities, |f| s.flow[f].iter().map(|&x| f64::from(x)).sum())?;
        let l = argmax_by(s.unassigned_locations, |l| {
            let added: f64 = s
                .current_assignment
                .iter()
                .enumerate()
                .filter_map(|(g, loc)| loc.map(|m| f64::from(s.flow[f][g] + s.flow[g][f]) * s.dist.get(l, m)))
                .sum();
            -added
        })?;
        Some((f, l))
    }

    fn cts(&mut self, s: &CtsStep<'_>) -> Option<usize> {
        argmax_by(s.available_talks, |i| {
            let dot: f64 = s.topics[i].iter().zip(s.previous_topic).map(|(a, b)| a * b).sum();
            s.qualities[i] - dot.max(0.0)
        })
    }

    fn ftr(&mut self, s: &FtrStep<'_>) -> Option<usize> {
        let all: Vec<usize> = (0..s.popularities.len()).collect();
        let here = s.last_location.map_or([0.5, 0.5], |l| s.locations[l]);
        argmax_by(&all, |i| {
            let recovered = 1.0 - (-0.3 * s.steps_since_last_visit[i]).exp();
            let l = s.locations[i];
            s.popularities[i] * recovered - ((l[0] - here[0]).powi(2) + (l[1] - here[1]).powi(2)).sqrt()
        })
    }

    fn oas(&mut self, s: &OasStep<'_>) -> Option<usize> {
        let all: Vec<usize> = (0..s.base_values.len()).collect();
        argmax_by(&all, |i| s.base_values[i] * (1.0 - s.fatigue_rates[i]).powi(s.fatigue_levels[i] as i32))
    }

    fn wpf(&mut self, s: &WpfStep<'_>) -> Option<usize> {
        argmax_by(s.available_orders, |i| s.values[i] / s.base_times[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn nearest_selector_reproduces_nn_tour() {
        for seed in 0..5 {
            let t = gen_tsp(30, TspDistribution::Uniform, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(construct_tsp(&t, &mut Greedy).unwrap(), nn_tour_length(&t.dist));
        }
    }

    #[test]
    fn spt_on_two_by_two_matches_enumeration() {
        let inst = JsspInstance { processing_times: vec![vec![3, 2], vec![2, 4]], machine_order: vec![vec![0, 1], vec![1, 0]] };
        // SPT: job1 op0 (2), then job0 op0 (3) vs job1 op1 (4) → job0 op0, then job0 op1 (2), then job1 op1
        let spt = construct_jssp(&inst, &mut Greedy).unwrap();
        let orders = [[0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 1, 0], [1, 1, 0, 0]];
        let spans: Vec<f64> = orders.iter().map(|o| eval_jssp(&inst, o).unwrap()).collect();
        assert_eq!(spt, eval_jssp(&inst, &[1, 0, 0, 1]).unwrap());
        assert!(spans.contains(&spt));
        assert!(spans.iter().all(|&s| s >= 7.0));
    }

    #[test]
    fn greedy_op_is_bounded_by_the_optimum() {
        for seed in 0..10 {
            let o = gen_op(8, &mut rng_from_seed(seed)).unwrap();
            let g = construct_op(&o, &mut Greedy).unwrap();
            assert!(g <= brute_force_optimum(&o.clone().into()).unwrap());
        }
    }

    #[test]
    fn every_problem_constructs() {
        let mut rng = rng_from_seed(4);
        let instances: Vec<ProblemInstance> = vec![
            gen_vrp(20, VrpVariant::Capacitated, 30.0, &mut rng).unwrap().into(),
            gen_qap(6, &mut rng).unwrap().into(),
            gen_sco(ScoVariant::Cts, 12, &mut rng).unwrap().into(),
            gen_sco(ScoVariant::Ftr, 12, &mut rng).unwrap().into(),
            gen_sco(ScoVariant::Oas, 12, &mut rng).unwrap().into(),
            gen_sco(ScoVariant::Wpf, 12, &mut rng).unwrap().into(),
        ];
        for inst in &instances {
            let v = constructive_solve(inst, &mut Greedy).unwrap();
            assert!(v.is_finite(), "{}", inst.kind());
        }
    }

    struct Stubborn;
    impl Policy for Stubborn {
        fn tsp(&mut self, _s: &TspStep<'_>) -> Option<usize> {
            Some(0)
        }
    }

    #[test]
    fn infeasible_or_unsupported_choices_fail() {
        let t = gen_tsp(5, TspDistribution::Uniform, &mut rng_from_seed(1)).unwrap();
        assert!(matches!(construct_tsp(&t, &mut Stubborn), Err(BackboneError::InfeasibleChoice(_))));
        let o = gen_op(5, &mut rng_from_seed(1)).unwrap();
        let r = construct_op(&o, &mut Stubborn);
        assert!(matches!(r, Err(BackboneError::Unsupported(_)) | Ok(0.0)));
    }
}
