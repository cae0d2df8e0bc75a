//! Exhaustive optimizers for tiny instances, used as test oracles.

use super::qap::qap_cost;
use super::vrp::within_limit;
use super::{sco_step, InstanceError, ProblemInstance, ScoInstance, ScoState, VrpInstance, VrpVariant};

/// Hard size limits: (problem, limit description).
pub const ORACLE_LIMITS: &[(&str, &str)] = &[
    ("tsp", "n <= 10"),
    ("qap", "n <= 10"),
    ("dlp", "n <= 12"),
    ("op", "n <= 8"),
    ("vrp", "n <= 7"),
    ("jssp", "jobs <= 3 and machines <= 3"),
    ("sco", "horizon <= 6 (WPF: n <= 8)"),
];

fn too_large(problem: &'static str, detail: String) -> InstanceError {
    InstanceError::TooLarge { problem, detail }
}

/// Exact optimum of the native objective (minimum or maximum according to
/// the problem's sense).
pub fn brute_force_optimum(inst: &ProblemInstance) -> Result<f64, InstanceError> {
    match inst {
        ProblemInstance::Tsp(t) => {
            let n = t.n();
            if n > 10 {
                return Err(too_large("tsp", format!("n = {n} > 10")));
            }
            if n <= 1 {
                return Ok(0.0);
            }
            let mut best = f64::INFINITY;
            let mut used = vec![false; n];
            used[0] = true;
            tsp_dfs(&t.dist, 0, 1, 0.0, &mut used, &mut best);
            Ok(best)
        }
        ProblemInstance::Qap(q) => {
            let n = q.n();
            if n > 10 {
                return Err(too_large("qap", format!("n = {n} > 10")));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| best = best.min(qap_cost(q, p)));
            Ok(best)
        }
        ProblemInstance::Dlp(d) => {
            let n = d.n();
            if n > 12 {
                return Err(too_large("dlp", format!("n = {n} > 12")));
            }
            let sense = d.variant.sense();
            let mut best: Option<f64> = None;
            let mut chosen = Vec::with_capacity(d.p);
            combinations(n, d.p, 0, &mut chosen, &mut |s| {
                let v = d.objective(s);
                if best.is_none_or(|b| sense.better(v, b)) {
                    best = Some(v);
                }
            });
            best.ok_or(InstanceError::BadFacilityCount { p: d.p, n })
        }
        ProblemInstance::Op(o) => {
            let n = o.n();
            if n > 8 {
                return Err(too_large("op", format!("n = {n} > 8")));
            }
            let mut best = 0.0;
            let mut used = vec![false; n];
            op_dfs(o, 0, 0.0, 0.0, &mut used, &mut best);
            Ok(best)
        }
        ProblemInstance::Vrp(v) => {
            let n = v.n();
            if n > 7 {
                return Err(too_large("vrp", format!("n = {n} > 7")));
            }
            let mut best = f64::INFINITY;
            let mut used = vec![false; n];
            used[0] = true;
            vrp_dfs(v, 0, 0.0, 0.0, 0.0, n - 1, &mut used, &mut best);
            if best.is_finite() {
                Ok(best)
            } else {
                Err(InstanceError::InvalidSolution("no feasible route plan".into()))
            }
        }
        ProblemInstance::Jssp(j) => {
            let (jobs, machines) = (j.jobs(), j.machines());
            if jobs > 3 || machines > 3 {
                return Err(too_large("jssp", format!("{jobs}x{machines} > 3x3")));
            }
            let mut best = f64::INFINITY;
            let mut next = vec![0usize; jobs];
            let mut job_ready = vec![0u64; jobs];
            let mut machine_ready = vec![0u64; machines];
            jssp_dfs(j, &mut next, &mut job_ready, &mut machine_ready, jobs * machines, &mut best);
            Ok(if jobs == 0 { 0.0 } else { best })
        }
        ProblemInstance::Sco(s) => {
            match s.variant() {
                super::ScoVariant::Wpf if s.n() > 8 => {
                    return Err(too_large("sco", format!("WPF n = {} > 8", s.n())))
                }
                super::ScoVariant::Wpf => {}
                _ if s.horizon() > 6 => {
                    return Err(too_large("sco", format!("horizon = {} > 6", s.horizon())))
                }
                _ => {}
            }
            Ok(sco_dfs(s, &ScoState::initial(s)))
        }
    }
}

fn tsp_dfs(d: &super::DistMatrix, cur: usize, depth: usize, len: f64, used: &mut [bool], best: &mut f64) {
    let n = used.len();
    if depth == n {
        *best = best.min(len + d.get(cur, 0));
        return;
    }
    for j in 1..n {
        if !used[j] {
            used[j] = true;
            tsp_dfs(d, j, depth + 1, len + d.get(cur, j), used, best);
            used[j] = false;
        }
    }
}

fn permute(p: &mut [usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn combinations(n: usize, p: usize, from: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if chosen.len() == p {
        f(chosen);
        return;
    }
    for j in from..n {
        chosen.push(j);
        combinations(n, p, j + 1, chosen, f);
        chosen.pop();
    }
}

fn op_dfs(o: &super::OpInstance, cur: usize, len: f64, prize: f64, used: &mut [bool], best: &mut f64) {
    if prize > *best {
        *best = prize;
    }
    for j in 1..used.len() {
        if used[j] {
            continue;
        }
        let l = len + o.dist.get(cur, j);
        if within_limit(l + o.dist.get(j, 0), o.budget) {
            used[j] = true;
            op_dfs(o, j, l, prize + f64::from(o.prizes[j]), used, best);
            used[j] = false;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn vrp_dfs(v: &VrpInstance, cur: usize, load: f64, route_len: f64, closed: f64, left: usize, used: &mut [bool], best: &mut f64) {
    let close_cost = |cur: usize, route_len: f64| -> Option<f64> {
        if cur == 0 {
            return Some(0.0);
        }
        let back = v.dist.get(cur, 0);
        if let Some(l) = v.max_duration {
            if !within_limit(route_len + back, l) {
                return None;
            }
        }
        Some(if v.variant == VrpVariant::Open { route_len } else { route_len + back })
    };
    if left == 0 {
        if let Some(c) = close_cost(cur, route_len) {
            *best = best.min(closed + c);
        }
        return;
    }
    for j in 1..used.len() {
        if used[j] {
            continue;
        }
        let q = f64::from(v.demands[j]);
        if !within_limit(load + q, v.capacity) {
            continue;
        }
        used[j] = true;
        vrp_dfs(v, j, load + q, route_len + v.dist.get(cur, j), closed, left - 1, used, best);
        used[j] = false;
    }
    if cur != 0 {
        if let Some(c) = close_cost(cur, route_len) {
            vrp_dfs(v, 0, 0.0, 0.0, closed + c, left, used, best);
        }
    }
}

fn jssp_dfs(
    j: &super::JsspInstance,
    next: &mut [usize],
    job_ready: &mut [u64],
    machine_ready: &mut [u64],
    left: usize,
    best: &mut f64,
) {
    if left == 0 {
        let span = job_ready.iter().copied().max().unwrap_or(0) as f64;
        *best = best.min(span);
        return;
    }
    let machines = machine_ready.len();
    for job in 0..next.len() {
        let k = next[job];
        if k == machines {
            continue;
        }
        let m = j.machine_order[job][k];
        let (jr, mr) = (job_ready[job], machine_ready[m]);
        let end = jr.max(mr) + u64::from(j.processing_times[job][k]);
        job_ready[job] = end;
        machine_ready[m] = end;
        next[job] += 1;
        jssp_dfs(j, next, job_ready, machine_ready, left - 1, best);
        next[job] -= 1;
        job_ready[job] = jr;
        machine_ready[m] = mr;
    }
}

fn sco_dfs(inst: &ScoInstance, state: &ScoState) -> f64 {
    let actions = state.feasible(inst);
    if actions.is_empty() {
        return 0.0;
    }
    actions
        .into_iter()
        .map(|a| {
            let (next, r) = sco_step(inst, state, a).expect("feasible action");
            r + sco_dfs(inst, &next)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
