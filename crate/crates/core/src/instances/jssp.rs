use super::InstanceError;
use crate::rng::Rng;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub const MAX_TIME: u32 = 99;

/// Job-shop instance. Operation `k` of job `j` runs on machine
/// `machine_order[j][k]` for `processing_times[j][k]` time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsspInstance {
    pub processing_times: Vec<Vec<u32>>,
    pub machine_order: Vec<Vec<usize>>,
}

impl JsspInstance {
    pub fn jobs(&self) -> usize {
        self.processing_times.len()
    }

    pub fn machines(&self) -> usize {
        self.processing_times.first().map_or(0, Vec::len)
    }
}

/// Draw order: for each job, its `machines` processing times U{1..99}, then
/// a shuffle of `0..machines` for its machine order.
pub fn gen_jssp(jobs: usize, machines: usize, rng: &mut Rng) -> Result<JsspInstance, InstanceError> {
    if jobs == 0 || machines == 0 {
        return Err(InstanceError::TooSmall { what: "gen_jssp", min: 1, n: jobs.min(machines) });
    }
    let mut processing_times = Vec::with_capacity(jobs);
    let mut machine_order = Vec::with_capacity(jobs);
    for _ in 0..jobs {
        processing_times.push((0..machines).map(|_| rng.random_range(1..=MAX_TIME)).collect());
        let mut order: Vec<usize> = (0..machines).collect();
        order.shuffle(rng);
        machine_order.push(order);
    }
    Ok(JsspInstance { processing_times, machine_order })
}

/// Makespan of the semi-active schedule obtained by dispatching operations
/// in the given order. `order` lists job indices; the k-th occurrence of job
/// `j` denotes its k-th operation.
pub fn eval_jssp(inst: &JsspInstance, order: &[usize]) -> Result<f64, InstanceError> {
    let (jobs, machines) = (inst.jobs(), inst.machines());
    if order.len() != jobs * machines {
        return Err(InstanceError::InvalidSolution(format!(
            "operation order has {} entries, expected {}",
            order.len(),
            jobs * machines
        )));
    }
    let mut next_op = vec![0usize; jobs];
    let mut job_ready = vec![0u64; jobs];
    let mut machine_ready = vec![0u64; machines];
    for &j in order {
        if j >= jobs {
            return Err(InstanceError::InvalidSolution(format!("job {j} out of range")));
        }
        let k = next_op[j];
        if k >= machines {
            return Err(InstanceError::InvalidSolution(format!("job {j} scheduled more than {machines} times")));
        }
        let m = inst.machine_order[j][k];
        let end = job_ready[j].max(machine_ready[m]) + u64::from(inst.processing_times[j][k]);
        job_ready[j] = end;
        machine_ready[m] = end;
        next_op[j] += 1;
    }
    Ok(job_ready.into_iter().max().unwrap_or(0) as f64)
}
