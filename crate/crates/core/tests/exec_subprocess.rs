//! The Python harness and the native builtins must agree, so canned runs
//! and interpreter runs are interchangeable.

use ahd_core::exec::{
    score_code, BuiltinEvaluator, Candidate, EvalLedger, Evaluator, ExecSpec, Executor, Origin, Status,
    SubprocessEvaluator, Task,
};

fn python() -> Option<SubprocessEvaluator> {
    let ok = std::process::Command::new("python3")
        .args(["-c", "import numpy"])
        .status()
        .is_ok_and(|s| s.success());
    if !ok {
        eprintln!("python3 with numpy not found; skipping");
        return None;
    }
    Some(SubprocessEvaluator::new(ExecSpec { timeout_secs: 4.0, ..ExecSpec::default() }))
}

fn small(task: &str, size: usize, count: usize) -> (Task, Vec<ahd_core::instances::ProblemInstance>) {
    let mut t = Task::builtin(task).unwrap();
    t.recipe = t.recipe.resized(size);
    let inst = t.recipe.generate(count, 11).unwrap();
    (t, inst)
}

#[test]
fn elementwise_artifacts_match_bitwise() {
    let Some(py) = python() else { return };
    for (id, size) in [("tsp_aco", 12), ("cvrp_aco", 10), ("tsp_gls", 12)] {
        let (task, inst) = small(id, size, 1);
        let code = &task.seed_code;
        let a = py.artifact(code, &task, &inst[0]).unwrap_or_else(|e| panic!("{id}: {e}"));
        let b = BuiltinEvaluator.artifact(code, &task, &inst[0]).unwrap();
        assert_eq!(a, b, "{id}");
    }
}

#[test]
fn reduced_artifacts_match_to_rounding() {
    // numpy reduces in its own order (pairwise sums, BLAS dots), so the last bit may differ.
    let Some(py) = python() else { return };
    for id in ["p_median_grasp", "p_center_grasp", "p_cover_grasp"] {
        let (task, inst) = small(id, 15, 1);
        let a = py.artifact(&task.seed_code, &task, &inst[0]).unwrap();
        let b = BuiltinEvaluator.artifact(&task.seed_code, &task, &inst[0]).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * y.abs(), "{id}: {x} vs {y}");
        }
    }
}

#[test]
fn rollouts_match() {
    let Some(py) = python() else { return };
    for id in ["tsp_constructive", "cvrp_constructive", "op_constructive", "jssp_constructive", "qap_constructive"] {
        let (task, inst) = small(id, 10, 2);
        let a = py.rollout(&task.seed_code, &task, &inst).unwrap_or_else(|e| panic!("{id}: {e}"));
        let b = BuiltinEvaluator.rollout(&task.seed_code, &task, &inst).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{id}: {x} vs {y}");
        }
    }
    for id in ["cts_constructive", "ftr_constructive", "oas_constructive", "wpf_constructive"] {
        let (task, inst) = small(id, 20, 1);
        let a = py.rollout(&task.seed_code, &task, &inst).unwrap_or_else(|e| panic!("{id}: {e}"));
        let b = BuiltinEvaluator.rollout(&task.seed_code, &task, &inst).unwrap();
        assert!((a[0] - b[0]).abs() <= 1e-9 * b[0].abs().max(1.0), "{id}: {a:?} vs {b:?}");
    }
}

#[test]
fn scores_agree_through_the_backbone() {
    let Some(py) = python() else { return };
    let (task, inst) = small("tsp_aco", 12, 2);
    let a = score_code(&py, &task.seed_code, &task, &inst, 5).unwrap();
    let b = score_code(&BuiltinEvaluator, &task.seed_code, &task, &inst, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn broken_programs_become_invalid() {
    let Some(py) = python() else { return };
    let (task, inst) = small("tsp_aco", 8, 1);
    let exec = Executor::new(task, inst, Box::new(py), 0).with_workers(3);
    let mut ledger = EvalLedger::new(10);
    let bodies = [
        "def compute_heuristic_matrix(distance_matrix):\n    raise RuntimeError('boom')\n",
        "import time\ndef compute_heuristic_matrix(distance_matrix):\n    time.sleep(60)\n",
        "def compute_heuristic_matrix(distance_matrix):\n    return distance_matrix * float('nan')\n",
        "def compute_heuristic_matrix(distance_matrix):\n    return distance_matrix[:2]\n",
        "this is not python",
    ];
    let mut batch: Vec<Candidate> = bodies
        .iter()
        .enumerate()
        .map(|(i, b)| Candidate::new(i as u64, Origin::Seed, None, Some(b.to_string()), vec![]))
        .collect();
    let started = std::time::Instant::now();
    exec.evaluate_batch(&mut batch, &mut ledger).unwrap();
    assert!(started.elapsed().as_secs() < 40);
    assert_eq!(ledger.used(), 5);
    for c in &batch {
        assert_eq!(c.status, Status::Invalid, "{:?}", c.code);
        assert!(c.score.is_infinite());
    }
}
