//! Helpers shared by the integration suites: offline run configs and
//! replay fixtures whose programs are native builtins.
#![allow(dead_code)]

use ahd_core::harness::{run, EngineConfig, EvaluatorConfig, ProviderConfig, RunConfig, RunSummary, CONFIG_SCHEMA};
use ahd_core::llm::{Fallback, Fixture, FixtureEntry};
use ahd_core::search::{EvoConfig, Paradigm, TreeConfig};
use std::path::Path;

pub const BUILTINS: [&str; 3] = ["uniform", "inverse_distance", "inverse_distance_sq"];

/// A reply carrying both a knowledge text and a builtin-backed program.
pub fn reply(knowledge: &str, builtin: &str) -> String {
    format!(
        "KNOWLEDGE: {knowledge}\nCODE:\n```python\n# builtin: {builtin}\nimport numpy as np\n\ndef compute_heuristic_matrix(dist_mat):\n    return np.ones_like(dist_mat)\n```"
    )
}

/// `count` wildcard replies cycling through the builtins, with no
/// fallback: one call past the end fails the run.
pub fn cycling_fixture(count: usize) -> Fixture {
    let entries = (0..count)
        .map(|i| {
            let b = BUILTINS[i % BUILTINS.len()];
            FixtureEntry::new("*", reply(&format!("variant {i} uses {b}"), b))
        })
        .collect();
    Fixture { entries, fallback: Fallback::None }
}

pub fn write_fixture(dir: &Path, fixture: &Fixture) -> std::path::PathBuf {
    let path = dir.join("fixture.json");
    std::fs::write(&path, serde_json::to_string(fixture).unwrap()).unwrap();
    path
}

pub fn evo(paradigm: Paradigm) -> EngineConfig {
    EngineConfig::Evo(EvoConfig { paradigm, ..EvoConfig::default() })
}

pub fn mcts(paradigm: Paradigm) -> EngineConfig {
    EngineConfig::Mcts(TreeConfig { paradigm, ..TreeConfig::default() })
}

/// Small offline TSP-ACO run: 20 cities, 2 instances, builtin evaluator,
/// a short colony.
pub fn config(dir: &Path, engine: EngineConfig, fixture: &Fixture, seed: u64) -> RunConfig {
    let fixture = write_fixture(dir, fixture);
    RunConfig {
        schema: CONFIG_SCHEMA.into(),
        task: "tsp_aco".into(),
        size: Some(20),
        n_instances: Some(2),
        seed,
        engine,
        evaluator: EvaluatorConfig::Builtin { workers: 1 },
        memo: true,
        provider: ProviderConfig::Replay { fixture },
        retries: 0,
        prompt_cap: None,
        baseline_code: Some("# builtin: uniform\n".into()),
        transfer: None,
        output_dir: dir.join("run"),
    }
}

pub fn run_ok(c: &RunConfig) -> RunSummary {
    run(c).unwrap_or_else(|e| panic!("run failed: {e}"))
}

pub fn events(c: &RunConfig) -> Vec<serde_json::Value> {
    std::fs::read_to_string(c.output_dir.join(ahd_core::harness::EVENTS_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
