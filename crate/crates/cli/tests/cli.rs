//! End-to-end checks of the `ahd` binary.

use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};

fn ahd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahd")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn reply(builtin: &str) -> String {
    format!("KNOWLEDGE: lean on {builtin}\nCODE:\n```python\n# builtin: {builtin}\ndef heuristics(d):\n    return d\n```")
}

/// A config running a short offline search from the config's directory.
fn write_config(dir: &Path, name: &str, engine: Value, seed: u64) -> std::path::PathBuf {
    let entries: Vec<Value> = ["inverse_distance", "uniform", "inverse_distance_sq"]
        .iter()
        .map(|b| json!({ "match": "*", "response": reply(b) }))
        .collect();
    std::fs::write(dir.join("fixture.json"), json!({ "entries": entries }).to_string()).unwrap();
    let config = json!({
        "schema": "ahd-run/1",
        "task": "tsp_aco",
        "size": 15,
        "n_instances": 2,
        "seed": seed,
        "engine": engine,
        "evaluator": { "kind": "builtin" },
        "provider": { "kind": "replay", "fixture": "fixture.json" },
        "baseline_code": "# builtin: uniform\n",
        "output_dir": format!("runs/{name}"),
    });
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, config.to_string()).unwrap();
    path
}

fn evo_engine() -> Value {
    json!({ "kind": "evo", "paradigm": "td", "init_size": 4, "population_size": 4, "iterations": 3 })
}

#[test]
fn search_writes_a_summary_and_report_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a", evo_engine(), 1);
    let b = write_config(dir.path(), "b", json!({ "kind": "mcts", "paradigm": "bu", "max_candidates": 20 }), 2);
    for c in [&a, &b] {
        let out = stdout_json(&ahd(&["search", "--config", c.to_str().unwrap()]));
        assert!(out["best_score"].as_f64().unwrap().is_finite());
        assert!(out["calls"].as_u64().unwrap() > 0);
    }
    for f in ["events.jsonl", "transcript.jsonl", "summary.json", "trajectory.csv"] {
        assert!(dir.path().join("runs/a").join(f).exists(), "{f}");
    }

    let runs = dir.path().join("runs");
    let out = ahd(&["report", "--runs", runs.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("gap"));
    assert_eq!(lines.count(), 2);

    let out = ahd(&["report", "--runs", runs.to_str().unwrap(), "--baseline", "1e9"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains("-99.99")), "{text}");
}

#[test]
fn searches_are_reproducible_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "r", evo_engine(), 9);
    let c = c.to_str().unwrap();
    ahd(&["search", "--config", c]);
    let first = std::fs::read(dir.path().join("runs/r/events.jsonl")).unwrap();
    ahd(&["search", "--config", c]);
    assert_eq!(std::fs::read(dir.path().join("runs/r/events.jsonl")).unwrap(), first);
}

#[test]
fn transfer_subcommand_targets_another_task() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "src", evo_engine(), 4);
    let c = c.to_str().unwrap();
    stdout_json(&ahd(&["search", "--config", c]));
    let src = dir.path().join("runs/src");
    let out_dir = dir.path().join("runs/tgt");
    let out = stdout_json(&ahd(&[
        "transfer",
        "--source-run",
        src.to_str().unwrap(),
        "--paradigm",
        "td",
        "--target",
        "cvrp_aco",
        "--engine",
        "evo",
        "--config",
        c,
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert!(out["calls"].as_u64().unwrap() > 0);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["task"], "cvrp_aco");
    assert_eq!(summary["source_task"], "tsp_aco");

    let wrong = ahd(&[
        "transfer", "--source-run", src.to_str().unwrap(), "--paradigm", "bu", "--target", "cvrp_aco", "--engine", "evo",
        "--config", c, "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(wrong.status.code(), Some(2));
}

/// Shortest closed tour over all orderings that start at city 0.
fn enumerate_tour(dist: &[Vec<f64>]) -> f64 {
    fn go(dist: &[Vec<f64>], path: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
        let n = dist.len();
        if path.len() == n {
            let len: f64 = path.windows(2).map(|w| dist[w[0]][w[1]]).sum::<f64>() + dist[path[n - 1]][path[0]];
            *best = best.min(len);
            return;
        }
        for c in 1..n {
            if !used[c] {
                used[c] = true;
                path.push(c);
                go(dist, path, used, best);
                path.pop();
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; dist.len()];
    used[0] = true;
    go(dist, &mut vec![0], &mut used, &mut best);
    best
}

#[test]
fn oracle_matches_an_independent_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let out = ahd(&["gen", "--task", "tsp_aco", "--size", "7", "--count", "3", "--seed", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for i in 0..3 {
        let path = dir.path().join(format!("tsp_aco_{i:03}.json"));
        let inst: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let coords: Vec<(f64, f64)> =
            inst["coords"].as_array().unwrap().iter().map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap())).collect();
        let dist: Vec<Vec<f64>> =
            coords.iter().map(|a| coords.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect()).collect();
        let out = stdout_json(&ahd(&["oracle", "--instance", path.to_str().unwrap()]));
        let optimum = out["optimum"].as_f64().unwrap();
        assert!((optimum - enumerate_tour(&dist)).abs() < 1e-9, "{optimum}");
    }
}

#[test]
fn eval_scores_a_builtin_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cand = dir.path().join("cand.py");
    std::fs::write(&cand, "# builtin: inverse_distance\n").unwrap();
    let args = |b: &str| {
        vec!["eval", "--task", "tsp_aco", "--size", "12", "--count", "2", "--builtin", "--candidate", b].into_iter().map(String::from).collect::<Vec<_>>()
    };
    let run = |a: Vec<String>| stdout_json(&Command::new(env!("CARGO_BIN_EXE_ahd")).args(a).output().unwrap());
    let a = run(args(cand.to_str().unwrap()));
    let b = run(args(cand.to_str().unwrap()));
    assert_eq!(a, b);
    assert!(a["loss"].as_f64().unwrap() > 0.0);
    assert_eq!(a["instances"], 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema": "ahd-run/1", "task": "tsp_aco", "surprise": 1}"#).unwrap();
    assert_eq!(ahd(&["search", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let c = write_config(dir.path(), "x", evo_engine(), 0);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    v["task"] = json!("no_such_task");
    std::fs::write(&c, v.to_string()).unwrap();
    let out = ahd(&["search", "--config", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_task"));

    let missing = ahd(&["oracle", "--instance", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn exhausted_fixture_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "f", evo_engine(), 0);
    std::fs::write(
        dir.path().join("fixture.json"),
        json!({ "entries": [{ "match": "*", "response": reply("uniform") }], "fallback": "none" }).to_string(),
    )
    .unwrap();
    let out = ahd(&["search", "--config", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
