//! Read-only reports over finished runs: per-step trajectory series and
//! gaps against a reference score.

use super::run::{Provenance, RunSummary, SUMMARY_FILE};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("no reference score for task `{0}`")]
    MissingBaseline(String),
    #[error("no completed runs under {0}")]
    NoRuns(PathBuf),
}

/// Percentage by which `score` trails `best`, on losses. The denominator
/// is `|best|` so worse is positive for negated maximization objectives
/// too.
pub fn gap_percent(score: f64, best: f64) -> f64 {
    100.0 * (score - best) / best.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub best_so_far: f64,
    pub cumulative_mean: f64,
    /// Mean of the (up to) five lowest losses so far.
    pub top5_cumulative_mean: f64,
}

/// One row per evaluated candidate, in evaluation order.
pub fn trajectory_rows(scores: &[f64]) -> Vec<TrajectoryRow> {
    let mut best = f64::INFINITY;
    let mut sum = 0.0;
    let mut top: Vec<f64> = Vec::with_capacity(6);
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            best = best.min(s);
            sum += s;
            let at = top.partition_point(|&t| t <= s);
            top.insert(at, s);
            top.truncate(5);
            TrajectoryRow {
                iteration: i + 1,
                best_so_far: best,
                cumulative_mean: sum / (i + 1) as f64,
                top5_cumulative_mean: top.iter().sum::<f64>() / top.len() as f64,
            }
        })
        .collect()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |e| ReportError::Io { path: path.to_owned(), message: e.to_string() }
}

/// Write the trajectory series after a `#` provenance line.
pub fn write_trajectory_csv(path: &Path, scores: &[f64], provenance: &Provenance) -> Result<(), ReportError> {
    let mut out = format!(
        "# config_hash={} seed={} version={}\n",
        provenance.config_hash, provenance.seed, provenance.version
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for row in trajectory_rows(scores) {
            w.serialize(row).map_err(csv_err(path))?;
        }
        w.flush().map_err(|e| ReportError::Io { path: path.to_owned(), message: e.to_string() })?;
    }
    std::fs::write(path, out).map_err(|e| ReportError::Io { path: path.to_owned(), message: e.to_string() })
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>, ReportError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Where the reference score of a gap comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    /// Lowest best loss among the reported runs of the same task.
    Best,
    /// Each run's own reference program score.
    Seed,
    /// One fixed loss for every task.
    Value(f64),
    /// Loss per task id.
    PerTask(BTreeMap<String, f64>),
}

impl Baseline {
    /// `best`, `seed`, a number, or a path to a JSON object of task id to
    /// loss.
    pub fn parse(arg: &str) -> Result<Self, ReportError> {
        match arg {
            "best" => return Ok(Baseline::Best),
            "seed" => return Ok(Baseline::Seed),
            _ => {}
        }
        if let Ok(v) = arg.parse::<f64>() {
            return Ok(Baseline::Value(v));
        }
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|e| ReportError::Io {
            path: path.to_owned(),
            message: format!("expected best, seed, a number or a JSON file: {e}"),
        })?;
        let map = serde_json::from_str(&text).map_err(|e| ReportError::Io { path: path.to_owned(), message: e.to_string() })?;
        Ok(Baseline::PerTask(map))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub run: String,
    pub task: String,
    pub engine: String,
    pub paradigm: String,
    pub score: f64,
    pub reference: f64,
    pub gap_percent: f64,
    pub calls: u64,
    pub evaluations: u64,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

/// Completed runs directly under `dir` (or `dir` itself), sorted by name.
pub fn load_summaries(dir: &Path) -> Result<Vec<(String, RunSummary)>, ReportError> {
    let mut found = Vec::new();
    let mut dirs = vec![dir.to_owned()];
    let entries = std::fs::read_dir(dir).map_err(|e| ReportError::Io { path: dir.to_owned(), message: e.to_string() })?;
    for e in entries.flatten() {
        if e.path().is_dir() {
            dirs.push(e.path());
        }
    }
    for d in dirs {
        if d.join(SUMMARY_FILE).is_file() {
            let s = RunSummary::load(&d).map_err(|e| ReportError::Io { path: d.clone(), message: e.to_string() })?;
            let name = d.file_name().map_or_else(|| d.display().to_string(), |n| n.to_string_lossy().into_owned());
            found.push((name, s));
        }
    }
    if found.is_empty() {
        return Err(ReportError::NoRuns(dir.to_owned()));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

pub fn gap_report(runs: &[(String, RunSummary)], baseline: &Baseline) -> Result<Vec<GapRow>, ReportError> {
    let mut best_per_task: BTreeMap<&str, f64> = BTreeMap::new();
    for (_, s) in runs {
        let e = best_per_task.entry(&s.task).or_insert(f64::INFINITY);
        *e = e.min(s.best.score);
    }
    runs.iter()
        .map(|(name, s)| {
            let reference = match baseline {
                Baseline::Best => Some(best_per_task[s.task.as_str()]),
                Baseline::Seed => s.baseline_score,
                Baseline::Value(v) => Some(*v),
                Baseline::PerTask(m) => m.get(&s.task).copied(),
            }
            .filter(|r| r.is_finite() && *r != 0.0)
            .ok_or_else(|| ReportError::MissingBaseline(s.task.clone()))?;
            Ok(GapRow {
                run: name.clone(),
                task: s.task.clone(),
                engine: s.engine.clone(),
                paradigm: serde_json::to_value(s.paradigm).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                score: s.best.score,
                reference,
                gap_percent: gap_percent(s.best.score, reference),
                calls: s.calls,
                evaluations: s.evaluations,
                config_hash: s.provenance.config_hash.clone(),
                seed: s.provenance.seed,
                version: s.provenance.version.clone(),
            })
        })
        .collect()
}

pub fn gap_csv(rows: &[GapRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(gap_percent(2.0, 2.0), 0.0);
        assert!((gap_percent(1.1 * 3.0, 3.0) - 10.0).abs() < 1e-12);
        assert!(gap_percent(-9.0, -10.0) > 0.0);
    }

    #[test]
    fn top_five_mean_matches_hand_enumeration() {
        let rows = trajectory_rows(&[5.0, 4.0, 6.0, 3.0, 7.0, 1.0]);
        assert_eq!(rows[4].top5_cumulative_mean, 5.0);
        assert_eq!(rows[4].cumulative_mean, 5.0);
        assert_eq!(rows[4].best_so_far, 3.0);
        // step 6 drops the 7: {1,3,4,5,6}
        assert_eq!(rows[5].top5_cumulative_mean, 19.0 / 5.0);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let p = Provenance { config_hash: "ab".into(), seed: 3, version: "0".into() };
        write_trajectory_csv(&path, &[2.0, 1.0], &p).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=ab seed=3"));
        assert!(text.contains("iteration,best_so_far,cumulative_mean,top5_cumulative_mean"));
        assert_eq!(read_trajectory_csv(&path).unwrap(), trajectory_rows(&[2.0, 1.0]));
    }

    #[test]
    fn baseline_arguments() {
        assert_eq!(Baseline::parse("best").unwrap(), Baseline::Best);
        assert_eq!(Baseline::parse("12.5").unwrap(), Baseline::Value(12.5));
        assert!(Baseline::parse("/no/such/file").is_err());
    }
}
