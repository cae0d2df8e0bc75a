//! `ahd`: generate instances, score candidate programs, run searches and
//! summarize results.
//!
//! Exit status is 2 for configuration and usage errors, 1 for runtime
//! failures, 0 otherwise.

use ahd_core::exec::{task_ids, BuiltinEvaluator, Evaluator, ExecSpec, Executor, SubprocessEvaluator, Task};
use ahd_core::harness::{
    gap_csv, gap_report, load_summaries, run, Baseline, EngineConfig, RunConfig, RunError, TransferConfig,
};
use ahd_core::instances::{brute_force_optimum, parse_tsplib, ProblemInstance};
use ahd_core::rng::derive_seed;
use ahd_core::search::{EvoConfig, Paradigm, TreeConfig};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ahd", version, about = "Automated heuristic design over combinatorial-optimization backbones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a task's training instances as JSON files.
    Gen {
        #[arg(long)]
        task: String,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a candidate program on a task.
    Eval {
        #[arg(long)]
        task: String,
        #[arg(long)]
        candidate: PathBuf,
        /// Directory of instance JSON files; generated from the task otherwise.
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the native stand-in evaluator (`# builtin:` programs).
        #[arg(long)]
        builtin: bool,
        #[arg(long, default_value = "python3")]
        interpreter: String,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Run a search from a config file.
    Search {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a search seeded with another run's final artifact.
    Transfer {
        /// Event log (or run directory) of the finished source run.
        #[arg(long)]
        source_run: PathBuf,
        #[arg(long)]
        paradigm: ParadigmArg,
        #[arg(long)]
        target: String,
        #[arg(long)]
        engine: EngineArg,
        /// Base config supplying provider, evaluator and seed.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a CSV of gaps for every completed run under a directory.
    Report {
        #[arg(long)]
        runs: PathBuf,
        /// `best`, `seed`, a loss value, or a JSON file of task id to loss.
        #[arg(long, default_value = "best")]
        baseline: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum of a tiny instance (JSON or TSPLIB) by enumeration.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParadigmArg {
    Td,
    Bu,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Evo,
    Mcts,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn config(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn task(id: &str, size: Option<usize>, count: Option<usize>) -> Result<Task, Failure> {
    let mut t = Task::builtin(id).ok_or_else(|| config(format!("unknown task `{id}`; known: {}", task_ids().join(", "))))?;
    if let Some(n) = size {
        t.recipe = t.recipe.resized(n);
    }
    if let Some(c) = count {
        t.n_instances = c;
    }
    Ok(t)
}

fn read_instance(path: &Path) -> Result<ProblemInstance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let parsed = if text.trim_start().starts_with('{') {
        ProblemInstance::from_json(&text)
    } else {
        parse_tsplib(&text).map(ProblemInstance::from)
    };
    parsed.map_err(|e| config(format!("{}: {e}", path.display())))
}

fn read_instances(dir: &Path) -> Result<Vec<ProblemInstance>, Failure> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| config(format!("{}: {e}", dir.display())))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(config(format!("no .json instances in {}", dir.display())));
    }
    paths.iter().map(|p| read_instance(p)).collect()
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { task: id, size, count, seed, out } => {
            let t = task(&id, size, count)?;
            let instances = t.training_instances(seed).map_err(config)?;
            std::fs::create_dir_all(&out).map_err(runtime)?;
            for (i, inst) in instances.iter().enumerate() {
                let path = out.join(format!("{id}_{i:03}.json"));
                std::fs::write(&path, inst.to_json() + "\n").map_err(runtime)?;
            }
            println!("wrote {} instances to {}", instances.len(), out.display());
        }
        Command::Eval { task: id, candidate, instances, size, count, seed, builtin, interpreter, timeout } => {
            let t = task(&id, size, count)?;
            let code = std::fs::read_to_string(&candidate).map_err(|e| config(format!("{}: {e}", candidate.display())))?;
            let instances = match instances {
                Some(dir) => read_instances(&dir)?,
                None => t.training_instances(seed).map_err(config)?,
            };
            let evaluator: Box<dyn Evaluator> = if builtin {
                Box::new(BuiltinEvaluator)
            } else {
                let spec = ExecSpec { interpreter: interpreter.split_whitespace().map(Into::into).collect(), timeout_secs: timeout, ..ExecSpec::default() };
                spec.validate().map_err(config)?;
                Box::new(SubprocessEvaluator::new(spec))
            };
            let n = instances.len();
            let executor = Executor::new(t, instances, evaluator, derive_seed(seed, "backbone"));
            let loss = executor.score(&code).map_err(runtime)?;
            println!("{}", json!({ "task": id, "instances": n, "loss": loss }));
        }
        Command::Search { config: path } => {
            let c = RunConfig::load(&path).map_err(config)?;
            report_run(&c, run(&c)?);
        }
        Command::Transfer { source_run, paradigm, target, engine, config: path, out } => {
            let mut c = RunConfig::load(&path).map_err(config)?;
            let paradigm = match paradigm {
                ParadigmArg::Td => Paradigm::TopDown,
                ParadigmArg::Bu => Paradigm::BottomUp,
            };
            c.engine = match (engine, c.engine) {
                (EngineArg::Evo, e @ EngineConfig::Evo(_)) | (EngineArg::Mcts, e @ EngineConfig::Mcts(_)) => e,
                (EngineArg::Evo, _) => EngineConfig::Evo(EvoConfig::default()),
                (EngineArg::Mcts, _) => EngineConfig::Mcts(TreeConfig::default()),
            };
            c.engine.set_paradigm(paradigm);
            c.task = target;
            let source_run = if source_run.is_dir() { source_run.join(ahd_core::harness::EVENTS_FILE) } else { source_run };
            c.transfer = Some(TransferConfig { source_run });
            if let Some(o) = out {
                c.output_dir = o;
            }
            c.validate().map_err(config)?;
            report_run(&c, run(&c)?);
        }
        Command::Report { runs, baseline, out } => {
            let baseline = Baseline::parse(&baseline).map_err(config)?;
            let summaries = load_summaries(&runs).map_err(config)?;
            let rows = gap_report(&summaries, &baseline).map_err(config)?;
            let csv = gap_csv(&rows);
            match out {
                Some(p) => std::fs::write(&p, csv).map_err(runtime)?,
                None => print!("{csv}"),
            }
        }
        Command::Oracle { instance } => {
            let inst = read_instance(&instance)?;
            let optimum = brute_force_optimum(&inst).map_err(config)?;
            println!("{}", json!({ "problem": inst.kind(), "size": inst.size(), "sense": inst.sense(), "optimum": optimum }));
        }
    }
    Ok(())
}

fn report_run(c: &RunConfig, s: ahd_core::harness::RunSummary) {
    println!(
        "{}",
        json!({
            "output_dir": c.output_dir,
            "best_score": s.best.score,
            "baseline_score": s.baseline_score,
            "calls": s.calls,
            "evaluations": s.evaluations,
            "programs": s.programs,
            "config_hash": s.provenance.config_hash,
        })
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
