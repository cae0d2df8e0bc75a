//! Acceptance checks, one line of verdict per criterion.
//!
//! Runs as a plain binary so each criterion reports independently; the
//! process fails if any criterion does.

mod common;

use ahd_core::backbones::{
    aco_solve, aco_solve_traced, gls_solve, grasp_solve, two_opt, AcoParams, AcoSolution, AcoTarget, ArtifactKind,
    GlsParams, GraspParams, HeuristicArtifact,
};
use ahd_core::exec::{sparse_count, Candidate, Origin};
use ahd_core::instances::{
    brute_force_optimum, eval_dlp, eval_jssp, eval_op, eval_qap, eval_routes, eval_tour, gen_dlp, gen_jssp, gen_op,
    gen_qap, gen_sco_with, gen_tsp, gen_vrp, nn_tour, sco_rollout, DlpVariant, ProblemInstance, ScoParams, ScoVariant,
    TspDistribution, VrpVariant,
};
use ahd_core::llm::{Fallback, Fixture, FixtureEntry};
use ahd_core::rng::rng_from_seed;
use ahd_core::search::{EvoConfig, Paradigm, Tree};
use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::Rng as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed.as_secs() < limit_secs, || format!("took {elapsed:.1?}, limit {limit_secs}s"))
}

// 1 ------------------------------------------------------------------------

fn budget_exactness() -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (engine, calls, programs) in [
        (evo(Paradigm::BottomUp), 490, 310),
        (evo(Paradigm::TopDown), 490, 310),
        (mcts(Paradigm::BottomUp), 400, 200),
        (mcts(Paradigm::TopDown), 400, 200),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let label = format!("{}-{:?}", engine.name(), engine.paradigm());
        // the fixture holds exactly the planned number of replies
        let c = config(dir.path(), engine, &cycling_fixture(calls as usize), 11);
        let s = run_ok(&c);
        ensure(s.calls == calls && s.programs == programs, || {
            format!("{label}: {} calls / {} programs, expected {calls} / {programs}", s.calls, s.programs)
        })?;
        parts.push(format!("{label} {calls}/{programs}"));
    }
    within(start.elapsed(), 120)?;
    Ok(format!("{} in {:.1?}", parts.join(", "), start.elapsed()))
}

// 2 ------------------------------------------------------------------------

fn sparse_budget() -> Verdict {
    let mut parts = Vec::new();
    for paradigm in [Paradigm::BottomUp, Paradigm::TopDown] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EvoConfig { paradigm, eta: Some(0.5), ..EvoConfig::default() };
        let (m0, m, n) = (cfg.init_size, cfg.population_size, cfg.mutation_count());
        let c = config(dir.path(), ahd_core::harness::EngineConfig::Evo(cfg.clone()), &cycling_fixture(490), 5);
        let s = run_ok(&c);
        ensure(s.calls == 490, || format!("{paradigm:?}: {} calls with sparse evaluation", s.calls))?;

        // charged evaluations are the selected ones: evaluated or failed
        let mut per_segment = vec![0usize];
        let mut seen = 0usize;
        let mut init_charged = 0usize;
        for e in events(&c) {
            match e["event"].as_str() {
                Some("evaluation") => {
                    let charged = e["status"] != "unevaluated";
                    if seen < m0 {
                        init_charged += usize::from(charged);
                    } else {
                        *per_segment.last_mut().unwrap() += usize::from(charged);
                    }
                    seen += 1;
                }
                Some("iteration") => per_segment.push(0),
                _ => {}
            }
        }
        per_segment.pop();
        let expected = sparse_count(0.5, m) + sparse_count(0.5, n);
        ensure(init_charged == sparse_count(0.5, m0), || format!("init charged {init_charged}"))?;
        ensure(per_segment.len() == cfg.iterations && per_segment.iter().all(|&k| k == expected), || {
            format!("{paradigm:?}: per-iteration evaluations {per_segment:?}, expected {expected} each")
        })?;
        let full = EvoConfig { eta: None, ..cfg.clone() }.planned_evaluations();
        let half = full as f64 / 2.0;
        let slack = cfg.iterations as f64;
        ensure((s.evaluations as f64 - half).abs() <= slack, || {
            format!("{} evaluations vs half of {full} (+/- {slack})", s.evaluations)
        })?;
        ensure(s.evaluations == cfg.planned_evaluations(), || format!("{} evaluations", s.evaluations))?;
        parts.push(format!("{paradigm:?} {} evals/iter, {} total of {full}", expected, s.evaluations));
    }
    Ok(parts.join("; "))
}

// 3 ------------------------------------------------------------------------

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Visit every permutation of `items` (Heap's algorithm).
fn for_each_perm(items: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    fn heap(k: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            f(a);
            return;
        }
        for i in 0..k - 1 {
            heap(k - 1, a, f);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
        heap(k - 1, a, f);
    }
    let k = items.len();
    heap(k, items, f);
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            f(&s);
        }
    }
}

/// Best objective over the whole solution space, scored only through the
/// public solution evaluators.
fn enumerate(inst: &ProblemInstance) -> f64 {
    let sense = inst.sense();
    let mut best: Option<f64> = None;
    let mut offer = |v: f64| {
        if best.is_none_or(|b| sense.better(v, b)) {
            best = Some(v);
        }
    };
    match inst {
        ProblemInstance::Tsp(t) => {
            let mut rest: Vec<usize> = (1..t.n()).collect();
            for_each_perm(&mut rest, &mut |p| {
                let tour: Vec<usize> = std::iter::once(0).chain(p.iter().copied()).collect();
                offer(eval_tour(t, &tour).unwrap());
            });
        }
        ProblemInstance::Qap(q) => {
            let mut a: Vec<usize> = (0..q.n()).collect();
            for_each_perm(&mut a, &mut |p| offer(eval_qap(q, p).unwrap()));
        }
        ProblemInstance::Dlp(d) => for_each_subset(d.n(), d.p, &mut |s| offer(eval_dlp(d, s).unwrap())),
        ProblemInstance::Op(o) => {
            for k in 0..o.n() {
                for_each_subset(o.n() - 1, k, &mut |s| {
                    let mut seq: Vec<usize> = s.iter().map(|i| i + 1).collect();
                    for_each_perm(&mut seq, &mut |p| {
                        if let Ok(v) = eval_op(o, p) {
                            offer(v);
                        }
                    });
                });
            }
        }
        ProblemInstance::Vrp(v) => {
            let mut customers: Vec<usize> = (1..v.n()).collect();
            let k = customers.len();
            for_each_perm(&mut customers, &mut |p| {
                // every split of the order into consecutive routes
                for cuts in 0u32..(1 << k.saturating_sub(1)) {
                    let mut routes = vec![vec![p[0]]];
                    for (i, &c) in p.iter().enumerate().skip(1) {
                        if cuts >> (i - 1) & 1 == 1 {
                            routes.push(Vec::new());
                        }
                        routes.last_mut().unwrap().push(c);
                    }
                    if let Ok(x) = eval_routes(v, &routes) {
                        offer(x);
                    }
                }
            });
        }
        ProblemInstance::Jssp(j) => {
            let (jobs, machines) = (j.jobs(), j.machines());
            let mut order = Vec::new();
            fn rec(j: &ahd_core::instances::JsspInstance, left: &mut [usize], order: &mut Vec<usize>, offer: &mut dyn FnMut(f64)) {
                if left.iter().all(|&l| l == 0) {
                    offer(eval_jssp(j, order).unwrap());
                    return;
                }
                for job in 0..left.len() {
                    if left[job] > 0 {
                        left[job] -= 1;
                        order.push(job);
                        rec(j, left, order, offer);
                        order.pop();
                        left[job] += 1;
                    }
                }
            }
            rec(j, &mut vec![machines; jobs], &mut order, &mut offer);
        }
        ProblemInstance::Sco(s) => {
            // extend action sequences while some action is accepted
            fn rec(s: &ahd_core::instances::ScoInstance, seq: &mut Vec<usize>, offer: &mut dyn FnMut(f64)) {
                let mut extended = false;
                for a in 0..s.n() {
                    seq.push(a);
                    if sco_rollout(s, seq).is_ok() {
                        extended = true;
                        rec(s, seq, offer);
                    }
                    seq.pop();
                }
                if !extended {
                    offer(sco_rollout(s, seq).unwrap());
                }
            }
            rec(s, &mut Vec::new(), &mut offer);
        }
    }
    best.expect("at least one feasible solution")
}

fn tiny_instances(kind: &str, count: usize, rng: &mut ahd_core::rng::Rng) -> Vec<ProblemInstance> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let made: Option<ProblemInstance> = match kind {
            "tsp" => gen_tsp(rng.random_range(3..=8), TspDistribution::Uniform, rng).ok().map(Into::into),
            "qap" => gen_qap(rng.random_range(2..=8), rng).ok().map(Into::into),
            "p_median" | "p_center" | "p_cover" | "p_dispersion" => {
                let variant = match kind {
                    "p_median" => DlpVariant::Median,
                    "p_center" => DlpVariant::Center,
                    "p_cover" => DlpVariant::Cover,
                    _ => DlpVariant::Dispersion,
                };
                let n = rng.random_range(4..=10);
                let p = rng.random_range(2..=3);
                gen_dlp(n, variant, Some(p), rng).ok().map(Into::into)
            }
            "cvrp" | "ovrp" | "lvrp" => {
                let variant = match kind {
                    "cvrp" => VrpVariant::Capacitated,
                    "ovrp" => VrpVariant::Open,
                    _ => VrpVariant::DurationLimited,
                };
                let cap = [15.0, 20.0, 30.0][rng.random_range(0..3)];
                gen_vrp(rng.random_range(2..=6), variant, cap, rng).ok().map(Into::into)
            }
            "op" => gen_op(rng.random_range(2..=7), rng).ok().map(Into::into),
            "jssp" => gen_jssp(rng.random_range(1..=3), rng.random_range(1..=3), rng).ok().map(Into::into),
            _ => {
                let variant = match kind {
                    "cts" => ScoVariant::Cts,
                    "oas" => ScoVariant::Oas,
                    "ftr" => ScoVariant::Ftr,
                    _ => ScoVariant::Wpf,
                };
                let params = ScoParams { horizon: rng.random_range(1..=5), ..ScoParams::default() };
                let n = if variant == ScoVariant::Wpf { rng.random_range(2..=5) } else { rng.random_range(2..=4) };
                gen_sco_with(variant, n, &params, rng).ok().map(Into::into)
            }
        };
        out.extend(made);
    }
    out
}

fn uniform_guidance(inst: &ahd_core::instances::DlpInstance) -> HeuristicArtifact {
    match inst.variant {
        DlpVariant::Dispersion => HeuristicArtifact::matrix_fn(ArtifactKind::GuideMatrix, inst.n(), |i, j| inst.dist.get(i, j)).unwrap(),
        _ => {
            let n = inst.n();
            let scores = (0..n).map(|i| 1.0 / (1e-9 + (0..n).map(|j| inst.dist.get(i, j)).sum::<f64>() / n as f64)).collect();
            HeuristicArtifact::scores(scores).unwrap()
        }
    }
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let kinds = [
        "tsp", "qap", "p_median", "p_center", "p_cover", "p_dispersion", "cvrp", "ovrp", "lvrp", "op", "jssp", "cts", "oas",
        "ftr", "wpf",
    ];
    let mut rng = rng_from_seed(2024);
    let mut total = 0;
    for kind in kinds {
        for (i, inst) in tiny_instances(kind, 100, &mut rng).iter().enumerate() {
            let oracle = brute_force_optimum(inst).map_err(|e| format!("{kind} #{i}: {e}"))?;
            let enumerated = enumerate(inst);
            ensure(close(oracle, enumerated), || format!("{kind} #{i}: oracle {oracle} vs enumeration {enumerated}"))?;
            total += 1;
        }
    }
    let mut grasp_hits = Vec::new();
    for kind in ["p_median", "p_dispersion"] {
        let mut hits = 0;
        for (i, inst) in tiny_instances(kind, 100, &mut rng).into_iter().enumerate() {
            let ProblemInstance::Dlp(d) = &inst else { unreachable!() };
            let params = GraspParams { n_iterations: 50, ..GraspParams::default() };
            let out = grasp_solve(d, &uniform_guidance(d), &params, &mut rng_from_seed(i as u64)).unwrap();
            hits += usize::from(close(out.best_objective, brute_force_optimum(&inst).unwrap()));
        }
        ensure(hits >= 95, || format!("GRASP reached the {kind} optimum on {hits}/100"))?;
        grasp_hits.push(format!("{kind} {hits}/100"));
    }
    within(start.elapsed(), 600)?;
    Ok(format!("{total} instances agree; GRASP optimal on {}; {:.1?}", grasp_hits.join(", "), start.elapsed()))
}

// 4 ------------------------------------------------------------------------

fn backbone_sanity() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_from_seed(50);
    let (mut aco_sum, mut random_sum, mut opt2_sum) = (0.0, 0.0, 0.0);
    for i in 0..10 {
        let t = gen_tsp(50, TspDistribution::Uniform, &mut rng).unwrap();
        let eta = HeuristicArtifact::matrix_fn(ArtifactKind::EdgeMatrix, 50, |a, b| 1.0 / t.dist.get(a, b)).unwrap();
        // the default 50 iterations stop while the colony is still descending
        let params = AcoParams { n_iterations: 200, ..AcoParams::default() };
        let aco = aco_solve(AcoTarget::Tsp(&t), &eta, &params, &mut rng_from_seed(i)).unwrap().best_cost;
        let mut perm: Vec<usize> = (0..50).collect();
        let random_mean = (0..1000)
            .map(|_| {
                perm.shuffle(&mut rng);
                t.dist.cycle_length(&perm)
            })
            .sum::<f64>()
            / 1000.0;
        let mut tour = nn_tour(&t.dist);
        two_opt(&t.dist, &mut tour);
        let opt2 = t.dist.cycle_length(&tour);
        ensure(aco <= 0.75 * random_mean, || format!("instance {i}: ACO {aco:.3} vs random mean {random_mean:.3}"))?;
        ensure(aco <= 1.15 * opt2, || format!("instance {i}: ACO {aco:.3} vs 2-opt {opt2:.3}"))?;
        aco_sum += aco;
        random_sum += random_mean;
        opt2_sum += opt2;
    }
    let mut gls_hits = 0;
    for _ in 0..100 {
        let t = gen_tsp(8, TspDistribution::Uniform, &mut rng).unwrap();
        let guide = HeuristicArtifact::matrix_fn(ArtifactKind::GuideMatrix, 8, |a, b| t.dist.get(a, b)).unwrap();
        let gls = gls_solve(&t, &guide, &GlsParams::default()).unwrap().best_length;
        let opt = brute_force_optimum(&t.clone().into()).unwrap();
        gls_hits += usize::from(gls <= 1.05 * opt);
    }
    ensure(gls_hits >= 95, || format!("GLS within 5% on {gls_hits}/100"))?;
    within(start.elapsed(), 600)?;
    Ok(format!(
        "ACO (200 iterations) mean {:.3} vs random {:.3} ({:.0}% better) and 2-opt {:.3}; GLS within 5% on {gls_hits}/100; {:.1?}",
        aco_sum / 10.0,
        random_sum / 10.0,
        100.0 * (1.0 - aco_sum / random_sum),
        opt2_sum / 10.0,
        start.elapsed()
    ))
}

// 5 ------------------------------------------------------------------------

fn determinism() -> Verdict {
    let mut parts = Vec::new();
    for engine in [
        evo(Paradigm::BottomUp),
        evo(Paradigm::TopDown),
        evo(Paradigm::Dual),
        mcts(Paradigm::BottomUp),
        mcts(Paradigm::TopDown),
    ] {
        let label = format!("{}-{:?}", engine.name(), engine.paradigm());
        let mut sparse = engine.clone();
        if let ahd_core::harness::EngineConfig::Evo(c) = &mut sparse {
            c.eta = Some(0.5);
        }
        for (tag, e) in [("", engine), ("-sparse", sparse)] {
            let dir = tempfile::tempdir().unwrap();
            let c = config(dir.path(), e, &cycling_fixture(700), 99);
            let read = || std::fs::read(c.output_dir.join(ahd_core::harness::EVENTS_FILE)).unwrap();
            let first = run_ok(&c);
            let bytes = read();
            let second = run_ok(&c);
            ensure(bytes == read() && first.events_digest == second.events_digest, || format!("{label}{tag} differs"))?;
            if tag.is_empty() {
                parts.push(format!("{label} {}", &first.events_digest[..12]));
            }
        }
    }
    Ok(format!("byte-identical logs: {}", parts.join(", ")))
}

// 6 ------------------------------------------------------------------------

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() })
}

fn prop(name: &str, result: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<(), String> {
    result.map_err(|e| format!("{name}: {e}"))
}

fn small_evo(paradigm: Paradigm, eta: Option<f64>) -> ahd_core::harness::EngineConfig {
    ahd_core::harness::EngineConfig::Evo(EvoConfig {
        paradigm,
        eta,
        init_size: 4,
        iterations: 4,
        population_size: 3,
        ..EvoConfig::default()
    })
}

fn small_mcts(paradigm: Paradigm) -> ahd_core::harness::EngineConfig {
    ahd_core::harness::EngineConfig::Mcts(ahd_core::search::TreeConfig { paradigm, max_candidates: 24, ..Default::default() })
}

/// Random replies: each picks a builtin, or a program the evaluator
/// rejects. The first few are always valid so initialization succeeds.
fn random_fixture(picks: &[u8]) -> Fixture {
    let entries = picks
        .iter()
        .enumerate()
        .map(|(i, &p)| match if i < 8 { p as usize % 3 } else { p as usize % 4 } {
            3 => FixtureEntry::new("*", reply(&format!("broken {i}"), "no_such_builtin")),
            b => FixtureEntry::new("*", reply(&format!("idea {i}"), BUILTINS[b])),
        })
        .collect();
    Fixture { entries, fallback: Fallback::EchoSeed }
}

fn invariant_suites() -> Verdict {
    let engines = prop::sample::select(vec![
        small_evo(Paradigm::BottomUp, None),
        small_evo(Paradigm::TopDown, None),
        small_evo(Paradigm::Dual, None),
        small_mcts(Paradigm::BottomUp),
        small_mcts(Paradigm::TopDown),
    ]);
    prop(
        "monotone best-so-far",
        runner(24).run(&(engines, prop::collection::vec(any::<u8>(), 0..80), any::<u64>()), |(engine, picks, seed)| {
            let dir = tempfile::tempdir().unwrap();
            let c = config(dir.path(), engine, &random_fixture(&picks), seed);
            let s = run_ok(&c);
            prop_assert!(s.trajectory.windows(2).all(|w| w[1] <= w[0]), "{:?}", s.trajectory);
            prop_assert_eq!(s.trajectory.last().copied(), Some(s.best.score));
            Ok(())
        }),
    )?;

    prop(
        "sparse elitist is evaluated",
        runner(24).run(
            &(prop::sample::select(vec![Paradigm::BottomUp, Paradigm::TopDown]), prop::collection::vec(any::<u8>(), 0..80), any::<u64>()),
            |(paradigm, picks, seed)| {
                let dir = tempfile::tempdir().unwrap();
                let c = config(dir.path(), small_evo(paradigm, Some(0.5)), &random_fixture(&picks), seed);
                let s = run_ok(&c);
                prop_assert!(s.best.is_evaluated());
                let evs = events(&c);
                let status = |id: &serde_json::Value| {
                    evs.iter().find(|e| e["event"] == "evaluation" && &e["candidate"] == id).map(|e| e["status"].clone())
                };
                for it in evs.iter().filter(|e| e["event"] == "iteration") {
                    prop_assert!(!it["elitist_score"].is_null());
                    prop_assert_eq!(status(&it["elitist"]), Some(serde_json::json!("evaluated")));
                }
                Ok(())
            },
        ),
    )?;

    prop(
        "tree values dominate children after every backup",
        runner(256).run(&prop::collection::vec((any::<prop::sample::Index>(), prop::option::of(0.0..100.0f64)), 1..60), |steps| {
            let mut tree = Tree::new();
            for (i, (at, score)) in steps.into_iter().enumerate() {
                let parent = at.index(tree.len());
                let mut c = Candidate::new(i as u64, Origin::Init, None, Some("x".into()), vec![]);
                match score {
                    Some(s) => c.set_evaluated(s),
                    None => c.set_invalid("failed"),
                }
                tree.attach(parent, c);
                prop_assert!(tree.values_dominate_children());
            }
            Ok(())
        }),
    )?;

    prop(
        "guided local search bookkeeping",
        runner(64).run(&(5usize..30, any::<u64>(), 0.0..2.0f64), |(n, seed, noise)| {
            let mut rng = rng_from_seed(seed);
            let t = gen_tsp(n, TspDistribution::Uniform, &mut rng).unwrap();
            let guide =
                HeuristicArtifact::matrix_fn(ArtifactKind::GuideMatrix, n, |a, b| t.dist.get(a, b) * (1.0 + noise * ((a * 7 + b * 3) % 5) as f64)).unwrap();
            let out = gls_solve(&t, &guide, &GlsParams { n_perturbations: 15, ..GlsParams::default() }).unwrap();
            prop_assert!(out.bookkeeping_error() <= 1e-9 * out.initial_length.max(1.0), "{}", out.bookkeeping_error());
            prop_assert!(close(eval_tour(&t, &out.best_tour).unwrap(), out.best_length));
            Ok(())
        }),
    )?;

    prop(
        "colony solutions are feasible",
        runner(48).run(
            &(prop::sample::select(vec![VrpVariant::Capacitated, VrpVariant::Open, VrpVariant::DurationLimited]), 3usize..25, 14.0..60.0f64, any::<u64>()),
            |(variant, n, capacity, seed)| {
                let mut rng = rng_from_seed(seed);
                let Ok(v) = gen_vrp(n, variant, capacity, &mut rng) else { return Ok(()) };
                let eta = HeuristicArtifact::matrix_fn(ArtifactKind::EdgeMatrix, n, |a, b| 1.0 / (v.dist.get(a, b) + 1e-9)).unwrap();
                let params = AcoParams { n_ants: 5, n_iterations: 4, ..AcoParams::default() };
                let out = aco_solve_traced(AcoTarget::Vrp(&v), &eta, &params, &mut rng).unwrap();
                prop_assert_eq!(out.constructed.len(), 20);
                for sol in out.constructed.iter().chain([&out.best]) {
                    let AcoSolution::Routes(routes) = sol else { panic!("vrp yields routes") };
                    let mut visited: Vec<usize> = routes.iter().flatten().copied().collect();
                    visited.sort_unstable();
                    prop_assert_eq!(visited, (1..n).collect::<Vec<_>>());
                    prop_assert!(eval_routes(&v, routes).is_ok(), "{:?}", eval_routes(&v, routes));
                }
                Ok(())
            },
        ),
    )?;
    Ok("monotone best-so-far, sparse elitist, tree dominance, GLS bookkeeping, colony feasibility".into())
}

// 7 ------------------------------------------------------------------------

const K0: &str = "Treat every edge alike.";
const K1: &str = "Prefer short edges: weight each edge by its inverse length.";
const K2: &str = "Prefer short edges strongly: weight each edge by its inverse squared length.";

fn top_down_improvement() -> Verdict {
    let cfg = EvoConfig { paradigm: Paradigm::TopDown, ..EvoConfig::default() };
    let (m, n) = (cfg.population_size, cfg.mutation_count());
    let (cx_point, mt_point) = (5usize, 15usize);
    let mut entries = Vec::new();
    for _ in 0..cfg.init_size {
        entries.push(FixtureEntry::new("reevo_td/init", reply(K0, "uniform")));
    }
    for _ in 0..(cx_point - 1) * m {
        entries.push(FixtureEntry::new("reevo_td/crossover", reply(K0, "uniform")));
    }
    entries.push(FixtureEntry::new("reevo_td/crossover", reply(K1, "inverse_distance")));
    for _ in 0..(mt_point - 1) * n {
        entries.push(FixtureEntry::new("reevo_td/mutation", reply(K0, "uniform")));
    }
    entries.push(FixtureEntry::new("reevo_td/mutation", reply(K2, "inverse_distance_sq")));
    let fixture = Fixture { entries, fallback: Fallback::EchoSeed };

    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), ahd_core::harness::EngineConfig::Evo(cfg), &fixture, 3);
    let s = run_ok(&c);
    let t = &s.trajectory;
    let before = t[cx_point - 1];
    let (after_k1, before_k2, after_k2) = (t[cx_point], t[mt_point - 1], t[mt_point]);
    ensure(before > after_k1 && before_k2 > after_k2, || format!("trajectory {t:?}"))?;
    ensure(t.windows(2).enumerate().all(|(i, w)| w[1] == w[0] || i + 1 == cx_point || i + 1 == mt_point), || {
        format!("score moved outside the improvement points: {t:?}")
    })?;
    ensure(s.best.knowledge.as_deref() == Some(K2), || format!("final knowledge {:?}", s.best.knowledge))?;
    Ok(format!("elitist {before:.4} -> {after_k1:.4} -> {after_k2:.4}; final knowledge is the fixture's last"))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Verdict); 7] = [
        (1, "budget exactness", budget_exactness),
        (2, "sparse budget", sparse_budget),
        (3, "oracle equivalence", oracle_equivalence),
        (4, "backbone sanity", backbone_sanity),
        (5, "determinism", determinism),
        (6, "invariant suites", invariant_suites),
        (7, "top-down improvement", top_down_improvement),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match verdict {
            Ok(detail) => println!("criterion {id} ({name}): PASS - {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL - {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
