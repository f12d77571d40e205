//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary (`harness = false`) so the lines always reach the test output.

mod common;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::{BTreeMap, BTreeSet};
use std::panic::AssertUnwindSafe;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};
use wargame_client::{Client, ClientError, DocumentKind};
use wargame_core::analytics::{
    net_similarity, pfnet, sna_metrics, tlx_score, trend, DistanceMatrix, InteractionEvent, InteractionKind,
    PfnetRequest, SimilarityMatrix, TimeWindow, TlxResponse,
};
use wargame_core::demo;
use wargame_core::findings::FindingKind;
use wargame_core::model::{Polarity, PortRef, Tier};
use wargame_core::plan::{validate_plan, Action, Instrument, Plan, PlanMutation, ResourceDraw};
use wargame_core::sim::{baseline, batch_simulate, detect_effects, simulate, CellOutcome, RunConfig, Series, Trajectory};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Simulation

fn baseline_invariance() -> Outcome {
    let scenario = demo::demo_scenario();
    let empty = demo::empty_plan();
    let mut slowest = Duration::ZERO;
    let mut checks = 0;
    for hyp in scenario.hypotheses().map_err(|e| e.to_string())? {
        for noise in [false, true] {
            let started = Instant::now();
            let cfg = RunConfig::new(empty.horizon_ticks, 42, noise);
            let base = baseline(&hyp.graph, &cfg).map_err(|e| e.to_string())?;
            let run = simulate(&hyp.graph, &empty, &cfg).map_err(|e| e.to_string())?;
            for theta in [1.0, 5.0, 10.0] {
                let found = detect_effects(&base, &run, theta, 4).map_err(|e| e.to_string())?;
                ensure(found.is_empty(), || format!("{} noise={noise} θ={theta}: {} records", hyp.name, found.len()))?;
                checks += 1;
            }
            slowest = slowest.max(started.elapsed());
        }
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest run took {slowest:?}"))?;
    Ok(format!("{checks} (hypothesis, noise, θ) checks returned 0 records; slowest run {slowest:?}"))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for name in ["first.json", "second.json"] {
        let path = tmp.path().join(name);
        let out = run_cli(&[
            "run",
            "--scenario",
            &demo_path("scenario.json"),
            "--plan",
            &demo_path("plans/integrated.json"),
            "--seed",
            "42",
            "--noise",
            "--out",
            path.to_str().unwrap(),
        ]);
        ensure(code(&out) == 0, || String::from_utf8_lossy(&out.stderr).into_owned())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "result files differ".into())?;
    Ok(format!("two seed-42 noisy runs wrote identical {}-byte result files", files[0].len()))
}

fn random_pair(rng: &mut StdRng) -> (Trajectory, Trajectory, f64, u32) {
    let ticks = rng.random_range(2..=200usize);
    let vars = rng.random_range(1..=20usize);
    let theta = [0.5, 1.0, 2.5, 5.0, 10.0][rng.random_range(0..5)];
    let persistence = rng.random_range(1..=8u32);
    let (mut base, mut plan) = (Vec::new(), Vec::new());
    for v in 0..vars {
        let polarity = if rng.random_bool(0.5) { Polarity::FavorableHigh } else { Polarity::FavorableLow };
        let b: Vec<f64> = (0..ticks).map(|_| rng.random_range(0.0..100.0)).collect();
        let mut p = Vec::with_capacity(ticks);
        while p.len() < ticks {
            // piecewise-constant deviations, including values exactly at ±θ
            let len = rng.random_range(1..=12usize);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let delta = match rng.random_range(0..5) {
                0 => 0.0,
                1 => sign * rng.random_range(0.0..theta),
                2 => sign * theta,
                _ => sign * rng.random_range(theta..theta * 4.0),
            };
            for _ in 0..len {
                if p.len() < ticks {
                    let jitter = if rng.random_bool(0.1) { -sign * theta * 0.5 } else { 0.0 };
                    p.push(b[p.len()] + delta + jitter);
                }
            }
        }
        let series = |values| Series { instance: format!("i{}", v / 3), var: format!("v{v}"), polarity, values };
        base.push(series(b));
        plan.push(series(p));
    }
    let traj = |series| Trajectory { horizon_ticks: ticks as u32 - 1, series, national: vec![] };
    (traj(base), traj(plan), theta, persistence)
}

fn effect_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut mismatches, mut records, mut ticks_total) = (0, 0, 0);
    for case in 0..100 {
        let (base, plan, theta, persistence) = random_pair(&mut rng);
        let got = detect_effects(&base, &plan, theta, persistence).map_err(|e| e.to_string())?;
        let want = oracle_effects(&base, &plan, theta, persistence);
        if got != want {
            mismatches += 1;
            eprintln!("effect oracle case {case}: got {} records, oracle {}", got.len(), want.len());
        }
        records += want.len();
        ticks_total += base.len() * base.series.len();
    }
    ensure(mismatches == 0, || format!("{mismatches} of 100 cases mismatched"))?;
    Ok(format!("100 random pairs ({ticks_total} series-ticks, {records} effects): 0 mismatches"))
}

fn paper_scale() -> Outcome {
    let scenario = demo::generate_scenario(10, 7);
    let hyps = scenario.hypotheses().map_err(|e| e.to_string())?;
    let provinces = hyps[0].graph.instances.iter().filter(|i| i.tier == Tier::Province).count();
    ensure(provinces == 50, || format!("{provinces} province instances, expected 50"))?;
    let plans: Vec<Plan> = (0..10).map(|s| demo::generate_plan(&scenario, 400, 260, s)).collect();
    for p in &plans {
        let report = validate_plan(p, &hyps[0].graph);
        ensure(!report.has_errors(), || format!("generated plan {} has errors: {:?}", p.id, report.error_kinds()))?;
        ensure(p.actions.len() == 400, || format!("{} actions", p.actions.len()))?;
    }

    let mut slowest = Duration::ZERO;
    for seed in 0..3 {
        let started = Instant::now();
        simulate(&hyps[0].graph, &plans[0], &RunConfig::new(260, seed, true)).map_err(|e| e.to_string())?;
        slowest = slowest.max(started.elapsed());
    }
    ensure(slowest < Duration::from_secs(1), || format!("single run took {slowest:?}"))?;

    let cfgs: Vec<RunConfig> = (0..3).map(|s| RunConfig::new(260, s, true)).collect();
    let started = Instant::now();
    let batch = batch_simulate(&hyps, &plans, &cfgs);
    let batch_time = started.elapsed();
    let failed = batch.cells.iter().filter(|c| matches!(c.outcome, CellOutcome::Failed { .. })).count();
    ensure(batch.cells.len() == 60 && failed == 0, || format!("{} cells, {failed} failed", batch.cells.len()))?;
    ensure(batch_time < Duration::from_secs(30), || format!("batch took {batch_time:?}"))?;
    Ok(format!(
        "{} instances, 400 actions, 260 ticks: slowest single run {slowest:?}; 2×10×3 batch of 60 runs in {batch_time:?}",
        hyps[0].graph.instances.len()
    ))
}

// ---------------------------------------------------------------------------
// Analytics

fn random_distances(rng: &mut StdRng, n: usize, integer: bool) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if integer { rng.random_range(1..=9) as f64 } else { rng.random_range(0.5..10.0) };
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

fn link_indices(net: &wargame_core::analytics::PfNet) -> BTreeSet<(usize, usize)> {
    let pos = |name: &str| net.concepts.iter().position(|c| c == name).unwrap();
    net.links.iter().map(|l| (pos(&l.a).min(pos(&l.b)), pos(&l.a).max(pos(&l.b)))).collect()
}

fn pfnet_correctness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(68);
    let n = 6;
    let qs = [1, 2, n - 1];
    let rs = [1.0, 2.0, f64::INFINITY];
    let mut comparisons = 0;
    for case in 0..50 {
        let d = random_distances(&mut rng, n, case % 2 == 0);
        let m = DistanceMatrix::new((0..n).map(|i| format!("c{i}")).collect(), d.clone()).map_err(|e| e.to_string())?;
        let mut nets = BTreeMap::new();
        for &q in &qs {
            for (ri, &r) in rs.iter().enumerate() {
                let links = link_indices(&pfnet(&m, q, r).map_err(|e| e.to_string())?);
                let oracle = oracle_pfnet(&d, q, r);
                ensure(links == oracle, || format!("case {case} q={q} r={r}: {links:?} vs oracle {oracle:?}"))?;
                comparisons += 1;
                nets.insert((q, ri), links);
            }
        }
        let msts = oracle_mst_union(&d);
        ensure(nets[&(n - 1, 2)] == msts, || format!("case {case}: PFNET(n-1, ∞) differs from the MST union"))?;
        // Fewer links as q or r grows; every network contains the MST union.
        for (qi, &q) in qs.iter().enumerate() {
            for ri in 0..rs.len() {
                let here = &nets[&(q, ri)];
                ensure(here.is_superset(&msts), || format!("case {case}: ({q}, {ri}) drops an MST edge"))?;
                if let Some(&q2) = qs.get(qi + 1) {
                    ensure(here.is_superset(&nets[&(q2, ri)]), || format!("case {case}: not monotone in q at {q}"))?;
                }
                if ri + 1 < rs.len() {
                    ensure(here.is_superset(&nets[&(q, ri + 1)]), || format!("case {case}: not monotone in r at {ri}"))?;
                }
            }
        }
        ensure(nets[&(1, 0)].len() == n * (n - 1) / 2, || format!("case {case}: q=1 must keep every link"))?;
    }
    Ok(format!("50 six-node cases: {comparisons} (q, r) networks match brute force; MST union and monotonicity hold"))
}

fn tlx_bounds() -> Outcome {
    let mut rng = StdRng::seed_from_u64(15);
    for case in 0..1000 {
        let ratings: [f64; 6] = std::array::from_fn(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0..=20) as f64 * 5.0
            } else {
                rng.random_range(0.0..=100.0)
            }
        });
        let mut wins = [0u32; 6];
        for _ in 0..15 {
            wins[rng.random_range(0..6)] += 1;
        }
        let score = tlx_score(&TlxResponse { respondent: String::new(), ratings, pairwise_wins: wins })
            .map_err(|e| e.to_string())?;
        let lo = ratings.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ensure(lo <= score && score <= hi, || format!("case {case}: {score} outside [{lo}, {hi}]"))?;
    }
    let worked = tlx_score(&TlxResponse {
        respondent: String::new(),
        ratings: [100.0, 80.0, 60.0, 40.0, 20.0, 0.0],
        pairwise_wins: [5, 4, 3, 2, 1, 0],
    })
    .map_err(|e| e.to_string())?;
    // (500 + 320 + 180 + 80 + 20 + 0) / 15
    let expected = 1100.0 / 15.0;
    ensure((worked - expected).abs() <= 1e-9, || format!("worked example scored {worked}"))?;
    Ok(format!("1000 random responses within [min, max] rating; worked example {worked:.9} = 1100/15 ± 1e-9"))
}

fn sna_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut max_diff: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(2..=7usize);
        let p = rng.random_range(0.2..0.9);
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(p) {
                    edges.insert((i, j));
                }
            }
        }
        if edges.is_empty() {
            edges.insert((0, 1));
        }
        // Each edge is logged one to three times in either direction.
        let mut events = Vec::new();
        for &(a, b) in &edges {
            for _ in 0..rng.random_range(1..=3) {
                let (s, t) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                events.push(InteractionEvent {
                    timestamp: rng.random_range(0.0..600.0),
                    source: format!("n{s}"),
                    destination: format!("n{t}"),
                    duration_seconds: rng.random_range(1.0..60.0),
                    kind: InteractionKind::PersonPerson,
                    source_group: String::new(),
                    dest_group: String::new(),
                    source_role: None,
                    dest_role: None,
                });
            }
        }
        let metrics = sna_metrics(&events, TimeWindow::all());
        let present: BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        let k = present.len() as f64;
        let density = edges.len() as f64 / (k * (k - 1.0) / 2.0);
        ensure(metrics.density == density, || format!("case {case}: density {} vs oracle {density}", metrics.density))?;
        let oracle = oracle_betweenness(n, &edges);
        ensure(metrics.betweenness.len() == present.len(), || format!("case {case}: actor set differs"))?;
        for &v in &present {
            let got = metrics.betweenness[&format!("n{v}")];
            max_diff = max_diff.max((got - oracle[v]).abs());
        }
        ensure(max_diff <= 1e-9, || format!("case {case}: betweenness differs by {max_diff}"))?;
    }
    Ok(format!("50 random graphs of 2-7 nodes: density exact, betweenness max |Δ| = {max_diff:e}"))
}

fn trend_correctness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(89);
    for case in 0..50 {
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-50.0..50.0));
        let n = rng.random_range(3..=20);
        let mut xs: Vec<f64> = (0..n).map(|i| i as f64 + rng.random_range(0.0..0.9)).collect();
        xs.reverse();
        let points: Vec<(f64, f64)> = xs.iter().map(|&x| (x, a * x + b)).collect();
        let fit = trend(&points).map_err(|e| e.to_string())?;
        let slope_zero = a == 0.0;
        ensure(slope_zero || (fit.r_squared - 1.0).abs() <= 1e-9, || format!("collinear case {case}: R² = {}", fit.r_squared))?;
    }

    let hand = [(1.0, 1.0), (2.0, 2.0), (3.0, 2.0), (4.0, 3.0)];
    let fit = trend(&hand).map_err(|e| e.to_string())?;
    let (slope, intercept, r2, t) = oracle_ols(&hand);
    // Student t with 2 degrees of freedom has a closed-form tail.
    let p = 1.0 - t.abs() / (t * t + 2.0).sqrt();
    for (name, got, want) in [
        ("slope", fit.slope.unwrap_or(f64::NAN), slope),
        ("intercept", fit.intercept.unwrap_or(f64::NAN), intercept),
        ("R²", fit.r_squared, r2),
        ("t", fit.statistic, t),
        ("p", fit.p_value, p),
    ] {
        ensure((got - want).abs() <= 1e-6, || format!("hand case {name}: {got} vs {want}"))?;
    }

    // Session-over-session similarity of each team's network to a referent,
    // then its trend: the full assessment pipeline on 4-point series.
    let concepts: Vec<String> = ["security", "governance", "economy", "legitimacy", "services"].map(String::from).to_vec();
    let sim = |rng: &mut StdRng| {
        let n = concepts.len();
        let mut r = vec![vec![9.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random_range(1..=9) as f64;
                r[i][j] = v;
                r[j][i] = v;
            }
        }
        SimilarityMatrix::new(concepts.clone(), r).unwrap()
    };
    for series in 0..20 {
        let referent = sim(&mut rng);
        let mut points = Vec::new();
        for session in 1..=4 {
            let req = PfnetRequest {
                similarity: Some(sim(&mut rng)),
                distances: None,
                q: None,
                r: f64::INFINITY,
                referent: Some(referent.clone()),
            };
            let report = wargame_core::analytics::run_pfnet(&req).map_err(|e| e.to_string())?;
            let similarity = report.referent_similarity.ok_or("no referent similarity")?;
            let direct = net_similarity(&report.net, &pfnet(&wargame_core::analytics::to_distances(&referent), 4, f64::INFINITY).unwrap())
                .map_err(|e| e.to_string())?;
            ensure(similarity == direct, || format!("series {series}: referent similarity {similarity} vs {direct}"))?;
            points.push((session as f64, similarity));
        }
        let fit = trend(&points).map_err(|e| e.to_string())?;
        let well_formed = fit.n == 4
            && fit.degrees_of_freedom == 2
            && (0.0..=1.0).contains(&fit.p_value)
            && (0.0..=1.0).contains(&fit.r_squared)
            && fit.slope.is_some_and(f64::is_finite)
            && !fit.statistic.is_nan()
            && serde_json::to_string(&fit).is_ok();
        ensure(well_formed, || format!("series {series}: malformed {fit:?}"))?;
    }
    Ok(format!(
        "50 collinear fits R² = 1 ± 1e-9; hand case slope {:.6} R² {:.6} p {:.6} within 1e-6; 20 four-session pipelines well-formed",
        fit.slope.unwrap(),
        fit.r_squared,
        fit.p_value
    ))
}

// ---------------------------------------------------------------------------
// Plan validation

fn act(id: &str, target: usize, start: u32, duration: u32, rate: f64, deps: &[&str]) -> Action {
    Action {
        id: id.into(),
        name: id.into(),
        instrument: Instrument::Diplomatic,
        line_of_effort: "main".into(),
        target: PortRef::new(format!("x{target}"), "push"),
        start_tick: start,
        duration_ticks: duration,
        intensity: 1.0,
        resource: ResourceDraw { pool: "fund".into(), rate_per_tick: rate },
        dependencies: deps.iter().map(|d| d.to_string()).collect(),
    }
}

fn plan_of(actions: Vec<Action>) -> Plan {
    let mut p = integrator_plan("case", &[], 20);
    p.actions = actions;
    p
}

fn invalid_plans() -> Vec<(&'static str, Plan, Vec<FindingKind>)> {
    use FindingKind::*;
    let with = |f: &dyn Fn(&mut Plan), actions: Vec<Action>| {
        let mut p = plan_of(actions);
        f(&mut p);
        p
    };
    let keep = |_: &mut Plan| {};
    vec![
        ("two-action cycle", plan_of(vec![act("a", 1, 0, 2, 1.0, &["b"]), act("b", 1, 2, 2, 1.0, &["a"])]), vec![DependencyCycle]),
        (
            "three-action cycle",
            plan_of(vec![act("a", 1, 0, 2, 1.0, &["c"]), act("b", 1, 2, 2, 1.0, &["a"]), act("c", 1, 4, 2, 1.0, &["b"])]),
            vec![DependencyCycle],
        ),
        ("self dependency", plan_of(vec![act("a", 1, 0, 2, 1.0, &["a"])]), vec![DependencyCycle]),
        ("single-action overdraft", plan_of(vec![act("a", 1, 0, 10, 101.0, &[])]), vec![Overdraft]),
        ("combined overdraft", plan_of(vec![act("a", 1, 0, 10, 60.0, &[]), act("b", 2, 0, 10, 41.0, &[])]), vec![Overdraft]),
        ("orphan target instance", plan_of(vec![act("a", 9, 0, 2, 1.0, &[])]), vec![UnresolvableTarget]),
        (
            "orphan target port",
            with(&|p| p.actions[0].target.port = "pull".into(), vec![act("a", 1, 0, 2, 1.0, &[])]),
            vec![UnresolvableTarget],
        ),
        ("ends past horizon", plan_of(vec![act("a", 1, 15, 6, 1.0, &[])]), vec![HorizonExceeded]),
        ("starts past horizon", plan_of(vec![act("a", 1, 25, 1, 1.0, &[])]), vec![HorizonExceeded]),
        ("zero horizon", with(&|p| p.horizon_ticks = 0, vec![]), vec![InvalidAttribute]),
        ("zero duration", plan_of(vec![act("a", 1, 0, 0, 1.0, &[])]), vec![InvalidAttribute]),
        ("negative rate", plan_of(vec![act("a", 1, 0, 2, -1.0, &[])]), vec![InvalidAttribute]),
        (
            "non-finite intensity",
            with(&|p| p.actions[0].intensity = f64::NAN, vec![act("a", 1, 0, 2, 1.0, &[])]),
            vec![InvalidAttribute],
        ),
        ("unknown dependency", plan_of(vec![act("a", 1, 4, 2, 1.0, &["ghost"])]), vec![UnknownDependency]),
        ("dependency out of order", plan_of(vec![act("a", 1, 0, 6, 1.0, &[]), act("b", 2, 3, 2, 1.0, &["a"])]), vec![DependencyOrder]),
        (
            "unknown line of effort",
            with(&|p| p.actions[0].line_of_effort = "other".into(), vec![act("a", 1, 0, 2, 1.0, &[])]),
            vec![UnknownLineOfEffort],
        ),
        (
            "unknown pool",
            with(&|p| p.actions[0].resource.pool = "other".into(), vec![act("a", 1, 0, 2, 1.0, &[])]),
            vec![UnknownPool],
        ),
        ("duplicate action id", plan_of(vec![act("a", 1, 0, 2, 1.0, &[]), act("a", 2, 4, 2, 1.0, &[])]), vec![DuplicateId]),
        (
            "cycle and overdraft",
            plan_of(vec![act("a", 1, 0, 10, 80.0, &["b"]), act("b", 1, 10, 10, 80.0, &["a"])]),
            vec![DependencyCycle, Overdraft],
        ),
        (
            "orphan target past horizon",
            with(&keep, vec![act("a", 7, 18, 5, 1.0, &[])]),
            vec![UnresolvableTarget, HorizonExceeded],
        ),
    ]
}

fn random_valid_plan(rng: &mut StdRng, k: usize) -> Plan {
    let horizon = rng.random_range(10..=60u32);
    let mut actions: Vec<Action> = Vec::new();
    for i in 0..rng.random_range(0..=15) {
        let duration = rng.random_range(1..=horizon.min(12));
        let start = rng.random_range(0..=horizon - duration);
        let earlier: Vec<String> =
            actions.iter().filter(|a| a.end_tick() <= start as u64).map(|a| a.id.clone()).collect();
        let deps: Vec<&str> = earlier.iter().filter(|_| rng.random_bool(0.3)).map(String::as_str).collect();
        actions.push(act(&format!("a{i}"), rng.random_range(1..=k), start, duration, rng.random_range(0..5) as f64, &deps));
    }
    let mut p = plan_of(actions);
    p.horizon_ticks = horizon;
    // Budget exactly covers the spend: the boundary is not an overdraft.
    p.pools[0].budget = p.actions.iter().map(Action::total_spend).sum();
    p
}

fn plan_validation() -> Outcome {
    let graph = integrator_scenario(4, false).hypotheses().map_err(|e| e.to_string())?.remove(0).graph;
    let cases = invalid_plans();
    ensure(cases.len() == 20, || format!("{} invalid cases", cases.len()))?;
    for (name, plan, expected) in &cases {
        let report = validate_plan(plan, &graph);
        let got: BTreeSet<FindingKind> = report.errors().map(|f| f.kind).collect();
        let want: BTreeSet<FindingKind> = expected.iter().copied().collect();
        ensure(got == want, || format!("{name}: expected {want:?}, got {got:?}"))?;
    }
    let mut rng = StdRng::seed_from_u64(20);
    for i in 0..20 {
        let plan = random_valid_plan(&mut rng, 4);
        let report = validate_plan(&plan, &graph);
        ensure(report.is_empty(), || format!("valid plan {i}: false positives {:?}", report.findings))?;
    }
    Ok("20 invalid plans yield exactly the expected finding kinds; 20 valid plans yield no findings".into())
}

// ---------------------------------------------------------------------------
// Server

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap()
}

fn added(id: &str) -> PlanMutation {
    PlanMutation::AddAction { action: act(id, 1, 0, 1, 0.0, &[]) }
}

fn mutation_action_id(m: &serde_json::Value) -> Option<&str> {
    m.get("action").and_then(|a| a.get("id")).and_then(|id| id.as_str())
}

/// Apply `mutation` to `plan_id`, rebasing on conflicts. Returns the
/// accepted version and the number of conflicts seen.
async fn apply_with_retry(
    client: &Client,
    plan_id: &str,
    mutation: PlanMutation,
    client_id: &str,
    mut expected: u64,
) -> Result<(u64, usize), ClientError> {
    let mut conflicts = 0;
    loop {
        match client.update_plan(plan_id, expected, mutation.clone(), Some(client_id.to_string())).await {
            Ok(summary) => return Ok((summary.version, conflicts)),
            Err(ClientError::Conflict(c)) => {
                conflicts += 1;
                expected = c.current_version;
            }
            Err(e) => return Err(e),
        }
    }
}

fn server_concurrency() -> Outcome {
    let data = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rt = runtime();
    rt.block_on(async {
        let config = wargame_server::ServerConfig {
            data_dir: data.path().to_path_buf(),
            listen: "127.0.0.1:0".parse().unwrap(),
            workers: 1,
            queue_capacity: 16,
        };
        let server = wargame_server::bind(&config).await.map_err(|e| e.to_string())?;
        let url = format!("http://{}", server.local_addr().map_err(|e| e.to_string())?);
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let handle = tokio::spawn(server.run_until(async {
            let _ = stopped.await;
        }));

        let setup = Client::new(&url);
        let doc = setup.create(DocumentKind::Plan, &integrator_plan("shared", &[], 20)).await.map_err(|e| e.to_string())?;
        let initial = doc.version;

        let mut tasks = Vec::new();
        for c in 0..25 {
            let client = Client::new(&url);
            let plan_id = doc.doc_id.clone();
            tasks.push(tokio::spawn(async move {
                let mut accepted = Vec::new();
                let mut conflicts = 0;
                for k in 0..8 {
                    let id = format!("c{c:02}-{k}");
                    let current = client.get_document(&plan_id).await?.version;
                    let (version, seen) = apply_with_retry(&client, &plan_id, added(&id), &format!("client-{c}"), current).await?;
                    accepted.push((version, id));
                    conflicts += seen;
                }
                Ok::<_, ClientError>((accepted, conflicts))
            }));
        }
        let mut accepted = Vec::new();
        let mut conflicts = 0;
        for t in tasks {
            let (a, c) = t.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
            accepted.extend(a);
            conflicts += c;
        }

        let final_doc = setup.get_document(&doc.doc_id).await.map_err(|e| e.to_string())?;
        let _ = stop.send(());
        let _ = handle.await;

        ensure(accepted.len() == 200, || format!("{} accepted writes", accepted.len()))?;
        let versions: BTreeSet<u64> = accepted.iter().map(|(v, _)| *v).collect();
        ensure(versions.len() == 200, || "two writes were acknowledged with the same version".into())?;
        ensure(final_doc.version == initial + 200, || format!("final version {} from {initial}", final_doc.version))?;
        let history: BTreeMap<u64, &str> =
            final_doc.history.iter().filter_map(|h| mutation_action_id(&h.mutation).map(|id| (h.version, id))).collect();
        for (version, id) in &accepted {
            ensure(history.get(version) == Some(&id.as_str()), || format!("mutation {id} at version {version} missing from history"))?;
        }
        let plan: Plan = serde_json::from_value(final_doc.payload).map_err(|e| e.to_string())?;
        ensure(plan.actions.len() == 200, || format!("final plan holds {} actions", plan.actions.len()))?;
        Ok(format!(
            "25 clients, 200 accepted writes after {conflicts} conflicts; version {initial} -> {}; all 200 mutations in history",
            final_doc.version
        ))
    })
}

#[derive(Debug, Clone)]
enum Ack {
    Created { doc_id: String, payload: serde_json::Value },
    Updated { version: u64, action: String },
}

fn durability() -> Outcome {
    const TARGET: usize = 120;
    let data = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rt = runtime();
    let server = ServerProcess::start(data.path());
    let url = server.url.clone();
    let (plan_id, acks) = rt.block_on(async {
        let setup = Client::new(&url);
        let plan = setup.create(DocumentKind::Plan, &integrator_plan("durable", &[], 20)).await.map_err(|e| e.to_string())?;
        let acks = Arc::new(Mutex::new(Vec::<Ack>::new()));
        let count = Arc::new(AtomicUsize::new(0));
        for w in 0..8 {
            let (client, plan_id, acks, count) = (Client::new(&url), plan.doc_id.clone(), acks.clone(), count.clone());
            tokio::spawn(async move {
                for k in 0.. {
                    let ack = if w % 2 == 0 {
                        let payload = serde_json::json!({ "writer": w, "seq": k });
                        match client.create_document(DocumentKind::AnalyticsInput, payload.clone(), None).await {
                            Ok(s) => Ack::Created { doc_id: s.doc_id, payload },
                            Err(_) => break,
                        }
                    } else {
                        let id = format!("w{w}-{k}");
                        let Ok(doc) = client.get_document(&plan_id).await else { break };
                        match apply_with_retry(&client, &plan_id, added(&id), "writer", doc.version).await {
                            Ok((version, _)) => Ack::Updated { version, action: id },
                            Err(_) => break,
                        }
                    };
                    acks.lock().unwrap().push(ack);
                    count.fetch_add(1, Ordering::SeqCst);
                }
            });
        }
        let deadline = Instant::now() + Duration::from_secs(60);
        while count.load(Ordering::SeqCst) < TARGET {
            if Instant::now() > deadline {
                return Err("workload stalled".to_string());
            }
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
        Ok((plan.doc_id, acks))
    })?;
    // SIGKILL while the writers are still mid-request.
    server.kill();
    let acks: Vec<Ack> = acks.lock().unwrap().clone();
    rt.shutdown_background();

    let restarted = ServerProcess::start(data.path());
    let rt = runtime();
    let outcome = rt.block_on(async {
        let client = Client::new(&restarted.url);
        let plan = client.get_document(&plan_id).await.map_err(|e| e.to_string())?;
        let history: BTreeMap<u64, String> = plan
            .history
            .iter()
            .filter_map(|h| mutation_action_id(&h.mutation).map(|id| (h.version, id.to_string())))
            .collect();
        let (mut created, mut updated) = (0, 0);
        for ack in &acks {
            match ack {
                Ack::Created { doc_id, payload } => {
                    let doc = client.get_document(doc_id).await.map_err(|e| format!("{doc_id} lost: {e}"))?;
                    ensure(&doc.payload == payload, || format!("{doc_id} payload changed"))?;
                    created += 1;
                }
                Ack::Updated { version, action } => {
                    ensure(history.get(version) == Some(action), || format!("update {action} at version {version} lost"))?;
                    updated += 1;
                }
            }
        }
        Ok(format!(
            "killed after {} acknowledged writes ({created} creates, {updated} plan updates); all present after restart",
            acks.len()
        ))
    });
    restarted.kill();
    outcome
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 11] = [
        ("baseline invariance", baseline_invariance),
        ("determinism", determinism),
        ("effect oracle", effect_oracle),
        ("paper-scale capability", paper_scale),
        ("pfnet correctness", pfnet_correctness),
        ("tlx bounds and arithmetic", tlx_bounds),
        ("sna oracle", sna_oracle),
        ("trend correctness", trend_correctness),
        ("plan validation", plan_validation),
        ("server concurrency", server_concurrency),
        ("durability", durability),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
