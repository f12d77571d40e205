//! Fixtures and brute-force oracles shared by the CLI and acceptance tests.
//! Every oracle here is written from the definition, independently of the
//! library implementation it checks.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use wargame_core::coa::{DesiredEffect, Direction, EffectSet, EffectTarget};
use wargame_core::model::{
    ComponentKind, ComponentTemplate, DetectionParams, Dynamics, GraphSpec, HypothesisSpec, InstanceSpec, LevelVar,
    Polarity, PortRef, Scenario, Tier,
};
use wargame_core::plan::{Action, Instrument, LineOfEffort, Plan, ResourceDraw, ResourceKind, ResourcePool};
use wargame_core::sim::{EffectRecord, Trajectory};

pub fn wargamer() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wargamer"))
}

pub fn run_cli(args: &[&str]) -> Output {
    wargamer().args(args).output().expect("spawn wargamer")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn demo_dir() -> PathBuf {
    repo_root().join("assets/demo")
}

pub fn demo_path(rel: &str) -> String {
    demo_dir().join(rel).to_string_lossy().into_owned()
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

/// One-variable integrator: `x' = x + push`, starting at 10. Hand-computable.
pub fn integrator_template() -> ComponentTemplate {
    ComponentTemplate {
        id: "cell".into(),
        kind: ComponentKind::Social,
        state_vars: vec![LevelVar::new("level", 10.0, Polarity::FavorableHigh)],
        input_ports: vec!["push".into()],
        output_ports: vec!["out".into()],
        dynamics: Dynamics {
            state: vec![vec![1.0]],
            input: vec![vec![1.0]],
            bias: vec![0.0],
            output: vec![vec![1.0]],
        },
        noise_std: vec![0.5],
    }
}

fn integrator_graph(id: &str, instances: impl Iterator<Item = usize>) -> GraphSpec {
    GraphSpec {
        id: id.into(),
        instances: instances
            .map(|i| InstanceSpec {
                id: format!("x{i}"),
                template: "cell".into(),
                region: format!("r{i}"),
                tier: Tier::Province,
                overrides: vec![],
            })
            .collect(),
        couplings: vec![],
        aggregations: vec![],
    }
}

/// `n` independent integrators `x1..xn` under hypothesis `full`; with
/// `partial`, a second hypothesis `partial` lacks `xn`.
pub fn integrator_scenario(n: usize, partial: bool) -> Scenario {
    let mut s = Scenario::empty("integrators");
    s.detection = DetectionParams { threshold: 5.0, persistence: 3 };
    s.templates = vec![integrator_template()];
    s.hypotheses.push(HypothesisSpec {
        name: "full".into(),
        provenance: String::new(),
        graph: integrator_graph("full", 1..=n),
    });
    if partial {
        s.hypotheses.push(HypothesisSpec {
            name: "partial".into(),
            provenance: String::new(),
            graph: integrator_graph("partial", 1..n),
        });
    }
    s
}

/// Pushes each targeted integrator by 5 per tick for ticks 0..4, taking it
/// from 10 to 30.
pub fn integrator_plan(id: &str, targets: &[usize], horizon: u32) -> Plan {
    let mut p = Plan::empty(id, horizon);
    p.lines_of_effort = vec![LineOfEffort { name: "main".into(), description: String::new() }];
    p.pools = vec![ResourcePool { id: "fund".into(), agency: "agency".into(), budget: 1000.0, kind: ResourceKind::Financial }];
    p.actions = targets
        .iter()
        .map(|k| Action {
            id: format!("push-{k}"),
            name: format!("push x{k}"),
            instrument: Instrument::Economic,
            line_of_effort: "main".into(),
            target: PortRef::new(format!("x{k}"), "push"),
            start_tick: 0,
            duration_ticks: 4,
            intensity: 5.0,
            resource: ResourceDraw { pool: "fund".into(), rate_per_tick: 1.0 },
            dependencies: BTreeSet::new(),
        })
        .collect();
    p
}

/// `x_i >= 20` by tick 10 for every integrator.
pub fn integrator_effects(n: usize) -> EffectSet {
    EffectSet {
        schema_version: 1,
        id: "reach-20".into(),
        effects: (1..=n)
            .map(|i| DesiredEffect {
                id: format!("E{i}"),
                target: EffectTarget::Instance { instance: format!("x{i}"), var: "level".into() },
                direction: Direction::Increase,
                threshold_level: 20.0,
                deadline_tick: 10,
            })
            .collect(),
    }
}

/// Effect windows by definition: every interval `[t1, t2]` whose ticks all
/// satisfy `|plan - baseline| >= threshold`, that cannot be extended on
/// either side, and that spans at least `persistence` ticks.
pub fn oracle_effects(base: &Trajectory, run: &Trajectory, threshold: f64, persistence: u32) -> Vec<EffectRecord> {
    let mut out = Vec::new();
    for (b, p) in base.series.iter().zip(&run.series) {
        assert_eq!((&b.instance, &b.var), (&p.instance, &p.var));
        let len = b.values.len();
        let delta: Vec<f64> = (0..len).map(|t| p.values[t] - b.values[t]).collect();
        let hit: Vec<bool> = delta.iter().map(|d| d.abs() >= threshold).collect();
        // prefix[t] = number of significant ticks before t
        let mut prefix = vec![0usize; len + 1];
        for t in 0..len {
            prefix[t + 1] = prefix[t] + hit[t] as usize;
        }
        for t1 in 0..len {
            for t2 in t1..len {
                let all_hit = prefix[t2 + 1] - prefix[t1] == t2 - t1 + 1;
                let left_closed = t1 == 0 || !hit[t1 - 1];
                let right_closed = t2 + 1 == len || !hit[t2 + 1];
                if all_hit && left_closed && right_closed && t2 - t1 + 1 >= persistence as usize {
                    let mut sum = 0.0;
                    for d in &delta[t1..=t2] {
                        sum += d;
                    }
                    let mean = sum / (t2 - t1 + 1) as f64;
                    let favorable = match p.polarity {
                        Polarity::FavorableHigh => mean > 0.0,
                        Polarity::FavorableLow => mean < 0.0,
                    };
                    out.push(EffectRecord {
                        instance: p.instance.clone(),
                        var: p.var.clone(),
                        start_tick: t1 as u32,
                        end_tick: t2 as u32,
                        mean_delta: mean,
                        favorable,
                    });
                }
            }
        }
    }
    out
}

/// Minkowski path weight.
pub fn path_weight(weights: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        weights.iter().cloned().fold(0.0, f64::max)
    } else {
        weights.iter().map(|w| w.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Pathfinder links by exhaustive enumeration of every simple path of at
/// most `q` links: `(i, j)` survives iff no such path weighs less than
/// `d[i][j]`. Simple paths suffice because revisiting a node never lowers
/// a Minkowski weight.
pub fn oracle_pfnet(d: &[Vec<f64>], q: usize, r: f64) -> BTreeSet<(usize, usize)> {
    let n = d.len();
    let tol = if r.is_infinite() { 0.0 } else { 1e-9 };
    let mut links = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best = f64::INFINITY;
            let mut stack = vec![(vec![i], Vec::<f64>::new())];
            while let Some((path, ws)) = stack.pop() {
                let last = *path.last().unwrap();
                if last == j {
                    if ws.len() >= 2 {
                        best = best.min(path_weight(&ws, r));
                    }
                    continue;
                }
                if ws.len() == q {
                    continue;
                }
                for next in 0..n {
                    if !path.contains(&next) {
                        let mut p2 = path.clone();
                        p2.push(next);
                        let mut w2 = ws.clone();
                        w2.push(d[last][next]);
                        stack.push((p2, w2));
                    }
                }
            }
            if d[i][j] <= best + tol {
                links.insert((i, j));
            }
        }
    }
    links
}

/// Union of the edges of every minimum spanning tree, by enumerating every
/// `(n - 1)`-edge subset of the complete graph.
pub fn oracle_mst_union(d: &[Vec<f64>]) -> BTreeSet<(usize, usize)> {
    let n = d.len();
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    assert!(edges.len() < 32, "subset enumeration is for small graphs");
    let mut trees: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let picked: Vec<(usize, usize)> = (0..edges.len()).filter(|k| mask & (1 << k) != 0).map(|k| edges[k]).collect();
        // n - 1 edges over n nodes form a spanning tree iff they reach every node
        let mut reached = BTreeSet::from([0]);
        loop {
            let before = reached.len();
            for &(a, b) in &picked {
                if reached.contains(&a) || reached.contains(&b) {
                    reached.insert(a);
                    reached.insert(b);
                }
            }
            if reached.len() == before {
                break;
            }
        }
        if reached.len() == n {
            trees.push((picked.iter().map(|&(a, b)| d[a][b]).sum(), picked));
        }
    }
    let best = trees.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    trees.into_iter().filter(|(w, _)| (w - best).abs() <= 1e-9).flat_map(|(_, t)| t).collect()
}

/// Betweenness by enumerating every simple path between every unordered
/// pair and keeping the shortest ones.
pub fn oracle_betweenness(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<f64> {
    let adj = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in (s + 1)..n {
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if last == t {
                    paths.push(path);
                    continue;
                }
                for next in 0..n {
                    if adj(last, next) && !path.contains(&next) {
                        let mut p = path.clone();
                        p.push(next);
                        stack.push(p);
                    }
                }
            }
            let Some(shortest) = paths.iter().map(Vec::len).min() else { continue };
            let geodesics: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == shortest).collect();
            let total = geodesics.len() as f64;
            for v in 0..n {
                if v != s && v != t {
                    let through = geodesics.iter().filter(|p| p[1..p.len() - 1].contains(&v)).count() as f64;
                    bc[v] += through / total;
                }
            }
        }
    }
    bc
}

/// Closed-form least squares: slope, intercept, R² and t for the slope.
pub fn oracle_ols(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    let r2 = r * r;
    let t = r * ((n - 2.0) / (1.0 - r2)).sqrt();
    (slope, intercept, r2, t)
}

/// A `wargamer serve` child process; killed on drop.
pub struct ServerProcess {
    pub child: std::process::Child,
    pub url: String,
}

impl ServerProcess {
    pub fn start(data_dir: &Path) -> Self {
        use std::io::BufRead;
        let mut child = wargamer()
            .args(["serve", "--listen", "127.0.0.1:0", "--workers", "2", "--data-dir"])
            .arg(data_dir)
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::null())
            .spawn()
            .expect("spawn server");
        let stdout = child.stdout.take().unwrap();
        let mut line = String::new();
        std::io::BufReader::new(stdout).read_line(&mut line).expect("read announce line");
        let url = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected line {line:?}")).to_string();
        Self { child, url }
    }

    /// SIGKILL: no graceful shutdown, no flushing.
    pub fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
