//! Deterministic discrete-time execution of a model graph under a plan,
//! effect detection against a baseline, and batch sweeps.
//!
//! Evaluation is synchronous: at tick `t` every block emits `y = C·x` from
//! its current state, every input port sums its coupled outputs plus the
//! intensities of actions active at `t`, then all states advance together.

use crate::findings::ValidationReport;
use crate::model::{clamp_level, validate_graph, Frame, ModelGraph, Polarity, SituationHypothesis, VarKey};
use crate::plan::{validate_plan, Plan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("horizon must be >= 1 tick")]
    ZeroHorizon,
    #[error("inputs failed validation ({} error findings)", .0.errors().count())]
    Invalid(ValidationReport),
    #[error("trajectory shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("threshold must be > 0 and persistence >= 1")]
    BadDetectionParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon_ticks: u32,
    pub seed: u64,
    pub noise_enabled: bool,
}

impl RunConfig {
    pub fn new(horizon_ticks: u32, seed: u64, noise_enabled: bool) -> Self {
        Self { horizon_ticks, seed, noise_enabled }
    }
}

mod fixed6 {
    use serde::de::Deserializer;
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            // `+ 0.0` folds -0.0 into 0.0
            let raw = RawValue::from_string(format!("{:.6}", v + 0.0)).map_err(serde::ser::Error::custom)?;
            seq.serialize_element(&raw)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(d)
    }
}

/// Values of one state variable for ticks `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub instance: String,
    pub var: String,
    pub polarity: Polarity,
    #[serde(with = "fixed6")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NationalSeries {
    pub var: String,
    #[serde(with = "fixed6")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub horizon_ticks: u32,
    pub series: Vec<Series>,
    pub national: Vec<NationalSeries>,
}

impl Trajectory {
    pub fn series(&self, instance: &str, var: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.instance == instance && s.var == var)
    }

    pub fn national(&self, var: &str) -> Option<&NationalSeries> {
        self.national.iter().find(|s| s.var == var)
    }

    /// State values at `tick`, or `None` past the horizon.
    pub fn frame(&self, tick: u32) -> Option<Frame> {
        if tick > self.horizon_ticks {
            return None;
        }
        Some(
            self.series
                .iter()
                .map(|s| (VarKey::new(s.instance.clone(), s.var.clone()), s.values[tick as usize]))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.horizon_ticks as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty() && self.national.is_empty()
    }
}

fn stream_id(instance: &str, var: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in instance.bytes().chain(std::iter::once(0xff)).chain(var.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Gaussian noise source keyed by `(seed, instance, var, tick)` so plan and
/// baseline runs see the same realization.
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, instance: &str, var: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id(instance, var));
        Self { rng }
    }

    pub fn standard_normal(&mut self, tick: u32) -> f64 {
        self.rng.set_word_pos(tick as u128 * 64);
        self.rng.sample(StandardNormal)
    }
}

struct Compiled<'g> {
    graph: &'g ModelGraph,
    state_offset: Vec<usize>,
    input_offset: Vec<usize>,
    n_states: usize,
    n_inputs: usize,
    couplings: Vec<(usize, usize, usize, f64)>,
    aggregations: Vec<Vec<(usize, f64)>>,
}

impl<'g> Compiled<'g> {
    fn new(graph: &'g ModelGraph) -> Self {
        let mut state_offset = Vec::with_capacity(graph.instances.len());
        let mut input_offset = Vec::with_capacity(graph.instances.len());
        let (mut ns, mut ni) = (0, 0);
        let mut pos = HashMap::new();
        for (n, inst) in graph.instances.iter().enumerate() {
            pos.insert(inst.id.as_str(), n);
            state_offset.push(ns);
            input_offset.push(ni);
            ns += inst.state_vars.len();
            ni += inst.input_ports.len();
        }
        let couplings = graph
            .couplings
            .iter()
            .map(|c| {
                let from = pos[c.from.instance.as_str()];
                let out = graph.instances[from].output_index(&c.from.port).expect("validated");
                let to = pos[c.to.instance.as_str()];
                let input = input_offset[to] + graph.instances[to].input_index(&c.to.port).expect("validated");
                (from, out, input, c.gain)
            })
            .collect();
        let aggregations = graph
            .aggregations
            .iter()
            .map(|r| {
                r.sources
                    .iter()
                    .map(|s| {
                        let n = pos[s.instance.as_str()];
                        (state_offset[n] + graph.instances[n].state_index(&s.var).expect("validated"), s.weight)
                    })
                    .collect()
            })
            .collect();
        Self { graph, state_offset, input_offset, n_states: ns, n_inputs: ni, couplings, aggregations }
    }

    fn input_slot(&self, instance: &str, port: &str) -> usize {
        let (n, inst) = self.graph.instances.iter().enumerate().find(|(_, i)| i.id == instance).expect("validated");
        self.input_offset[n] + inst.input_index(port).expect("validated")
    }
}

/// Check both inputs; `Err` carries every finding when any is an error.
pub fn check_inputs(graph: &ModelGraph, plan: &Plan) -> Result<ValidationReport, SimError> {
    let mut report = validate_graph(graph);
    report.extend(validate_plan(plan, graph));
    if report.has_errors() {
        Err(SimError::Invalid(report))
    } else {
        Ok(report)
    }
}

/// Run `plan` against `graph`. Equal inputs give bit-identical output.
pub fn simulate(graph: &ModelGraph, plan: &Plan, cfg: &RunConfig) -> Result<Trajectory, SimError> {
    if cfg.horizon_ticks == 0 {
        return Err(SimError::ZeroHorizon);
    }
    check_inputs(graph, plan)?;
    Ok(run_validated(graph, plan, cfg))
}

fn run_validated(graph: &ModelGraph, plan: &Plan, cfg: &RunConfig) -> Trajectory {
    let c = Compiled::new(graph);
    let horizon = cfg.horizon_ticks as usize;

    let mut x: Vec<f64> = graph.instances.iter().flat_map(|i| i.state_vars.iter().map(|v| v.value())).collect();
    let mut next = vec![0.0; c.n_states];
    let mut u = vec![0.0; c.n_inputs];
    let mut outputs: Vec<Vec<f64>> = graph.instances.iter().map(|i| vec![0.0; i.output_ports.len()]).collect();
    let mut history: Vec<Vec<f64>> = (0..c.n_states).map(|_| Vec::with_capacity(horizon + 1)).collect();
    for (h, v) in history.iter_mut().zip(&x) {
        h.push(*v);
    }

    let injections: Vec<(usize, u64, u64, f64)> = plan
        .actions
        .iter()
        .map(|a| (c.input_slot(&a.target.instance, &a.target.port), a.start_tick as u64, a.end_tick(), a.intensity))
        .collect();

    let mut noise: Vec<Option<(NoiseStream, f64)>> = graph
        .instances
        .iter()
        .flat_map(|inst| {
            inst.state_vars.iter().zip(&inst.noise_std).map(|(v, sd)| {
                (cfg.noise_enabled && *sd > 0.0).then(|| (NoiseStream::new(cfg.seed, &inst.id, v.name()), *sd))
            })
        })
        .collect();

    for t in 0..horizon {
        for (n, inst) in graph.instances.iter().enumerate() {
            let xs = &x[c.state_offset[n]..c.state_offset[n] + inst.state_vars.len()];
            for (y, row) in outputs[n].iter_mut().zip(&inst.dynamics.output) {
                *y = row.iter().zip(xs).map(|(a, b)| a * b).sum();
            }
        }
        u.iter_mut().for_each(|v| *v = 0.0);
        for &(from, out, slot, gain) in &c.couplings {
            u[slot] += gain * outputs[from][out];
        }
        let tick = t as u64;
        for &(slot, start, end, intensity) in &injections {
            if start <= tick && tick < end {
                u[slot] += intensity;
            }
        }
        for (n, inst) in graph.instances.iter().enumerate() {
            let so = c.state_offset[n];
            let k = inst.state_vars.len();
            let xs = &x[so..so + k];
            let us = &u[c.input_offset[n]..c.input_offset[n] + inst.input_ports.len()];
            for i in 0..k {
                let mut v = inst.dynamics.bias[i];
                v += inst.dynamics.state[i].iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                v += inst.dynamics.input[i].iter().zip(us).map(|(a, b)| a * b).sum::<f64>();
                if let Some((stream, sd)) = &mut noise[so + i] {
                    v += *sd * stream.standard_normal(t as u32);
                }
                next[so + i] = clamp_level(v);
            }
        }
        std::mem::swap(&mut x, &mut next);
        for (h, v) in history.iter_mut().zip(&x) {
            h.push(*v);
        }
    }

    let national = graph
        .aggregations
        .iter()
        .zip(&c.aggregations)
        .map(|(rule, sources)| NationalSeries {
            var: rule.national_var.clone(),
            values: (0..=horizon)
                .map(|t| {
                    let mut total = 0.0;
                    for &(slot, w) in sources {
                        total += w * history[slot][t];
                    }
                    total
                })
                .collect(),
        })
        .collect();

    let mut history = history.into_iter();
    let series = graph
        .instances
        .iter()
        .flat_map(|inst| inst.state_vars.iter().map(move |v| (inst, v)))
        .map(|(inst, v)| Series {
            instance: inst.id.clone(),
            var: v.name().to_string(),
            polarity: v.polarity(),
            values: history.next().expect("one history per state"),
        })
        .collect();

    Trajectory { horizon_ticks: cfg.horizon_ticks, series, national }
}

/// The no-plan future; identical to `simulate` with an empty plan.
pub fn baseline(graph: &ModelGraph, cfg: &RunConfig) -> Result<Trajectory, SimError> {
    simulate(graph, &Plan::empty(format!("{}-baseline", graph.id), cfg.horizon_ticks), cfg)
}

/// A sustained deviation of a plan run from its baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRecord {
    pub instance: String,
    pub var: String,
    /// Inclusive first tick of the window.
    pub start_tick: u32,
    /// Inclusive last tick of the window.
    pub end_tick: u32,
    pub mean_delta: f64,
    pub favorable: bool,
}

impl EffectRecord {
    pub fn ticks(&self) -> u32 {
        self.end_tick - self.start_tick + 1
    }
}

fn same_shape(a: &Trajectory, b: &Trajectory) -> Result<(), SimError> {
    if a.horizon_ticks != b.horizon_ticks {
        return Err(SimError::ShapeMismatch(format!("horizons {} vs {}", a.horizon_ticks, b.horizon_ticks)));
    }
    if a.series.len() != b.series.len() {
        return Err(SimError::ShapeMismatch(format!("{} vs {} series", a.series.len(), b.series.len())));
    }
    for (x, y) in a.series.iter().zip(&b.series) {
        if x.instance != y.instance || x.var != y.var || x.values.len() != y.values.len() {
            return Err(SimError::ShapeMismatch(format!("{}.{} vs {}.{}", x.instance, x.var, y.instance, y.var)));
        }
    }
    Ok(())
}

/// Maximal runs of ticks where `|plan - baseline| >= threshold`, keeping
/// runs of at least `persistence` ticks.
pub fn detect_effects(
    baseline: &Trajectory,
    plan: &Trajectory,
    threshold: f64,
    persistence: u32,
) -> Result<Vec<EffectRecord>, SimError> {
    if !(threshold > 0.0) || persistence < 1 {
        return Err(SimError::BadDetectionParams);
    }
    same_shape(baseline, plan)?;
    let mut out = Vec::new();
    for (b, p) in baseline.series.iter().zip(&plan.series) {
        let mut run_start: Option<usize> = None;
        let deltas: Vec<f64> = p.values.iter().zip(&b.values).map(|(p, b)| p - b).collect();
        let close = |start: usize, end_excl: usize, out: &mut Vec<EffectRecord>| {
            let len = end_excl - start;
            if len >= persistence as usize {
                let mean = deltas[start..end_excl].iter().sum::<f64>() / len as f64;
                out.push(EffectRecord {
                    instance: p.instance.clone(),
                    var: p.var.clone(),
                    start_tick: start as u32,
                    end_tick: (end_excl - 1) as u32,
                    mean_delta: mean,
                    favorable: match p.polarity {
                        Polarity::FavorableHigh => mean > 0.0,
                        Polarity::FavorableLow => mean < 0.0,
                    },
                });
            }
        };
        for (t, d) in deltas.iter().enumerate() {
            let significant = d.abs() >= threshold;
            match (significant, run_start) {
                (true, None) => run_start = Some(t),
                (false, Some(s)) => {
                    close(s, t, &mut out);
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            close(s, deltas.len(), &mut out);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CellOutcome {
    Done { trajectory: Trajectory },
    Failed { reason: String, findings: ValidationReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchCell {
    pub hypothesis: String,
    pub plan_id: String,
    pub cfg_index: usize,
    pub outcome: CellOutcome,
}

/// Results of a (hypothesis × plan × config) sweep in that nesting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub cells: Vec<BatchCell>,
}

impl BatchResult {
    pub fn get(&self, hypothesis: &str, plan_id: &str, cfg_index: usize) -> Option<&BatchCell> {
        self.cells.iter().find(|c| c.hypothesis == hypothesis && c.plan_id == plan_id && c.cfg_index == cfg_index)
    }
}

/// Every cell is an independent `simulate` call; cells run in parallel.
pub fn batch_simulate(hypotheses: &[SituationHypothesis], plans: &[Plan], cfgs: &[RunConfig]) -> BatchResult {
    let keys: Vec<(usize, usize, usize)> = (0..hypotheses.len())
        .flat_map(|h| (0..plans.len()).flat_map(move |p| (0..cfgs.len()).map(move |c| (h, p, c))))
        .collect();
    let cells = keys
        .into_par_iter()
        .map(|(h, p, c)| {
            let outcome = match simulate(&hypotheses[h].graph, &plans[p], &cfgs[c]) {
                Ok(trajectory) => CellOutcome::Done { trajectory },
                Err(SimError::Invalid(findings)) => CellOutcome::Failed { reason: "validation failed".into(), findings },
                Err(e) => CellOutcome::Failed { reason: e.to_string(), findings: ValidationReport::default() },
            };
            BatchCell { hypothesis: hypotheses[h].name.clone(), plan_id: plans[p].id.clone(), cfg_index: c, outcome }
        })
        .collect();
    BatchResult { cells }
}
