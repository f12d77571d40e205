//! PMESII component templates, their instantiation, and composition into a
//! coupled two-tier model graph.
//!
//! Every component is a discrete-time affine block with saturation:
//!
//! ```text
//! x[t+1] = clamp_[0,100](A·x[t] + B·u[t] + c + noise)
//! y[t]   = C·x[t]
//! ```
//!
//! Inputs arriving at the same port from several couplings are summed; an
//! input port nobody drives reads 0.

use crate::findings::{Finding, FindingKind, ValidationReport};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

pub const LEVEL_MIN: f64 = 0.0;
pub const LEVEL_MAX: f64 = 100.0;
pub const SCHEMA_VERSION: u32 = 1;
const WEIGHT_TOLERANCE: f64 = 1e-9;

pub fn clamp_level(v: f64) -> f64 {
    v.clamp(LEVEL_MIN, LEVEL_MAX)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("instance `{instance}`: initial value {value} of state {index} is outside [0, 100]")]
    InitialOutOfRange { instance: String, index: usize, value: f64 },
    #[error("instance `{instance}`: bad override: {detail}")]
    BadOverride { instance: String, detail: String },
    #[error("duplicate instance id `{0}`")]
    DuplicateInstance(String),
    #[error("duplicate hypothesis name `{0}`")]
    DuplicateHypothesis(String),
    #[error("no aggregation rule for national variable `{0}`")]
    MissingRule(String),
    #[error("frame has no value for `{instance}.{var}`")]
    MissingValue { instance: String, var: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    FavorableHigh,
    FavorableLow,
}

/// A named level in `[0, 100]`. The value is clamped on every write and the
/// polarity cannot change once the variable exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LevelVarRepr")]
pub struct LevelVar {
    name: String,
    value: f64,
    polarity: Polarity,
}

#[derive(Deserialize)]
struct LevelVarRepr {
    name: String,
    value: f64,
    polarity: Polarity,
}

impl From<LevelVarRepr> for LevelVar {
    fn from(r: LevelVarRepr) -> Self {
        LevelVar::new(r.name, r.value, r.polarity)
    }
}

impl LevelVar {
    pub fn new(name: impl Into<String>, value: f64, polarity: Polarity) -> Self {
        Self { name: name.into(), value: clamp_level(value), polarity }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn set_value(&mut self, v: f64) {
        self.value = clamp_level(v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Political,
    Military,
    Economic,
    Social,
    Information,
    Infrastructure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Province,
    National,
}

/// Affine block parameters: `state` is A (k×k), `input` is B (k×m), `bias`
/// is c (k), `output` is C (p×k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    pub state: Vec<Vec<f64>>,
    pub input: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub output: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTemplate {
    pub id: String,
    pub kind: ComponentKind,
    pub state_vars: Vec<LevelVar>,
    pub input_ports: Vec<String>,
    pub output_ports: Vec<String>,
    pub dynamics: Dynamics,
    pub noise_std: Vec<f64>,
}

/// Sparse override into a template's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "param", rename_all = "kebab-case")]
pub enum ParamOverride {
    State { row: usize, col: usize, value: f64 },
    Input { row: usize, col: usize, value: f64 },
    Bias { index: usize, value: f64 },
    Noise { index: usize, value: f64 },
    Initial { index: usize, value: f64 },
}

/// A template tailored to one region/tier. Carries its merged parameters so
/// a graph is self-contained once composed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentInstance {
    pub id: String,
    pub template: String,
    pub region: String,
    pub tier: Tier,
    pub kind: ComponentKind,
    pub state_vars: Vec<LevelVar>,
    pub input_ports: Vec<String>,
    pub output_ports: Vec<String>,
    pub dynamics: Dynamics,
    pub noise_std: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<ParamOverride>,
}

impl ComponentInstance {
    pub fn state_index(&self, var: &str) -> Option<usize> {
        self.state_vars.iter().position(|v| v.name() == var)
    }

    pub fn input_index(&self, port: &str) -> Option<usize> {
        self.input_ports.iter().position(|p| p == port)
    }

    pub fn output_index(&self, port: &str) -> Option<usize> {
        self.output_ports.iter().position(|p| p == port)
    }
}

fn set_matrix_entry(
    m: &mut [Vec<f64>],
    row: usize,
    col: usize,
    rows: usize,
    cols: usize,
    value: f64,
    what: &str,
) -> Result<(), String> {
    if row >= rows || col >= cols {
        return Err(format!("{what}[{row}][{col}] outside {rows}x{cols}"));
    }
    match m.get_mut(row).and_then(|r| r.get_mut(col)) {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(format!("{what}[{row}][{col}] missing in template matrix")),
    }
}

fn set_vector_entry(v: &mut [f64], index: usize, len: usize, value: f64, what: &str) -> Result<(), String> {
    if index >= len {
        return Err(format!("{what}[{index}] outside length {len}"));
    }
    match v.get_mut(index) {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(format!("{what}[{index}] missing in template vector")),
    }
}

/// Tailor `template` into an instance. The template itself is never touched.
pub fn instantiate_template(
    template: &ComponentTemplate,
    id: impl Into<String>,
    overrides: &[ParamOverride],
    region: impl Into<String>,
    tier: Tier,
) -> Result<ComponentInstance, ModelError> {
    let id = id.into();
    let k = template.state_vars.len();
    let m = template.input_ports.len();
    let mut dynamics = template.dynamics.clone();
    let mut noise_std = template.noise_std.clone();
    let mut state_vars = template.state_vars.clone();
    let bad = |detail: String| ModelError::BadOverride { instance: id.clone(), detail };

    for ov in overrides {
        match *ov {
            ParamOverride::State { row, col, value } => {
                set_matrix_entry(&mut dynamics.state, row, col, k, k, value, "state").map_err(bad)?
            }
            ParamOverride::Input { row, col, value } => {
                set_matrix_entry(&mut dynamics.input, row, col, k, m, value, "input").map_err(bad)?
            }
            ParamOverride::Bias { index, value } => {
                set_vector_entry(&mut dynamics.bias, index, k, value, "bias").map_err(bad)?
            }
            ParamOverride::Noise { index, value } => {
                if !(value >= 0.0) {
                    return Err(bad(format!("noise[{index}] = {value} must be >= 0")));
                }
                set_vector_entry(&mut noise_std, index, k, value, "noise").map_err(bad)?
            }
            ParamOverride::Initial { index, value } => {
                if index >= k {
                    return Err(bad(format!("initial[{index}] outside length {k}")));
                }
                if !(LEVEL_MIN..=LEVEL_MAX).contains(&value) {
                    return Err(ModelError::InitialOutOfRange { instance: id.clone(), index, value });
                }
                state_vars[index].set_value(value);
            }
        }
    }

    Ok(ComponentInstance {
        id,
        template: template.id.clone(),
        region: region.into(),
        tier,
        kind: template.kind,
        state_vars,
        input_ports: template.input_ports.clone(),
        output_ports: template.output_ports.clone(),
        dynamics,
        noise_std,
        overrides: overrides.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortRef {
    pub instance: String,
    pub port: String,
}

impl PortRef {
    pub fn new(instance: impl Into<String>, port: impl Into<String>) -> Self {
        Self { instance: instance.into(), port: port.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub from: PortRef,
    pub to: PortRef,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationSource {
    pub instance: String,
    pub var: String,
    pub weight: f64,
}

/// National variable derived as a weighted sum of province variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationRule {
    pub national_var: String,
    pub sources: Vec<AggregationSource>,
}

/// Address of one state variable of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarKey {
    pub instance: String,
    pub var: String,
}

impl VarKey {
    pub fn new(instance: impl Into<String>, var: impl Into<String>) -> Self {
        Self { instance: instance.into(), var: var.into() }
    }
}

/// State values at one tick.
pub type Frame = BTreeMap<VarKey, f64>;

/// Immutable once composed; share freely between concurrent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGraph {
    pub id: String,
    pub instances: Vec<ComponentInstance>,
    pub couplings: Vec<Coupling>,
    pub aggregations: Vec<AggregationRule>,
}

impl ModelGraph {
    pub fn instance(&self, id: &str) -> Option<&ComponentInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn rule(&self, national_var: &str) -> Option<&AggregationRule> {
        self.aggregations.iter().find(|r| r.national_var == national_var)
    }

    /// True when `port` names an input port of `instance`.
    pub fn has_input(&self, port: &PortRef) -> bool {
        self.instance(&port.instance).is_some_and(|i| i.input_index(&port.port).is_some())
    }

    pub fn var_count(&self) -> usize {
        self.instances.iter().map(|i| i.state_vars.len()).sum()
    }
}

pub fn compose(
    id: impl Into<String>,
    instances: Vec<ComponentInstance>,
    couplings: Vec<Coupling>,
    aggregations: Vec<AggregationRule>,
) -> Result<ModelGraph, ModelError> {
    let mut seen = HashSet::new();
    for inst in &instances {
        if !seen.insert(inst.id.as_str()) {
            return Err(ModelError::DuplicateInstance(inst.id.clone()));
        }
    }
    Ok(ModelGraph { id: id.into(), instances, couplings, aggregations })
}

fn check_matrix(
    report: &mut ValidationReport,
    subject: &str,
    what: &str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let shape: Vec<usize> = m.iter().map(Vec::len).collect();
        report.push(Finding::error(
            FindingKind::DimensionMismatch,
            subject,
            format!("{what} must be {rows}x{cols}, got {} rows with lengths {shape:?}", m.len()),
        ));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        report.push(Finding::error(FindingKind::NonFiniteParameter, subject, format!("{what} has a non-finite entry")));
    }
}

fn check_vector(report: &mut ValidationReport, subject: &str, what: &str, v: &[f64], len: usize) {
    if v.len() != len {
        report.push(Finding::error(
            FindingKind::DimensionMismatch,
            subject,
            format!("{what} must have length {len}, got {}", v.len()),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        report.push(Finding::error(FindingKind::NonFiniteParameter, subject, format!("{what} has a non-finite entry")));
    }
}

/// Structural checks. A graph with no error findings simulates without
/// structural failure.
pub fn validate_graph(graph: &ModelGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = HashSet::new();

    for inst in &graph.instances {
        let s = inst.id.as_str();
        if !ids.insert(s) {
            report.push(Finding::error(FindingKind::DuplicateId, s, "duplicate instance id"));
        }
        let k = inst.state_vars.len();
        let m = inst.input_ports.len();
        let p = inst.output_ports.len();
        check_matrix(&mut report, s, "state matrix", &inst.dynamics.state, k, k);
        check_matrix(&mut report, s, "input matrix", &inst.dynamics.input, k, m);
        check_vector(&mut report, s, "bias", &inst.dynamics.bias, k);
        check_matrix(&mut report, s, "output matrix", &inst.dynamics.output, p, k);
        check_vector(&mut report, s, "noise", &inst.noise_std, k);
        if inst.noise_std.iter().any(|n| *n < 0.0) {
            report.push(Finding::error(FindingKind::NegativeNoise, s, "noise standard deviation must be >= 0"));
        }
        for var in &inst.state_vars {
            if !(LEVEL_MIN..=LEVEL_MAX).contains(&var.value()) {
                report.push(Finding::error(
                    FindingKind::InitialOutOfRange,
                    s,
                    format!("initial value of `{}` outside [0, 100]", var.name()),
                ));
            }
        }
    }

    let mut bound: HashSet<(&str, &str)> = HashSet::new();
    for (n, c) in graph.couplings.iter().enumerate() {
        let subject = format!("coupling#{n}");
        let from_ok = graph.instance(&c.from.instance).is_some_and(|i| i.output_index(&c.from.port).is_some());
        let to_ok = graph.has_input(&c.to);
        if !from_ok {
            report.push(Finding::error(
                FindingKind::DanglingCoupling,
                &subject,
                format!("source {}.{} is not an output port", c.from.instance, c.from.port),
            ));
        }
        if !to_ok {
            report.push(Finding::error(
                FindingKind::DanglingCoupling,
                &subject,
                format!("target {}.{} is not an input port", c.to.instance, c.to.port),
            ));
        }
        if !c.gain.is_finite() {
            report.push(Finding::error(FindingKind::NonFiniteParameter, &subject, "gain is not finite"));
        }
        bound.insert((c.to.instance.as_str(), c.to.port.as_str()));
    }

    let mut rules = HashSet::new();
    for rule in &graph.aggregations {
        let s = rule.national_var.as_str();
        if !rules.insert(s) {
            report.push(Finding::error(FindingKind::DuplicateAggregation, s, "duplicate aggregation rule"));
        }
        let sum: f64 = rule.sources.iter().map(|src| src.weight).sum();
        if rule.sources.is_empty() || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            report.push(Finding::error(
                FindingKind::AggregationWeights,
                s,
                format!("weights sum to {sum}, expected 1"),
            ));
        }
        if rule.sources.iter().any(|src| !(src.weight >= 0.0) || !src.weight.is_finite()) {
            report.push(Finding::error(FindingKind::AggregationWeights, s, "weights must be finite and >= 0"));
        }
        for src in &rule.sources {
            let found = graph.instance(&src.instance).is_some_and(|i| i.state_index(&src.var).is_some());
            if !found {
                report.push(Finding::error(
                    FindingKind::AggregationSource,
                    s,
                    format!("unknown source {}.{}", src.instance, src.var),
                ));
            }
        }
    }

    for inst in &graph.instances {
        for port in &inst.input_ports {
            if !bound.contains(&(inst.id.as_str(), port.as_str())) {
                report.push(Finding::warning(
                    FindingKind::UnboundInput,
                    &inst.id,
                    format!("input `{port}` has no coupling and reads 0 unless an action drives it"),
                ));
            }
        }
    }
    report
}

/// Weighted national value from province values in `frame`.
pub fn aggregate(graph: &ModelGraph, frame: &Frame, national_var: &str) -> Result<f64, ModelError> {
    let rule = graph.rule(national_var).ok_or_else(|| ModelError::MissingRule(national_var.to_string()))?;
    let mut total = 0.0;
    for src in &rule.sources {
        let key = VarKey::new(src.instance.clone(), src.var.clone());
        let v = frame
            .get(&key)
            .ok_or_else(|| ModelError::MissingValue { instance: src.instance.clone(), var: src.var.clone() })?;
        total += src.weight * v;
    }
    Ok(total)
}

/// One competing view of the situation, modeled as its own graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationHypothesis {
    pub name: String,
    pub provenance: String,
    pub graph: ModelGraph,
}

/// Instance as written in a scenario file: template reference plus overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub id: String,
    pub template: String,
    pub region: String,
    pub tier: Tier,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<ParamOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub id: String,
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default)]
    pub aggregations: Vec<AggregationRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub name: String,
    #[serde(default)]
    pub provenance: String,
    pub graph: GraphSpec,
}

/// Effect significance convention: a deviation of at least `threshold`
/// level-units held for at least `persistence` consecutive ticks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub threshold: f64,
    pub persistence: u32,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self { threshold: 5.0, persistence: 4 }
    }
}

/// Scenario document: template library plus one graph per hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub detection: DetectionParams,
    pub templates: Vec<ComponentTemplate>,
    pub hypotheses: Vec<HypothesisSpec>,
}

impl Scenario {
    pub fn empty(id: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            description: String::new(),
            detection: DetectionParams::default(),
            templates: Vec::new(),
            hypotheses: Vec::new(),
        }
    }

    pub fn template(&self, id: &str) -> Option<&ComponentTemplate> {
        self.templates.iter().find(|t| t.id == id)
    }

    pub fn instantiate(&self, spec: &InstanceSpec) -> Result<ComponentInstance, ModelError> {
        let template = self.template(&spec.template).ok_or_else(|| ModelError::UnknownTemplate(spec.template.clone()))?;
        instantiate_template(template, spec.id.clone(), &spec.overrides, spec.region.clone(), spec.tier)
    }

    pub fn build_graph(&self, spec: &GraphSpec) -> Result<ModelGraph, ModelError> {
        let instances = spec.instances.iter().map(|i| self.instantiate(i)).collect::<Result<Vec<_>, _>>()?;
        compose(spec.id.clone(), instances, spec.couplings.clone(), spec.aggregations.clone())
    }

    /// Resolve every hypothesis into a composed graph.
    pub fn hypotheses(&self) -> Result<Vec<SituationHypothesis>, ModelError> {
        let mut names = HashSet::new();
        self.hypotheses
            .iter()
            .map(|h| {
                if !names.insert(h.name.as_str()) {
                    return Err(ModelError::DuplicateHypothesis(h.name.clone()));
                }
                Ok(SituationHypothesis {
                    name: h.name.clone(),
                    provenance: h.provenance.clone(),
                    graph: self.build_graph(&h.graph)?,
                })
            })
            .collect()
    }

    pub fn hypothesis(&self, name: &str) -> Result<Option<SituationHypothesis>, ModelError> {
        Ok(self.hypotheses()?.into_iter().find(|h| h.name == name))
    }

    pub fn to_canonical_json(&self) -> String {
        crate::canonical_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
