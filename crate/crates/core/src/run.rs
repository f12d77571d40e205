//! Run-result documents: a plan run and its baseline under one hypothesis,
//! the detected effects, and provenance hashes of every input.

use crate::model::{DetectionParams, ModelError, Scenario, SCHEMA_VERSION};
use crate::plan::Plan;
use crate::sim::{baseline, detect_effects, simulate, EffectRecord, RunConfig, SimError, Trajectory};
use crate::{canonical_json, content_hash};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scenario has no hypothesis named `{0}`")]
    UnknownHypothesis(String),
    #[error("scenario defines no hypotheses")]
    NoHypotheses,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub scenario_id: String,
    pub hypothesis: String,
    pub plan_id: String,
    pub config: RunConfig,
    pub detection: DetectionParams,
    pub scenario_hash: String,
    pub graph_hash: String,
    pub plan_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub effect_count: usize,
    pub effects: Vec<EffectRecord>,
    pub baseline: Trajectory,
    pub trajectory: Trajectory,
}

impl RunResult {
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// Simulate `plan` and its baseline under the named hypothesis (the first
/// one when `hypothesis` is `None`). `detection` defaults to the scenario's.
pub fn execute_run(
    scenario: &Scenario,
    hypothesis: Option<&str>,
    plan: &Plan,
    cfg: RunConfig,
    detection: Option<DetectionParams>,
) -> Result<RunResult, RunError> {
    let hypotheses = scenario.hypotheses()?;
    let chosen = match hypothesis {
        Some(name) => hypotheses.iter().find(|h| h.name == name).ok_or_else(|| RunError::UnknownHypothesis(name.into()))?,
        None => hypotheses.first().ok_or(RunError::NoHypotheses)?,
    };
    let detection = detection.unwrap_or(scenario.detection);
    let mut plan = plan.clone();
    plan.canonicalize();
    let trajectory = simulate(&chosen.graph, &plan, &cfg)?;
    let base = baseline(&chosen.graph, &cfg)?;
    let effects = detect_effects(&base, &trajectory, detection.threshold, detection.persistence)?;
    Ok(RunResult {
        schema_version: SCHEMA_VERSION,
        metadata: RunMetadata {
            scenario_id: scenario.id.clone(),
            hypothesis: chosen.name.clone(),
            plan_id: plan.id.clone(),
            config: cfg,
            detection,
            scenario_hash: content_hash(scenario),
            graph_hash: content_hash(&chosen.graph),
            plan_hash: content_hash(&plan),
        },
        effect_count: effects.len(),
        effects,
        baseline: base,
        trajectory,
    })
}
