//! Course-of-action evaluation: desired effects, plan ranking, robustness
//! across competing situation hypotheses, and execution tracking.

use crate::findings::ValidationReport;
use crate::model::{DetectionParams, SituationHypothesis};
use crate::plan::{total_spend, Plan};
use crate::sim::{baseline, detect_effects, simulate, EffectRecord, RunConfig, SimError, Trajectory};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Default divergence at which execution tracking raises a flag.
pub const DEFAULT_TRACK_THRESHOLD: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoaError {
    #[error("target {0} not present in trajectory")]
    UnknownTarget(EffectTarget),
    #[error("effect `{id}` deadline {deadline} is beyond horizon {horizon}")]
    DeadlineBeyondHorizon { id: String, deadline: u32, horizon: u32 },
    #[error("observation at tick {tick} is beyond horizon {horizon}")]
    TickBeyondHorizon { tick: u32, horizon: u32 },
    #[error("scores were computed against different desired-effect sets")]
    MixedEffectSets,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A province-level state variable or a national aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "kebab-case")]
pub enum EffectTarget {
    Instance { instance: String, var: String },
    National { var: String },
}

impl fmt::Display for EffectTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectTarget::Instance { instance, var } => write!(f, "{instance}.{var}"),
            EffectTarget::National { var } => write!(f, "national.{var}"),
        }
    }
}

impl EffectTarget {
    pub fn resolve<'t>(&self, traj: &'t Trajectory) -> Option<&'t [f64]> {
        match self {
            EffectTarget::Instance { instance, var } => traj.series(instance, var).map(|s| s.values.as_slice()),
            EffectTarget::National { var } => traj.national(var).map(|s| s.values.as_slice()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesiredEffect {
    pub id: String,
    pub target: EffectTarget,
    pub direction: Direction,
    pub threshold_level: f64,
    pub deadline_tick: u32,
}

impl DesiredEffect {
    fn satisfied(&self, v: f64) -> bool {
        match self.direction {
            Direction::Increase => v >= self.threshold_level,
            Direction::Decrease => v <= self.threshold_level,
        }
    }
}

/// Desired-effect set as stored in an effects file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSet {
    pub schema_version: u32,
    pub id: String,
    pub effects: Vec<DesiredEffect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectOutcome {
    pub id: String,
    pub achieved: bool,
    /// Start of the satisfied run that holds through the deadline.
    pub first_achieved_tick: Option<u32>,
}

/// An effect is achieved when its target reaches the satisfied side by the
/// deadline and stays there through the deadline.
pub fn evaluate_coa(traj: &Trajectory, effects: &[DesiredEffect]) -> Result<Vec<EffectOutcome>, CoaError> {
    effects
        .iter()
        .map(|e| {
            let values = e.target.resolve(traj).ok_or_else(|| CoaError::UnknownTarget(e.target.clone()))?;
            if e.deadline_tick > traj.horizon_ticks {
                return Err(CoaError::DeadlineBeyondHorizon {
                    id: e.id.clone(),
                    deadline: e.deadline_tick,
                    horizon: traj.horizon_ticks,
                });
            }
            let window = &values[..=e.deadline_tick as usize];
            let first = match window.iter().rposition(|v| !e.satisfied(*v)) {
                None => Some(0),
                Some(last_bad) if last_bad < window.len() - 1 => Some(last_bad as u32 + 1),
                Some(_) => None,
            };
            Ok(EffectOutcome { id: e.id.clone(), achieved: first.is_some(), first_achieved_tick: first })
        })
        .collect()
}

/// Key identifying a desired-effect set, so scores from different sets are
/// never ranked together.
pub fn effect_set_key(effects: &[DesiredEffect]) -> String {
    crate::content_hash(&effects)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoaScore {
    pub plan_id: String,
    pub hypothesis: String,
    pub effect_set: String,
    pub achieved_count: usize,
    pub achieved_ids: BTreeSet<String>,
    pub unfavorable_effect_count: usize,
    pub total_spend: BTreeMap<String, f64>,
}

impl CoaScore {
    pub fn spend_sum(&self) -> f64 {
        self.total_spend.values().sum()
    }
}

/// Score one simulated plan against its baseline.
pub fn score_coa(
    plan: &Plan,
    hypothesis: &str,
    baseline: &Trajectory,
    run: &Trajectory,
    effects: &[DesiredEffect],
    detection: &DetectionParams,
) -> Result<CoaScore, CoaError> {
    let outcomes = evaluate_coa(run, effects)?;
    let found = detect_effects(baseline, run, detection.threshold, detection.persistence)?;
    let achieved_ids: BTreeSet<String> = outcomes.into_iter().filter(|o| o.achieved).map(|o| o.id).collect();
    Ok(CoaScore {
        plan_id: plan.id.clone(),
        hypothesis: hypothesis.to_string(),
        effect_set: effect_set_key(effects),
        achieved_count: achieved_ids.len(),
        achieved_ids,
        unfavorable_effect_count: found.iter().filter(|e: &&EffectRecord| !e.favorable).count(),
        total_spend: total_spend(plan),
    })
}

/// Ranking order: more achieved effects, then fewer unfavorable effects,
/// then lower spend, then plan id and hypothesis name.
pub fn coa_order(a: &CoaScore, b: &CoaScore) -> Ordering {
    b.achieved_count
        .cmp(&a.achieved_count)
        .then(a.unfavorable_effect_count.cmp(&b.unfavorable_effect_count))
        .then(a.spend_sum().total_cmp(&b.spend_sum()))
        .then_with(|| a.plan_id.cmp(&b.plan_id))
        .then_with(|| a.hypothesis.cmp(&b.hypothesis))
}

pub fn compare_coas(scores: &[CoaScore]) -> Result<Vec<CoaScore>, CoaError> {
    if let Some(first) = scores.first() {
        if scores.iter().any(|s| s.effect_set != first.effect_set) {
            return Err(CoaError::MixedEffectSets);
        }
    }
    let mut ranked = scores.to_vec();
    ranked.sort_by(coa_order);
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum HypothesisOutcome {
    Scored { score: CoaScore },
    Failed { reason: String, findings: ValidationReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub hypothesis: String,
    pub outcome: HypothesisOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub plan_id: String,
    pub per_hypothesis: Vec<HypothesisResult>,
    /// Minimum achieved count over hypotheses that could be scored.
    pub min_achieved: Option<usize>,
    pub worst_hypothesis: Option<String>,
}

pub fn robustness_from(plan_id: &str, per_hypothesis: Vec<HypothesisResult>) -> RobustnessReport {
    let worst = per_hypothesis
        .iter()
        .filter_map(|h| match &h.outcome {
            HypothesisOutcome::Scored { score } => Some((score.achieved_count, &h.hypothesis)),
            HypothesisOutcome::Failed { .. } => None,
        })
        .min_by_key(|(count, _)| *count);
    RobustnessReport {
        plan_id: plan_id.to_string(),
        min_achieved: worst.map(|w| w.0),
        worst_hypothesis: worst.map(|w| w.1.clone()),
        per_hypothesis,
    }
}

/// Simulate `plan` under every hypothesis and score it.
pub fn score_under(
    plan: &Plan,
    hypothesis: &SituationHypothesis,
    effects: &[DesiredEffect],
    cfg: &RunConfig,
    detection: &DetectionParams,
) -> HypothesisOutcome {
    let attempt = || -> Result<CoaScore, CoaError> {
        let run = simulate(&hypothesis.graph, plan, cfg)?;
        let base = baseline(&hypothesis.graph, cfg)?;
        score_coa(plan, &hypothesis.name, &base, &run, effects, detection)
    };
    match attempt() {
        Ok(score) => HypothesisOutcome::Scored { score },
        Err(CoaError::Sim(SimError::Invalid(findings))) => {
            HypothesisOutcome::Failed { reason: "validation failed".into(), findings }
        }
        Err(e) => HypothesisOutcome::Failed { reason: e.to_string(), findings: ValidationReport::default() },
    }
}

pub fn robustness(
    plan: &Plan,
    hypotheses: &[SituationHypothesis],
    effects: &[DesiredEffect],
    cfg: &RunConfig,
    detection: &DetectionParams,
) -> RobustnessReport {
    let per = hypotheses
        .iter()
        .map(|h| HypothesisResult { hypothesis: h.name.clone(), outcome: score_under(plan, h, effects, cfg, detection) })
        .collect();
    robustness_from(&plan.id, per)
}

/// A (plan, hypothesis) cell that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub plan_id: String,
    pub hypothesis: String,
    pub reason: String,
    pub findings: ValidationReport,
}

/// Ranked comparison of several plans against one effect set, with the
/// per-plan robustness summary across hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub effect_set: String,
    pub ranking: Vec<CoaScore>,
    pub failures: Vec<FailedCell>,
    pub robustness: Vec<RobustnessReport>,
}

impl Comparison {
    /// One row per (plan, hypothesis): scored rows in rank order, then
    /// failed cells in (plan, hypothesis) order with an empty rank.
    pub fn ranking_csv(&self) -> String {
        let mut out = String::from(
            "rank,plan_id,hypothesis,status,achieved_count,achieved_ids,unfavorable_effect_count,total_spend,reason\n",
        );
        for (i, s) in self.ranking.iter().enumerate() {
            let ids: Vec<&str> = s.achieved_ids.iter().map(String::as_str).collect();
            out.push_str(&format!(
                "{},{},{},scored,{},{},{},{:.6},\n",
                i + 1,
                s.plan_id,
                s.hypothesis,
                s.achieved_count,
                ids.join(";"),
                s.unfavorable_effect_count,
                s.spend_sum()
            ));
        }
        for f in &self.failures {
            let reason = f.reason.replace([',', '\n'], " ");
            out.push_str(&format!(",{},{},failed,,,,,{}\n", f.plan_id, f.hypothesis, reason));
        }
        out
    }

    pub fn robustness_csv(&self) -> String {
        let mut out = String::from("plan_id,min_achieved,worst_hypothesis,scored_hypotheses,failed_hypotheses\n");
        for r in &self.robustness {
            let failed = r.per_hypothesis.iter().filter(|h| matches!(h.outcome, HypothesisOutcome::Failed { .. })).count();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.plan_id,
                r.min_achieved.map(|m| m.to_string()).unwrap_or_default(),
                r.worst_hypothesis.clone().unwrap_or_default(),
                r.per_hypothesis.len() - failed,
                failed
            ));
        }
        out
    }
}

/// Score every plan under every hypothesis (cells in parallel), rank the
/// scored cells with [`compare_coas`], and summarize robustness per plan.
pub fn compare_plans(
    hypotheses: &[SituationHypothesis],
    plans: &[Plan],
    effects: &[DesiredEffect],
    cfg: &RunConfig,
    detection: &DetectionParams,
) -> Result<Comparison, CoaError> {
    use rayon::prelude::*;
    let cells: Vec<(usize, usize)> =
        (0..plans.len()).flat_map(|p| (0..hypotheses.len()).map(move |h| (p, h))).collect();
    let outcomes: Vec<HypothesisOutcome> = cells
        .par_iter()
        .map(|&(p, h)| score_under(&plans[p], &hypotheses[h], effects, cfg, detection))
        .collect();
    let mut scores = Vec::new();
    let mut failures = Vec::new();
    let mut robustness = Vec::new();
    for (p, plan) in plans.iter().enumerate() {
        let per: Vec<HypothesisResult> = hypotheses
            .iter()
            .enumerate()
            .map(|(h, hyp)| HypothesisResult {
                hypothesis: hyp.name.clone(),
                outcome: outcomes[p * hypotheses.len() + h].clone(),
            })
            .collect();
        for r in &per {
            match &r.outcome {
                HypothesisOutcome::Scored { score } => scores.push(score.clone()),
                HypothesisOutcome::Failed { reason, findings } => failures.push(FailedCell {
                    plan_id: plan.id.clone(),
                    hypothesis: r.hypothesis.clone(),
                    reason: reason.clone(),
                    findings: findings.clone(),
                }),
            }
        }
        robustness.push(robustness_from(&plan.id, per));
    }
    Ok(Comparison { effect_set: effect_set_key(effects), ranking: compare_coas(&scores)?, failures, robustness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tick: u32,
    pub target: EffectTarget,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergencePoint {
    pub tick: u32,
    pub expected: f64,
    pub observed: f64,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressFlag {
    pub tick: u32,
    pub target: EffectTarget,
    pub divergence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub divergence: BTreeMap<String, Vec<DivergencePoint>>,
    pub flags: Vec<ProgressFlag>,
}

/// Compare ground observations with the plan's expected trajectory.
pub fn track_progress(
    expected: &Trajectory,
    observed: &[Observation],
    threshold: f64,
) -> Result<ProgressReport, CoaError> {
    let mut report = ProgressReport::default();
    for obs in observed {
        let series = obs.target.resolve(expected).ok_or_else(|| CoaError::UnknownTarget(obs.target.clone()))?;
        let exp = *series
            .get(obs.tick as usize)
            .ok_or(CoaError::TickBeyondHorizon { tick: obs.tick, horizon: expected.horizon_ticks })?;
        let divergence = obs.value - exp;
        report.divergence.entry(obs.target.to_string()).or_default().push(DivergencePoint {
            tick: obs.tick,
            expected: exp,
            observed: obs.value,
            divergence,
        });
        if divergence.abs() >= threshold {
            report.flags.push(ProgressFlag { tick: obs.tick, target: obs.target.clone(), divergence });
        }
    }
    for points in report.divergence.values_mut() {
        points.sort_by_key(|p| p.tick);
    }
    report.flags.sort_by(|a, b| a.tick.cmp(&b.tick).then_with(|| a.target.cmp(&b.target)));
    Ok(report)
}
