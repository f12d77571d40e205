//! `run`, `compare` and `validate`.

use crate::input::{emit, input_error, read_json, status};
use crate::{Exit, RunFlags};
use anyhow::{anyhow, Context};
use std::path::{Path, PathBuf};
use std::time::Duration;
use wargame_client::{Client, CompareRequest, DocumentKind, RunRequest, RunState};
use wargame_core::coa::{compare_plans, Comparison, EffectSet};
use wargame_core::model::{validate_graph, DetectionParams, Scenario, SituationHypothesis};
use wargame_core::plan::{validate_plan, Plan};
use wargame_core::run::{execute_run, RunResult};
use wargame_core::sim::RunConfig;
use wargame_core::{canonical_json, ValidationReport};

const RUN_TIMEOUT: Duration = Duration::from_secs(600);
const POLL: Duration = Duration::from_millis(20);

fn print_findings(report: &ValidationReport) {
    for f in &report.findings {
        eprintln!("{f}");
    }
}

fn hypotheses(scenario: &Scenario) -> Result<Vec<SituationHypothesis>, Exit> {
    scenario.hypotheses().map_err(|e| {
        eprintln!("error: scenario `{}`: {e}", scenario.id);
        Exit::Findings
    })
}

fn pick<'h>(hyps: &'h [SituationHypothesis], name: Option<&str>) -> anyhow::Result<&'h SituationHypothesis> {
    match name {
        Some(n) => hyps.iter().find(|h| h.name == n).ok_or_else(|| {
            let known: Vec<&str> = hyps.iter().map(|h| h.name.as_str()).collect();
            input_error(format!("no hypothesis `{n}` (have: {})", known.join(", ")))
        }),
        None => hyps.first().ok_or_else(|| anyhow!("scenario defines no hypotheses")),
    }
}

/// Union of graph and plan findings, deduplicated, in first-seen order.
fn findings_for(graph_hyps: &[&SituationHypothesis], plan: Option<&Plan>) -> ValidationReport {
    let mut all = ValidationReport::default();
    for h in graph_hyps {
        all.extend(validate_graph(&h.graph));
        if let Some(p) = plan {
            all.extend(validate_plan(p, &h.graph));
        }
    }
    let mut seen = Vec::new();
    all.findings.retain(|f| {
        if seen.contains(f) {
            false
        } else {
            seen.push(f.clone());
            true
        }
    });
    all
}

fn detection(flags: &RunFlags, scenario: &Scenario) -> Option<DetectionParams> {
    if flags.threshold.is_none() && flags.persistence.is_none() {
        return None;
    }
    Some(DetectionParams {
        threshold: flags.threshold.unwrap_or(scenario.detection.threshold),
        persistence: flags.persistence.unwrap_or(scenario.detection.persistence),
    })
}

pub struct RunArgs {
    pub scenario: PathBuf,
    pub plan: PathBuf,
    pub hypothesis: Option<String>,
    pub flags: RunFlags,
    pub out: Option<PathBuf>,
    pub server: Option<String>,
}

pub fn run(args: RunArgs) -> anyhow::Result<Exit> {
    let scenario: Scenario = read_json(&args.scenario)?;
    let plan: Plan = read_json(&args.plan)?;
    let hyps = match hypotheses(&scenario) {
        Ok(h) => h,
        Err(code) => return Ok(code),
    };
    let hyp = pick(&hyps, args.hypothesis.as_deref())?;
    let report = findings_for(&[hyp], Some(&plan));
    if report.has_errors() {
        print_findings(&report);
        return Ok(Exit::Findings);
    }
    let cfg = RunConfig::new(args.flags.horizon.unwrap_or(plan.horizon_ticks), args.flags.seed, args.flags.noise);
    let detection = detection(&args.flags, &scenario);
    let result = match &args.server {
        None => execute_run(&scenario, Some(&hyp.name), &plan, cfg, detection)?,
        Some(url) => {
            let request = |scenario_id: String, plan_id: String| RunRequest {
                scenario_id,
                hypothesis: Some(hyp.name.clone()),
                plan_id,
                config: cfg,
                detection,
            };
            remote_run(url, &scenario, &plan, request)?
        }
    };
    emit(args.out.as_deref(), &result.to_canonical_json())?;
    let unfavorable = result.effects.iter().filter(|e| !e.favorable).count();
    status(
        args.out.is_some(),
        &format!(
            "{} effects ({} favorable, {} unfavorable): plan `{}` under `{}`, {} ticks, seed {}",
            result.effect_count,
            result.effect_count - unfavorable,
            unfavorable,
            result.metadata.plan_id,
            result.metadata.hypothesis,
            cfg.horizon_ticks,
            cfg.seed
        ),
    );
    Ok(Exit::Ok)
}

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_current_thread().enable_all().build().context("cannot start async runtime")
}

fn remote_run(
    url: &str,
    scenario: &Scenario,
    plan: &Plan,
    request: impl FnOnce(String, String) -> RunRequest,
) -> anyhow::Result<RunResult> {
    runtime()?.block_on(async {
        let client = Client::new(url);
        let s = client.create(DocumentKind::Scenario, scenario).await?;
        let p = client.create(DocumentKind::Plan, plan).await?;
        let started = client.start_run(&request(s.doc_id, p.doc_id)).await?;
        let done = client.wait_for_run(&started.run_id, POLL, RUN_TIMEOUT).await?;
        match done.state {
            RunState::Done { result_id, .. } => {
                let doc = client.get_document(&result_id).await?;
                Ok(serde_json::from_value(doc.payload)?)
            }
            RunState::Failed { reason, findings } => {
                print_findings(&findings);
                Err(anyhow!("run {} failed: {reason}", started.run_id))
            }
            other => Err(anyhow!("run {} ended in state {other:?}", started.run_id)),
        }
    })
}

pub struct CompareArgs {
    pub scenario: PathBuf,
    pub plans: Vec<PathBuf>,
    pub effects: PathBuf,
    pub flags: RunFlags,
    pub out: Option<PathBuf>,
    pub robustness: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub server: Option<String>,
}

pub fn compare(args: CompareArgs) -> anyhow::Result<Exit> {
    let scenario: Scenario = read_json(&args.scenario)?;
    let plans = args.plans.iter().map(|p| read_json::<Plan>(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let effects: EffectSet = read_json(&args.effects)?;
    let hyps = match hypotheses(&scenario) {
        Ok(h) => h,
        Err(code) => return Ok(code),
    };
    let horizon = args.flags.horizon.unwrap_or_else(|| plans.iter().map(|p| p.horizon_ticks).max().unwrap_or(0));
    let cfg = RunConfig::new(horizon, args.flags.seed, args.flags.noise);
    let detection = detection(&args.flags, &scenario).unwrap_or(scenario.detection);
    let comparison = match &args.server {
        None => compare_plans(&hyps, &plans, &effects.effects, &cfg, &detection)?,
        Some(url) => remote_compare(url, &scenario, &plans, effects, cfg, detection)?,
    };
    emit(args.out.as_deref(), &comparison.ranking_csv())?;
    if let Some(path) = &args.robustness {
        emit(Some(path), &comparison.robustness_csv())?;
    }
    if let Some(path) = &args.json {
        emit(Some(path), &canonical_json(&comparison))?;
    }
    for f in &comparison.failures {
        eprintln!("failed: plan `{}` under `{}`: {}", f.plan_id, f.hypothesis, f.reason);
        print_findings(&f.findings);
    }
    let to_file = args.out.is_some();
    for r in &comparison.robustness {
        let worst = match (&r.min_achieved, &r.worst_hypothesis) {
            (Some(m), Some(h)) => format!("worst case {m} achieved under `{h}`"),
            _ => "no hypothesis could be scored".to_string(),
        };
        status(to_file, &format!("plan `{}`: {worst}", r.plan_id));
    }
    Ok(if comparison.failures.is_empty() { Exit::Ok } else { Exit::Findings })
}

fn remote_compare(
    url: &str,
    scenario: &Scenario,
    plans: &[Plan],
    effects: EffectSet,
    config: RunConfig,
    detection: DetectionParams,
) -> anyhow::Result<Comparison> {
    runtime()?.block_on(async {
        let client = Client::new(url);
        let s = client.create(DocumentKind::Scenario, scenario).await?;
        let mut plan_ids = Vec::new();
        for p in plans {
            plan_ids.push(client.create(DocumentKind::Plan, p).await?.doc_id);
        }
        let req = CompareRequest { scenario_id: s.doc_id, plan_ids, effects, config, detection: Some(detection) };
        Ok(client.compare(&req).await?)
    })
}

pub fn validate(scenario: &Path, plan: Option<&Path>, hypothesis: Option<&str>, json: bool) -> anyhow::Result<Exit> {
    let scenario: Scenario = read_json(scenario)?;
    let plan: Option<Plan> = plan.map(read_json).transpose()?;
    let hyps = match hypotheses(&scenario) {
        Ok(h) => h,
        Err(code) => return Ok(code),
    };
    let chosen: Vec<&SituationHypothesis> = match hypothesis {
        Some(n) => vec![pick(&hyps, Some(n))?],
        None => hyps.iter().collect(),
    };
    let report = findings_for(&chosen, plan.as_ref());
    if json {
        emit(None, &canonical_json(&report))?;
    } else {
        for f in &report.findings {
            println!("{f}");
        }
        let errors = report.errors().count();
        let warnings = report.warnings().count();
        eprintln!("{errors} error(s), {warnings} warning(s)");
    }
    Ok(if report.has_errors() { Exit::Findings } else { Exit::Ok })
}
