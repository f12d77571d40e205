//! Multi-agency campaign plans: DIME actions on lines of effort, resource
//! pools, finish-before-start dependencies, and the synchronization matrix.

use crate::findings::{Finding, FindingKind, ValidationReport};
use crate::model::{ModelGraph, PortRef, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

const SPEND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("pool `{pool}` defined with budgets {first} and {second}")]
    PoolConflict { pool: String, first: f64, second: f64 },
    #[error("nothing to merge")]
    EmptyMerge,
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("bucket size must be >= 1")]
    ZeroBucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instrument {
    Diplomatic,
    Information,
    Military,
    Economic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceDraw {
    pub pool: String,
    pub rate_per_tick: f64,
}

/// One planned action. While active (`start_tick <= t < end_tick()`) it
/// injects `intensity` into its target input port every tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub id: String,
    pub name: String,
    pub instrument: Instrument,
    pub line_of_effort: String,
    pub target: PortRef,
    pub start_tick: u32,
    pub duration_ticks: u32,
    pub intensity: f64,
    pub resource: ResourceDraw,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub dependencies: BTreeSet<String>,
}

impl Action {
    pub fn end_tick(&self) -> u64 {
        self.start_tick as u64 + self.duration_ticks as u64
    }

    pub fn is_active(&self, tick: u64) -> bool {
        (self.start_tick as u64) <= tick && tick < self.end_tick()
    }

    pub fn total_spend(&self) -> f64 {
        self.resource.rate_per_tick * self.duration_ticks as f64
    }

    fn overlaps(&self, other: &Action) -> bool {
        (self.start_tick as u64) < other.end_tick() && (other.start_tick as u64) < self.end_tick()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineOfEffort {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceKind {
    Financial,
    Personnel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourcePool {
    pub id: String,
    pub agency: String,
    pub budget: f64,
    pub kind: ResourceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub schema_version: u32,
    pub id: String,
    /// Scenario this plan was authored against, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub version: u64,
    pub horizon_ticks: u32,
    pub lines_of_effort: Vec<LineOfEffort>,
    pub pools: Vec<ResourcePool>,
    pub actions: Vec<Action>,
}

impl Plan {
    pub fn empty(id: impl Into<String>, horizon_ticks: u32) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            scenario: None,
            version: 1,
            horizon_ticks,
            lines_of_effort: Vec::new(),
            pools: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn action(&self, id: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.id == id)
    }

    /// Sort actions by `(start_tick, id)`, the stable file order.
    pub fn canonicalize(&mut self) {
        self.actions.sort_by(|a, b| (a.start_tick, &a.id).cmp(&(b.start_tick, &b.id)));
    }

    pub fn to_canonical_json(&self) -> String {
        let mut p = self.clone();
        p.canonicalize();
        crate::canonical_json(&p)
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Edits a client can apply to a stored plan. Every applied mutation bumps
/// the plan version by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum PlanMutation {
    AddAction { action: Action },
    ReplaceAction { action: Action },
    RemoveAction { id: String },
    SetTiming { id: String, start_tick: u32, duration_ticks: u32 },
    SetIntensity { id: String, intensity: f64 },
    SetHorizon { horizon_ticks: u32 },
    AddLineOfEffort { line: LineOfEffort },
    SetPool { pool: ResourcePool },
}

impl PlanMutation {
    /// Apply to `plan`, incrementing its version.
    pub fn apply(&self, plan: &mut Plan) -> Result<(), PlanError> {
        fn find<'a>(plan: &'a mut Plan, id: &str) -> Result<&'a mut Action, PlanError> {
            plan.actions.iter_mut().find(|a| a.id == id).ok_or_else(|| PlanError::UnknownAction(id.to_string()))
        }
        match self {
            PlanMutation::AddAction { action } => plan.actions.push(action.clone()),
            PlanMutation::ReplaceAction { action } => *find(plan, &action.id)? = action.clone(),
            PlanMutation::RemoveAction { id } => {
                let before = plan.actions.len();
                plan.actions.retain(|a| &a.id != id);
                if plan.actions.len() == before {
                    return Err(PlanError::UnknownAction(id.clone()));
                }
                for a in &mut plan.actions {
                    a.dependencies.remove(id);
                }
            }
            PlanMutation::SetTiming { id, start_tick, duration_ticks } => {
                let a = find(plan, id)?;
                a.start_tick = *start_tick;
                a.duration_ticks = *duration_ticks;
            }
            PlanMutation::SetIntensity { id, intensity } => find(plan, id)?.intensity = *intensity,
            PlanMutation::SetHorizon { horizon_ticks } => plan.horizon_ticks = *horizon_ticks,
            PlanMutation::AddLineOfEffort { line } => plan.lines_of_effort.push(line.clone()),
            PlanMutation::SetPool { pool } => match plan.pools.iter_mut().find(|p| p.id == pool.id) {
                Some(slot) => *slot = pool.clone(),
                None => plan.pools.push(pool.clone()),
            },
        }
        plan.version += 1;
        plan.canonicalize();
        Ok(())
    }
}

/// Action ids that sit on a dependency cycle (including self-loops).
fn cyclic_actions(plan: &Plan) -> BTreeSet<String> {
    let ids: HashSet<&str> = plan.actions.iter().map(|a| a.id.as_str()).collect();
    let mut indegree: HashMap<&str, usize> = ids.iter().map(|id| (*id, 0)).collect();
    let mut dependents: HashMap<&str, Vec<&str>> = HashMap::new();
    for a in &plan.actions {
        for dep in a.dependencies.iter().filter(|d| ids.contains(d.as_str())) {
            *indegree.get_mut(a.id.as_str()).unwrap() += 1;
            dependents.entry(dep.as_str()).or_default().push(a.id.as_str());
        }
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    while let Some(id) = ready.pop() {
        indegree.remove(id);
        for next in dependents.get(id).into_iter().flatten() {
            if let Some(d) = indegree.get_mut(next) {
                *d -= 1;
                if *d == 0 {
                    ready.push(next);
                }
            }
        }
    }
    // Kahn leftovers include nodes downstream of a cycle; keep only those
    // that can reach themselves.
    let leftover: HashSet<&str> = indegree.keys().copied().collect();
    let deps: HashMap<&str, Vec<&str>> = plan
        .actions
        .iter()
        .filter(|a| leftover.contains(a.id.as_str()))
        .map(|a| {
            (a.id.as_str(), a.dependencies.iter().map(String::as_str).filter(|d| leftover.contains(d)).collect())
        })
        .collect();
    leftover
        .iter()
        .filter(|start| {
            let mut stack: Vec<&str> = deps[*start].clone();
            let mut seen = HashSet::new();
            while let Some(n) = stack.pop() {
                if n == **start {
                    return true;
                }
                if seen.insert(n) {
                    stack.extend(deps[n].iter().copied());
                }
            }
            false
        })
        .map(|s| s.to_string())
        .collect()
}

/// Checks that need no model graph.
pub fn validate_plan_structure(plan: &Plan) -> ValidationReport {
    let mut report = ValidationReport::default();

    if plan.horizon_ticks == 0 {
        report.push(Finding::error(FindingKind::InvalidAttribute, &plan.id, "horizon must be >= 1 tick"));
    }

    let mut loes = HashSet::new();
    for loe in &plan.lines_of_effort {
        if !loes.insert(loe.name.as_str()) {
            report.push(Finding::error(FindingKind::DuplicateId, &loe.name, "duplicate line of effort"));
        }
    }
    let mut pools: HashMap<&str, &ResourcePool> = HashMap::new();
    for pool in &plan.pools {
        if pools.insert(pool.id.as_str(), pool).is_some() {
            report.push(Finding::error(FindingKind::DuplicateId, &pool.id, "duplicate resource pool"));
        }
        if !(pool.budget >= 0.0) || !pool.budget.is_finite() {
            report.push(Finding::error(FindingKind::InvalidAttribute, &pool.id, "budget must be finite and >= 0"));
        }
    }

    let mut ids = HashSet::new();
    for a in &plan.actions {
        let s = a.id.as_str();
        if !ids.insert(s) {
            report.push(Finding::error(FindingKind::DuplicateId, s, "duplicate action id"));
        }
        if a.duration_ticks < 1 {
            report.push(Finding::error(FindingKind::InvalidAttribute, s, "duration must be >= 1 tick"));
        }
        if !(a.resource.rate_per_tick >= 0.0) || !a.resource.rate_per_tick.is_finite() {
            report.push(Finding::error(FindingKind::InvalidAttribute, s, "resource rate must be finite and >= 0"));
        }
        if !a.intensity.is_finite() {
            report.push(Finding::error(FindingKind::InvalidAttribute, s, "intensity must be finite"));
        }
        if !loes.contains(a.line_of_effort.as_str()) {
            report.push(Finding::error(
                FindingKind::UnknownLineOfEffort,
                s,
                format!("line of effort `{}` is not declared", a.line_of_effort),
            ));
        }
        if !pools.contains_key(a.resource.pool.as_str()) {
            report.push(Finding::error(
                FindingKind::UnknownPool,
                s,
                format!("resource pool `{}` is not declared", a.resource.pool),
            ));
        }
        if a.end_tick() > plan.horizon_ticks as u64 {
            report.push(Finding::error(
                FindingKind::HorizonExceeded,
                s,
                format!("ends at tick {} beyond horizon {}", a.end_tick(), plan.horizon_ticks),
            ));
        }
    }

    let by_id: HashMap<&str, &Action> = plan.actions.iter().map(|a| (a.id.as_str(), a)).collect();
    let cyclic = cyclic_actions(plan);
    if !cyclic.is_empty() {
        let members: Vec<&str> = cyclic.iter().map(String::as_str).collect();
        report.push(Finding::error(
            FindingKind::DependencyCycle,
            members.join(","),
            format!("dependency cycle among {}", members.join(", ")),
        ));
    }
    for a in &plan.actions {
        for dep in &a.dependencies {
            match by_id.get(dep.as_str()) {
                None => report.push(Finding::error(
                    FindingKind::UnknownDependency,
                    &a.id,
                    format!("depends on unknown action `{dep}`"),
                )),
                Some(d) => {
                    if cyclic.contains(&a.id) && cyclic.contains(dep) {
                        continue;
                    }
                    if (a.start_tick as u64) < d.end_tick() {
                        report.push(Finding::error(
                            FindingKind::DependencyOrder,
                            &a.id,
                            format!("starts at {} before dependency `{dep}` ends at {}", a.start_tick, d.end_tick()),
                        ));
                    }
                }
            }
        }
    }

    let mut spend: BTreeMap<&str, f64> = BTreeMap::new();
    for a in &plan.actions {
        *spend.entry(a.resource.pool.as_str()).or_default() += a.total_spend();
    }
    for (pool_id, total) in spend {
        if let Some(pool) = pools.get(pool_id) {
            if total > pool.budget + SPEND_TOLERANCE {
                report.push(Finding::error(
                    FindingKind::Overdraft,
                    pool_id,
                    format!("planned spend {total} exceeds budget {} by {}", pool.budget, total - pool.budget),
                ));
            }
        }
    }
    report
}

/// Full validation: structural checks plus target resolution in `graph`.
pub fn validate_plan(plan: &Plan, graph: &ModelGraph) -> ValidationReport {
    let mut report = validate_plan_structure(plan);
    for a in &plan.actions {
        if !graph.has_input(&a.target) {
            report.push(Finding::error(
                FindingKind::UnresolvableTarget,
                &a.id,
                format!("target {}.{} is not an input port in graph `{}`", a.target.instance, a.target.port, graph.id),
            ));
        }
    }
    report
}

/// Amount by which each pool is overdrawn, for pools that are.
pub fn overdrafts(plan: &Plan) -> BTreeMap<String, f64> {
    let mut spend: BTreeMap<&str, f64> = BTreeMap::new();
    for a in &plan.actions {
        *spend.entry(a.resource.pool.as_str()).or_default() += a.total_spend();
    }
    plan.pools
        .iter()
        .filter_map(|p| {
            let s = spend.get(p.id.as_str()).copied().unwrap_or(0.0);
            (s > p.budget + SPEND_TOLERANCE).then(|| (p.id.clone(), s - p.budget))
        })
        .collect()
}

/// Pairs of actions that hit the same input port while both are active.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub pairs: Vec<(String, String)>,
}

pub fn find_duplicates(plan: &Plan) -> DuplicateReport {
    let mut pairs = Vec::new();
    for (i, a) in plan.actions.iter().enumerate() {
        for b in &plan.actions[i + 1..] {
            if a.target == b.target && a.overlaps(b) {
                let (x, y) = if a.id <= b.id { (&a.id, &b.id) } else { (&b.id, &a.id) };
                pairs.push((x.clone(), y.clone()));
            }
        }
    }
    pairs.sort();
    DuplicateReport { pairs }
}

/// Union of several plans. Action ids are kept when unique across the
/// inputs; a colliding id is relabeled `<plan>/<id>` (with a numeric
/// suffix if still taken) and dependencies within its source plan follow.
pub fn merge_plans(plans: &[Plan]) -> Result<(Plan, DuplicateReport), PlanError> {
    let first = plans.first().ok_or(PlanError::EmptyMerge)?;
    let mut merged = Plan::empty(plans.iter().map(|p| p.id.as_str()).collect::<Vec<_>>().join("+"), 0);
    merged.scenario = first.scenario.clone();

    for p in plans {
        merged.horizon_ticks = merged.horizon_ticks.max(p.horizon_ticks);
        for loe in &p.lines_of_effort {
            if !merged.lines_of_effort.iter().any(|l| l.name == loe.name) {
                merged.lines_of_effort.push(loe.clone());
            }
        }
        for pool in &p.pools {
            match merged.pools.iter().find(|q| q.id == pool.id) {
                Some(existing) if existing.budget != pool.budget => {
                    return Err(PlanError::PoolConflict {
                        pool: pool.id.clone(),
                        first: existing.budget,
                        second: pool.budget,
                    })
                }
                Some(_) => {}
                None => merged.pools.push(pool.clone()),
            }
        }
    }

    let mut taken: HashSet<String> = HashSet::new();
    for p in plans {
        let mut relabel: HashMap<&str, String> = HashMap::new();
        for a in &p.actions {
            let mut id = a.id.clone();
            if taken.contains(&id) {
                id = format!("{}/{}", p.id, a.id);
                let base = id.clone();
                let mut n = 2;
                while taken.contains(&id) {
                    id = format!("{base}~{n}");
                    n += 1;
                }
            }
            taken.insert(id.clone());
            relabel.insert(a.id.as_str(), id);
        }
        for a in &p.actions {
            let mut copy = a.clone();
            copy.id = relabel[a.id.as_str()].clone();
            copy.dependencies =
                a.dependencies.iter().map(|d| relabel.get(d.as_str()).cloned().unwrap_or_else(|| d.clone())).collect();
            merged.actions.push(copy);
        }
    }
    merged.canonicalize();
    let dups = find_duplicates(&merged);
    Ok((merged, dups))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncRow {
    pub line_of_effort: String,
    /// One cell per bucket, holding the ids of actions active in it.
    pub cells: Vec<Vec<String>>,
}

/// Lines of effort by time buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncMatrix {
    pub bucket_ticks: u32,
    pub bucket_starts: Vec<u64>,
    pub rows: Vec<SyncRow>,
}

impl SyncMatrix {
    pub fn cell(&self, line_of_effort: &str, bucket: usize) -> Option<&[String]> {
        self.rows.iter().find(|r| r.line_of_effort == line_of_effort).and_then(|r| r.cells.get(bucket)).map(Vec::as_slice)
    }

    /// CSV with one row per line of effort; cell ids joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["line_of_effort".to_string()];
        header.extend(self.bucket_starts.iter().map(|s| format!("t{s}")));
        w.write_record(&header).expect("in-memory csv");
        for row in &self.rows {
            let mut rec = vec![row.line_of_effort.clone()];
            rec.extend(row.cells.iter().map(|c| c.join(";")));
            w.write_record(&rec).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }
}

pub fn sync_matrix(plan: &Plan, bucket_ticks: u32) -> Result<SyncMatrix, PlanError> {
    if bucket_ticks == 0 {
        return Err(PlanError::ZeroBucket);
    }
    let bucket = bucket_ticks as u64;
    let span = plan.actions.iter().map(Action::end_tick).max().unwrap_or(0).max(plan.horizon_ticks as u64);
    let n_buckets = span.div_ceil(bucket) as usize;
    let mut rows: Vec<SyncRow> = plan
        .lines_of_effort
        .iter()
        .map(|l| SyncRow { line_of_effort: l.name.clone(), cells: vec![Vec::new(); n_buckets] })
        .collect();
    let mut ordered: Vec<&Action> = plan.actions.iter().collect();
    ordered.sort_by(|a, b| (a.start_tick, &a.id).cmp(&(b.start_tick, &b.id)));
    for a in ordered {
        let Some(row) = rows.iter_mut().find(|r| r.line_of_effort == a.line_of_effort) else { continue };
        if a.duration_ticks == 0 {
            continue;
        }
        let first = a.start_tick as u64 / bucket;
        let last = (a.end_tick() - 1) / bucket;
        for b in first..=last {
            row.cells[b as usize].push(a.id.clone());
        }
    }
    Ok(SyncMatrix { bucket_ticks, bucket_starts: (0..n_buckets as u64).map(|b| b * bucket).collect(), rows })
}

/// Cumulative spend per pool; entry `t` includes spend during tick `t`.
pub fn resource_profile(plan: &Plan) -> BTreeMap<String, Vec<f64>> {
    let span = plan.actions.iter().map(Action::end_tick).max().unwrap_or(0).max(plan.horizon_ticks as u64) as usize;
    let mut out: BTreeMap<String, Vec<f64>> = plan.pools.iter().map(|p| (p.id.clone(), vec![0.0; span])).collect();
    for a in &plan.actions {
        let series = out.entry(a.resource.pool.clone()).or_insert_with(|| vec![0.0; span]);
        for t in a.start_tick as usize..a.end_tick() as usize {
            series[t] += a.resource.rate_per_tick;
        }
    }
    for series in out.values_mut() {
        let mut acc = 0.0;
        for v in series.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    out
}

/// Total planned spend per pool.
pub fn total_spend(plan: &Plan) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = plan.pools.iter().map(|p| (p.id.clone(), 0.0)).collect();
    for a in &plan.actions {
        *out.entry(a.resource.pool.clone()).or_default() += a.total_spend();
    }
    out
}
