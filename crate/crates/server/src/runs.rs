//! Simulation runs: snapshot at submission, FIFO queue, bounded workers.

use crate::store::{Store, StoreError};
use crate::wire::{DocumentKind, RunInputs, RunRecord, RunRequest, RunState};
use std::sync::Arc;
use thiserror::Error;
use tokio::sync::{mpsc, Mutex};
use wargame_core::model::Scenario;
use wargame_core::plan::Plan;
use wargame_core::run::{execute_run, RunError};
use wargame_core::sim::SimError;
use wargame_core::ValidationReport;

/// Immutable inputs captured when the run was accepted.
struct Job {
    run_id: String,
    request: RunRequest,
    inputs: RunInputs,
    scenario: Scenario,
    plan: Plan,
}

#[derive(Debug, Error)]
pub enum SubmitError {
    #[error("run queue is full")]
    QueueFull,
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Clone)]
pub struct RunQueue {
    tx: mpsc::Sender<Job>,
}

impl RunQueue {
    /// Start `workers` tasks pulling from one FIFO queue of `capacity` jobs.
    /// Each job's simulation runs on the blocking thread pool.
    pub fn start(store: Arc<Store>, workers: usize, capacity: usize) -> Self {
        let (tx, rx) = mpsc::channel::<Job>(capacity.max(1));
        let rx = Arc::new(Mutex::new(rx));
        for _ in 0..workers.max(1) {
            let rx = rx.clone();
            let store = store.clone();
            tokio::spawn(async move {
                loop {
                    let Some(job) = rx.lock().await.recv().await else { break };
                    let run_id = job.run_id.clone();
                    let request = job.request.clone();
                    let inputs = job.inputs.clone();
                    let worker_store = store.clone();
                    if let Err(e) = tokio::task::spawn_blocking(move || execute(&worker_store, job)).await {
                        let state = RunState::Failed {
                            reason: format!("internal error: {e}"),
                            findings: ValidationReport::default(),
                        };
                        let record = RunRecord { run_id, request, inputs: Some(inputs), state };
                        if let Err(e) = store.put_run(record) {
                            tracing::error!("cannot record failed run: {e}");
                        }
                    }
                }
            });
        }
        Self { tx }
    }

    /// Snapshot the referenced documents and enqueue the run. References to
    /// missing or wrong-kind documents yield a run that is already failed.
    pub async fn submit(&self, store: &Arc<Store>, request: RunRequest) -> Result<RunRecord, SubmitError> {
        let permit = self.tx.try_reserve().map_err(|_| SubmitError::QueueFull)?;
        let store = store.clone();
        let prepared = tokio::task::spawn_blocking(move || prepare(&store, request))
            .await
            .map_err(|e| StoreError::Io(std::io::Error::other(e.to_string())))??;
        let (record, job) = prepared;
        if let Some(job) = job {
            permit.send(job);
        }
        Ok(record)
    }
}

fn load<T: serde::de::DeserializeOwned>(store: &Store, id: &str, kind: DocumentKind) -> Result<(T, u64, String), String> {
    let doc = store.get(id).map_err(|_| format!("unknown {kind} `{id}`"))?;
    if doc.kind != kind {
        return Err(format!("document `{id}` is a {}, not a {kind}", doc.kind));
    }
    let value = serde_json::from_value(doc.payload).map_err(|e| format!("stored {kind} `{id}` is unreadable: {e}"))?;
    Ok((value, doc.version, doc.content_hash))
}

fn prepare(store: &Store, request: RunRequest) -> Result<(RunRecord, Option<Job>), StoreError> {
    let run_id = store.next_run_id()?;
    let snapshot = load::<Scenario>(store, &request.scenario_id, DocumentKind::Scenario)
        .and_then(|s| load::<Plan>(store, &request.plan_id, DocumentKind::Plan).map(|p| (s, p)));
    let (record, job) = match snapshot {
        Ok(((scenario, scenario_version, scenario_hash), (plan, plan_version, plan_hash))) => {
            let inputs = RunInputs { scenario_version, scenario_hash, plan_version, plan_hash };
            let record =
                RunRecord { run_id: run_id.clone(), request: request.clone(), inputs: Some(inputs.clone()), state: RunState::Pending };
            (record, Some(Job { run_id, request, inputs, scenario, plan }))
        }
        Err(reason) => {
            let state = RunState::Failed { reason, findings: ValidationReport::default() };
            (RunRecord { run_id, request, inputs: None, state }, None)
        }
    };
    store.put_run(record.clone())?;
    Ok((record, job))
}

fn execute(store: &Store, job: Job) {
    let Job { run_id, request, inputs, scenario, plan } = job;
    let record = |state| RunRecord { run_id: run_id.clone(), request: request.clone(), inputs: Some(inputs.clone()), state };
    if let Err(e) = store.put_run(record(RunState::Running)) {
        tracing::error!("cannot mark run {run_id} running: {e}");
    }
    let outcome = execute_run(&scenario, request.hypothesis.as_deref(), &plan, request.config, request.detection);
    let state = match outcome {
        Ok(result) => {
            let effect_count = result.effect_count;
            let payload = serde_json::to_value(&result).expect("serializable run result");
            match store.create(DocumentKind::RunResult, payload, Some(request.scenario_id.clone())) {
                Ok(doc) => RunState::Done { result_id: doc.doc_id, effect_count },
                Err(e) => RunState::Failed { reason: format!("cannot store result: {e}"), findings: ValidationReport::default() },
            }
        }
        Err(RunError::Sim(SimError::Invalid(findings))) => RunState::Failed { reason: "validation failed".into(), findings },
        Err(e) => RunState::Failed { reason: e.to_string(), findings: ValidationReport::default() },
    };
    if let Err(e) = store.put_run(record(state)) {
        tracing::error!("cannot record outcome of run {run_id}: {e}");
    }
}
