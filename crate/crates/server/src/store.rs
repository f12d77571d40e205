//! File-backed document store.
//!
//! Layout under the data directory:
//!
//! ```text
//! meta.json                 id counters
//! documents/<docId>.json    one StoredDocument per file
//! runs/<runId>.json         one RunRecord per file
//! ```
//!
//! Every write goes to a temporary file that is fsynced, renamed over the
//! target, and followed by an fsync of the directory, so an acknowledged
//! write survives a crash. Writes to one document are serialized by that
//! document's lock; the version check and the write happen under it.

use crate::wire::{DocumentKind, DocumentSummary, HistoryEntry, RunRecord, RunState, StoredDocument};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use thiserror::Error;
use wargame_core::model::Scenario;
use wargame_core::plan::{validate_plan_structure, Plan, PlanMutation};
use wargame_core::run::RunResult;
use wargame_core::{content_hash, ValidationReport};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no document `{0}`")]
    NotFound(String),
    #[error("document `{id}` is a {kind}, not a plan")]
    WrongKind { id: String, kind: DocumentKind },
    #[error("version conflict: expected {expected}, stored {}", current.version)]
    Conflict { expected: u64, current: Box<StoredDocument> },
    #[error("{message}")]
    Invalid { message: String, findings: ValidationReport },
    #[error("storage i/o: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt stored file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

impl StoreError {
    fn invalid(message: impl Into<String>) -> Self {
        StoreError::Invalid { message: message.into(), findings: ValidationReport::default() }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Counters {
    /// Last issued number per id prefix.
    last: BTreeMap<String, u64>,
}

type Slot = Arc<Mutex<Option<StoredDocument>>>;

pub struct Store {
    root: PathBuf,
    docs: RwLock<BTreeMap<String, Slot>>,
    counters: Mutex<Counters>,
    runs: Mutex<BTreeMap<String, RunRecord>>,
}

const RUN_PREFIX: &str = "run";
const RESTART_REASON: &str = "server restarted before the run finished";

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// Atomically replace `dir/name` with `bytes`.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    File::open(dir)?.sync_all()
}

fn remove_durable(dir: &Path, name: &str) -> io::Result<()> {
    fs::remove_file(dir.join(name))?;
    File::open(dir)?.sync_all()
}

fn read_json_dir<T: for<'de> Deserialize<'de>>(dir: &Path) -> Result<Vec<T>, StoreError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with('.') {
            // Leftover temporary file from an interrupted write.
            fs::remove_file(&path)?;
            continue;
        }
        if !name.ends_with(".json") {
            continue;
        }
        let bytes = fs::read(&path)?;
        let value = serde_json::from_slice(&bytes)
            .map_err(|e| StoreError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        out.push(value);
    }
    Ok(out)
}

fn id_number(id: &str, prefix: &str) -> Option<u64> {
    id.strip_prefix(prefix)?.strip_prefix('-')?.parse().ok()
}

/// Parse and normalize a payload for `kind`. Scenarios and plans must be
/// free of validation errors; a plan's actions are put in canonical order.
pub fn normalize_payload(kind: DocumentKind, payload: Value) -> Result<Value, StoreError> {
    fn bad(kind: DocumentKind, e: serde_json::Error) -> StoreError {
        StoreError::invalid(format!("payload is not a valid {kind}: {e}"))
    }
    match kind {
        DocumentKind::Scenario => {
            let scenario: Scenario = serde_json::from_value(payload).map_err(|e| bad(kind, e))?;
            let hypotheses = scenario.hypotheses().map_err(|e| StoreError::invalid(e.to_string()))?;
            let mut findings = ValidationReport::default();
            for h in &hypotheses {
                findings.extend(wargame_core::model::validate_graph(&h.graph));
            }
            if findings.has_errors() {
                return Err(StoreError::Invalid { message: "scenario has validation errors".into(), findings });
            }
            Ok(serde_json::to_value(&scenario).expect("serializable scenario"))
        }
        DocumentKind::Plan => {
            let mut plan: Plan = serde_json::from_value(payload).map_err(|e| bad(kind, e))?;
            plan.canonicalize();
            // The plan's own version tracks the document version.
            plan.version = 1;
            check_plan(&plan)?;
            Ok(serde_json::to_value(&plan).expect("serializable plan"))
        }
        DocumentKind::RunResult => {
            let result: RunResult = serde_json::from_value(payload).map_err(|e| bad(kind, e))?;
            Ok(serde_json::to_value(&result).expect("serializable run result"))
        }
        DocumentKind::AnalyticsInput => Ok(payload),
    }
}

fn check_plan(plan: &Plan) -> Result<(), StoreError> {
    let findings = validate_plan_structure(plan);
    if findings.has_errors() {
        return Err(StoreError::Invalid { message: "plan has validation errors".into(), findings });
    }
    Ok(())
}

impl Store {
    /// Open (creating if needed) the store rooted at `root`. Runs that were
    /// pending or running when the previous process stopped are marked
    /// failed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("documents"))?;
        fs::create_dir_all(root.join("runs"))?;
        let mut counters: Counters = match fs::read(root.join("meta.json")) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| StoreError::Corrupt { path: root.join("meta.json"), reason: e.to_string() })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Counters::default(),
            Err(e) => return Err(e.into()),
        };
        let docs: Vec<StoredDocument> = read_json_dir(&root.join("documents"))?;
        let mut runs: Vec<RunRecord> = read_json_dir(&root.join("runs"))?;
        // Counters only move forward, even if meta.json lags the files.
        for d in &docs {
            if let Some(n) = id_number(&d.doc_id, d.kind.id_prefix()) {
                let last = counters.last.entry(d.kind.id_prefix().to_string()).or_default();
                *last = (*last).max(n);
            }
        }
        for r in &runs {
            if let Some(n) = id_number(&r.run_id, RUN_PREFIX) {
                let last = counters.last.entry(RUN_PREFIX.to_string()).or_default();
                *last = (*last).max(n);
            }
        }
        let runs_dir = root.join("runs");
        for r in &mut runs {
            if matches!(r.state, RunState::Pending | RunState::Running) {
                r.state = RunState::Failed { reason: RESTART_REASON.into(), findings: ValidationReport::default() };
                write_atomic(&runs_dir, &format!("{}.json", r.run_id), &to_bytes(r))?;
            }
        }
        Ok(Self {
            docs: RwLock::new(docs.into_iter().map(|d| (d.doc_id.clone(), Arc::new(Mutex::new(Some(d))))).collect()),
            runs: Mutex::new(runs.into_iter().map(|r| (r.run_id.clone(), r)).collect()),
            counters: Mutex::new(counters),
            root,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn next_id(&self, prefix: &str) -> Result<String, StoreError> {
        let mut c = lock(&self.counters);
        let n = c.last.get(prefix).copied().unwrap_or(0) + 1;
        c.last.insert(prefix.to_string(), n);
        write_atomic(&self.root, "meta.json", &to_bytes(&*c))?;
        Ok(format!("{prefix}-{n:06}"))
    }

    fn persist_doc(&self, doc: &StoredDocument) -> Result<(), StoreError> {
        write_atomic(&self.root.join("documents"), &format!("{}.json", doc.doc_id), &to_bytes(doc))?;
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<Slot, StoreError> {
        self.docs
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    /// Validate, assign an id, persist, and only then return version 1.
    pub fn create(
        &self,
        kind: DocumentKind,
        payload: Value,
        scenario: Option<String>,
    ) -> Result<StoredDocument, StoreError> {
        let payload = normalize_payload(kind, payload)?;
        let doc_id = self.next_id(kind.id_prefix())?;
        let doc = StoredDocument {
            content_hash: content_hash(&payload),
            doc_id: doc_id.clone(),
            kind,
            version: 1,
            scenario,
            payload,
            history: Vec::new(),
        };
        let slot: Slot = Arc::new(Mutex::new(None));
        let mut guard = lock(&slot);
        self.docs.write().unwrap_or_else(|p| p.into_inner()).insert(doc_id, slot.clone());
        if let Err(e) = self.persist_doc(&doc) {
            self.docs.write().unwrap_or_else(|p| p.into_inner()).remove(&doc.doc_id);
            return Err(e);
        }
        *guard = Some(doc.clone());
        Ok(doc)
    }

    pub fn get(&self, id: &str) -> Result<StoredDocument, StoreError> {
        let slot = self.slot(id)?;
        let guard = lock(&slot);
        guard.clone().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    /// Summaries ordered by `(kind, docId)`, optionally filtered.
    pub fn list(&self, kind: Option<DocumentKind>, scenario: Option<&str>) -> Vec<DocumentSummary> {
        let slots: Vec<Slot> = self.docs.read().unwrap_or_else(|p| p.into_inner()).values().cloned().collect();
        let mut out: Vec<DocumentSummary> = slots
            .iter()
            .filter_map(|s| lock(s).as_ref().map(StoredDocument::summary))
            .filter(|d| kind.is_none_or(|k| d.kind == k))
            .filter(|d| scenario.is_none_or(|s| d.scenario.as_deref() == Some(s)))
            .collect();
        out.sort_by(|a, b| (a.kind, &a.doc_id).cmp(&(b.kind, &b.doc_id)));
        out
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let slot = self.slot(id)?;
        let mut guard = lock(&slot);
        if guard.is_none() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        remove_durable(&self.root.join("documents"), &format!("{id}.json"))?;
        *guard = None;
        self.docs.write().unwrap_or_else(|p| p.into_inner()).remove(id);
        Ok(())
    }

    /// Optimistic update: accepted iff `expected_version` equals the stored
    /// version, in which case the new version is `expected_version + 1`.
    pub fn update_plan(
        &self,
        id: &str,
        expected_version: u64,
        mutation: &PlanMutation,
        client_id: Option<String>,
    ) -> Result<StoredDocument, StoreError> {
        let slot = self.slot(id)?;
        let mut guard = lock(&slot);
        let current = guard.as_ref().ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if current.kind != DocumentKind::Plan {
            return Err(StoreError::WrongKind { id: id.to_string(), kind: current.kind });
        }
        if current.version != expected_version {
            return Err(StoreError::Conflict { expected: expected_version, current: Box::new(current.clone()) });
        }
        let mut plan: Plan = serde_json::from_value(current.payload.clone()).map_err(|e| StoreError::Corrupt {
            path: self.root.join("documents").join(format!("{id}.json")),
            reason: e.to_string(),
        })?;
        mutation.apply(&mut plan).map_err(|e| StoreError::invalid(e.to_string()))?;
        let version = current.version + 1;
        plan.version = version;
        check_plan(&plan)?;
        let payload = serde_json::to_value(&plan).expect("serializable plan");
        let mut history = current.history.clone();
        history.push(HistoryEntry {
            version,
            client_id,
            mutation: serde_json::to_value(mutation).expect("serializable mutation"),
        });
        let doc = StoredDocument {
            doc_id: current.doc_id.clone(),
            kind: current.kind,
            version,
            content_hash: content_hash(&payload),
            scenario: current.scenario.clone(),
            payload,
            history,
        };
        self.persist_doc(&doc)?;
        *guard = Some(doc.clone());
        Ok(doc)
    }

    pub fn next_run_id(&self) -> Result<String, StoreError> {
        self.next_id(RUN_PREFIX)
    }

    /// Persist a run record, replacing any earlier state of the same run.
    pub fn put_run(&self, record: RunRecord) -> Result<(), StoreError> {
        let mut runs = lock(&self.runs);
        write_atomic(&self.root.join("runs"), &format!("{}.json", record.run_id), &to_bytes(&record))?;
        runs.insert(record.run_id.clone(), record);
        Ok(())
    }

    pub fn get_run(&self, id: &str) -> Option<RunRecord> {
        lock(&self.runs).get(id).cloned()
    }

    pub fn list_runs(&self) -> Vec<RunRecord> {
        lock(&self.runs).values().cloned().collect()
    }
}

fn to_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("serializable record")
}
