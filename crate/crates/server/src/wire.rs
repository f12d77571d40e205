//! Request and response bodies of the HTTP API. The client crate and the
//! server share these definitions.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::str::FromStr;
use wargame_core::coa::EffectSet;
use wargame_core::model::DetectionParams;
use wargame_core::plan::PlanMutation;
use wargame_core::sim::{EffectRecord, RunConfig};
use wargame_core::ValidationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DocumentKind {
    Scenario,
    Plan,
    RunResult,
    AnalyticsInput,
}

impl DocumentKind {
    pub const ALL: [DocumentKind; 4] =
        [DocumentKind::Scenario, DocumentKind::Plan, DocumentKind::RunResult, DocumentKind::AnalyticsInput];

    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::Scenario => "scenario",
            DocumentKind::Plan => "plan",
            DocumentKind::RunResult => "runResult",
            DocumentKind::AnalyticsInput => "analyticsInput",
        }
    }

    /// Prefix of document ids of this kind, e.g. `plan-000003`.
    pub fn id_prefix(self) -> &'static str {
        match self {
            DocumentKind::Scenario => "scenario",
            DocumentKind::Plan => "plan",
            DocumentKind::RunResult => "run-result",
            DocumentKind::AnalyticsInput => "analytics-input",
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocumentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DocumentKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown document kind `{s}`"))
    }
}

/// One accepted plan mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// Version the mutation produced.
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_id: Option<String>,
    pub mutation: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredDocument {
    pub doc_id: String,
    pub kind: DocumentKind,
    /// Starts at 1 and grows by exactly 1 per accepted write.
    pub version: u64,
    /// SHA-256 of the payload's compact key-sorted JSON.
    pub content_hash: String,
    /// Scenario document this one is linked to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub payload: Value,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
}

impl StoredDocument {
    pub fn summary(&self) -> DocumentSummary {
        DocumentSummary {
            doc_id: self.doc_id.clone(),
            kind: self.kind,
            version: self.version,
            content_hash: self.content_hash.clone(),
            scenario: self.scenario.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub doc_id: String,
    pub kind: DocumentKind,
    pub version: u64,
    pub content_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateDocument {
    pub kind: DocumentKind,
    pub payload: Value,
    /// Optional link to a scenario document, used by list filters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatePlan {
    pub expected_version: u64,
    pub mutation: PlanMutation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_id: Option<String>,
}

/// Body of a 409 response: the stored state to rebase onto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub error: String,
    pub current_version: u64,
    pub payload: Value,
}

/// Body of every non-409 error response; `findings` is set on 422.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub findings: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub scenario_id: String,
    /// Defaults to the scenario's first hypothesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    pub plan_id: String,
    pub config: RunConfig,
    /// Defaults to the scenario's detection parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionParams>,
}

/// Versions and content hashes of the input documents, captured when the
/// run was submitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInputs {
    pub scenario_version: u64,
    pub scenario_hash: String,
    pub plan_version: u64,
    pub plan_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunState {
    Pending,
    Running,
    Done { result_id: String, effect_count: usize },
    Failed { reason: String, findings: ValidationReport },
}

impl RunState {
    pub fn is_finished(&self) -> bool {
        matches!(self, RunState::Done { .. } | RunState::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub request: RunRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<RunInputs>,
    #[serde(flatten)]
    pub state: RunState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEffects {
    pub run_id: String,
    pub result_id: String,
    pub effect_count: usize,
    pub effects: Vec<EffectRecord>,
}

/// Rank stored plans against an effect set under every hypothesis of a
/// stored scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRequest {
    pub scenario_id: String,
    pub plan_ids: Vec<String>,
    pub effects: EffectSet,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionParams>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub client_id: String,
    pub display_name: String,
    /// Planning cell, e.g. the line of effort a team owns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}
