//! Validation findings shared by graph and plan checks.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Error,
    Warning,
}

/// Machine-readable finding category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    // graph
    DanglingCoupling,
    DimensionMismatch,
    AggregationWeights,
    AggregationSource,
    DuplicateAggregation,
    InitialOutOfRange,
    NegativeNoise,
    NonFiniteParameter,
    UnboundInput,
    // plan
    DuplicateId,
    DependencyCycle,
    DependencyOrder,
    UnknownDependency,
    UnknownLineOfEffort,
    UnknownPool,
    Overdraft,
    UnresolvableTarget,
    HorizonExceeded,
    InvalidAttribute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    /// Identifier of the offending element (instance, action, pool, ...).
    pub subject: String,
    pub message: String,
}

impl Finding {
    pub fn error(kind: FindingKind, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, kind, subject: subject.into(), message: message.into() }
    }

    pub fn warning(kind: FindingKind, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, kind, subject: subject.into(), message: message.into() }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let kind = serde_json::to_value(self.kind).ok();
        let kind = kind.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        write!(f, "{sev}[{kind}] {}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn push(&mut self, finding: Finding) {
        self.findings.push(finding);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.findings.extend(other.findings);
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    /// Distinct error kinds, sorted.
    pub fn error_kinds(&self) -> Vec<FindingKind> {
        let mut kinds: Vec<_> = self.errors().map(|f| f.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}
