//! Campaign wargaming engine.
//!
//! * [`model`]: PMESII component templates composed into a coupled
//!   province/national model graph.
//! * [`plan`]: multi-agency campaign plans and their synchronization matrix.
//! * [`sim`]: deterministic simulation, baselines, effect detection, sweeps.
//! * [`coa`]: desired effects, COA ranking and robustness across hypotheses.
//! * [`analytics`]: team-assessment pipelines (Pathfinder, TLX, SNA, trust).
//! * [`run`]: the run-result document shared by the CLI and the server.

pub mod analytics;
pub mod coa;
pub mod demo;
pub mod findings;
pub mod model;
pub mod plan;
pub mod run;
pub mod sim;

pub use findings::{Finding, FindingKind, Severity, ValidationReport};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Pretty JSON in declaration field order, newline-terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

/// SHA-256 (hex) of the compact, key-sorted JSON form of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable document");
    let bytes = serde_json::to_vec(&v).expect("serializable value");
    hex::encode(Sha256::digest(&bytes))
}
