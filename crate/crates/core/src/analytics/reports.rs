//! Request and report documents for each assessment pipeline. The server's
//! analytics endpoints and the CLI's `analyze` subcommand exchange exactly
//! these shapes, so both front ends produce identical output.

use super::pathfinder::{degrees, net_similarity, pfnet, to_distances, DistanceMatrix, PfNet, SimilarityMatrix};
use super::sna::{sna_metrics, support_reliance, support_reliance_trend, InteractionEvent, RelianceTrend, SnaMetrics, TimeWindow};
use super::stats::{extended_f64, paired_t, trend, StatResult};
use super::tlx::{tlx_score, TlxResponse};
use super::trust::{trust_score, ReverseMask, TrustResponse};
use super::AnalyticsError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn infinite() -> f64 {
    f64::INFINITY
}

/// Exactly one of `similarity` (1..9 ratings) or `distances` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfnetRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<SimilarityMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<DistanceMatrix>,
    /// Defaults to `n - 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default = "infinite", with = "extended_f64")]
    pub r: f64,
    /// Optional referent ratings; the report then carries the link-set
    /// similarity between the two networks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referent: Option<SimilarityMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfnetReport {
    pub net: PfNet,
    pub degrees: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub referent_similarity: Option<f64>,
}

pub fn run_pfnet(req: &PfnetRequest) -> Result<PfnetReport, AnalyticsError> {
    let d = match (&req.similarity, &req.distances) {
        (Some(s), None) => {
            s.validate()?;
            to_distances(s)
        }
        (None, Some(d)) => DistanceMatrix::new(d.concepts.clone(), d.distances.clone())?,
        _ => return Err(AnalyticsError::InvalidParams("give exactly one of `similarity` or `distances`".into())),
    };
    let q = req.q.unwrap_or(d.len().saturating_sub(1));
    let net = pfnet(&d, q, req.r)?;
    let referent_similarity = match &req.referent {
        Some(s) => {
            s.validate()?;
            Some(net_similarity(&net, &pfnet(&to_distances(s), q, req.r)?)?)
        }
        None => None,
    };
    let degrees = degrees(&net).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(PfnetReport { net, degrees, referent_similarity })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxRequest {
    pub responses: Vec<TlxResponse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub respondent: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxReport {
    pub scores: Vec<ScoreRow>,
    /// `None` for an empty response set.
    pub mean: Option<f64>,
}

fn mean(rows: &[ScoreRow]) -> Option<f64> {
    (!rows.is_empty()).then(|| rows.iter().map(|r| r.score).sum::<f64>() / rows.len() as f64)
}

pub fn run_tlx(req: &TlxRequest) -> Result<TlxReport, AnalyticsError> {
    let scores = req
        .responses
        .iter()
        .map(|r| Ok(ScoreRow { respondent: r.respondent.clone(), score: tlx_score(r)? }))
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    Ok(TlxReport { mean: mean(&scores), scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnaRequest {
    pub events: Vec<InteractionEvent>,
    /// Defaults to every event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<TimeWindow>,
    /// Consecutive windows for the support-reliance trend (at least 3).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reliance_windows: Vec<TimeWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnaReport {
    pub metrics: SnaMetrics,
    pub support_reliance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reliance_trend: Option<RelianceTrend>,
}

pub fn run_sna(req: &SnaRequest) -> Result<SnaReport, AnalyticsError> {
    for e in &req.events {
        e.validate()?;
    }
    let window = req.window.unwrap_or_else(TimeWindow::all);
    let reliance_trend = if req.reliance_windows.is_empty() {
        None
    } else {
        Some(support_reliance_trend(&req.events, &req.reliance_windows)?)
    };
    Ok(SnaReport {
        metrics: sna_metrics(&req.events, window),
        support_reliance: support_reliance(&req.events, window),
        reliance_trend,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRequest {
    pub points: Vec<(f64, f64)>,
}

pub fn run_trend(req: &TrendRequest) -> Result<StatResult, AnalyticsError> {
    trend(&req.points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSamples {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustRequest {
    pub responses: Vec<TrustResponse>,
    /// 1-based numbers of the reverse-coded items.
    #[serde(default)]
    pub reverse_items: Vec<usize>,
    /// Optional paired ratings (e.g. explorative vs predictive use).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired: Option<PairedSamples>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustReport {
    pub scores: Vec<ScoreRow>,
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired: Option<StatResult>,
}

pub fn run_trust(req: &TrustRequest) -> Result<TrustReport, AnalyticsError> {
    let mask = ReverseMask::from_items(&req.reverse_items)?;
    let scores = req
        .responses
        .iter()
        .map(|r| Ok(ScoreRow { respondent: r.respondent.clone(), score: trust_score(r, &mask)? }))
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    let paired = req.paired.as_ref().map(|p| paired_t(&p.a, &p.b)).transpose()?;
    Ok(TrustReport { mean: mean(&scores), scores, paired })
}
