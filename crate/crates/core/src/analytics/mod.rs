//! Team-assessment measurement pipelines: Pathfinder knowledge networks,
//! similarity trends, NASA-TLX workload, interaction networks, and trust.

pub mod csvio;
pub mod pathfinder;
pub mod reports;
pub mod sna;
pub mod stats;
pub mod tlx;
pub mod trust;

use thiserror::Error;

pub use pathfinder::{net_similarity, pfnet, to_distances, DistanceMatrix, PfLink, PfNet, SimilarityMatrix};
pub use reports::{
    run_pfnet, run_sna, run_trend, run_trust, run_tlx, PairedSamples, PfnetReport, PfnetRequest, ScoreRow, SnaReport,
    SnaRequest, TlxReport, TlxRequest, TrendRequest, TrustReport, TrustRequest,
};
pub use sna::{
    betweenness, sna_metrics, support_reliance, support_reliance_trend, InteractionEvent, InteractionKind,
    RelianceTrend, Role, SnaEdge, SnaMetrics, TimeWindow,
};
pub use stats::{paired_t, trend, two_sided_p, StatResult, TestKind};
pub use tlx::{tlx_score, TlxResponse};
pub use trust::{trust_score, ReverseMask, TrustResponse};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all x values are equal")]
    DegenerateX,
    #[error("non-finite input value")]
    NonFinite,
    #[error("paired samples differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("networks have different node sets")]
    NodeSetMismatch,
    #[error("pairwise wins sum to {0}, expected 15")]
    WinsSum(u32),
    #[error("rating {0} outside the allowed range")]
    RatingRange(f64),
    #[error("trust response has {0} items, expected 13")]
    TrustItems(usize),
    #[error("invalid interaction event: {0}")]
    InvalidEvent(String),
    #[error("csv: {0}")]
    Csv(String),
}
