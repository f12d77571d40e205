//! NASA-TLX weighted workload.

use super::AnalyticsError;
use serde::{Deserialize, Serialize};

pub const SUBSCALES: [&str; 6] = ["mental", "physical", "temporal", "performance", "effort", "frustration"];
/// Number of pairwise comparisons among six subscales, C(6, 2).
pub const COMPARISONS: u32 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxResponse {
    #[serde(default)]
    pub respondent: String,
    /// Subscale ratings in [`SUBSCALES`] order, each in [0, 100].
    pub ratings: [f64; 6],
    /// Times each subscale won a pairwise comparison; sums to 15.
    pub pairwise_wins: [u32; 6],
}

pub fn tlx_score(resp: &TlxResponse) -> Result<f64, AnalyticsError> {
    let wins: u32 = resp.pairwise_wins.iter().sum();
    if wins != COMPARISONS {
        return Err(AnalyticsError::WinsSum(wins));
    }
    if let Some(r) = resp.ratings.iter().find(|r| !(0.0..=100.0).contains(*r)) {
        return Err(AnalyticsError::RatingRange(*r));
    }
    let weighted: f64 = resp.ratings.iter().zip(&resp.pairwise_wins).map(|(r, w)| r * *w as f64).sum();
    Ok(weighted / COMPARISONS as f64)
}
