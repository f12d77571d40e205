//! 13-item human-machine trust scale on a 1..7 response range.

use super::AnalyticsError;
use serde::{Deserialize, Serialize};

pub const ITEMS: usize = 13;
pub const SCALE_MIN: u8 = 1;
pub const SCALE_MAX: u8 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustResponse {
    #[serde(default)]
    pub respondent: String,
    pub items: Vec<u8>,
}

/// Which items are reverse-coded. Instrument configuration, not data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReverseMask(pub [bool; ITEMS]);

impl ReverseMask {
    /// Mask from 1-based item numbers.
    pub fn from_items(items: &[usize]) -> Result<Self, AnalyticsError> {
        let mut mask = [false; ITEMS];
        for &i in items {
            if i == 0 || i > ITEMS {
                return Err(AnalyticsError::InvalidParams(format!("trust item {i} outside 1..={ITEMS}")));
            }
            mask[i - 1] = true;
        }
        Ok(Self(mask))
    }
}

/// Mean item score after mapping reverse-coded items to `8 - item`.
pub fn trust_score(resp: &TrustResponse, mask: &ReverseMask) -> Result<f64, AnalyticsError> {
    if resp.items.len() != ITEMS {
        return Err(AnalyticsError::TrustItems(resp.items.len()));
    }
    let mut total = 0u32;
    for (item, reversed) in resp.items.iter().zip(mask.0) {
        if !(SCALE_MIN..=SCALE_MAX).contains(item) {
            return Err(AnalyticsError::RatingRange(*item as f64));
        }
        total += if reversed { (SCALE_MAX + 1 - item) as u32 } else { *item as u32 };
    }
    Ok(total as f64 / ITEMS as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_midpoint() {
        let r = TrustResponse { respondent: String::new(), items: vec![4; 13] };
        assert_eq!(trust_score(&r, &ReverseMask::default()).unwrap(), 4.0);
    }

    #[test]
    fn reverse_coded_seven_counts_as_one() {
        let mut items = vec![1; 13];
        items[2] = 7;
        let r = TrustResponse { respondent: String::new(), items };
        let mask = ReverseMask::from_items(&[3]).unwrap();
        assert_eq!(trust_score(&r, &mask).unwrap(), 1.0);
    }

    #[test]
    fn malformed() {
        let r = TrustResponse { respondent: String::new(), items: vec![4; 12] };
        assert_eq!(trust_score(&r, &ReverseMask::default()), Err(AnalyticsError::TrustItems(12)));
        let r = TrustResponse { respondent: String::new(), items: vec![8; 13] };
        assert!(trust_score(&r, &ReverseMask::default()).is_err());
        assert!(ReverseMask::from_items(&[14]).is_err());
    }
}
