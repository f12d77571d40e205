//! Least-squares trend and paired t test.

use super::AnalyticsError;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// JSON has no infinities; a perfect fit yields `t = ±inf`, written as the
/// strings `"Infinity"` / `"-Infinity"`.
pub(crate) mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("Infinity")
        } else {
            s.serialize_str("-Infinity")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "Infinity" => Ok(f64::INFINITY),
                "-Infinity" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Trend,
    PairedT,
}

/// Outcome of a trend fit or paired comparison. `statistic` is the t value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub test: TestKind,
    #[serde(with = "extended_f64")]
    pub statistic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_difference: Option<f64>,
    pub r_squared: f64,
    pub p_value: f64,
    pub n: usize,
    pub degrees_of_freedom: usize,
}

/// Two-sided p for a t statistic with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Ordinary least squares of y on x.
pub fn trend(points: &[(f64, f64)]) -> Result<StatResult, AnalyticsError> {
    let n = points.len();
    if n < 3 {
        return Err(AnalyticsError::TooFewPoints { needed: 3, got: n });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(AnalyticsError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|(x, y)| (y - (intercept + slope * x)).powi(2)).sum();
    let df = n - 2;
    let (r_squared, t) = if syy == 0.0 {
        (0.0, 0.0)
    } else {
        let r2 = (1.0 - sse / syy).clamp(0.0, 1.0);
        let se = (sse / df as f64 / sxx).sqrt();
        let t = if se == 0.0 { slope.signum() * f64::INFINITY } else { slope / se };
        (r2, t)
    };
    Ok(StatResult {
        test: TestKind::Trend,
        statistic: t,
        slope: Some(slope),
        intercept: Some(intercept),
        mean_difference: None,
        r_squared,
        p_value: two_sided_p(t, df),
        n,
        degrees_of_freedom: df,
    })
}

/// Paired t test on `a - b`. `r_squared` is the effect size t²/(t²+df).
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<StatResult, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewPoints { needed: 2, got: n });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    let t = if var == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (var / n as f64).sqrt()
    };
    let r_squared = if t.is_infinite() { 1.0 } else { t * t / (t * t + df as f64) };
    Ok(StatResult {
        test: TestKind::PairedT,
        statistic: t,
        slope: None,
        intercept: None,
        mean_difference: Some(mean),
        r_squared,
        p_value: two_sided_p(t, df),
        n,
        degrees_of_freedom: df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_fit() {
        let r = trend(&[(1.0, 0.2), (2.0, 0.4), (3.0, 0.6)]).unwrap();
        assert!((r.slope.unwrap() - 0.2).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_y() {
        let r = trend(&[(1.0, 3.0), (2.0, 3.0), (3.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(r.slope, Some(0.0));
        assert_eq!(r.r_squared, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    /// Hand-worked: x̄ = 2.5, ȳ = 2, Sxx = 5, Sxy = 3, SSE = 0.2, Syy = 2.
    /// slope 0.6, R² 0.9, t = 0.6 / sqrt(0.02) = 3·sqrt(2). With 2 degrees
    /// of freedom the two-sided tail is 1 - t/sqrt(2 + t²) = 1 - sqrt(0.9).
    #[test]
    fn hand_case() {
        let r = trend(&[(1.0, 1.0), (2.0, 2.0), (3.0, 2.0), (4.0, 3.0)]).unwrap();
        assert!((r.slope.unwrap() - 0.6).abs() < 1e-12);
        assert!((r.intercept.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.r_squared - 0.9).abs() < 1e-12);
        assert!((r.statistic - 3.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((r.p_value - (1.0 - 0.9f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(trend(&[(1.0, 1.0), (2.0, 2.0)]), Err(AnalyticsError::TooFewPoints { .. })));
        assert_eq!(trend(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(AnalyticsError::DegenerateX));
    }

    #[test]
    fn paired_identical_samples() {
        let r = paired_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert!(matches!(paired_t(&[1.0], &[1.0, 2.0]), Err(AnalyticsError::LengthMismatch { .. })));
    }

    /// diffs {1, 2, 3}: mean 2, sd 1, t = 2·sqrt(3), df 2 ⇒ p = 1 - t/sqrt(2+t²).
    #[test]
    fn paired_hand_case() {
        let r = paired_t(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        let t = 2.0 * 3f64.sqrt();
        assert!((r.statistic - t).abs() < 1e-12);
        assert!((r.p_value - (1.0 - t / (2.0 + t * t).sqrt())).abs() < 1e-9);
    }

    #[test]
    fn infinite_statistic_survives_json() {
        let r = paired_t(&[2.0, 3.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, f64::INFINITY);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"Infinity\""));
        let back: StatResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
