//! CSV readers for assessment inputs.
//!
//! | input        | header                                                                 |
//! |--------------|------------------------------------------------------------------------|
//! | similarity   | `concept,<c1>,...,<cn>`, then one row per concept (diagonal may be empty) |
//! | tlx          | `respondent,mental,physical,temporal,performance,effort,frustration,w_mental,w_physical,w_temporal,w_performance,w_effort,w_frustration` |
//! | trust        | `respondent,item1,...,item13[,explorative,predictive]`                 |
//! | interactions | `timestamp,source,destination,durationSeconds,kind,sourceGroup,destGroup,sourceRole,destRole` |
//! | trend        | `x,y`                                                                  |

use super::sna::{InteractionEvent, InteractionKind, Role};
use super::tlx::TlxResponse;
use super::trust::{TrustResponse, ITEMS};
use super::{AnalyticsError, SimilarityMatrix};
use serde::Deserialize;

fn csv_err(e: impl std::fmt::Display) -> AnalyticsError {
    AnalyticsError::Csv(e.to_string())
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn num(field: &str, what: &str) -> Result<f64, AnalyticsError> {
    field.parse::<f64>().map_err(|_| AnalyticsError::Csv(format!("{what}: `{field}` is not a number")))
}

pub fn read_similarity(text: &str) -> Result<SimilarityMatrix, AnalyticsError> {
    let mut rdr = reader(text);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let concepts: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut ratings = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.get(0) != concepts.get(i).map(String::as_str) {
            return Err(AnalyticsError::Csv(format!("row {} label must be `{}`", i + 1, concepts.get(i).map_or("?", |s| s))));
        }
        let row = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, f)| if j == i && f.is_empty() { Ok(0.0) } else { num(f, "rating") })
            .collect::<Result<Vec<_>, _>>()?;
        ratings.push(row);
    }
    SimilarityMatrix::new(concepts, ratings)
}

#[derive(Deserialize)]
struct TlxRow {
    respondent: String,
    mental: f64,
    physical: f64,
    temporal: f64,
    performance: f64,
    effort: f64,
    frustration: f64,
    w_mental: u32,
    w_physical: u32,
    w_temporal: u32,
    w_performance: u32,
    w_effort: u32,
    w_frustration: u32,
}

pub fn read_tlx(text: &str) -> Result<Vec<TlxResponse>, AnalyticsError> {
    reader(text)
        .deserialize::<TlxRow>()
        .map(|row| {
            let r = row.map_err(csv_err)?;
            Ok(TlxResponse {
                respondent: r.respondent,
                ratings: [r.mental, r.physical, r.temporal, r.performance, r.effort, r.frustration],
                pairwise_wins: [r.w_mental, r.w_physical, r.w_temporal, r.w_performance, r.w_effort, r.w_frustration],
            })
        })
        .collect()
}

/// Trust responses plus optional paired explorative/predictive ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustTable {
    pub responses: Vec<TrustResponse>,
    pub paired: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn read_trust(text: &str) -> Result<TrustTable, AnalyticsError> {
    let mut rdr = reader(text);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let resp_col = col("respondent").ok_or_else(|| AnalyticsError::Csv("missing `respondent` column".into()))?;
    let item_cols = (1..=ITEMS)
        .map(|i| col(&format!("item{i}")).ok_or_else(|| AnalyticsError::Csv(format!("missing `item{i}` column"))))
        .collect::<Result<Vec<_>, _>>()?;
    let pair_cols = col("explorative").zip(col("predictive"));
    let mut responses = Vec::new();
    let (mut explorative, mut predictive) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let items = item_cols
            .iter()
            .map(|c| {
                let f = rec.get(*c).unwrap_or("");
                f.parse::<u8>().map_err(|_| AnalyticsError::Csv(format!("trust item `{f}` is not an integer")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        responses.push(TrustResponse { respondent: rec.get(resp_col).unwrap_or("").to_string(), items });
        if let Some((e, p)) = pair_cols {
            explorative.push(num(rec.get(e).unwrap_or(""), "explorative")?);
            predictive.push(num(rec.get(p).unwrap_or(""), "predictive")?);
        }
    }
    Ok(TrustTable { responses, paired: pair_cols.map(|_| (explorative, predictive)) })
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct InteractionRow {
    timestamp: f64,
    source: String,
    destination: String,
    duration_seconds: f64,
    kind: InteractionKind,
    #[serde(default)]
    source_group: String,
    #[serde(default)]
    dest_group: String,
    #[serde(default)]
    source_role: Option<Role>,
    #[serde(default)]
    dest_role: Option<Role>,
}

pub fn read_interactions(text: &str) -> Result<Vec<InteractionEvent>, AnalyticsError> {
    reader(text)
        .deserialize::<InteractionRow>()
        .map(|row| {
            let r = row.map_err(csv_err)?;
            let e = InteractionEvent {
                timestamp: r.timestamp,
                source: r.source,
                destination: r.destination,
                duration_seconds: r.duration_seconds,
                kind: r.kind,
                source_group: r.source_group,
                dest_group: r.dest_group,
                source_role: r.source_role,
                dest_role: r.dest_role,
            };
            e.validate()?;
            Ok(e)
        })
        .collect()
}

pub fn read_points(text: &str) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    #[derive(Deserialize)]
    struct Point {
        x: f64,
        y: f64,
    }
    reader(text).deserialize::<Point>().map(|p| p.map(|p| (p.x, p.y)).map_err(csv_err)).collect()
}
