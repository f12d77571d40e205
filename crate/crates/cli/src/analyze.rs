//! `analyze`: assessment pipelines over CSV (or request JSON) inputs.

use crate::input::{emit, input_error, read_json, read_text, status};
use crate::Exit;
use clap::ValueEnum;
use std::path::{Path, PathBuf};
use wargame_client::Client;
use wargame_core::analytics::{
    self, csvio, AnalyticsError, PairedSamples, PfnetRequest, SnaRequest, TimeWindow, TlxRequest, TrendRequest,
    TrustRequest,
};
use wargame_core::canonical_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    /// Pathfinder network from a concept similarity matrix.
    Pfnet,
    /// NASA-TLX weighted workload per respondent.
    Tlx,
    /// Interaction-network metrics from an observer log.
    Sna,
    /// Least-squares trend of `x,y` points.
    Trend,
    /// Trust-scale scores, with an optional paired t test.
    Trust,
}

impl Analysis {
    fn endpoint(self) -> &'static str {
        match self {
            Analysis::Pfnet => "pfnet",
            Analysis::Tlx => "tlx",
            Analysis::Sna => "sna",
            Analysis::Trend => "trend",
            Analysis::Trust => "trust",
        }
    }
}

pub struct AnalyzeArgs {
    pub analysis: Analysis,
    pub input: PathBuf,
    pub q: Option<usize>,
    pub r: Option<f64>,
    pub referent: Option<PathBuf>,
    pub reverse: Vec<usize>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub reliance_window: Option<f64>,
    pub out: Option<PathBuf>,
    pub server: Option<String>,
}

/// Parse `--r`: a number >= 1, or `inf`.
pub fn parse_r(s: &str) -> Result<f64, String> {
    let v = match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        other => other.parse::<f64>().map_err(|_| format!("`{s}` is not a number or `inf`"))?,
    };
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("r must be >= 1, got {s}"))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn csv_input<T>(path: &Path, read: impl Fn(&str) -> Result<T, AnalyticsError>) -> anyhow::Result<T> {
    let text = read_text(path)?;
    read(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn windows_of(events: &[analytics::InteractionEvent], width: f64) -> anyhow::Result<Vec<TimeWindow>> {
    if !(width > 0.0) {
        return Err(input_error("--reliance-window must be > 0"));
    }
    let end = events.iter().map(|e| e.timestamp).fold(0.0, f64::max);
    let count = ((end / width).floor() as usize) + 1;
    Ok((0..count).map(|k| TimeWindow { start: k as f64 * width, end: (k + 1) as f64 * width }).collect())
}

/// Build the JSON request body for the chosen pipeline.
fn request(args: &AnalyzeArgs) -> anyhow::Result<serde_json::Value> {
    let json = is_json(&args.input);
    let value = match args.analysis {
        Analysis::Pfnet => {
            let mut req: PfnetRequest = if json {
                read_json(&args.input)?
            } else {
                let similarity = csv_input(&args.input, csvio::read_similarity)?;
                PfnetRequest { similarity: Some(similarity), distances: None, q: None, r: f64::INFINITY, referent: None }
            };
            if args.q.is_some() {
                req.q = args.q;
            }
            if let Some(r) = args.r {
                req.r = r;
            }
            if let Some(path) = &args.referent {
                req.referent = Some(csv_input(path, csvio::read_similarity)?);
            }
            serde_json::to_value(req)?
        }
        Analysis::Tlx => {
            let req: TlxRequest = if json {
                read_json(&args.input)?
            } else {
                TlxRequest { responses: csv_input(&args.input, csvio::read_tlx)? }
            };
            serde_json::to_value(req)?
        }
        Analysis::Sna => {
            let mut req: SnaRequest = if json {
                read_json(&args.input)?
            } else {
                SnaRequest { events: csv_input(&args.input, csvio::read_interactions)?, window: None, reliance_windows: vec![] }
            };
            if args.from.is_some() || args.to.is_some() {
                req.window = Some(TimeWindow {
                    start: args.from.unwrap_or(f64::NEG_INFINITY),
                    end: args.to.unwrap_or(f64::INFINITY),
                });
            }
            if let Some(w) = args.reliance_window {
                req.reliance_windows = windows_of(&req.events, w)?;
            }
            serde_json::to_value(req)?
        }
        Analysis::Trend => {
            let req: TrendRequest = if json {
                read_json(&args.input)?
            } else {
                TrendRequest { points: csv_input(&args.input, csvio::read_points)? }
            };
            serde_json::to_value(req)?
        }
        Analysis::Trust => {
            let mut req: TrustRequest = if json {
                read_json(&args.input)?
            } else {
                let table = csv_input(&args.input, csvio::read_trust)?;
                TrustRequest {
                    responses: table.responses,
                    reverse_items: vec![],
                    paired: table.paired.map(|(a, b)| PairedSamples { a, b }),
                }
            };
            if !args.reverse.is_empty() {
                req.reverse_items = args.reverse.clone();
            }
            serde_json::to_value(req)?
        }
    };
    Ok(value)
}

fn local(analysis: Analysis, body: serde_json::Value) -> anyhow::Result<Result<String, AnalyticsError>> {
    fn go<Req: serde::de::DeserializeOwned, Rep: serde::Serialize>(
        body: serde_json::Value,
        f: impl Fn(&Req) -> Result<Rep, AnalyticsError>,
    ) -> anyhow::Result<Result<String, AnalyticsError>> {
        let req: Req = serde_json::from_value(body).map_err(|e| input_error(format!("malformed request: {e}")))?;
        Ok(f(&req).map(|rep| canonical_json(&rep)))
    }
    match analysis {
        Analysis::Pfnet => go(body, analytics::run_pfnet),
        Analysis::Tlx => go(body, analytics::run_tlx),
        Analysis::Sna => go(body, analytics::run_sna),
        Analysis::Trend => go(body, analytics::run_trend),
        Analysis::Trust => go(body, analytics::run_trust),
    }
}

fn remote(url: &str, analysis: Analysis, body: serde_json::Value) -> anyhow::Result<Result<String, String>> {
    fn typed<T: serde::de::DeserializeOwned>(body: serde_json::Value) -> anyhow::Result<T> {
        serde_json::from_value(body).map_err(|e| input_error(format!("malformed request: {e}")))
    }
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(async {
        let client = Client::new(url);
        let report = match analysis {
            Analysis::Pfnet => client.pfnet(&typed(body)?).await.map(|r| canonical_json(&r)),
            Analysis::Tlx => client.tlx(&typed(body)?).await.map(|r| canonical_json(&r)),
            Analysis::Sna => client.sna(&typed(body)?).await.map(|r| canonical_json(&r)),
            Analysis::Trend => client.trend(&typed(body)?).await.map(|r| canonical_json(&r)),
            Analysis::Trust => client.trust(&typed(body)?).await.map(|r| canonical_json(&r)),
        };
        match report {
            Ok(text) => Ok(Ok(text)),
            Err(e) if e.status() == Some(422) => Ok(Err(e.to_string())),
            Err(e) => Err(e.into()),
        }
    })
}

pub fn analyze(args: AnalyzeArgs) -> anyhow::Result<Exit> {
    let body = request(&args)?;
    let outcome = match &args.server {
        None => local(args.analysis, body)?.map_err(|e| e.to_string()),
        Some(url) => remote(url, args.analysis, body)?,
    };
    match outcome {
        Ok(text) => {
            emit(args.out.as_deref(), &text)?;
            status(args.out.is_some(), &format!("{} analysis of {} complete", args.analysis.endpoint(), args.input.display()));
            Ok(Exit::Ok)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(Exit::Findings)
        }
    }
}
