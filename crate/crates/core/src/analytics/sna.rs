//! Interaction-network metrics from observer logs.

use super::stats::{trend, StatResult};
use super::AnalyticsError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionKind {
    PersonPerson,
    PersonTool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Planner,
    Leader,
    Support,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    /// Seconds from the start of the observation period.
    pub timestamp: f64,
    pub source: String,
    /// Actor id, or tool id for person-tool events.
    pub destination: String,
    pub duration_seconds: f64,
    pub kind: InteractionKind,
    #[serde(default)]
    pub source_group: String,
    #[serde(default)]
    pub dest_group: String,
    #[serde(default)]
    pub source_role: Option<Role>,
    #[serde(default)]
    pub dest_role: Option<Role>,
}

impl InteractionEvent {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !(self.duration_seconds >= 0.0) || !self.duration_seconds.is_finite() {
            return Err(AnalyticsError::InvalidEvent(format!("duration {} must be >= 0", self.duration_seconds)));
        }
        if self.source == self.destination {
            return Err(AnalyticsError::InvalidEvent(format!("`{}` interacts with itself", self.source)));
        }
        if !self.timestamp.is_finite() {
            return Err(AnalyticsError::InvalidEvent("timestamp is not finite".into()));
        }
        Ok(())
    }

    fn involves_support(&self) -> bool {
        self.kind == InteractionKind::PersonTool
            || self.source_role == Some(Role::Support)
            || self.dest_role == Some(Role::Support)
    }
}

/// Half-open interval `[start, end)` of event timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    #[serde(with = "super::stats::extended_f64")]
    pub start: f64,
    #[serde(with = "super::stats::extended_f64")]
    pub end: f64,
}

impl TimeWindow {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn all() -> Self {
        Self { start: f64::NEG_INFINITY, end: f64::INFINITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnaEdge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SnaMetrics {
    pub actors: Vec<String>,
    pub edges: Vec<SnaEdge>,
    pub density: f64,
    pub weighted_degree: BTreeMap<String, f64>,
    /// Unnormalized, undirected, unit edge lengths.
    pub betweenness: BTreeMap<String, f64>,
    pub cross_group_fraction: f64,
}

/// Brandes' algorithm over an unweighted undirected adjacency list.
/// Each unordered pair is counted once.
pub fn betweenness(adjacency: &[Vec<usize>]) -> Vec<f64> {
    let n = adjacency.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

pub fn sna_metrics(events: &[InteractionEvent], window: TimeWindow) -> SnaMetrics {
    let mut weights: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut cross = 0.0;
    let mut total = 0.0;
    for e in events.iter().filter(|e| {
        e.kind == InteractionKind::PersonPerson && window.contains(e.timestamp) && e.source != e.destination
    }) {
        let key = if e.source <= e.destination {
            (e.source.clone(), e.destination.clone())
        } else {
            (e.destination.clone(), e.source.clone())
        };
        *weights.entry(key).or_default() += e.duration_seconds;
        total += e.duration_seconds;
        if e.source_group != e.dest_group {
            cross += e.duration_seconds;
        }
    }

    let actors: Vec<String> =
        weights.keys().flat_map(|(a, b)| [a.clone(), b.clone()]).collect::<BTreeSet<_>>().into_iter().collect();
    if actors.is_empty() {
        return SnaMetrics::default();
    }
    let index: BTreeMap<&str, usize> = actors.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut adjacency = vec![Vec::new(); actors.len()];
    let mut weighted_degree: BTreeMap<String, f64> = actors.iter().map(|a| (a.clone(), 0.0)).collect();
    for ((a, b), w) in &weights {
        adjacency[index[a.as_str()]].push(index[b.as_str()]);
        adjacency[index[b.as_str()]].push(index[a.as_str()]);
        *weighted_degree.get_mut(a).unwrap() += w;
        *weighted_degree.get_mut(b).unwrap() += w;
    }
    let n = actors.len() as f64;
    let density = if actors.len() < 2 { 0.0 } else { weights.len() as f64 / (n * (n - 1.0) / 2.0) };
    let bc = betweenness(&adjacency);

    SnaMetrics {
        edges: weights.into_iter().map(|((a, b), weight)| SnaEdge { a, b, weight }).collect(),
        density,
        weighted_degree,
        betweenness: actors.iter().cloned().zip(bc).collect(),
        cross_group_fraction: if total > 0.0 { cross / total } else { 0.0 },
        actors,
    }
}

/// Fraction of interaction time spent with tools or support personnel.
pub fn support_reliance(events: &[InteractionEvent], window: TimeWindow) -> f64 {
    let (mut support, mut total) = (0.0, 0.0);
    for e in events.iter().filter(|e| window.contains(e.timestamp)) {
        total += e.duration_seconds;
        if e.involves_support() {
            support += e.duration_seconds;
        }
    }
    if total > 0.0 {
        support / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelianceTrend {
    pub fractions: Vec<f64>,
    pub trend: StatResult,
}

/// Trend of support reliance over consecutive windows (x = window index).
pub fn support_reliance_trend(
    events: &[InteractionEvent],
    windows: &[TimeWindow],
) -> Result<RelianceTrend, AnalyticsError> {
    if windows.len() < 3 {
        return Err(AnalyticsError::TooFewPoints { needed: 3, got: windows.len() });
    }
    let fractions: Vec<f64> = windows.iter().map(|w| support_reliance(events, *w)).collect();
    let points: Vec<(f64, f64)> = fractions.iter().enumerate().map(|(i, f)| (i as f64, *f)).collect();
    Ok(RelianceTrend { trend: trend(&points)?, fractions })
}
