//! Pathfinder networks from pairwise concept similarity ratings.
//!
//! A link between two concepts survives when no path of at most `q` links
//! is shorter under the Minkowski `r`-metric, where a path's weight is
//! `(Σ wᵢ^r)^(1/r)` and `r = ∞` takes the largest link weight.

use super::stats::extended_f64;
use super::AnalyticsError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

/// Ratings run from 1 (unrelated) to 9 (highly similar).
pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 9.0;
const FINITE_R_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub concepts: Vec<String>,
    /// Symmetric; the diagonal is ignored.
    pub ratings: Vec<Vec<f64>>,
}

fn check_square(concepts: &[String], m: &[Vec<f64>]) -> Result<(), AnalyticsError> {
    let n = concepts.len();
    if n < 2 {
        return Err(AnalyticsError::InvalidMatrix(format!("need at least 2 concepts, got {n}")));
    }
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(AnalyticsError::InvalidMatrix(format!("matrix must be {n}x{n}")));
    }
    let unique: BTreeSet<&String> = concepts.iter().collect();
    if unique.len() != n {
        return Err(AnalyticsError::InvalidMatrix("duplicate concept names".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[i][j] != m[j][i] {
                return Err(AnalyticsError::InvalidMatrix(format!(
                    "not symmetric at ({}, {})",
                    concepts[i], concepts[j]
                )));
            }
        }
    }
    Ok(())
}

impl SimilarityMatrix {
    pub fn new(concepts: Vec<String>, ratings: Vec<Vec<f64>>) -> Result<Self, AnalyticsError> {
        let m = Self { concepts, ratings };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        check_square(&self.concepts, &self.ratings)?;
        let n = self.concepts.len();
        for i in 0..n {
            for j in 0..n {
                let r = self.ratings[i][j];
                if i != j && !(SCALE_MIN..=SCALE_MAX).contains(&r) {
                    return Err(AnalyticsError::InvalidMatrix(format!("rating {r} outside [1, 9]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub concepts: Vec<String>,
    /// Symmetric, positive off the diagonal, zero on it.
    pub distances: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new(concepts: Vec<String>, distances: Vec<Vec<f64>>) -> Result<Self, AnalyticsError> {
        check_square(&concepts, &distances)?;
        let n = concepts.len();
        for i in 0..n {
            for j in 0..n {
                if i != j && !(distances[i][j] > 0.0) {
                    return Err(AnalyticsError::InvalidMatrix(format!("distance {} must be > 0", distances[i][j])));
                }
            }
        }
        Ok(Self { concepts, distances })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// `distance = 10 - rating` off the diagonal.
pub fn to_distances(sim: &SimilarityMatrix) -> DistanceMatrix {
    let n = sim.concepts.len();
    let distances = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { SCALE_MAX + 1.0 - sim.ratings[i][j] }).collect())
        .collect();
    DistanceMatrix { concepts: sim.concepts.clone(), distances }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfLink {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfNet {
    pub concepts: Vec<String>,
    pub q: usize,
    #[serde(with = "extended_f64")]
    pub r: f64,
    /// Sorted by concept position; `a` precedes `b` in `concepts`.
    pub links: Vec<PfLink>,
}

impl PfNet {
    /// Links as unordered name pairs.
    pub fn link_set(&self) -> BTreeSet<(String, String)> {
        self.links
            .iter()
            .map(|l| if l.a <= l.b { (l.a.clone(), l.b.clone()) } else { (l.b.clone(), l.a.clone()) })
            .collect()
    }
}

/// Build the network. `q` must lie in `[1, n-1]`, `r` in `[1, ∞]`.
pub fn pfnet(d: &DistanceMatrix, q: usize, r: f64) -> Result<PfNet, AnalyticsError> {
    let n = d.len();
    if n < 2 {
        return Err(AnalyticsError::InvalidMatrix("need at least 2 concepts".into()));
    }
    if q < 1 || q > n - 1 {
        return Err(AnalyticsError::InvalidParams(format!("q = {q} outside [1, {}]", n - 1)));
    }
    if !(r >= 1.0) {
        return Err(AnalyticsError::InvalidParams(format!("r = {r} must be >= 1")));
    }
    let infinite = r.is_infinite();
    // Work with w^r under min-plus for finite r, raw weights under min-max
    // for r = ∞; both are exact shortest-path semirings.
    let cost = |w: f64| if infinite { w } else { w.powf(r) };
    let combine = |a: f64, b: f64| if infinite { a.max(b) } else { a + b };
    let w: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { cost(d.distances[i][j]) }).collect()).collect();

    let mut best = w.clone();
    for _ in 1..q {
        let mut next = best.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for m in 0..n {
                    if m == i || m == j {
                        continue;
                    }
                    let via = combine(best[i][m], w[m][j]);
                    if via < next[i][j] {
                        next[i][j] = via;
                    }
                }
            }
        }
        best = next;
    }

    let mut links = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let direct = w[i][j];
            let keep = if infinite { direct <= best[i][j] } else { direct <= best[i][j] * (1.0 + FINITE_R_TOLERANCE) };
            if keep && d.distances[i][j].is_finite() {
                links.push(PfLink { a: d.concepts[i].clone(), b: d.concepts[j].clone(), weight: d.distances[i][j] });
            }
        }
    }
    Ok(PfNet { concepts: d.concepts.clone(), q, r, links })
}

/// Jaccard index of the two link sets; 1 when both are empty.
pub fn net_similarity(a: &PfNet, b: &PfNet) -> Result<f64, AnalyticsError> {
    let na: BTreeSet<&String> = a.concepts.iter().collect();
    let nb: BTreeSet<&String> = b.concepts.iter().collect();
    if na != nb {
        return Err(AnalyticsError::NodeSetMismatch);
    }
    let la = a.link_set();
    let lb = b.link_set();
    let union = la.union(&lb).count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(la.intersection(&lb).count() as f64 / union as f64)
}

/// Degree of each concept in the network.
pub fn degrees(net: &PfNet) -> HashMap<&str, usize> {
    let mut out: HashMap<&str, usize> = net.concepts.iter().map(|c| (c.as_str(), 0)).collect();
    for l in &net.links {
        *out.get_mut(l.a.as_str()).unwrap() += 1;
        *out.get_mut(l.b.as_str()).unwrap() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    }

    #[test]
    fn rating_to_distance() {
        let s = SimilarityMatrix::new(names(2), vec![vec![0.0, 9.0], vec![9.0, 0.0]]).unwrap();
        assert_eq!(to_distances(&s).distances[0][1], 1.0);
        let s = SimilarityMatrix::new(names(3), vec![vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 6.0], vec![4.0, 6.0, 0.0]])
            .unwrap();
        let d = to_distances(&s);
        assert_eq!(d.distances[0][1], 9.0);
        assert_eq!(d.distances[0][2], d.distances[2][0]);
    }

    #[test]
    fn similarity_matrix_validation() {
        assert!(SimilarityMatrix::new(names(1), vec![vec![0.0]]).is_err());
        assert!(SimilarityMatrix::new(names(2), vec![vec![0.0, 3.0], vec![4.0, 0.0]]).is_err());
        assert!(SimilarityMatrix::new(names(2), vec![vec![0.0, 10.0], vec![10.0, 0.0]]).is_err());
    }

    #[test]
    fn two_concepts_always_link() {
        let d = DistanceMatrix::new(names(2), vec![vec![0.0, 7.0], vec![7.0, 0.0]]).unwrap();
        assert_eq!(pfnet(&d, 1, f64::INFINITY).unwrap().links.len(), 1);
    }

    fn four() -> DistanceMatrix {
        // d(a,b)=1, d(b,c)=1, d(a,c)=3, everything else 10
        let mut m = vec![vec![10.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        let mut set = |i: usize, j: usize, v: f64| {
            m[i][j] = v;
            m[j][i] = v;
        };
        set(0, 1, 1.0);
        set(1, 2, 1.0);
        set(0, 2, 3.0);
        DistanceMatrix::new(names(4), m).unwrap()
    }

    #[test]
    fn q1_keeps_everything() {
        assert_eq!(pfnet(&four(), 1, f64::INFINITY).unwrap().links.len(), 6);
        assert_eq!(pfnet(&four(), 1, 1.0).unwrap().links.len(), 6);
    }

    /// Enumerated by hand: a-c (3) loses to a-b-c (max 1). Every 10-weight
    /// link to d ties with paths through other 10-weight links, so all
    /// three survive; no other link has a strictly cheaper path.
    #[test]
    fn four_node_example() {
        let net = pfnet(&four(), 3, f64::INFINITY).unwrap();
        let got: Vec<(String, String)> = net.link_set().into_iter().collect();
        let want: Vec<(String, String)> = [("a", "b"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")]
            .iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(pfnet(&four(), 0, 1.0), Err(AnalyticsError::InvalidParams(_))));
        assert!(matches!(pfnet(&four(), 4, 1.0), Err(AnalyticsError::InvalidParams(_))));
        assert!(matches!(pfnet(&four(), 2, 0.5), Err(AnalyticsError::InvalidParams(_))));
    }

    fn net(links: &[(&str, &str)]) -> PfNet {
        PfNet {
            concepts: names(4),
            q: 3,
            r: f64::INFINITY,
            links: links.iter().map(|(a, b)| PfLink { a: a.to_string(), b: b.to_string(), weight: 1.0 }).collect(),
        }
    }

    #[test]
    fn jaccard_examples() {
        let x = net(&[("a", "b"), ("b", "c")]);
        assert_eq!(net_similarity(&x, &x).unwrap(), 1.0);
        assert_eq!(net_similarity(&x, &net(&[("c", "d")])).unwrap(), 0.0);
        assert!((net_similarity(&x, &net(&[("a", "b"), ("c", "d")])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(net_similarity(&net(&[]), &net(&[])).unwrap(), 1.0);
        let mut other = net(&[]);
        other.concepts.pop();
        assert_eq!(net_similarity(&x, &other), Err(AnalyticsError::NodeSetMismatch));
    }

    #[test]
    fn infinite_r_round_trips() {
        let n = pfnet(&four(), 3, f64::INFINITY).unwrap();
        let s = serde_json::to_string(&n).unwrap();
        assert!(s.contains("\"r\":\"Infinity\""));
        assert_eq!(serde_json::from_str::<PfNet>(&s).unwrap(), n);
    }
}
