//! Undirected weighted interaction graphs.
//!
//! Vertices are 0-based (`0..N`) everywhere, including in config files.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resample budget for [`Graph::random_connected`].
pub const DEFAULT_RESAMPLE_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Smaller endpoint.
    pub i: usize,
    /// Larger endpoint.
    pub j: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Builds a graph from weighted edges. Rejects self-loops, duplicates,
    /// out-of-range endpoints and non-positive weights.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        let mut seen = BTreeMap::new();
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Graph(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop at vertex {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Graph(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, w).is_some() {
                return Err(Error::Graph(format!("duplicate edge {key:?}")));
            }
        }
        let edges: Vec<Edge> = seen
            .into_iter()
            .map(|((i, j), weight)| Edge { i, j, weight })
            .collect();
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            neighbors[e.i].push((e.j, e.weight));
            neighbors[e.j].push((e.i, e.weight));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(k, _)| k);
        }
        Ok(Self {
            n,
            edges,
            neighbors,
        })
    }

    /// Unit-weight graph.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted)
    }

    /// Cycle `0 - 1 - ... - (N-1) - 0`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Graph(format!("cycle needs N >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Graph(format!("path needs N >= 2, got {n}")));
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Graph(format!(
                "complete graph needs N >= 2, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// One Erdős–Rényi `G(N, edge_prob)` draw, unit weights; may be disconnected.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, edge_prob: f64, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Err(Error::Graph(format!("Erdos-Renyi needs N >= 2, got {n}")));
        }
        if !(edge_prob > 0.0 && edge_prob <= 1.0) {
            return Err(Error::Graph(format!(
                "edge_prob must lie in (0, 1], got {edge_prob}"
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                // always draw so the stream position does not depend on edge_prob
                let u: f64 = rng.random();
                if u < edge_prob {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Erdős–Rényi sample resampled until connected, giving up after
    /// `max_attempts` draws.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        edge_prob: f64,
        rng: &mut R,
        max_attempts: usize,
    ) -> Result<Self> {
        for _ in 0..max_attempts {
            let g = Self::erdos_renyi(n, edge_prob, rng)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::ResampleBudget {
            attempts: max_attempts,
            n,
            edge_prob,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted lexicographically with `i < j`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, weight)` pairs sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.neighbors[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn max_weighted_degree(&self) -> f64 {
        (0..self.n)
            .map(|i| self.weighted_degree(i))
            .fold(0.0, f64::max)
    }

    /// First edge whose weight differs from 1, if any.
    pub fn first_non_unit_edge(&self) -> Option<&Edge> {
        self.edges.iter().find(|e| e.weight != 1.0)
    }

    pub fn has_unit_weights(&self) -> bool {
        self.first_non_unit_edge().is_none()
    }

    /// Breadth-first search from vertex 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }
}

/// Serializable graph description used in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphSpec {
    Cycle {
        #[serde(rename = "N")]
        n: usize,
    },
    Path {
        #[serde(rename = "N")]
        n: usize,
    },
    Complete {
        #[serde(rename = "N")]
        n: usize,
    },
    ErdosRenyi {
        #[serde(rename = "N")]
        n: usize,
        edge_prob: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl GraphSpec {
    /// Builds the graph. Erdős–Rényi graphs use `seed` if given, else
    /// `fallback_seed`.
    pub fn build(&self, fallback_seed: u64) -> Result<Graph> {
        match *self {
            GraphSpec::Cycle { n } => Graph::cycle(n),
            GraphSpec::Path { n } => Graph::path(n),
            GraphSpec::Complete { n } => Graph::complete(n),
            GraphSpec::ErdosRenyi { n, edge_prob, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed));
                Graph::random_connected(n, edge_prob, &mut rng, DEFAULT_RESAMPLE_ATTEMPTS)
            }
        }
    }

    pub fn num_vertices(&self) -> usize {
        match *self {
            GraphSpec::Cycle { n }
            | GraphSpec::Path { n }
            | GraphSpec::Complete { n }
            | GraphSpec::ErdosRenyi { n, .. } => n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_edge_counts() {
        let c = Graph::cycle(5).unwrap();
        assert_eq!(c.num_edges(), 5);
        assert!(c.edges().iter().any(|e| (e.i, e.j) == (0, 4)));
        let p = Graph::path(2).unwrap();
        assert_eq!(p.num_edges(), 1);
        assert_eq!((p.edges()[0].i, p.edges()[0].j), (0, 1));
        assert_eq!(Graph::complete(4).unwrap().num_edges(), 6);
        assert!(c.has_unit_weights());
    }

    #[test]
    fn constructors_reject_small_n() {
        assert!(Graph::cycle(2).is_err());
        assert!(Graph::path(1).is_err());
        assert!(Graph::complete(1).is_err());
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        assert!(Graph::from_weighted_edges(3, &[(0, 1, 0.0)]).is_err());
        assert!(Graph::from_weighted_edges(3, &[(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn connectivity() {
        assert!(Graph::cycle(5).unwrap().is_connected());
        assert!(!Graph::from_edges(4, &[(0, 1), (2, 3)])
            .unwrap()
            .is_connected());
        let broken: Vec<_> = (0..5).filter(|&i| i != 2).map(|i| (i, i + 1)).collect();
        assert!(!Graph::from_edges(6, &broken).unwrap().is_connected());
        assert!(Graph::from_edges(1, &[]).unwrap().is_connected());
    }

    #[test]
    fn neighbor_sets_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Graph::random_connected(9, 0.3, &mut rng, 1000).unwrap();
        let mut total = 0;
        for i in 0..g.num_vertices() {
            total += g.degree(i);
            for &(j, w) in g.neighbors(i) {
                assert!(g.neighbors(j).contains(&(i, w)));
            }
        }
        assert_eq!(total, 2 * g.num_edges());
    }

    #[test]
    fn random_connected_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            Graph::random_connected(6, 1.0, &mut rng, 10).unwrap(),
            Graph::complete(6).unwrap()
        );
        let a = Graph::random_connected(8, 0.4, &mut ChaCha8Rng::seed_from_u64(5), 100).unwrap();
        let b = Graph::random_connected(8, 0.4, &mut ChaCha8Rng::seed_from_u64(5), 100).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
    }

    #[test]
    fn random_connected_budget_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = Graph::random_connected(40, 0.01, &mut rng, 5).unwrap_err();
        assert!(matches!(err, Error::ResampleBudget { attempts: 5, .. }));
        assert!(Graph::erdos_renyi(4, 0.0, &mut rng).is_err());
        assert!(Graph::erdos_renyi(4, 1.5, &mut rng).is_err());
    }

    #[test]
    fn graph_spec_json() {
        let spec: GraphSpec =
            serde_json::from_str(r#"{"type": "erdos_renyi", "N": 8, "edge_prob": 0.4}"#).unwrap();
        assert_eq!(
            spec,
            GraphSpec::ErdosRenyi {
                n: 8,
                edge_prob: 0.4,
                seed: None
            }
        );
        let g = spec.build(17).unwrap();
        assert!(g.is_connected());
        let cyc: GraphSpec = serde_json::from_str(r#"{"type": "cycle", "N": 6}"#).unwrap();
        assert_eq!(cyc.build(0).unwrap().num_edges(), 6);
    }
}
