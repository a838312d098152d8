//! Agent network and dual-ownership bookkeeping.
//!
//! The network is an undirected graph on agents `1..=N`. Every undirected
//! edge `{i, j}` is stored once as the oriented pair `(i, j)` with `i < j`;
//! the lower-numbered endpoint owns the edge's dual block. Edge indices are
//! assigned by lexicographic order of the oriented pairs and are stable
//! across runs, so traces from different runs line up column by column.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream, TAG_GRAPH};
use rand::Rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("agent count must be at least 1")]
    EmptyAgentSet,
    #[error("edge ({0}, {1}) has an endpoint outside 1..={2}")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("self-loop ({0}, {0}) is not allowed")]
    SelfLoop(usize),
}

/// Undirected agent graph with the oriented edge list and derived sets.
///
/// Construct through [`Topology::build`]; the structure is immutable after
/// construction and safe to share read-only across workers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologySerde", into = "TopologySerde")]
pub struct Topology {
    num_agents: usize,
    oriented_edges: Vec<(usize, usize)>,
    neighbor_map: Vec<Vec<usize>>,
    updater_set: Vec<usize>,
}

/// Wire form: agent count plus 1-based `[i, j]` pairs.
#[derive(Serialize, Deserialize)]
struct TopologySerde {
    num_agents: usize,
    edges: Vec<[usize; 2]>,
}

impl From<Topology> for TopologySerde {
    fn from(t: Topology) -> Self {
        TopologySerde {
            num_agents: t.num_agents,
            edges: t.oriented_edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl TryFrom<TopologySerde> for Topology {
    type Error = TopologyError;
    fn try_from(w: TopologySerde) -> Result<Self, Self::Error> {
        Topology::build(w.num_agents, w.edges.iter().map(|&[i, j]| (i, j)))
    }
}

impl Topology {
    /// Builds a topology from an edge list over agents `1..=num_agents`.
    ///
    /// Edges may appear in any orientation and with duplicates; they are
    /// canonicalized to `(min, max)`, deduplicated and sorted. Disconnected
    /// graphs are permitted (see [`Topology::is_connected`]).
    pub fn build(
        num_agents: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        if num_agents == 0 {
            return Err(TopologyError::EmptyAgentSet);
        }
        let mut oriented: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            if a < 1 || a > num_agents || b < 1 || b > num_agents {
                return Err(TopologyError::EndpointOutOfRange(a, b, num_agents));
            }
            oriented.push((a.min(b), a.max(b)));
        }
        oriented.sort_unstable();
        oriented.dedup();

        let mut neighbor_map = vec![Vec::new(); num_agents + 1];
        for &(i, j) in &oriented {
            neighbor_map[i].push(j);
        }
        let updater_set = (1..=num_agents)
            .filter(|&i| !neighbor_map[i].is_empty())
            .collect();
        Ok(Topology {
            num_agents,
            oriented_edges: oriented,
            neighbor_map,
            updater_set,
        })
    }

    /// Path graph `1 - 2 - ... - n`.
    pub fn path(num_agents: usize) -> Result<Self, TopologyError> {
        Self::build(num_agents, (1..num_agents).map(|i| (i, i + 1)))
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    /// Oriented edges `(i, j)`, `i < j`, in lexicographic (index) order.
    pub fn oriented_edges(&self) -> &[(usize, usize)] {
        &self.oriented_edges
    }

    pub fn num_edges(&self) -> usize {
        self.oriented_edges.len()
    }

    /// Agents `j` with `(i, j)` in the oriented edge set: the neighbors whose
    /// shared dual block agent `i` owns.
    pub fn owned_neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbor_map[agent]
    }

    /// Agents responsible for updating at least one dual block.
    pub fn updater_set(&self) -> &[usize] {
        &self.updater_set
    }

    /// 0-based index of the oriented edge `(i, j)`, if present.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.oriented_edges.binary_search(&key).ok()
    }

    /// Edges incident to an agent (owned or not), as 0-based edge indices.
    pub fn incident_edges(&self, agent: usize) -> Vec<usize> {
        self.oriented_edges
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| i == agent || j == agent)
            .map(|(e, _)| e)
            .collect()
    }

    /// Whether every agent can reach every other agent.
    pub fn is_connected(&self) -> bool {
        if self.num_agents <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.num_agents + 1];
        for &(i, j) in &self.oriented_edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.num_agents + 1];
        let mut stack = vec![1usize];
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.num_agents
    }

    /// True when the graph is a spanning tree of the agent set.
    pub fn is_tree(&self) -> bool {
        self.num_edges() + 1 == self.num_agents && self.is_connected()
    }
}

/// A seeded unit-square geometric graph together with its placement.
#[derive(Debug, Clone)]
pub struct GeometricGraph {
    pub topology: Topology,
    pub positions: Vec<[f64; 2]>,
    pub connected: bool,
}

/// Places agents i.i.d. uniform in the unit square and connects pairs within
/// `radius`. Deterministic for a fixed seed; a disconnected result is
/// returned with `connected = false` rather than an error.
pub fn random_geometric_graph(
    num_agents: usize,
    radius: f64,
    seed: u64,
) -> Result<GeometricGraph, TopologyError> {
    if num_agents == 0 {
        return Err(TopologyError::EmptyAgentSet);
    }
    let positions = sample_positions(num_agents, seed);
    let r2 = radius * radius;
    let mut edges = Vec::new();
    for i in 0..num_agents {
        for j in (i + 1)..num_agents {
            if dist2(positions[i], positions[j]) <= r2 {
                edges.push((i + 1, j + 1));
            }
        }
    }
    let topology = Topology::build(num_agents, edges)?;
    let connected = topology.is_connected();
    Ok(GeometricGraph {
        topology,
        positions,
        connected,
    })
}

/// Radius that yields exactly `target_edges` edges for the seeded placement:
/// the distance of the `target`-th closest agent pair.
pub fn radius_for_edge_count(num_agents: usize, target_edges: usize, seed: u64) -> f64 {
    let max_pairs = num_agents * num_agents.saturating_sub(1) / 2;
    let target = target_edges.min(max_pairs);
    if target == 0 {
        return 0.0;
    }
    let positions = sample_positions(num_agents, seed);
    let mut d2: Vec<f64> = Vec::with_capacity(max_pairs);
    for i in 0..num_agents {
        for j in (i + 1)..num_agents {
            d2.push(dist2(positions[i], positions[j]));
        }
    }
    d2.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    d2[target - 1].sqrt()
}

fn sample_positions(num_agents: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = stream(seed, TAG_GRAPH);
    (0..num_agents)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect()
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_orientation_and_derives_sets() {
        let t = Topology::build(3, [(2, 1), (2, 3)]).unwrap();
        assert_eq!(t.oriented_edges(), &[(1, 2), (2, 3)]);
        assert_eq!(t.owned_neighbors(1), &[2]);
        assert_eq!(t.owned_neighbors(2), &[3]);
        assert_eq!(t.owned_neighbors(3), &[] as &[usize]);
        assert_eq!(t.updater_set(), &[1, 2]);
    }

    #[test]
    fn single_agent_has_no_coupling() {
        let t = Topology::build(1, []).unwrap();
        assert_eq!(t.num_edges(), 0);
        assert!(t.updater_set().is_empty());
        assert!(t.is_connected());
    }

    #[test]
    fn path_graph_shape() {
        let t = Topology::path(50).unwrap();
        assert_eq!(t.num_edges(), 49);
        for i in 2..50 {
            // every interior agent owns exactly the edge to its successor
            assert_eq!(t.owned_neighbors(i), &[i + 1]);
        }
        assert!(t.is_connected());
        assert!(t.is_tree());
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Topology::build(3, [(1, 4)]),
            Err(TopologyError::EndpointOutOfRange(1, 4, 3))
        );
        assert_eq!(Topology::build(3, [(2, 2)]), Err(TopologyError::SelfLoop(2)));
        assert_eq!(Topology::build(0, []), Err(TopologyError::EmptyAgentSet));
    }

    #[test]
    fn neighbor_counts_sum_to_edge_count() {
        let t = Topology::build(5, [(1, 2), (1, 3), (2, 4), (3, 5), (4, 5)]).unwrap();
        let total: usize = (1..=5).map(|i| t.owned_neighbors(i).len()).sum();
        assert_eq!(total, t.num_edges());
    }

    #[test]
    fn rebuild_from_own_edges_is_identity() {
        let t = Topology::build(4, [(3, 1), (1, 2), (2, 3), (2, 4)]).unwrap();
        let rebuilt =
            Topology::build(t.num_agents(), t.oriented_edges().iter().copied()).unwrap();
        assert_eq!(t, rebuilt);
    }

    #[test]
    fn unit_square_diameter_edge() {
        // radius 2 exceeds the unit-square diameter, so any two agents link
        let g = random_geometric_graph(2, 2.0, 123).unwrap();
        assert_eq!(g.topology.oriented_edges(), &[(1, 2)]);
        assert!(g.connected);
    }

    #[test]
    fn vanishing_radius_disconnects() {
        let g = random_geometric_graph(5, 0.001, 7).unwrap();
        assert_eq!(g.topology.num_edges(), 0);
        assert!(!g.connected);
    }

    #[test]
    fn radius_search_hits_target_edge_count() {
        let seed = 99;
        let r = radius_for_edge_count(50, 358, seed);
        let g = random_geometric_graph(50, r, seed).unwrap();
        assert_eq!(g.topology.num_edges(), 358);
    }

    #[test]
    fn geometric_graph_is_seed_deterministic() {
        let a = random_geometric_graph(20, 0.3, 5).unwrap();
        let b = random_geometric_graph(20, 0.3, 5).unwrap();
        assert_eq!(a.topology, b.topology);
    }

    #[test]
    fn serde_round_trip_preserves_indexing() {
        let t = Topology::build(4, [(2, 4), (1, 2), (1, 3)]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: Topology = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
        for (idx, &(i, j)) in t.oriented_edges().iter().enumerate() {
            assert_eq!(back.edge_index(i, j), Some(idx));
        }
    }
}
