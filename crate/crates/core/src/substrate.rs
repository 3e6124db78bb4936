//! The physical network: nodes and undirected links with capacities, plus
//! the shortest-path machinery the oracles build on.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Index of a node in a [`SubstrateNetwork`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Index of an edge in a [`SubstrateNetwork`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A capacitated resource: one row of the constraint matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceId {
    Edge(EdgeId),
    Node(NodeId),
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceId::Edge(e) => e.fmt(f),
            ResourceId::Node(v) => v.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub name: String,
    /// Packet-rate capacity; `None` means unbounded (no matrix row).
    pub capacity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub capacity: f64,
}

impl Edge {
    /// The endpoint opposite to `from`.
    pub fn other(&self, from: NodeId) -> NodeId {
        if self.u == from {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SubstrateError {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("edge {edge} references unknown node {node}")]
    DanglingEndpoint { edge: usize, node: usize },
    #[error("edge {edge} is a self-loop")]
    SelfLoop { edge: usize },
    #[error("edge {edge} duplicates an earlier edge between the same nodes")]
    ParallelEdge { edge: usize },
    #[error("edge {edge} has capacity {capacity}, expected at least 1")]
    EdgeCapacity { edge: usize, capacity: f64 },
    #[error("node `{name}` has capacity {capacity}, expected at least 1")]
    NodeCapacity { name: String, capacity: f64 },
}

/// Undirected, simple, capacitated graph.
///
/// Immutable once built. Adjacency lists are sorted by neighbour index so
/// every traversal is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstrateNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

impl SubstrateNetwork {
    /// Builds and validates a network.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, SubstrateError> {
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].iter().any(|m| m.name == n.name) {
                return Err(SubstrateError::DuplicateNode(n.name.clone()));
            }
            if let Some(c) = n.capacity {
                if !(c >= 1.0) || !c.is_finite() {
                    return Err(SubstrateError::NodeCapacity {
                        name: n.name.clone(),
                        capacity: c,
                    });
                }
            }
        }
        for (i, e) in edges.iter().enumerate() {
            for end in [e.u, e.v] {
                if end.0 >= nodes.len() {
                    return Err(SubstrateError::DanglingEndpoint { edge: i, node: end.0 });
                }
            }
            if e.u == e.v {
                return Err(SubstrateError::SelfLoop { edge: i });
            }
            if !(e.capacity >= 1.0) || !e.capacity.is_finite() {
                return Err(SubstrateError::EdgeCapacity {
                    edge: i,
                    capacity: e.capacity,
                });
            }
        }
        let net = Self::build_unchecked(nodes, edges);
        for adj in &net.adjacency {
            for w in adj.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(SubstrateError::ParallelEdge {
                        edge: w[0].1 .0.max(w[1].1 .0),
                    });
                }
            }
        }
        Ok(net)
    }

    fn build_unchecked(nodes: Vec<Node>, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.u.0].push((e.v, EdgeId(i)));
            adjacency[e.v.0].push((e.u, EdgeId(i)));
        }
        for adj in &mut adjacency {
            adj.sort();
        }
        SubstrateNetwork {
            nodes,
            edges,
            adjacency,
        }
    }

    /// Copy of this network with every finite capacity divided by `factor`.
    ///
    /// The result may have capacities below 1 and is only meant for the
    /// engine's scaled-capacity mode.
    pub fn with_scaled_capacities(&self, factor: f64) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                name: n.name.clone(),
                capacity: n.capacity.map(|c| c / factor),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                u: e.u,
                v: e.v,
                capacity: e.capacity / factor,
            })
            .collect();
        Self::build_unchecked(nodes, edges)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    /// Neighbours of `v` with the connecting edge, sorted by neighbour.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[v.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        let adj = self.adjacency.get(a.0)?;
        adj.binary_search_by(|(n, _)| n.cmp(&b))
            .ok()
            .map(|i| adj[i].1)
    }

    /// Capacity of a resource, `None` when unbounded.
    pub fn capacity(&self, r: ResourceId) -> Option<f64> {
        match r {
            ResourceId::Edge(e) => Some(self.edges[e.0].capacity),
            ResourceId::Node(v) => self.nodes[v.0].capacity,
        }
    }
}

/// Path cost ordered first by weight, then by hop count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathCost {
    pub weight: f64,
    pub hops: usize,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost { weight: 0.0, hops: 0 };

    pub fn extend(self, weight: f64) -> PathCost {
        PathCost {
            weight: self.weight + weight,
            hops: self.hops + 1,
        }
    }
}

impl Eq for PathCost {}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.hops.cmp(&other.hops))
    }
}

/// A cost view over the substrate: edges and nodes may be removed
/// (`None`), remaining ones carry nonnegative costs.
#[derive(Clone, Debug)]
pub struct WeightedView<'a> {
    pub net: &'a SubstrateNetwork,
    pub edge_cost: Vec<Option<f64>>,
    pub node_cost: Vec<Option<f64>>,
}

impl<'a> WeightedView<'a> {
    /// Every edge and node present; edges weighted by `weights`, nodes free.
    pub fn edge_weighted(net: &'a SubstrateNetwork, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), net.edge_count());
        WeightedView {
            net,
            edge_cost: weights.iter().map(|&w| Some(w)).collect(),
            node_cost: vec![Some(0.0); net.node_count()],
        }
    }

    pub fn edge_present(&self, e: EdgeId) -> bool {
        let edge = self.net.edge(e);
        self.edge_cost[e.0].is_some()
            && self.node_cost[edge.u.0].is_some()
            && self.node_cost[edge.v.0].is_some()
    }

    pub fn node_present(&self, v: NodeId) -> bool {
        self.node_cost[v.0].is_some()
    }

    pub fn edge_weight(&self, e: EdgeId) -> f64 {
        self.edge_cost[e.0].unwrap_or(f64::INFINITY)
    }

    pub fn node_weight(&self, v: NodeId) -> f64 {
        self.node_cost[v.0].unwrap_or(f64::INFINITY)
    }

    pub fn has_node_costs(&self) -> bool {
        self.node_cost.iter().any(|c| matches!(c, Some(w) if *w != 0.0))
    }

    /// Total cost of a set of edges and the nodes they touch (plus
    /// `extra_nodes`, normally the terminals).
    pub fn tree_cost(&self, edges: &[EdgeId], extra_nodes: &[NodeId]) -> f64 {
        let mut nodes: Vec<NodeId> = extra_nodes.to_vec();
        for &e in edges {
            let edge = self.net.edge(e);
            nodes.push(edge.u);
            nodes.push(edge.v);
        }
        nodes.sort();
        nodes.dedup();
        edges.iter().map(|&e| self.edge_weight(e)).sum::<f64>()
            + nodes.iter().map(|&v| self.node_weight(v)).sum::<f64>()
    }

    /// Single-source shortest paths. Entering a node adds its node cost;
    /// the source's own cost is not counted.
    pub fn shortest_paths(&self, source: NodeId) -> ShortestPaths {
        self.shortest_paths_multi(&[(source, PathCost::ZERO)])
    }

    /// Multi-source variant: each source starts at the given cost.
    pub fn shortest_paths_multi(&self, sources: &[(NodeId, PathCost)]) -> ShortestPaths {
        let n = self.net.node_count();
        let mut dist: Vec<Option<PathCost>> = vec![None; n];
        let mut pred: Vec<Option<(NodeId, EdgeId)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &(s, c) in sources {
            if !self.node_present(s) {
                continue;
            }
            if dist[s.0].is_none_or(|d| c < d) {
                dist[s.0] = Some(c);
                heap.push(HeapEntry { cost: c, node: s });
            }
        }
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if done[node.0] || dist[node.0] != Some(cost) {
                continue;
            }
            done[node.0] = true;
            for &(next, e) in self.net.neighbors(node) {
                if !self.edge_present(e) || done[next.0] {
                    continue;
                }
                let cand = cost.extend(self.edge_weight(e) + self.node_weight(next));
                let better = match dist[next.0] {
                    None => true,
                    Some(d) => {
                        cand < d || (cand == d && pred[next.0].is_some_and(|(p, _)| node < p))
                    }
                };
                if better {
                    dist[next.0] = Some(cand);
                    pred[next.0] = Some((node, e));
                    heap.push(HeapEntry {
                        cost: cand,
                        node: next,
                    });
                }
            }
        }
        ShortestPaths { dist, pred }
    }
}

#[derive(PartialEq, Eq)]
struct HeapEntry {
    cost: PathCost,
    node: NodeId,
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of a Dijkstra run.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    dist: Vec<Option<PathCost>>,
    pred: Vec<Option<(NodeId, EdgeId)>>,
}

impl ShortestPaths {
    pub fn cost(&self, v: NodeId) -> Option<PathCost> {
        self.dist[v.0]
    }

    pub fn distance(&self, v: NodeId) -> f64 {
        self.dist[v.0].map_or(f64::INFINITY, |c| c.weight)
    }

    /// Path from the (nearest) source to `target`, if reachable.
    pub fn path_to(&self, target: NodeId) -> Option<Path> {
        self.dist[target.0]?;
        let mut nodes = vec![target];
        let mut edges = Vec::new();
        let mut cur = target;
        while let Some((p, e)) = self.pred[cur.0] {
            nodes.push(p);
            edges.push(e);
            cur = p;
        }
        nodes.reverse();
        edges.reverse();
        Some(Path { nodes, edges })
    }
}

/// A walk through the substrate, `nodes.len() == edges.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

/// Shortest-path distances and paths between every pair of terminals.
#[derive(Clone, Debug)]
pub struct MetricClosure {
    pub terminals: Vec<NodeId>,
    /// `weight[i][j]`, infinite when unreachable.
    pub weight: Vec<Vec<f64>>,
    paths: Vec<Vec<Option<Path>>>,
}

impl MetricClosure {
    pub fn path(&self, i: usize, j: usize) -> Option<&Path> {
        self.paths[i][j].as_ref()
    }

    pub(crate) fn build(view: &WeightedView<'_>, terminals: &[NodeId]) -> Self {
        let k = terminals.len();
        let mut weight = vec![vec![f64::INFINITY; k]; k];
        let mut paths = vec![vec![None; k]; k];
        for i in 0..k {
            let sp = view.shortest_paths(terminals[i]);
            for j in 0..k {
                if let Some(p) = sp.path_to(terminals[j]) {
                    weight[i][j] = sp.distance(terminals[j]);
                    paths[i][j] = Some(p);
                }
            }
        }
        MetricClosure {
            terminals: terminals.to_vec(),
            weight,
            paths,
        }
    }
}

/// Complete terminal graph whose weights are shortest-path distances in
/// `net` under `weights`, along with realizing paths.
pub fn shortest_path_closure(
    net: &SubstrateNetwork,
    weights: &[f64],
    terminals: &[NodeId],
) -> MetricClosure {
    MetricClosure::build(&WeightedView::edge_weighted(net, weights), terminals)
}
