//! Planted-solution instance generator.
//!
//! Every request is embedded along a random walk before capacities are
//! chosen, and capacities are then set so that all planted embeddings fit
//! at once. The offline optimum is therefore the total benefit.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use gvop_core::requests::Slot;
use gvop_core::{EdgeId, Embedding, NodeId, ResourceId, SlotSet, SubstrateNetwork, VNetRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::{FormatError, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub requests: usize,
    /// Terminals per request.
    pub terminals: usize,
    /// Walk steps between consecutive terminals.
    pub stride: usize,
    pub ingress_min: f64,
    pub ingress_max: f64,
    pub benefit_min: f64,
    pub benefit_max: f64,
    /// Arrivals are spread evenly over this many slots.
    pub arrival_slots: u32,
    /// Durations are drawn uniformly from `1..=max_duration`.
    pub max_duration: u32,
    /// Capacities are the planted load (at least 1) times this factor.
    pub capacity_factor: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            requests: 20,
            terminals: 3,
            stride: 2,
            ingress_min: 1.0,
            ingress_max: 1.0,
            benefit_min: 1.0,
            benefit_max: 10.0,
            arrival_slots: 1,
            max_duration: 1,
            capacity_factor: 1.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator parameter: {0}")]
    Params(&'static str),
    #[error("topology is empty or disconnected")]
    Disconnected,
    #[error("topology has fewer than {0} nodes")]
    TooFewNodes(usize),
    #[error("random walk failed to collect terminals after {0} attempts")]
    RetriesExhausted(usize),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedInstance {
    pub network: SubstrateNetwork,
    pub requests: Vec<VNetRequest>,
    /// The planted embedding of each request, in request order.
    pub planted: Vec<Embedding>,
    pub planted_optimum: f64,
}

const WALK_ATTEMPTS: usize = 32;

impl GeneratorParams {
    fn validate(&self) -> Result<(), GeneratorError> {
        let p = |ok: bool, msg| if ok { Ok(()) } else { Err(GeneratorError::Params(msg)) };
        p(self.terminals >= 2, "terminals must be at least 2")?;
        p(self.stride >= 1, "stride must be positive")?;
        p(
            self.ingress_min >= 1.0 && self.ingress_max >= self.ingress_min && self.ingress_max.is_finite(),
            "ingress range must satisfy 1 <= min <= max",
        )?;
        p(
            self.benefit_max >= self.benefit_min && self.benefit_max.is_finite(),
            "benefit range must satisfy min <= max",
        )?;
        p(self.arrival_slots >= 1, "arrival slots must be positive")?;
        p(self.max_duration >= 1, "maximum duration must be positive")?;
        p(
            self.capacity_factor >= 1.0 && self.capacity_factor.is_finite(),
            "capacity factor must be at least 1",
        )
    }
}

/// Draws a planted instance on `topology`. Known capacities are kept
/// unless the planted load needs more.
pub fn generate_planted_instance(
    topology: &Topology,
    seed: u64,
    params: &GeneratorParams,
) -> Result<PlantedInstance, GeneratorError> {
    params.validate()?;
    if !topology.is_connected() {
        return Err(GeneratorError::Disconnected);
    }
    if topology.nodes.len() < params.terminals {
        return Err(GeneratorError::TooFewNodes(params.terminals));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adjacency = topology.adjacency();
    let edge_index: BTreeMap<(usize, usize), usize> = topology
        .edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v, _))| ((u.min(v), u.max(v)), i))
        .collect();

    let mut requests = Vec::with_capacity(params.requests);
    let mut planted = Vec::with_capacity(params.requests);
    let mut load: BTreeMap<(usize, Slot), f64> = BTreeMap::new();
    for j in 0..params.requests {
        let (terminals, tree_edges) = walk_tree(&adjacency, &edge_index, params, &mut rng)?;
        let ingress = draw(&mut rng, params.ingress_min, params.ingress_max);
        let benefit = draw(&mut rng, params.benefit_min, params.benefit_max).max(1.0);
        let arrival = (j as u64 * params.arrival_slots as u64 / params.requests as u64) as Slot;
        let duration = rng.gen_range(1..=params.max_duration);
        let slots = SlotSet::interval(arrival, arrival + duration);

        let mut embedding = Embedding::default();
        for &e in &tree_edges {
            embedding.edge_reservation.insert(EdgeId(e), ingress);
            for t in slots.iter() {
                *load.entry((e, t)).or_insert(0.0) += ingress;
            }
        }
        planted.push(embedding);
        requests.push(
            VNetRequest::aggregate(j as u64 + 1, terminals.into_iter().map(NodeId).collect(), ingress, benefit)
                .with_slots(slots),
        );
    }

    let mut peak = vec![0.0f64; topology.edges.len()];
    for (&(e, _), &l) in &load {
        peak[e] = peak[e].max(l);
    }
    let mut sized = topology.clone();
    for (edge, p) in sized.edges.iter_mut().zip(&peak) {
        let needed = p.max(1.0) * params.capacity_factor;
        edge.2 = Some(edge.2.map_or(needed, |given| given.max(needed)));
    }
    let network = sized.into_network()?;
    let planted_optimum = requests.iter().map(|r| r.benefit).sum();
    Ok(PlantedInstance {
        network,
        requests,
        planted,
        planted_optimum,
    })
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Walks from a random node, picking up a new terminal every `stride`
/// steps, and returns the terminals plus a tree of walked edges spanning
/// them.
fn walk_tree(
    adjacency: &[Vec<usize>],
    edge_index: &BTreeMap<(usize, usize), usize>,
    params: &GeneratorParams,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>), GeneratorError> {
    let n = adjacency.len();
    let max_steps = 50 * params.stride * params.terminals * n;
    for _ in 0..WALK_ATTEMPTS {
        let start = rng.gen_range(0..n);
        let mut terminals = vec![start];
        let mut walked: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut at = start;
        let mut steps = 0;
        while terminals.len() < params.terminals && steps < max_steps {
            let next = adjacency[at][rng.gen_range(0..adjacency[at].len())];
            walked.insert((at.min(next), at.max(next)));
            at = next;
            steps += 1;
            if steps % params.stride == 0 && !terminals.contains(&at) {
                terminals.push(at);
            }
        }
        if terminals.len() == params.terminals {
            let tree = prune_to_terminals(n, &walked, &terminals);
            return Ok((terminals, tree.iter().map(|k| edge_index[k]).collect()));
        }
    }
    Err(GeneratorError::RetriesExhausted(WALK_ATTEMPTS))
}

/// BFS tree of the walked subgraph, with non-terminal leaves removed.
fn prune_to_terminals(n: usize, walked: &BTreeSet<(usize, usize)>, terminals: &[usize]) -> BTreeSet<(usize, usize)> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in walked {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut parent = vec![usize::MAX; n];
    parent[terminals[0]] = terminals[0];
    let mut queue = VecDeque::from([terminals[0]]);
    let mut tree: BTreeSet<(usize, usize)> = BTreeSet::new();
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                tree.insert((v.min(w), v.max(w)));
                queue.push_back(w);
            }
        }
    }
    loop {
        let mut degree = vec![0usize; n];
        for &(u, v) in &tree {
            degree[u] += 1;
            degree[v] += 1;
        }
        let leaf = tree
            .iter()
            .copied()
            .find(|&(u, v)| (degree[u] == 1 && !terminals.contains(&u)) || (degree[v] == 1 && !terminals.contains(&v)));
        match leaf {
            Some(e) => {
                tree.remove(&e);
            }
            None => return tree,
        }
    }
}

/// Checks that the planted embeddings fit the capacities simultaneously.
pub fn planted_is_feasible(instance: &PlantedInstance) -> bool {
    let mut load: BTreeMap<(ResourceId, Slot), f64> = BTreeMap::new();
    for (req, emb) in instance.requests.iter().zip(&instance.planted) {
        for (r, a) in emb.entries() {
            for t in req.slots.iter() {
                *load.entry((r, t)).or_insert(0.0) += a;
            }
        }
    }
    load.iter().all(|(&(r, _), &l)| {
        instance
            .network
            .capacity(r)
            .is_some_and(|c| l <= c + 1e-9)
    })
}

/// Path `v0 - v1 - ... - v(n-1)` without capacities.
pub fn path_topology(n: usize) -> Topology {
    Topology {
        nodes: (0..n).map(|i| format!("v{i}")).collect(),
        node_capacity: vec![None; n],
        edges: (1..n).map(|i| (i - 1, i, None)).collect(),
    }
}

/// Connected random graph: a random spanning tree plus extra random links.
pub fn random_topology(n: usize, extra_edges: usize, seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.insert((u, v));
    }
    let max_edges = n * n.saturating_sub(1) / 2;
    let target = (edges.len() + extra_edges).min(max_edges);
    while edges.len() < target {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    Topology {
        nodes: (0..n).map(|i| format!("v{i}")).collect(),
        node_capacity: vec![None; n],
        edges: edges.into_iter().map(|(u, v)| (u, v, None)).collect(),
    }
}
