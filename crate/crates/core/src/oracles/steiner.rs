//! Steiner tree constructions over a [`WeightedView`].

use alloc::vec;
use alloc::vec::Vec;

use crate::substrate::{EdgeId, NodeId, PathCost, WeightedView};

/// Terminal-spanning tree, edges and nodes sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinerTree {
    pub edges: Vec<EdgeId>,
    pub nodes: Vec<NodeId>,
}

impl SteinerTree {
    /// Combined edge and node cost under `view`.
    pub fn cost(&self, view: &WeightedView<'_>) -> f64 {
        view.tree_cost(&self.edges, &self.nodes)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SteinerError {
    #[error("terminals are disconnected")]
    Disconnected,
    #[error("{edges} candidate edges exceed the enumeration budget of {budget}")]
    BudgetExceeded { edges: usize, budget: usize },
    #[error("{0} terminals is too many for the exact construction")]
    TooManyTerminals(usize),
}

/// Largest terminal count accepted by [`exact_steiner`].
pub const EXACT_TERMINAL_LIMIT: usize = 14;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn sorted_terminals(terminals: &[NodeId]) -> Vec<NodeId> {
    let mut t = terminals.to_vec();
    t.sort();
    t.dedup();
    t
}

fn terminals_connected(view: &WeightedView<'_>, terminals: &[NodeId]) -> bool {
    let Some(&first) = terminals.first() else {
        return true;
    };
    let sp = view.shortest_paths(first);
    terminals.iter().all(|&t| sp.cost(t).is_some())
}

/// Reduces a connected candidate edge set to a tree whose leaves are all
/// terminals: Kruskal by (weight, index), then leaf pruning.
fn finalize(view: &WeightedView<'_>, candidates: &[EdgeId], terminals: &[NodeId]) -> SteinerTree {
    let net = view.net;
    let mut edges = candidates.to_vec();
    edges.sort();
    edges.dedup();
    edges.sort_by(|a, b| {
        view.edge_weight(*a)
            .total_cmp(&view.edge_weight(*b))
            .then(a.cmp(b))
    });
    let mut uf = UnionFind::new(net.node_count());
    let mut kept: Vec<EdgeId> = edges
        .into_iter()
        .filter(|&e| {
            let edge = net.edge(e);
            uf.union(edge.u.0, edge.v.0)
        })
        .collect();
    let is_terminal = |v: NodeId| terminals.binary_search(&v).is_ok();
    loop {
        let mut degree = vec![0usize; net.node_count()];
        for &e in &kept {
            let edge = net.edge(e);
            degree[edge.u.0] += 1;
            degree[edge.v.0] += 1;
        }
        let before = kept.len();
        kept.retain(|&e| {
            let edge = net.edge(e);
            let prune = |v: NodeId| degree[v.0] == 1 && !is_terminal(v);
            !(prune(edge.u) || prune(edge.v))
        });
        if kept.len() == before {
            break;
        }
    }
    kept.sort();
    let mut nodes: Vec<NodeId> = terminals.to_vec();
    for &e in &kept {
        let edge = net.edge(e);
        nodes.push(edge.u);
        nodes.push(edge.v);
    }
    nodes.sort();
    nodes.dedup();
    SteinerTree { edges: kept, nodes }
}

/// Metric-closure MST heuristic: MST over terminal shortest-path
/// distances, expanded back to substrate paths. Cost at most twice the
/// optimal Steiner tree. Node costs are ignored.
pub fn mst_steiner_2approx(
    view: &WeightedView<'_>,
    terminals: &[NodeId],
) -> Result<SteinerTree, SteinerError> {
    let terminals = sorted_terminals(terminals);
    let k = terminals.len();
    if k <= 1 {
        return Ok(finalize(view, &[], &terminals));
    }
    let edge_view = edge_only(view);
    let closure = crate::substrate::MetricClosure::build(&edge_view, &terminals);
    // Prim from terminal 0, ties towards the smaller index.
    let mut in_tree = vec![false; k];
    in_tree[0] = true;
    let mut candidates = Vec::new();
    for _ in 1..k {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..k).filter(|&i| in_tree[i]) {
            for j in (0..k).filter(|&j| !in_tree[j]) {
                let w = closure.weight[i][j];
                if w.is_finite() && best.is_none_or(|(bw, _, _)| w < bw) {
                    best = Some((w, i, j));
                }
            }
        }
        let (_, i, j) = best.ok_or(SteinerError::Disconnected)?;
        in_tree[j] = true;
        candidates.extend_from_slice(&closure.path(i, j).expect("finite weight has a path").edges);
    }
    Ok(finalize(&edge_view, &candidates, &terminals))
}

fn edge_only<'a>(view: &WeightedView<'a>) -> WeightedView<'a> {
    WeightedView {
        net: view.net,
        edge_cost: view.edge_cost.clone(),
        node_cost: view.node_cost.iter().map(|c| c.map(|_| 0.0)).collect(),
    }
}

#[derive(Clone, Copy)]
enum Back {
    Leaf,
    Step(NodeId, EdgeId),
    Split(usize),
}

/// Exact minimum edge-weighted Steiner tree (Dreyfus–Wagner dynamic
/// program). Node costs are ignored. Among optimal trees prefers fewer
/// edges.
pub fn exact_steiner(view: &WeightedView<'_>, terminals: &[NodeId]) -> Result<SteinerTree, SteinerError> {
    let terminals = sorted_terminals(terminals);
    let k = terminals.len();
    if k > EXACT_TERMINAL_LIMIT {
        return Err(SteinerError::TooManyTerminals(k));
    }
    if k <= 1 {
        return Ok(finalize(view, &[], &terminals));
    }
    let view = edge_only(view);
    if !terminals_connected(&view, &terminals) {
        return Err(SteinerError::Disconnected);
    }
    let n = view.net.node_count();
    let full = (1usize << k) - 1;
    let mut dp: Vec<Vec<Option<PathCost>>> = vec![Vec::new(); full + 1];
    let mut back: Vec<Vec<Back>> = vec![Vec::new(); full + 1];

    let absorb = |sources: &[(NodeId, PathCost)], origin: &dyn Fn(NodeId) -> Back| {
        let sp = view.shortest_paths_multi(sources);
        let mut costs = vec![None; n];
        let mut backs = vec![Back::Leaf; n];
        for v in 0..n {
            let v_id = NodeId(v);
            costs[v] = sp.cost(v_id);
            if costs[v].is_some() {
                let path = sp.path_to(v_id).expect("reachable");
                backs[v] = match path.edges.last() {
                    Some(&e) => Back::Step(path.nodes[path.nodes.len() - 2], e),
                    None => origin(v_id),
                };
            }
        }
        (costs, backs)
    };

    for (i, &t) in terminals.iter().enumerate() {
        let (c, b) = absorb(&[(t, PathCost::ZERO)], &|_| Back::Leaf);
        dp[1 << i] = c;
        back[1 << i] = b;
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        let low = mask & mask.wrapping_neg();
        let mut best: Vec<Option<(PathCost, usize)>> = vec![None; n];
        // Proper submasks containing the lowest bit.
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != mask {
                let b = mask ^ a;
                for v in 0..n {
                    if let (Some(ca), Some(cb)) = (dp[a][v], dp[b][v]) {
                        let c = PathCost {
                            weight: ca.weight + cb.weight,
                            hops: ca.hops + cb.hops,
                        };
                        if best[v].is_none_or(|(bc, _)| c < bc) {
                            best[v] = Some((c, a));
                        }
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        let sources: Vec<(NodeId, PathCost)> = best
            .iter()
            .enumerate()
            .filter_map(|(v, b)| b.map(|(c, _)| (NodeId(v), c)))
            .collect();
        let splits: Vec<usize> = best.iter().map(|b| b.map_or(0, |(_, a)| a)).collect();
        let (c, b) = absorb(&sources, &|v: NodeId| Back::Split(splits[v.0]));
        dp[mask] = c;
        back[mask] = b;
    }

    let mut edges = Vec::new();
    let mut stack = vec![(full, terminals[0])];
    while let Some((mask, v)) = stack.pop() {
        match back[mask][v.0] {
            Back::Leaf => {}
            Back::Step(p, e) => {
                edges.push(e);
                stack.push((mask, p));
            }
            Back::Split(a) => {
                stack.push((a, v));
                stack.push((mask ^ a, v));
            }
        }
    }
    Ok(finalize(&view, &edges, &terminals))
}

/// Greedy node-weighted Steiner tree: repeatedly joins the cheapest
/// cost-per-component spider (Klein–Ravi). Two terminals are joined by an
/// exact node-weighted shortest path.
pub fn node_weighted_steiner_greedy(
    view: &WeightedView<'_>,
    terminals: &[NodeId],
) -> Result<SteinerTree, SteinerError> {
    let terminals = sorted_terminals(terminals);
    let k = terminals.len();
    if k <= 1 {
        return Ok(finalize(view, &[], &terminals));
    }
    if !terminals_connected(view, &terminals) {
        return Err(SteinerError::Disconnected);
    }
    let net = view.net;
    let n = net.node_count();
    if k == 2 {
        let sp = view.shortest_paths(terminals[0]);
        let path = sp.path_to(terminals[1]).ok_or(SteinerError::Disconnected)?;
        return Ok(finalize(view, &path.edges, &terminals));
    }

    let mut chosen: Vec<EdgeId> = Vec::new();
    loop {
        // Components of the partial solution that contain terminals.
        let mut uf = UnionFind::new(n);
        for &e in &chosen {
            let edge = net.edge(e);
            uf.union(edge.u.0, edge.v.0);
        }
        let mut roots: Vec<usize> = terminals.iter().map(|t| uf.find(t.0)).collect();
        roots.sort();
        roots.dedup();
        if roots.len() <= 1 {
            break;
        }
        let mut label = vec![usize::MAX; n];
        let mut touched = vec![false; n];
        for &t in &terminals {
            touched[t.0] = true;
        }
        for &e in &chosen {
            let edge = net.edge(e);
            touched[edge.u.0] = true;
            touched[edge.v.0] = true;
        }
        for v in 0..n {
            if touched[v] {
                let r = uf.find(v);
                label[v] = roots.binary_search(&r).expect("tree nodes hang off a terminal");
            }
        }
        // Nodes already bought cost nothing.
        let mut reduced = view.clone();
        for v in 0..n {
            if touched[v] {
                reduced.node_cost[v] = Some(0.0);
            }
        }
        let searches: Vec<_> = (0..roots.len())
            .map(|c| {
                let sources: Vec<(NodeId, PathCost)> = (0..n)
                    .filter(|&v| label[v] == c)
                    .map(|v| (NodeId(v), PathCost::ZERO))
                    .collect();
                reduced.shortest_paths_multi(&sources)
            })
            .collect();

        let mut best: Option<(f64, NodeId, Vec<usize>)> = None;
        for v in (0..n).map(NodeId).filter(|&v| reduced.node_present(v)) {
            let own = reduced.node_weight(v);
            let mut dists: Vec<(f64, usize)> = searches
                .iter()
                .enumerate()
                .filter_map(|(c, sp)| {
                    sp.cost(v).map(|pc| {
                        let d = if label[v.0] == c { 0.0 } else { pc.weight - own };
                        (d.max(0.0), c)
                    })
                })
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut sum = own;
            for q in 0..dists.len() {
                sum += dists[q].0;
                if q == 0 {
                    continue;
                }
                let ratio = sum / (q + 1) as f64;
                if best.as_ref().is_none_or(|(r, _, _)| ratio < *r) {
                    best = Some((ratio, v, dists[..=q].iter().map(|d| d.1).collect()));
                }
            }
        }
        let (_, center, comps) = best.ok_or(SteinerError::Disconnected)?;
        for c in comps {
            let path = searches[c].path_to(center).ok_or(SteinerError::Disconnected)?;
            chosen.extend_from_slice(&path.edges);
        }
        chosen.sort();
        chosen.dedup();
    }
    Ok(finalize(view, &chosen, &terminals))
}

/// All trees in `view` that span the terminals and whose leaves are all
/// terminals, by exhaustive subset search over the present edges.
pub fn enumerate_minimal_trees(
    view: &WeightedView<'_>,
    terminals: &[NodeId],
    edge_budget: usize,
) -> Result<Vec<SteinerTree>, SteinerError> {
    let terminals = sorted_terminals(terminals);
    let net = view.net;
    let candidates: Vec<EdgeId> = net.edge_ids().filter(|&e| view.edge_present(e)).collect();
    let m = candidates.len();
    if m > edge_budget || m >= usize::BITS as usize {
        return Err(SteinerError::BudgetExceeded {
            edges: m,
            budget: edge_budget,
        });
    }
    if terminals.iter().any(|&t| !view.node_present(t)) {
        return Ok(Vec::new());
    }
    let n = net.node_count();
    let is_terminal = |v: usize| terminals.binary_search(&NodeId(v)).is_ok();
    let mut out = Vec::new();
    if terminals.len() <= 1 {
        out.push(finalize(view, &[], &terminals));
        return Ok(out);
    }
    let mut degree = vec![0u32; n];
    'subsets: for mask in 1usize..(1usize << m) {
        let size = mask.count_ones() as usize;
        if size + 1 > n {
            continue;
        }
        let mut uf = UnionFind::new(n);
        degree.iter_mut().for_each(|d| *d = 0);
        for (i, &e) in candidates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let edge = net.edge(e);
                if !uf.union(edge.u.0, edge.v.0) {
                    continue 'subsets;
                }
                degree[edge.u.0] += 1;
                degree[edge.v.0] += 1;
            }
        }
        let root = uf.find(terminals[0].0);
        if terminals.iter().any(|t| uf.find(t.0) != root) {
            continue;
        }
        // Acyclic with size edges: connected iff it touches size + 1 nodes.
        let touched = (0..n).filter(|&v| degree[v] > 0).count();
        if touched != size + 1 {
            continue;
        }
        if (0..n).any(|v| degree[v] == 1 && !is_terminal(v)) {
            continue;
        }
        let edges: Vec<EdgeId> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e)
            .collect();
        let nodes: Vec<NodeId> = (0..n).filter(|&v| degree[v] > 0).map(NodeId).collect();
        out.push(SteinerTree { edges, nodes });
    }
    Ok(out)
}

/// Exact minimum-cost tree (edge plus node costs) by enumeration.
pub fn brute_force_tree(
    view: &WeightedView<'_>,
    terminals: &[NodeId],
    edge_budget: usize,
) -> Result<(SteinerTree, f64), SteinerError> {
    let trees = enumerate_minimal_trees(view, terminals, edge_budget)?;
    trees
        .into_iter()
        .map(|t| {
            let c = t.cost(view);
            (t, c)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.edges.len().cmp(&b.0.edges.len())))
        .ok_or(SteinerError::Disconnected)
}
