//! Offline reference optima for small instances: the fractional packing
//! optimum over explicit embedding sets and exact Steiner trees.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{LinearProgram, LpError, LpOutcome, Relation};
use crate::oracles::steiner::{self, SteinerError, SteinerTree};
use crate::oracles::{hose_reservations, is_supported};
use crate::requests::{CommodityFlow, Embedding, RoutingModel, Slot, TrafficSpec, VNetRequest};
use crate::substrate::{EdgeId, NodeId, Path, ResourceId, SubstrateNetwork, WeightedView};

const CAPACITY_TOL: f64 = 1e-9;

/// Explicit embedding set of one request.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnumeratedColumns {
    pub embeddings: Vec<Embedding>,
    /// The enumeration hit its budget; the list may be incomplete.
    pub truncated: bool,
    /// Listed embeddings are only a sample of a polytope (multipath).
    pub implicit: bool,
}

/// Lists the valid embeddings of `req`: every entry within `[floor, c]`.
/// Trees are enumerated exhaustively over at most `budget` usable links;
/// multipath requests list one unsplittable path choice per commodity.
pub fn enumerate_embeddings(net: &SubstrateNetwork, req: &VNetRequest, budget: usize, floor: f64) -> EnumeratedColumns {
    let mut out = enumerate_unfloored(net, req, budget);
    out.embeddings
        .retain(|emb| emb.violation(net, floor, CAPACITY_TOL).is_none());
    out
}

fn enumerate_unfloored(net: &SubstrateNetwork, req: &VNetRequest, budget: usize) -> EnumeratedColumns {
    match (&req.traffic, req.routing) {
        (TrafficSpec::AggregateIngress { ingress }, RoutingModel::Tree | RoutingModel::SinglePath) => {
            enumerate_aggregate(net, req, *ingress, budget)
        }
        (TrafficSpec::Hose { bounds }, RoutingModel::Tree) => {
            let view = usable_links(net, 2.0);
            let mut out = EnumeratedColumns::default();
            let Ok(trees) = steiner::enumerate_minimal_trees(&view, &req.terminals, budget) else {
                out.truncated = true;
                return out;
            };
            for tree in &trees {
                let reservations = hose_reservations(net, tree, bounds);
                if reservations
                    .iter()
                    .all(|&(e, u)| u <= net.edge(e).capacity + CAPACITY_TOL)
                {
                    let mut emb = Embedding::default();
                    emb.edge_reservation.extend(reservations);
                    out.embeddings.push(emb);
                }
            }
            out
        }
        (TrafficSpec::CustomerPipe { .. }, RoutingModel::Multipath) => enumerate_unsplit_flows(net, req, budget),
        _ => EnumeratedColumns::default(),
    }
}

fn usable_links(net: &SubstrateNetwork, min_capacity: f64) -> WeightedView<'_> {
    WeightedView {
        net,
        edge_cost: net
            .edges()
            .iter()
            .map(|e| (e.capacity + CAPACITY_TOL >= min_capacity).then_some(0.0))
            .collect(),
        node_cost: vec![Some(0.0); net.node_count()],
    }
}

fn enumerate_aggregate(net: &SubstrateNetwork, req: &VNetRequest, ingress: f64, budget: usize) -> EnumeratedColumns {
    let rate = req.packet_rate;
    let mut view = usable_links(net, ingress);
    if rate > 0.0 {
        for (v, n) in net.nodes().iter().enumerate() {
            if n.capacity.is_some_and(|c| c + CAPACITY_TOL < rate) {
                view.node_cost[v] = None;
            }
        }
        for (i, e) in net.edges().iter().enumerate() {
            if !view.node_present(e.u) || !view.node_present(e.v) {
                view.edge_cost[i] = None;
            }
        }
    }
    let mut out = EnumeratedColumns::default();
    let trees = match steiner::enumerate_minimal_trees(&view, &req.terminals, budget) {
        Ok(t) => t,
        Err(_) => {
            out.truncated = true;
            return out;
        }
    };
    for tree in trees {
        let mut emb = Embedding::default();
        for &e in &tree.edges {
            emb.edge_reservation.insert(e, ingress);
        }
        if rate > 0.0 {
            for &v in &tree.nodes {
                if net.node(v).capacity.is_some() {
                    emb.node_usage.insert(v, rate);
                }
            }
        }
        out.embeddings.push(emb);
    }
    out
}

fn simple_paths(net: &SubstrateNetwork, from: NodeId, to: NodeId) -> Vec<Path> {
    fn walk(net: &SubstrateNetwork, to: NodeId, nodes: &mut Vec<NodeId>, edges: &mut Vec<EdgeId>, out: &mut Vec<Path>) {
        let v = *nodes.last().expect("walk starts at a node");
        if v == to {
            out.push(Path {
                nodes: nodes.clone(),
                edges: edges.clone(),
            });
            return;
        }
        for &(w, e) in net.neighbors(v) {
            if !nodes.contains(&w) {
                nodes.push(w);
                edges.push(e);
                walk(net, to, nodes, edges, out);
                nodes.pop();
                edges.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(net, to, &mut vec![from], &mut Vec::new(), &mut out);
    out
}

fn enumerate_unsplit_flows(net: &SubstrateNetwork, req: &VNetRequest, budget: usize) -> EnumeratedColumns {
    let TrafficSpec::CustomerPipe { demands } = &req.traffic else {
        unreachable!("caller matched customer-pipe traffic");
    };
    let mut out = EnumeratedColumns {
        implicit: true,
        ..EnumeratedColumns::default()
    };
    let options: Vec<Vec<Path>> = demands.iter().map(|d| simple_paths(net, d.from, d.to)).collect();
    let mut choice = vec![0usize; demands.len()];
    if options.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        let mut emb = Embedding::default();
        for (k, d) in demands.iter().enumerate() {
            let path = &options[k][choice[k]];
            for &e in &path.edges {
                *emb.edge_reservation.entry(e).or_insert(0.0) += d.amount;
            }
            emb.commodity_flows.push(CommodityFlow {
                from: d.from,
                to: d.to,
                paths: vec![(path.clone(), d.amount)],
            });
        }
        if emb
            .edge_reservation
            .iter()
            .all(|(&e, &u)| u <= net.edge(e).capacity + CAPACITY_TOL)
        {
            if out.embeddings.len() >= budget {
                out.truncated = true;
                return out;
            }
            out.embeddings.push(emb);
        }
        // Odometer over path choices.
        let mut k = 0;
        loop {
            if k == choice.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineOptimum {
    pub value: f64,
    /// Optimal fraction admitted per request.
    pub fractions: BTreeMap<u64, f64>,
    /// False when some enumeration was truncated or some request has no
    /// oracle: `value` is then only a lower bound.
    pub exact: bool,
}

/// Fractional offline optimum: maximize admitted benefit subject to
/// per-(resource, slot) capacities and at most one unit per request.
///
/// Tree requests use enumerated columns with entries in `[floor, c]`;
/// customer-pipe multipath requests use an arc-flow formulation scaled by
/// the admitted fraction, which ignores the floor.
pub fn offline_fractional_opt(
    net: &SubstrateNetwork,
    requests: &[VNetRequest],
    budget: usize,
    floor: f64,
) -> Result<OfflineOptimum, LpError> {
    enum Var {
        Column { req: usize, emb: Embedding },
        Fraction { req: usize },
        Flow { req: usize, commodity: usize, edge: EdgeId, forward: bool },
    }
    let mut exact = true;
    let mut vars: Vec<Var> = Vec::new();
    for (j, req) in requests.iter().enumerate() {
        if !is_supported(req) {
            exact = false;
            continue;
        }
        if let TrafficSpec::CustomerPipe { demands } = &req.traffic {
            vars.push(Var::Fraction { req: j });
            for k in 0..demands.len() {
                for e in net.edge_ids() {
                    for forward in [true, false] {
                        vars.push(Var::Flow {
                            req: j,
                            commodity: k,
                            edge: e,
                            forward,
                        });
                    }
                }
            }
            continue;
        }
        let cols = enumerate_embeddings(net, req, budget, floor);
        exact &= !cols.truncated;
        for emb in cols.embeddings {
            vars.push(Var::Column { req: j, emb });
        }
    }

    let objective = vars
        .iter()
        .map(|v| match v {
            Var::Column { req, .. } | Var::Fraction { req } => requests[*req].benefit,
            Var::Flow { .. } => 0.0,
        })
        .collect();
    let mut lp = LinearProgram::maximize(objective);

    let mut rows: BTreeMap<(ResourceId, Slot), Vec<(usize, f64)>> = BTreeMap::new();
    let mut per_request: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut conservation: BTreeMap<(usize, usize, NodeId), Vec<(usize, f64)>> = BTreeMap::new();
    // A request's own flow on a link stays within capacity times its
    // fraction, so the scaled flow is a convex mix of admissible columns.
    let mut own_link: BTreeMap<(usize, EdgeId), Vec<(usize, f64)>> = BTreeMap::new();
    for (i, var) in vars.iter().enumerate() {
        match var {
            Var::Column { req, emb } => {
                per_request.entry(*req).or_default().push((i, 1.0));
                for (r, a) in emb.entries() {
                    for t in requests[*req].slots.iter() {
                        rows.entry((r, t)).or_default().push((i, a));
                    }
                }
            }
            Var::Fraction { req } => {
                per_request.entry(*req).or_default().push((i, 1.0));
                let TrafficSpec::CustomerPipe { demands } = &requests[*req].traffic else {
                    unreachable!("fractions belong to customer-pipe requests");
                };
                for (k, d) in demands.iter().enumerate() {
                    // out - in - d * s = 0 at the source, + d * s at the sink.
                    conservation.entry((*req, k, d.from)).or_default().push((i, -d.amount));
                    conservation.entry((*req, k, d.to)).or_default().push((i, d.amount));
                }
                for e in net.edge_ids() {
                    own_link.entry((*req, e)).or_default().push((i, -net.edge(e).capacity));
                }
            }
            Var::Flow {
                req,
                commodity,
                edge,
                forward,
            } => {
                let e = net.edge(*edge);
                let (tail, head) = if *forward { (e.u, e.v) } else { (e.v, e.u) };
                conservation.entry((*req, *commodity, tail)).or_default().push((i, 1.0));
                conservation.entry((*req, *commodity, head)).or_default().push((i, -1.0));
                own_link.entry((*req, *edge)).or_default().push((i, 1.0));
                for t in requests[*req].slots.iter() {
                    rows.entry((ResourceId::Edge(*edge), t)).or_default().push((i, 1.0));
                }
            }
        }
    }
    for ((r, _), terms) in &rows {
        let c = net.capacity(*r).expect("rows only exist for bounded resources");
        lp.add_sparse(terms, Relation::Le, c);
    }
    for terms in per_request.values() {
        lp.add_sparse(terms, Relation::Le, 1.0);
    }
    for terms in conservation.values() {
        lp.add_sparse(terms, Relation::Eq, 0.0);
    }
    for terms in own_link.values() {
        lp.add_sparse(terms, Relation::Le, 0.0);
    }

    if vars.is_empty() {
        return Ok(OfflineOptimum {
            value: 0.0,
            fractions: BTreeMap::new(),
            exact,
        });
    }
    let solution = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        // Zero is always feasible and the objective is bounded by the
        // request rows.
        LpOutcome::Infeasible | LpOutcome::Unbounded => unreachable!("packing program is feasible and bounded"),
    };
    let mut fractions = BTreeMap::new();
    for (i, var) in vars.iter().enumerate() {
        if let Var::Column { req, .. } | Var::Fraction { req } = var {
            *fractions.entry(requests[*req].id).or_insert(0.0) += solution.assignment[i];
        }
    }
    Ok(OfflineOptimum {
        value: solution.value,
        fractions,
        exact,
    })
}

/// Exact minimum Steiner tree under edge weights.
pub fn brute_force_steiner(
    net: &SubstrateNetwork,
    weights: &[f64],
    terminals: &[NodeId],
) -> Result<(SteinerTree, f64), SteinerError> {
    let view = WeightedView::edge_weighted(net, weights);
    steiner::brute_force_tree(&view, terminals, net.edge_count())
}

/// Exact minimum Steiner tree with both edge and node costs; terminals pay
/// their node cost too.
pub fn brute_force_node_weighted(
    net: &SubstrateNetwork,
    edge_costs: &[f64],
    node_costs: &[f64],
    terminals: &[NodeId],
) -> Result<(SteinerTree, f64), SteinerError> {
    let view = WeightedView {
        net,
        edge_cost: edge_costs.iter().copied().map(Some).collect(),
        node_cost: node_costs.iter().copied().map(Some).collect(),
    };
    steiner::brute_force_tree(&view, terminals, net.edge_count())
}
