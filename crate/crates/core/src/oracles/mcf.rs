use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{EffectivePrices, OracleConfig, OracleError, OracleOutcome, OracleResult};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::requests::{CommodityFlow, Demand, Embedding, TrafficSpec, VNetRequest};
use crate::substrate::{EdgeId, NodeId, Path, SubstrateNetwork};

const FLOW_EPS: f64 = 1e-9;

/// Customer-pipe multipath oracle: a min-cost multicommodity flow where a
/// unit of flow on a link costs the link's price.
///
/// Links whose total flow is positive but below the configured floor are
/// forbidden and the flow is solved once more; a second violation rejects.
pub fn oracle_customer_pipe_mcf(
    net: &SubstrateNetwork,
    prices: &EffectivePrices,
    req: &VNetRequest,
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    let TrafficSpec::CustomerPipe { demands } = &req.traffic else {
        return Err(OracleError::WrongTraffic(req.traffic.model_name()));
    };
    let demands: Vec<Demand> = demands.iter().copied().filter(|d| d.amount > 0.0).collect();
    let mut forbidden = vec![false; net.edge_count()];
    for attempt in 0..2 {
        let Some(flows) = min_cost_flow(net, &prices.edge, &demands, &forbidden)? else {
            return Ok(OracleOutcome::Infeasible);
        };
        let mut reservation: BTreeMap<EdgeId, f64> = BTreeMap::new();
        for cf in &flows {
            for (path, amount) in &cf.paths {
                for &e in &path.edges {
                    *reservation.entry(e).or_insert(0.0) += amount;
                }
            }
        }
        let small: Vec<EdgeId> = reservation
            .iter()
            .filter(|(_, &f)| f > 0.0 && f < config.min_load_floor - FLOW_EPS)
            .map(|(&e, _)| e)
            .collect();
        if !small.is_empty() {
            if attempt == 1 {
                return Ok(OracleOutcome::Infeasible);
            }
            for e in small {
                forbidden[e.0] = true;
            }
            continue;
        }
        for (e, f) in reservation.iter_mut() {
            *f = f.min(net.edge(*e).capacity);
        }
        let embedding = Embedding {
            edge_reservation: reservation,
            node_usage: BTreeMap::new(),
            commodity_flows: flows,
        };
        let gamma = prices.cost(&embedding);
        return Ok(OracleOutcome::Embedded(OracleResult {
            embedding,
            gamma,
            rho: 1.0,
        }));
    }
    unreachable!("loop returns on its second pass")
}

/// Arc-flow LP; `None` if infeasible. Flows come back decomposed into
/// simple paths with cycles dropped.
fn min_cost_flow(
    net: &SubstrateNetwork,
    edge_price: &[f64],
    demands: &[Demand],
    forbidden: &[bool],
) -> Result<Option<Vec<CommodityFlow>>, OracleError> {
    let m = net.edge_count();
    let n = net.node_count();
    // Variable (k, e, dir): dir 0 is u->v, dir 1 is v->u.
    let var = |k: usize, e: usize, dir: usize| (k * m + e) * 2 + dir;
    let nvars = demands.len() * m * 2;
    let mut objective = vec![0.0; nvars];
    for k in 0..demands.len() {
        for e in 0..m {
            objective[var(k, e, 0)] = edge_price[e];
            objective[var(k, e, 1)] = edge_price[e];
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    for (k, d) in demands.iter().enumerate() {
        for v in 0..n {
            let mut terms = Vec::new();
            for &(_, e) in net.neighbors(NodeId(v)) {
                let out_dir = if net.edge(e).u.0 == v { 0 } else { 1 };
                terms.push((var(k, e.0, out_dir), 1.0));
                terms.push((var(k, e.0, 1 - out_dir), -1.0));
            }
            let supply = if d.from.0 == v {
                d.amount
            } else if d.to.0 == v {
                -d.amount
            } else {
                0.0
            };
            if terms.is_empty() {
                if supply != 0.0 {
                    return Ok(None);
                }
                continue;
            }
            lp.add_sparse(&terms, Relation::Eq, supply);
        }
    }
    for e in 0..m {
        let terms: Vec<(usize, f64)> = (0..demands.len())
            .flat_map(|k| [(var(k, e, 0), 1.0), (var(k, e, 1), 1.0)])
            .collect();
        let cap = if forbidden[e] { 0.0 } else { net.edges()[e].capacity };
        lp.add_sparse(&terms, Relation::Le, cap);
    }
    let solution = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => unreachable!("nonnegative costs are bounded below"),
    };
    let flows = demands
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let mut directed = vec![0.0; m];
            for (e, slot) in directed.iter_mut().enumerate() {
                *slot = solution.assignment[var(k, e, 0)] - solution.assignment[var(k, e, 1)];
            }
            CommodityFlow {
                from: d.from,
                to: d.to,
                paths: decompose(net, &mut directed, d.from, d.to),
            }
        })
        .collect();
    Ok(Some(flows))
}

/// Splits a single-commodity edge flow (positive along u->v) into simple
/// paths; circulations are discarded.
fn decompose(net: &SubstrateNetwork, directed: &mut [f64], source: NodeId, sink: NodeId) -> Vec<(Path, f64)> {
    let n = net.node_count();
    let next_arc = |directed: &[f64], v: NodeId| -> Option<(NodeId, EdgeId)> {
        net.neighbors(v).iter().copied().find(|&(w, e)| {
            let f = directed[e.0];
            if net.edge(e).u == v {
                f > FLOW_EPS
            } else {
                f < -FLOW_EPS && w == net.edge(e).u
            }
        })
    };
    let push = |directed: &mut [f64], from: NodeId, e: EdgeId, amount: f64| {
        if net.edge(e).u == from {
            directed[e.0] -= amount;
        } else {
            directed[e.0] += amount;
        }
    };
    let arc_flow = |directed: &[f64], from: NodeId, e: EdgeId| {
        if net.edge(e).u == from {
            directed[e.0]
        } else {
            -directed[e.0]
        }
    };

    let mut paths = Vec::new();
    let mut guard = 0;
    'outer: while guard < 4 * n * net.edge_count() + 16 {
        guard += 1;
        let mut nodes = vec![source];
        let mut edges: Vec<EdgeId> = Vec::new();
        let mut seen = vec![usize::MAX; n];
        seen[source.0] = 0;
        let mut cur = source;
        while cur != sink {
            let Some((next, e)) = next_arc(directed, cur) else {
                break 'outer;
            };
            if seen[next.0] != usize::MAX {
                // Cancel the cycle and start over.
                let start = seen[next.0];
                let mut cyc_nodes = nodes[start..].to_vec();
                cyc_nodes.push(next);
                let mut cyc_edges = edges[start..].to_vec();
                cyc_edges.push(e);
                let amount = cyc_edges
                    .iter()
                    .zip(&cyc_nodes)
                    .map(|(&ce, &from)| arc_flow(directed, from, ce))
                    .fold(f64::INFINITY, f64::min);
                for (&ce, &from) in cyc_edges.iter().zip(&cyc_nodes) {
                    push(directed, from, ce, amount);
                }
                continue 'outer;
            }
            seen[next.0] = nodes.len();
            nodes.push(next);
            edges.push(e);
            cur = next;
        }
        let amount = edges
            .iter()
            .zip(&nodes)
            .map(|(&e, &from)| arc_flow(directed, from, e))
            .fold(f64::INFINITY, f64::min);
        for (&e, &from) in edges.iter().zip(&nodes) {
            push(directed, from, e, amount);
        }
        if amount > FLOW_EPS {
            paths.push((Path { nodes, edges }, amount));
        }
    }
    paths
}
