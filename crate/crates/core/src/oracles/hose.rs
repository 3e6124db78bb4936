use alloc::vec;
use alloc::vec::Vec;

use super::steiner::{self, SteinerError, SteinerTree};
use super::{EffectivePrices, OracleConfig, OracleError, OracleOutcome, OracleResult};
use crate::requests::{hose_cut_traffic, Embedding, HoseBound, TrafficSpec, VNetRequest};
use crate::substrate::{EdgeId, SubstrateNetwork, WeightedView};

const CAPACITY_TOL: f64 = 1e-9;

/// Bandwidth a hose request needs on tree edge `e`: the worst traffic
/// across the terminal partition obtained by cutting `e`.
pub fn hose_edge_reservation(net: &SubstrateNetwork, tree: &SteinerTree, e: EdgeId, bounds: &[HoseBound]) -> f64 {
    let side = tree_side(net, tree, e);
    let (a, b): (Vec<HoseBound>, Vec<HoseBound>) = bounds.iter().partition(|hb| side[hb.node.0]);
    hose_cut_traffic(&a, &b)
}

/// Reservation on every edge of `tree`, in edge order.
pub fn hose_reservations(net: &SubstrateNetwork, tree: &SteinerTree, bounds: &[HoseBound]) -> Vec<(EdgeId, f64)> {
    tree.edges
        .iter()
        .map(|&e| (e, hose_edge_reservation(net, tree, e, bounds)))
        .collect()
}

/// Nodes on `e.u`'s side of the tree once `e` is removed.
fn tree_side(net: &SubstrateNetwork, tree: &SteinerTree, cut: EdgeId) -> Vec<bool> {
    let mut side = vec![false; net.node_count()];
    let start = net.edge(cut).u;
    side[start.0] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(w, e) in net.neighbors(v) {
            if e != cut && !side[w.0] && tree.edges.binary_search(&e).is_ok() {
                side[w.0] = true;
                stack.push(w);
            }
        }
    }
    side
}

/// Exact hose-model tree oracle by exhaustive enumeration of Steiner
/// trees; exponential in the number of usable links.
pub fn oracle_hose_tree_exact(
    net: &SubstrateNetwork,
    prices: &EffectivePrices,
    req: &VNetRequest,
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    let TrafficSpec::Hose { bounds } = &req.traffic else {
        return Err(OracleError::WrongTraffic(req.traffic.model_name()));
    };
    // Both directions across any cut carry at least one unit.
    let min_reservation = 2.0;
    let view = WeightedView {
        net,
        edge_cost: net
            .edges()
            .iter()
            .zip(&prices.edge)
            .map(|(e, &p)| (e.capacity + CAPACITY_TOL >= min_reservation).then_some(p))
            .collect(),
        node_cost: vec![Some(0.0); net.node_count()],
    };
    let trees = match steiner::enumerate_minimal_trees(&view, &req.terminals, config.enumeration_budget) {
        Ok(t) => t,
        Err(SteinerError::Disconnected) => return Ok(OracleOutcome::Infeasible),
        Err(e) => return Err(e.into()),
    };
    let mut best: Option<(f64, usize, Vec<(EdgeId, f64)>)> = None;
    for tree in &trees {
        let reservations = hose_reservations(net, tree, bounds);
        if reservations
            .iter()
            .any(|&(e, u)| u > net.edge(e).capacity + CAPACITY_TOL)
        {
            continue;
        }
        let cost: f64 = reservations.iter().map(|&(e, u)| u * prices.edge[e.0]).sum();
        let better = best
            .as_ref()
            .is_none_or(|(c, len, _)| cost < *c || (cost == *c && tree.edges.len() < *len));
        if better {
            best = Some((cost, tree.edges.len(), reservations));
        }
    }
    let Some((_, _, reservations)) = best else {
        return Ok(OracleOutcome::Infeasible);
    };
    let mut embedding = Embedding::default();
    embedding.edge_reservation.extend(reservations);
    let gamma = prices.cost(&embedding);
    Ok(OracleOutcome::Embedded(OracleResult {
        embedding,
        gamma,
        rho: 1.0,
    }))
}
