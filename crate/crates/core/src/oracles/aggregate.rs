use alloc::vec::Vec;

use super::steiner::{self, SteinerError, SteinerTree};
use super::{EffectivePrices, OracleConfig, OracleError, OracleOutcome, OracleResult, SteinerMode};
use crate::requests::{Embedding, TrafficSpec, VNetRequest};
use crate::substrate::{SubstrateNetwork, WeightedView};

const CAPACITY_TOL: f64 = 1e-9;

/// Aggregate-ingress tree (and single-path) oracle.
///
/// Removes links that cannot carry the ingress (and routers that cannot
/// process the packet rate), then buys a cheap Steiner tree where every
/// tree link reserves the full ingress.
pub fn oracle_aggregate_tree(
    net: &SubstrateNetwork,
    prices: &EffectivePrices,
    req: &VNetRequest,
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    let TrafficSpec::AggregateIngress { ingress } = req.traffic else {
        return Err(OracleError::WrongTraffic(req.traffic.model_name()));
    };
    let rate = req.packet_rate;
    let node_rows = rate > 0.0;

    let edge_cost: Vec<Option<f64>> = net
        .edges()
        .iter()
        .zip(&prices.edge)
        .map(|(e, &p)| (e.capacity + CAPACITY_TOL >= ingress).then_some(ingress * p))
        .collect();
    let node_cost: Vec<Option<f64>> = net
        .nodes()
        .iter()
        .zip(&prices.node)
        .map(|(n, &p)| match (node_rows, n.capacity) {
            (true, Some(c)) if c + CAPACITY_TOL < rate => None,
            (true, Some(_)) => Some(rate * p),
            _ => Some(0.0),
        })
        .collect();
    let view = WeightedView {
        net,
        edge_cost,
        node_cost,
    };
    if req.terminals.iter().any(|&t| !view.node_present(t)) {
        return Ok(OracleOutcome::Infeasible);
    }

    let k = req.terminals.len();
    let weighted_nodes = node_rows && net.nodes().iter().any(|n| n.capacity.is_some());
    let built: Result<(SteinerTree, f64), SteinerError> = if weighted_nodes {
        let greedy_rho = (2.0 * libm::log(k as f64)).max(1.0);
        match config.steiner {
            SteinerMode::Exact => steiner::brute_force_tree(&view, &req.terminals, config.enumeration_budget)
                .map(|(t, _)| (t, 1.0)),
            SteinerMode::Auto => steiner::node_weighted_steiner_greedy(&view, &req.terminals)
                .map(|t| (t, if k == 2 { 1.0 } else { greedy_rho })),
            SteinerMode::Approximate => {
                steiner::node_weighted_steiner_greedy(&view, &req.terminals).map(|t| (t, greedy_rho))
            }
        }
    } else {
        match config.steiner {
            SteinerMode::Exact => steiner::exact_steiner(&view, &req.terminals).map(|t| (t, 1.0)),
            SteinerMode::Auto => steiner::mst_steiner_2approx(&view, &req.terminals)
                .map(|t| (t, if k == 2 { 1.0 } else { 2.0 })),
            SteinerMode::Approximate => steiner::mst_steiner_2approx(&view, &req.terminals).map(|t| (t, 2.0)),
        }
    };
    let (tree, rho) = match built {
        Ok(b) => b,
        Err(SteinerError::Disconnected) => return Ok(OracleOutcome::Infeasible),
        Err(e) => return Err(e.into()),
    };

    let mut embedding = Embedding::default();
    for &e in &tree.edges {
        embedding.edge_reservation.insert(e, ingress);
    }
    if node_rows {
        for &v in &tree.nodes {
            if net.node(v).capacity.is_some() {
                embedding.node_usage.insert(v, rate);
            }
        }
    }
    let gamma = prices.cost(&embedding);
    Ok(OracleOutcome::Embedded(OracleResult { embedding, gamma, rho }))
}
