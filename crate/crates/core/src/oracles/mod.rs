//! Embedding oracles: given current resource prices, find a cheapest valid
//! embedding of a request (or report that none exists).

mod aggregate;
mod hose;
mod mcf;
pub mod steiner;

use alloc::vec;
use alloc::vec::Vec;

use crate::lp::LpError;
use crate::requests::{Embedding, RoutingModel, TrafficSpec, VNetRequest};
use crate::substrate::SubstrateNetwork;

pub use aggregate::oracle_aggregate_tree;
pub use hose::{hose_edge_reservation, hose_reservations, oracle_hose_tree_exact};
pub use mcf::oracle_customer_pipe_mcf;
pub use steiner::{SteinerError, SteinerTree};

/// Per-resource prices summed over the slots of one request.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectivePrices {
    pub edge: Vec<f64>,
    pub node: Vec<f64>,
}

impl EffectivePrices {
    pub fn zero(net: &SubstrateNetwork) -> Self {
        EffectivePrices {
            edge: vec![0.0; net.edge_count()],
            node: vec![0.0; net.node_count()],
        }
    }

    pub fn cost(&self, embedding: &Embedding) -> f64 {
        embedding.cost(&self.edge, &self.node)
    }
}

/// Which Steiner construction backs the tree oracles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SteinerMode {
    /// Metric-closure MST (node-weighted greedy with packet rates); exact
    /// shortest paths when there are only two terminals.
    #[default]
    Auto,
    /// Exact constructions (Dreyfus–Wagner, or enumeration with node
    /// costs). Always reports ρ = 1.
    Exact,
    /// Same constructions as `Auto`, but always reports the worst-case
    /// ratio of the heuristic.
    Approximate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub steiner: SteinerMode,
    /// Smallest admissible nonzero matrix entry.
    pub min_load_floor: f64,
    /// Maximum number of candidate edges for exhaustive tree enumeration.
    pub enumeration_budget: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            steiner: SteinerMode::Auto,
            min_load_floor: 1.0,
            enumeration_budget: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub embedding: Embedding,
    /// Price-cost of the embedding under the supplied prices.
    pub gamma: f64,
    /// Worst-case approximation ratio of the construction that produced it.
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome {
    Embedded(OracleResult),
    /// No valid embedding exists.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("no oracle for {traffic} traffic with {routing:?} routing")]
    UnsupportedModel {
        traffic: &'static str,
        routing: RoutingModel,
    },
    #[error("oracle called with {0} traffic")]
    WrongTraffic(&'static str),
    #[error(transparent)]
    Steiner(#[from] SteinerError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Whether a (traffic, routing) pair has an oracle.
pub fn is_supported(req: &VNetRequest) -> bool {
    matches!(
        (&req.traffic, req.routing),
        (TrafficSpec::AggregateIngress { .. }, RoutingModel::Tree | RoutingModel::SinglePath)
            | (TrafficSpec::Hose { .. }, RoutingModel::Tree)
            | (TrafficSpec::CustomerPipe { .. }, RoutingModel::Multipath)
    )
}

/// Dispatches to the oracle for the request's traffic and routing model.
pub fn embed(
    net: &SubstrateNetwork,
    prices: &EffectivePrices,
    req: &VNetRequest,
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    match (&req.traffic, req.routing) {
        (TrafficSpec::AggregateIngress { .. }, RoutingModel::Tree | RoutingModel::SinglePath) => {
            oracle_aggregate_tree(net, prices, req, config)
        }
        (TrafficSpec::Hose { .. }, RoutingModel::Tree) => oracle_hose_tree_exact(net, prices, req, config),
        (TrafficSpec::CustomerPipe { .. }, RoutingModel::Multipath) => {
            oracle_customer_pipe_mcf(net, prices, req, config)
        }
        (traffic, routing) => Err(OracleError::UnsupportedModel {
            traffic: traffic.model_name(),
            routing,
        }),
    }
}
