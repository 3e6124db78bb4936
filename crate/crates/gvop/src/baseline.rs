//! Greedy first-fit comparators.

use std::collections::BTreeMap;

use gvop_core::oracles::steiner::{mst_steiner_2approx, SteinerError};
use gvop_core::requests::Slot;
use gvop_core::substrate::WeightedView;
use gvop_core::{EdgeId, SubstrateNetwork, TrafficSpec, VNetRequest};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyPolicy {
    /// Every usable link costs 1.
    UnitWeight,
    /// A link costs its current load over capacity (worst slot).
    LoadRatio,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BaselineReport {
    pub accepted: usize,
    pub rejected: usize,
    pub benefit: f64,
    pub max_congestion: f64,
}

/// Embeds each aggregate-ingress request on a Steiner tree over the links
/// with enough residual capacity, or rejects it. Other traffic models are
/// rejected.
pub fn greedy_baseline(net: &SubstrateNetwork, requests: &[VNetRequest], policy: GreedyPolicy) -> BaselineReport {
    let mut load: BTreeMap<(EdgeId, Slot), f64> = BTreeMap::new();
    let mut report = BaselineReport::default();
    for req in requests {
        let TrafficSpec::AggregateIngress { ingress } = req.traffic else {
            report.rejected += 1;
            continue;
        };
        let worst = |e: EdgeId| {
            req.slots
                .iter()
                .map(|t| load.get(&(e, t)).copied().unwrap_or(0.0))
                .fold(0.0, f64::max)
        };
        let view = WeightedView {
            net,
            edge_cost: net
                .edge_ids()
                .map(|e| {
                    let c = net.edge(e).capacity;
                    let used = worst(e);
                    (used + ingress <= c + 1e-9).then_some(match policy {
                        GreedyPolicy::UnitWeight => 1.0,
                        GreedyPolicy::LoadRatio => used / c,
                    })
                })
                .collect(),
            node_cost: vec![Some(0.0); net.node_count()],
        };
        match mst_steiner_2approx(&view, &req.terminals) {
            Ok(tree) => {
                for &e in &tree.edges {
                    for t in req.slots.iter() {
                        *load.entry((e, t)).or_insert(0.0) += ingress;
                    }
                }
                report.accepted += 1;
                report.benefit += req.benefit;
            }
            Err(SteinerError::Disconnected) => report.rejected += 1,
            Err(e) => unreachable!("metric-closure trees do not fail with {e}"),
        }
    }
    report.max_congestion = load
        .iter()
        .map(|(&(e, _), &l)| l / net.edge(e).capacity)
        .fold(0.0, f64::max);
    report
}
