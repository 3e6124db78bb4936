//! Online virtual-network requests and the embeddings that serve them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::substrate::{EdgeId, NodeId, Path, ResourceId, SubstrateNetwork};

/// Discrete time slot.
pub type Slot = u32;

/// Arrival-ordered request identifier.
pub type RequestId = u64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Demand {
    pub from: NodeId,
    pub to: NodeId,
    pub amount: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoseBound {
    pub node: NodeId,
    pub b_in: f64,
    pub b_out: f64,
}

/// Allowed traffic of a request.
#[derive(Clone, Debug, PartialEq)]
pub enum TrafficSpec {
    /// Fixed demand between ordered terminal pairs.
    CustomerPipe { demands: Vec<Demand> },
    /// Per-terminal ingress/egress caps; every conforming matrix must fit.
    Hose { bounds: Vec<HoseBound> },
    /// Total ingress bound shared by all terminals.
    AggregateIngress { ingress: f64 },
}

impl TrafficSpec {
    pub fn model_name(&self) -> &'static str {
        match self {
            TrafficSpec::CustomerPipe { .. } => "customer_pipe",
            TrafficSpec::Hose { .. } => "hose",
            TrafficSpec::AggregateIngress { .. } => "aggregate_ingress",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoutingModel {
    Multipath,
    SinglePath,
    Tree,
}

/// Sorted, duplicate-free set of slots a request occupies. A split
/// interval is just a set with gaps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SlotSet(Vec<Slot>);

impl SlotSet {
    pub fn new(slots: impl IntoIterator<Item = Slot>) -> Self {
        let mut v: Vec<Slot> = slots.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SlotSet(v)
    }

    /// Half-open interval `[start, end)`.
    pub fn interval(start: Slot, end: Slot) -> Self {
        SlotSet((start..end).collect())
    }

    pub fn single(slot: Slot) -> Self {
        SlotSet(alloc::vec![slot])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Slot> {
        self.0.first().copied()
    }

    pub fn contains(&self, t: Slot) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Slot> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Slot] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VNetRequest {
    pub id: RequestId,
    pub terminals: Vec<NodeId>,
    pub traffic: TrafficSpec,
    pub routing: RoutingModel,
    /// Total benefit earned if the request is served.
    pub benefit: f64,
    pub slots: SlotSet,
    /// Aggregate ingress packet rate; 0 disables node rows.
    pub packet_rate: f64,
}

impl VNetRequest {
    /// Aggregate-ingress tree request in a single slot with no packet rate.
    pub fn aggregate(id: RequestId, terminals: Vec<NodeId>, ingress: f64, benefit: f64) -> Self {
        VNetRequest {
            id,
            terminals,
            traffic: TrafficSpec::AggregateIngress { ingress },
            routing: RoutingModel::Tree,
            benefit,
            slots: SlotSet::single(0),
            packet_rate: 0.0,
        }
    }

    pub fn with_slots(mut self, slots: SlotSet) -> Self {
        self.slots = slots;
        self
    }

    pub fn with_routing(mut self, routing: RoutingModel) -> Self {
        self.routing = routing;
        self
    }

    pub fn with_packet_rate(mut self, rate: f64) -> Self {
        self.packet_rate = rate;
        self
    }

    pub fn arrival(&self) -> Option<Slot> {
        self.slots.first()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RequestError {
    #[error("request needs at least 2 distinct terminals, got {0}")]
    TooFewTerminals(usize),
    #[error("terminal {0} is not a substrate node")]
    UnknownTerminal(NodeId),
    #[error("terminal {0} listed twice")]
    DuplicateTerminal(NodeId),
    #[error("benefit below 1 ({0})")]
    BenefitBelowOne(f64),
    #[error("duration is empty")]
    EmptyDuration,
    #[error("negative or non-finite packet rate {0}")]
    PacketRate(f64),
    #[error("packet rates are only modelled for aggregate-ingress requests")]
    PacketRateUnsupported,
    #[error("aggregate ingress {0} below 1")]
    IngressBelowOne(f64),
    #[error("hose bound at {node} below 1 (in {b_in}, out {b_out})")]
    HoseBoundBelowOne { node: NodeId, b_in: f64, b_out: f64 },
    #[error("hose bounds must list every terminal exactly once")]
    HoseBoundsMismatch,
    #[error("demand {from}->{to} is not between two distinct terminals")]
    DemandEndpoints { from: NodeId, to: NodeId },
    #[error("demand {from}->{to} is negative or non-finite ({amount})")]
    DemandAmount { from: NodeId, to: NodeId, amount: f64 },
    #[error("demand {from}->{to} listed twice")]
    DuplicateDemand { from: NodeId, to: NodeId },
    #[error("customer-pipe matrix carries no traffic")]
    NoDemand,
}

/// Checks every request invariant against `net`.
pub fn validate_request(net: &SubstrateNetwork, req: &VNetRequest) -> Result<(), RequestError> {
    let mut terms = req.terminals.clone();
    terms.sort();
    for w in terms.windows(2) {
        if w[0] == w[1] {
            return Err(RequestError::DuplicateTerminal(w[0]));
        }
    }
    if terms.len() < 2 {
        return Err(RequestError::TooFewTerminals(terms.len()));
    }
    if let Some(&t) = terms.iter().find(|t| t.0 >= net.node_count()) {
        return Err(RequestError::UnknownTerminal(t));
    }
    if !(req.benefit >= 1.0) || !req.benefit.is_finite() {
        return Err(RequestError::BenefitBelowOne(req.benefit));
    }
    if req.slots.is_empty() {
        return Err(RequestError::EmptyDuration);
    }
    if !(req.packet_rate >= 0.0) || !req.packet_rate.is_finite() {
        return Err(RequestError::PacketRate(req.packet_rate));
    }
    let is_term = |v: NodeId| terms.binary_search(&v).is_ok();
    match &req.traffic {
        TrafficSpec::AggregateIngress { ingress } => {
            if !(*ingress >= 1.0) || !ingress.is_finite() {
                return Err(RequestError::IngressBelowOne(*ingress));
            }
        }
        TrafficSpec::Hose { bounds } => {
            if req.packet_rate > 0.0 {
                return Err(RequestError::PacketRateUnsupported);
            }
            let mut nodes: Vec<NodeId> = bounds.iter().map(|b| b.node).collect();
            nodes.sort();
            if nodes != terms {
                return Err(RequestError::HoseBoundsMismatch);
            }
            for b in bounds {
                let ok = b.b_in >= 1.0 && b.b_out >= 1.0 && b.b_in.is_finite() && b.b_out.is_finite();
                if !ok {
                    return Err(RequestError::HoseBoundBelowOne {
                        node: b.node,
                        b_in: b.b_in,
                        b_out: b.b_out,
                    });
                }
            }
        }
        TrafficSpec::CustomerPipe { demands } => {
            if req.packet_rate > 0.0 {
                return Err(RequestError::PacketRateUnsupported);
            }
            let mut seen = Vec::new();
            for d in demands {
                if d.from == d.to || !is_term(d.from) || !is_term(d.to) {
                    return Err(RequestError::DemandEndpoints {
                        from: d.from,
                        to: d.to,
                    });
                }
                if !(d.amount >= 0.0) || !d.amount.is_finite() {
                    return Err(RequestError::DemandAmount {
                        from: d.from,
                        to: d.to,
                        amount: d.amount,
                    });
                }
                if seen.contains(&(d.from, d.to)) {
                    return Err(RequestError::DuplicateDemand {
                        from: d.from,
                        to: d.to,
                    });
                }
                seen.push((d.from, d.to));
            }
            if demands.iter().all(|d| d.amount == 0.0) {
                return Err(RequestError::NoDemand);
            }
        }
    }
    Ok(())
}

/// Largest bandwidth any valid embedding of `req` can place on a single
/// edge.
pub fn maximum_possible_load(req: &VNetRequest) -> f64 {
    match &req.traffic {
        TrafficSpec::AggregateIngress { ingress } => *ingress,
        TrafficSpec::Hose { bounds } => worst_hose_cut(bounds),
        TrafficSpec::CustomerPipe { demands } => demands.iter().map(|d| d.amount).sum(),
    }
}

/// Cut traffic of the hose model across the terminal bipartition
/// `(A, B)`: `min(out(A), in(B)) + min(in(A), out(B))`.
pub fn hose_cut_traffic(side_a: &[HoseBound], side_b: &[HoseBound]) -> f64 {
    let sum = |s: &[HoseBound], f: fn(&HoseBound) -> f64| s.iter().map(f).sum::<f64>();
    let (out_a, in_a) = (sum(side_a, |b| b.b_out), sum(side_a, |b| b.b_in));
    let (out_b, in_b) = (sum(side_b, |b| b.b_out), sum(side_b, |b| b.b_in));
    out_a.min(in_b) + in_a.min(out_b)
}

const HOSE_CUT_ENUMERATION_LIMIT: usize = 16;

/// Largest cut traffic over all terminal bipartitions. Above
/// `HOSE_CUT_ENUMERATION_LIMIT` terminals falls back to the looser bound
/// `2 * min(sum out, sum in)`.
fn worst_hose_cut(bounds: &[HoseBound]) -> f64 {
    let k = bounds.len();
    if k > HOSE_CUT_ENUMERATION_LIMIT {
        let total_in: f64 = bounds.iter().map(|b| b.b_in).sum();
        let total_out: f64 = bounds.iter().map(|b| b.b_out).sum();
        return 2.0 * total_in.min(total_out);
    }
    let mut best: f64 = 0.0;
    // Terminal 0 always on side A; every proper bipartition once.
    for mask in 0u32..(1u32 << (k - 1)) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, bound) in bounds.iter().enumerate() {
            if i == 0 || mask & (1 << (i - 1)) == 0 {
                a.push(*bound);
            } else {
                b.push(*bound);
            }
        }
        if !b.is_empty() {
            best = best.max(hose_cut_traffic(&a, &b));
        }
    }
    best
}

/// Paths carrying one commodity of a multipath embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct CommodityFlow {
    pub from: NodeId,
    pub to: NodeId,
    pub paths: Vec<(Path, f64)>,
}

/// Resource usage of one way of serving a request: a column of the
/// packing matrix, per time slot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Embedding {
    pub edge_reservation: BTreeMap<EdgeId, f64>,
    /// Only capacity-bounded nodes appear; unbounded nodes have no row.
    pub node_usage: BTreeMap<NodeId, f64>,
    pub commodity_flows: Vec<CommodityFlow>,
}

impl Embedding {
    /// Nonzero entries in resource order.
    pub fn entries(&self) -> impl Iterator<Item = (ResourceId, f64)> + '_ {
        self.edge_reservation
            .iter()
            .filter(|(_, &a)| a != 0.0)
            .map(|(&e, &a)| (ResourceId::Edge(e), a))
            .chain(
                self.node_usage
                    .iter()
                    .filter(|(_, &a)| a != 0.0)
                    .map(|(&v, &a)| (ResourceId::Node(v), a)),
            )
    }

    /// Sum of entries in one slot's copy of the column.
    pub fn slot_weight(&self) -> f64 {
        self.entries().map(|(_, a)| a).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries().next().is_none()
    }

    /// Price-cost against per-resource prices.
    pub fn cost(&self, edge_price: &[f64], node_price: &[f64]) -> f64 {
        self.entries()
            .map(|(r, a)| match r {
                ResourceId::Edge(e) => a * edge_price[e.0],
                ResourceId::Node(v) => a * node_price[v.0],
            })
            .fold(0.0, |s, x| s + x)
    }

    /// First entry violating `[floor, capacity]`, if any.
    pub fn violation(&self, net: &SubstrateNetwork, floor: f64, tol: f64) -> Option<(ResourceId, f64)> {
        self.entries().find(|&(r, a)| {
            let over = net.capacity(r).is_some_and(|c| a > c + tol);
            over || a < floor - tol
        })
    }
}
