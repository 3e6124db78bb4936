//! The online primal-dual admission engine.
//!
//! Each arriving request is priced by an oracle against the current dual
//! prices summed over the request's slots. A request is admitted when its
//! cheapest embedding costs less than `rho * benefit`; admission raises the
//! price of every touched (resource, slot) pair multiplicatively:
//!
//! ```text
//! x <- x * 2^(a/c) + (2^(a/c) - 1) / w
//! ```
//!
//! where `a` is the embedding's entry on the resource, `c` the (possibly
//! scaled) capacity and `w` the column weight over all slots. Prices are
//! stored lazily: untouched pairs read as zero.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::oracles::{self, EffectivePrices, OracleConfig, OracleError, OracleOutcome, SteinerMode};
use crate::requests::{validate_request, Embedding, RequestError, RequestId, Slot, SlotSet, VNetRequest};
use crate::substrate::{ResourceId, SubstrateNetwork};

const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    /// Capacities are divided by this factor (1 = plain mode).
    pub capacity_scale: f64,
    /// Smallest admissible nonzero entry of an embedding.
    pub min_load_floor: f64,
    pub steiner: SteinerMode,
    pub enumeration_budget: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            capacity_scale: 1.0,
            min_load_floor: 1.0,
            steiner: SteinerMode::Auto,
            enumeration_budget: OracleConfig::default().enumeration_budget,
        }
    }
}

impl EngineConfig {
    fn oracle(&self) -> OracleConfig {
        OracleConfig {
            steiner: self.steiner,
            min_load_floor: self.min_load_floor,
            enumeration_budget: self.enumeration_budget,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RejectReason {
    PriceTooHigh,
    /// No valid embedding exists.
    Infeasible,
    UnsupportedModel,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::PriceTooHigh => "price_too_high",
            RejectReason::Infeasible => "infeasible",
            RejectReason::UnsupportedModel => "unsupported_model",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Acceptance {
    pub embedding: Embedding,
    pub gamma: f64,
    pub rho: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    Accepted(Acceptance),
    Rejected {
        reason: RejectReason,
        /// Oracle cost and ratio, when an embedding was found.
        gamma: Option<f64>,
        rho: Option<f64>,
    },
}

impl Decision {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Decision::Accepted(_))
    }

    fn rejected(reason: RejectReason) -> Self {
        Decision::Rejected {
            reason,
            gamma: None,
            rho: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    Config(&'static str),
    #[error("request {id}: {source}")]
    InvalidRequest { id: RequestId, source: RequestError },
    #[error("request {id} arrives out of order")]
    OutOfOrder { id: RequestId },
    #[error("capacities can only be rescaled before the first request")]
    AlreadyStarted,
    #[error("embedding column is zero")]
    ZeroColumn,
    #[error("request {id}: {source}")]
    Oracle { id: RequestId, source: OracleError },
}

/// An admitted request.
#[derive(Clone, Debug, PartialEq)]
pub struct AcceptedRecord {
    pub embedding: Embedding,
    pub slots: SlotSet,
    pub benefit: f64,
    pub rho: f64,
    pub column_weight: f64,
}

/// Covering-side variables plus admission records and running statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PriceState {
    prices: BTreeMap<ResourceId, BTreeMap<Slot, f64>>,
    loads: BTreeMap<ResourceId, BTreeMap<Slot, f64>>,
    z: BTreeMap<RequestId, f64>,
    accepted: BTreeMap<RequestId, AcceptedRecord>,
    primal: f64,
    dual: f64,
    max_column_weight: f64,
    max_slot_weight: f64,
    max_benefit: f64,
    max_duration: usize,
    max_rho: f64,
    min_entry: Option<f64>,
}

impl PriceState {
    pub fn price(&self, r: ResourceId, t: Slot) -> f64 {
        self.prices
            .get(&r)
            .and_then(|m| m.get(&t))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn load(&self, r: ResourceId, t: Slot) -> f64 {
        self.loads.get(&r).and_then(|m| m.get(&t)).copied().unwrap_or(0.0)
    }

    /// Every materialized `(resource, slot, price)`.
    pub fn prices(&self) -> impl Iterator<Item = (ResourceId, Slot, f64)> + '_ {
        self.prices
            .iter()
            .flat_map(|(&r, m)| m.iter().map(move |(&t, &x)| (r, t, x)))
    }

    /// Every nonzero `(resource, slot, load)`.
    pub fn loads(&self) -> impl Iterator<Item = (ResourceId, Slot, f64)> + '_ {
        self.loads
            .iter()
            .flat_map(|(&r, m)| m.iter().map(move |(&t, &l)| (r, t, l)))
    }

    pub fn z(&self, id: RequestId) -> f64 {
        self.z.get(&id).copied().unwrap_or(0.0)
    }

    pub fn accepted(&self) -> &BTreeMap<RequestId, AcceptedRecord> {
        &self.accepted
    }

    /// Sum over the request's slots of the price of `r`.
    fn summed_price(&self, r: ResourceId, slots: &SlotSet) -> f64 {
        match self.prices.get(&r) {
            None => 0.0,
            Some(m) => slots.iter().filter_map(|t| m.get(&t)).fold(0.0, |s, x| s + x),
        }
    }
}

/// Theoretical congestion bounds from the statistics of admitted columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaBounds {
    /// `log2(1 + 3 W B)` with `W` the largest single-slot column weight.
    pub beta: f64,
    /// `log2(1 + 3 T_max W B)`.
    pub beta_prime: f64,
    /// `rho log2(1 + 3 rho W' B)` with `W'` the largest column weight over
    /// all slots.
    pub beta_rho: f64,
    pub max_column_weight: f64,
    pub max_slot_weight: f64,
    /// Largest benefit, divided by the smallest entry when entries below 1
    /// were admitted (relaxed floor).
    pub max_benefit: f64,
    pub max_duration: usize,
    pub max_rho: f64,
    pub floor_relaxed: bool,
}

impl BetaBounds {
    /// Bound that applies to the run: `beta_rho` if any approximate oracle
    /// was used, `beta_prime` otherwise (equal to `beta` without durations).
    pub fn applicable(&self) -> f64 {
        if self.max_rho > 1.0 {
            self.beta_rho
        } else {
            self.beta_prime
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CongestionEntry {
    pub resource: ResourceId,
    pub slot: Slot,
    pub load: f64,
    pub capacity: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CongestionReport {
    pub entries: Vec<CongestionEntry>,
    pub max: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FractionalSolution {
    pub fractions: BTreeMap<RequestId, f64>,
    pub benefit: f64,
    pub beta: f64,
}

/// Weight of an embedding's column across `slots`: `|T|` times the sum
/// of its entries.
pub fn column_weight(embedding: &Embedding, slots: &SlotSet) -> Result<f64, EngineError> {
    let w = embedding.slot_weight();
    if !(w > 0.0) || slots.is_empty() {
        return Err(EngineError::ZeroColumn);
    }
    Ok(slots.len() as f64 * w)
}

/// The online engine. Requests must be fed in arrival order.
#[derive(Clone, Debug)]
pub struct Engine {
    original: SubstrateNetwork,
    scaled: SubstrateNetwork,
    config: EngineConfig,
    state: PriceState,
    last_arrival: Option<(RequestId, Slot)>,
}

impl Engine {
    pub fn new(net: &SubstrateNetwork, config: EngineConfig) -> Result<Self, EngineError> {
        if !(config.capacity_scale >= 1.0) || !config.capacity_scale.is_finite() {
            return Err(EngineError::Config("capacity scale must be a finite value >= 1"));
        }
        if !(config.min_load_floor > 0.0 && config.min_load_floor <= 1.0) {
            return Err(EngineError::Config("minimum load floor must lie in (0, 1]"));
        }
        Ok(Engine {
            original: net.clone(),
            scaled: net.with_scaled_capacities(config.capacity_scale),
            config,
            state: PriceState::default(),
            last_arrival: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &PriceState {
        &self.state
    }

    pub fn network(&self) -> &SubstrateNetwork {
        &self.original
    }

    /// Network with the capacities the engine actually prices against.
    pub fn effective_network(&self) -> &SubstrateNetwork {
        &self.scaled
    }

    /// Switches to scaled capacities `c / beta`. Only allowed before the
    /// first request.
    pub fn configure_scaled_capacities(&mut self, beta: f64) -> Result<(), EngineError> {
        if self.last_arrival.is_some() {
            return Err(EngineError::AlreadyStarted);
        }
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(EngineError::Config("capacity scale must be a finite value >= 1"));
        }
        self.config.capacity_scale = beta;
        self.scaled = self.original.with_scaled_capacities(beta);
        Ok(())
    }

    /// Per-resource prices summed over the request's slots.
    pub fn effective_prices(&self, req: &VNetRequest) -> EffectivePrices {
        let mut prices = EffectivePrices::zero(&self.scaled);
        for e in self.scaled.edge_ids() {
            prices.edge[e.0] = self.state.summed_price(ResourceId::Edge(e), &req.slots);
        }
        for v in self.scaled.node_ids() {
            prices.node[v.0] = self.state.summed_price(ResourceId::Node(v), &req.slots);
        }
        prices
    }

    /// Admits or rejects one request.
    pub fn process_request(&mut self, req: &VNetRequest) -> Result<Decision, EngineError> {
        validate_request(&self.original, req).map_err(|source| EngineError::InvalidRequest { id: req.id, source })?;
        let arrival = req.arrival().expect("validated requests have slots");
        if let Some((last_id, last_slot)) = self.last_arrival {
            if req.id <= last_id || arrival < last_slot {
                return Err(EngineError::OutOfOrder { id: req.id });
            }
        }
        self.last_arrival = Some((req.id, arrival));

        if !oracles::is_supported(req) {
            return Ok(Decision::rejected(RejectReason::UnsupportedModel));
        }
        let prices = self.effective_prices(req);
        let outcome = oracles::embed(&self.scaled, &prices, req, &self.config.oracle())
            .map_err(|source| EngineError::Oracle { id: req.id, source })?;
        let result = match outcome {
            OracleOutcome::Infeasible => return Ok(Decision::rejected(RejectReason::Infeasible)),
            OracleOutcome::Embedded(r) => r,
        };
        let embedding = result.embedding;
        if let Some((r, a)) = embedding.violation(&self.scaled, 0.0, FEASIBILITY_TOL) {
            panic!("oracle returned entry {a} on {r} above its capacity");
        }
        if embedding.violation(&self.scaled, self.config.min_load_floor, FEASIBILITY_TOL).is_some() {
            return Ok(Decision::rejected(RejectReason::Infeasible));
        }
        let (gamma, rho) = (result.gamma, result.rho);
        if !(gamma < rho * req.benefit) {
            return Ok(Decision::Rejected {
                reason: RejectReason::PriceTooHigh,
                gamma: Some(gamma),
                rho: Some(rho),
            });
        }

        let w = column_weight(&embedding, &req.slots)?;
        let z = rho * req.benefit - gamma / rho;
        let mut primal_increment = z;
        for (r, a) in embedding.entries() {
            let c = self.scaled.capacity(r).expect("entries only exist on bounded resources");
            let growth = libm::exp2(a / c);
            let prices = self.state.prices.entry(r).or_default();
            let loads = self.state.loads.entry(r).or_default();
            for t in req.slots.iter() {
                let x = prices.entry(t).or_insert(0.0);
                let updated = *x * growth + (growth - 1.0) / w;
                primal_increment += (updated - *x) * c;
                *x = updated;
                *loads.entry(t).or_insert(0.0) += a;
            }
            let min_entry = self.state.min_entry.map_or(a, |m| m.min(a));
            self.state.min_entry = Some(min_entry);
        }
        let st = &mut self.state;
        st.primal += primal_increment;
        st.dual += req.benefit;
        st.z.insert(req.id, z);
        st.max_column_weight = st.max_column_weight.max(w);
        st.max_slot_weight = st.max_slot_weight.max(embedding.slot_weight());
        st.max_benefit = st.max_benefit.max(req.benefit);
        st.max_duration = st.max_duration.max(req.slots.len());
        st.max_rho = st.max_rho.max(rho);
        st.accepted.insert(
            req.id,
            AcceptedRecord {
                embedding: embedding.clone(),
                slots: req.slots.clone(),
                benefit: req.benefit,
                rho,
                column_weight: w,
            },
        );
        Ok(Decision::Accepted(Acceptance {
            embedding,
            gamma,
            rho,
            z,
        }))
    }

    /// Covering objective `sum x c + sum z`, accumulated per request.
    pub fn primal_value(&self) -> f64 {
        self.state.primal
    }

    /// The same objective summed from scratch.
    pub fn recomputed_primal_value(&self) -> f64 {
        let prices: f64 = self
            .state
            .prices()
            .map(|(r, _, x)| x * self.scaled.capacity(r).unwrap_or(0.0))
            .sum();
        prices + self.state.z.values().sum::<f64>()
    }

    /// Total benefit of admitted requests.
    pub fn dual_value(&self) -> f64 {
        self.state.dual
    }

    /// Load over capacity per (resource, slot), against the capacities of
    /// `reference` (normally the original network).
    pub fn congestion_report(&self, reference: &SubstrateNetwork) -> CongestionReport {
        let mut report = CongestionReport::default();
        for (r, t, load) in self.state.loads() {
            let Some(capacity) = reference.capacity(r) else {
                continue;
            };
            let ratio = load / capacity;
            report.max = report.max.max(ratio);
            report.entries.push(CongestionEntry {
                resource: r,
                slot: t,
                load,
                capacity,
                ratio,
            });
        }
        report
    }

    /// Congestion against the unscaled capacities.
    pub fn congestion(&self) -> CongestionReport {
        self.congestion_report(&self.original)
    }

    pub fn theoretical_beta(&self) -> BetaBounds {
        let st = &self.state;
        let floor_factor = st.min_entry.map_or(1.0, |m| 1.0 / m.min(1.0));
        let b = st.max_benefit * floor_factor;
        let rho = st.max_rho.max(1.0);
        BetaBounds {
            beta: libm::log2(1.0 + 3.0 * st.max_slot_weight * b),
            beta_prime: libm::log2(1.0 + 3.0 * st.max_duration as f64 * st.max_slot_weight * b),
            beta_rho: rho * libm::log2(1.0 + 3.0 * rho * st.max_column_weight * b),
            max_column_weight: st.max_column_weight,
            max_slot_weight: st.max_slot_weight,
            max_benefit: b,
            max_duration: st.max_duration,
            max_rho: st.max_rho,
            floor_relaxed: floor_factor > 1.0,
        }
    }

    /// Every admitted request scaled down by the applicable bound.
    pub fn fractional_solution(&self) -> FractionalSolution {
        if self.state.accepted.is_empty() {
            return FractionalSolution::default();
        }
        let beta = self.theoretical_beta().applicable();
        let fractions = self.state.accepted.keys().map(|&id| (id, 1.0 / beta)).collect();
        FractionalSolution {
            fractions,
            benefit: self.state.dual / beta,
            beta,
        }
    }
}
