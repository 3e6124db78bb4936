//! Invariant suite run by `gvop verify`: replays a sequence through a
//! plain engine and audits the accounting after every request.

use gvop_core::engine::PriceState;
use gvop_core::offline::{enumerate_embeddings, offline_fractional_opt};
use gvop_core::oracles::{oracle_customer_pipe_mcf, OracleConfig, OracleOutcome};
use gvop_core::{Decision, Engine, EngineConfig, SubstrateNetwork, TrafficSpec, VNetRequest};
use serde::Serialize;

use crate::experiment::{ExperimentConfig, ExperimentError};

const ACCOUNTING_TOL: f64 = 1e-9;
const CONGESTION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verification {
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, worst: Option<String>, ok_detail: String) {
        self.checks.push(Check {
            name,
            passed: worst.is_none(),
            detail: worst.unwrap_or(ok_detail),
        });
    }
}

/// Smallest slack of `x >= (2^(load/c) - 1) / W` over all priced pairs.
fn lemma_slack(engine: &Engine, w: f64) -> f64 {
    let net = engine.effective_network();
    let st = engine.state();
    st.loads()
        .map(|(r, t, load)| {
            let c = net.capacity(r).unwrap_or(f64::INFINITY);
            st.price(r, t) - ((load / c).exp2() - 1.0) / w
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest slack of `z_j + X . column >= b_j` over every request and
/// every embedding the offline enumeration lists. Customer-pipe
/// requests are checked against their cheapest fractional flow.
fn covering_slack(net: &SubstrateNetwork, engine: &Engine, requests: &[VNetRequest], budget: usize, floor: f64) -> f64 {
    let st: &PriceState = engine.state();
    let mut worst = f64::INFINITY;
    for req in requests {
        let prices = engine.effective_prices(req);
        let z = st.z(req.id);
        let cheapest = if let TrafficSpec::CustomerPipe { .. } = req.traffic {
            let cfg = OracleConfig {
                min_load_floor: 1e-12,
                ..OracleConfig::default()
            };
            match oracle_customer_pipe_mcf(net, &prices, req, &cfg) {
                Ok(OracleOutcome::Embedded(r)) => Some(r.gamma),
                _ => None,
            }
        } else {
            enumerate_embeddings(net, req, budget, floor)
                .embeddings
                .iter()
                .map(|e| prices.cost(e))
                .min_by(f64::total_cmp)
        };
        if let Some(cost) = cheapest {
            worst = worst.min(z + cost - req.benefit);
        }
    }
    worst
}

/// Replays `requests` in plain mode and checks the accounting invariants.
pub fn verify(
    net: &SubstrateNetwork,
    requests: &[VNetRequest],
    config: &ExperimentConfig,
) -> Result<Verification, ExperimentError> {
    let mut engine = Engine::new(
        net,
        EngineConfig {
            capacity_scale: 1.0,
            min_load_floor: config.floor,
            steiner: config.steiner,
            enumeration_budget: config.enumeration_budget,
        },
    )?;
    let mut coupling: Option<String> = None;
    let mut lemma: Option<String> = None;
    let mut frozen: Option<String> = None;
    for req in requests {
        let (p0, d0) = (engine.primal_value(), engine.dual_value());
        let before = engine.state().clone();
        let decision = engine.process_request(req)?;
        let (dp, dd) = (engine.primal_value() - p0, engine.dual_value() - d0);
        let rho = match &decision {
            Decision::Accepted(a) => a.rho,
            Decision::Rejected { .. } => 1.0,
        };
        if dp > 2.0 * rho * dd + ACCOUNTING_TOL && coupling.is_none() {
            coupling = Some(format!("request {}: primal grew {dp} for dual {dd}", req.id));
        }
        if !decision.is_accepted() && engine.state() != &before && frozen.is_none() {
            frozen = Some(format!("request {} was rejected but changed the state", req.id));
        }
        let w = engine.theoretical_beta().max_column_weight;
        if w > 0.0 {
            let slack = lemma_slack(&engine, w);
            if slack < -ACCOUNTING_TOL && lemma.is_none() {
                lemma = Some(format!("request {}: price below the load law by {}", req.id, -slack));
            }
        }
    }
    let mut v = Verification::default();
    v.push("primal_dual_coupling", coupling, "primal increment <= 2 rho x dual increment".into());
    v.push("lemma_price_law", lemma, "x >= (2^(load/c) - 1) / W everywhere".into());
    v.push("rejections_leave_state", frozen, "rejected requests left prices untouched".into());

    let drift = (engine.primal_value() - engine.recomputed_primal_value()).abs();
    let drift_ok = drift <= ACCOUNTING_TOL * engine.primal_value().max(1.0);
    v.push(
        "primal_accounting",
        (!drift_ok).then(|| format!("accumulated and recomputed primal differ by {drift}")),
        format!("accumulated primal matches recomputation (drift {drift:e})"),
    );

    let beta = engine.theoretical_beta().applicable();
    let congestion = engine.congestion().max;
    v.push(
        "congestion_bound",
        (congestion > beta + CONGESTION_TOL).then(|| format!("congestion {congestion} exceeds bound {beta}")),
        format!("congestion {congestion} <= bound {beta}"),
    );

    let small = net.edge_count() <= config.opt_max_edges && requests.len() <= config.opt_max_requests;
    if small {
        let budget = net.edge_count();
        let opt = offline_fractional_opt(net, requests, budget, config.floor)?;
        let primal = engine.primal_value();
        v.push(
            "offline_opt_below_primal",
            (opt.value > primal + CONGESTION_TOL).then(|| format!("offline optimum {} exceeds primal {primal}", opt.value)),
            format!("offline optimum {} <= primal {primal}", opt.value),
        );
        let slack = covering_slack(net, &engine, requests, budget, config.floor);
        v.push(
            "covering_feasibility",
            (slack < -ACCOUNTING_TOL).then(|| format!("a covering constraint is short by {}", -slack)),
            "every enumerated column is covered".into(),
        );
        if opt.exact && congestion <= 1.0 + ACCOUNTING_TOL {
            let benefit = engine.dual_value();
            v.push(
                "benefit_below_opt",
                (benefit > opt.value + CONGESTION_TOL).then(|| format!("benefit {benefit} exceeds optimum {}", opt.value)),
                format!("benefit {benefit} <= optimum {}", opt.value),
            );
        }
    }
    Ok(v)
}
