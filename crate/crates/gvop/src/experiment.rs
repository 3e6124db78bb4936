//! Batch runs: stream a request sequence through a fresh engine and emit
//! the run log, a summary report and the congestion table.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use gvop_core::engine::CongestionReport;
use gvop_core::offline::offline_fractional_opt;
use gvop_core::oracles::SteinerMode;
use gvop_core::requests::maximum_possible_load;
use gvop_core::{
    Decision, Engine, EngineConfig, EngineError, ResourceId, RoutingModel, SubstrateNetwork, TrafficSpec, VNetRequest,
};
use serde::Serialize;

use crate::baseline::{greedy_baseline, GreedyPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Original capacities; congestion may exceed 1 within the bound.
    Plain,
    /// Capacities divided by a congestion bound, so no link overflows.
    Scaled,
    /// Plain run, reporting the admitted requests scaled down fractionally.
    Fractional,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Divisor for scaled mode; computed from the instance when absent.
    pub scale: Option<f64>,
    pub floor: f64,
    pub steiner: SteinerMode,
    pub enumeration_budget: usize,
    /// The offline optimum is computed only up to these sizes.
    pub opt_max_edges: usize,
    pub opt_max_requests: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Plain,
            scale: None,
            floor: 1.0,
            steiner: SteinerMode::Auto,
            enumeration_budget: EngineConfig::default().enumeration_budget,
            opt_max_edges: 12,
            opt_max_requests: 12,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("offline optimum: {0}")]
    Offline(#[from] gvop_core::lp::LpError),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunLogRecord {
    pub id: u64,
    pub decision: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub primal: f64,
    pub dual: f64,
    pub max_congestion: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub requests: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub rejected_price: usize,
    pub rejected_infeasible: usize,
    pub rejected_unsupported: usize,
    pub benefit: f64,
    pub primal: f64,
    pub dual: f64,
    pub capacity_scale: f64,
    /// Against the original capacities.
    pub max_congestion: f64,
    /// Against the capacities the engine priced with.
    pub max_congestion_effective: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub beta_rho: f64,
    pub beta_applicable: f64,
    pub fractional_benefit: Option<f64>,
    pub offline_opt: Option<f64>,
    pub offline_opt_exact: bool,
    /// Offline optimum over benefit, when the optimum is exact.
    pub competitive_ratio: Option<f64>,
    pub greedy_unit_weight_benefit: f64,
    pub greedy_load_ratio_benefit: f64,
    pub wall_time_ms: f64,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub log: Vec<RunLogRecord>,
    pub congestion: CongestionReport,
    pub engine: Engine,
}

/// Worst ratio the configured oracles may report for `req`.
fn worst_rho(net: &SubstrateNetwork, req: &VNetRequest, steiner: SteinerMode) -> f64 {
    let TrafficSpec::AggregateIngress { .. } = req.traffic else {
        return 1.0;
    };
    let k = req.terminals.len();
    let node_weighted = req.packet_rate > 0.0 && net.nodes().iter().any(|n| n.capacity.is_some());
    let heuristic = if node_weighted {
        (2.0 * (k as f64).ln()).max(1.0)
    } else {
        2.0
    };
    match steiner {
        SteinerMode::Exact => 1.0,
        SteinerMode::Auto if k == 2 => 1.0,
        SteinerMode::Auto | SteinerMode::Approximate => heuristic,
    }
}

/// Congestion bound valid for any run of `requests` on `net`, from
/// instance data alone: column weights are bounded by the largest load
/// on every usable resource over every slot.
pub fn a_priori_beta(net: &SubstrateNetwork, requests: &[VNetRequest], steiner: SteinerMode, floor: f64) -> f64 {
    let n = net.node_count();
    let m = net.edge_count();
    let bounded_nodes = net.nodes().iter().filter(|v| v.capacity.is_some()).count();
    let mut w: f64 = 0.0;
    let mut b: f64 = 0.0;
    let mut rho: f64 = 1.0;
    for req in requests {
        let links = match req.routing {
            RoutingModel::Multipath => m,
            RoutingModel::SinglePath | RoutingModel::Tree => m.min(n.saturating_sub(1)),
        };
        let per_slot = maximum_possible_load(req) * links as f64 + req.packet_rate * bounded_nodes as f64;
        w = w.max(req.slots.len() as f64 * per_slot);
        b = b.max(req.benefit);
        rho = rho.max(worst_rho(net, req, steiner));
    }
    let b = b / floor.min(1.0);
    rho * (1.0 + 3.0 * rho * w * b).log2()
}

/// Runs the engine over the whole sequence.
pub fn run_experiment(
    net: &SubstrateNetwork,
    requests: &[VNetRequest],
    config: &ExperimentConfig,
) -> Result<RunOutcome, ExperimentError> {
    let started = Instant::now();
    let capacity_scale = match (config.mode, config.scale) {
        (Mode::Scaled, Some(s)) => s,
        (Mode::Scaled, None) => a_priori_beta(net, requests, config.steiner, config.floor).max(1.0),
        (_, Some(_)) => return Err(ExperimentError::Config("a capacity scale needs scaled mode")),
        (_, None) => 1.0,
    };
    let mut engine = Engine::new(
        net,
        EngineConfig {
            capacity_scale,
            min_load_floor: config.floor,
            steiner: config.steiner,
            enumeration_budget: config.enumeration_budget,
        },
    )?;
    let mut log = Vec::with_capacity(requests.len());
    let (mut rejected_price, mut rejected_infeasible, mut rejected_unsupported) = (0, 0, 0);
    for req in requests {
        let decision = engine.process_request(req)?;
        let mut record = RunLogRecord {
            id: req.id,
            decision: "accepted",
            reason: None,
            gamma: None,
            rho: None,
            z: None,
            primal: engine.primal_value(),
            dual: engine.dual_value(),
            max_congestion: engine.congestion().max,
        };
        match decision {
            Decision::Accepted(a) => {
                record.gamma = Some(a.gamma);
                record.rho = Some(a.rho);
                record.z = Some(a.z);
            }
            Decision::Rejected { reason, gamma, rho } => {
                match reason {
                    gvop_core::RejectReason::PriceTooHigh => rejected_price += 1,
                    gvop_core::RejectReason::Infeasible => rejected_infeasible += 1,
                    gvop_core::RejectReason::UnsupportedModel => rejected_unsupported += 1,
                }
                record.decision = "rejected";
                record.reason = Some(reason.as_str());
                record.gamma = gamma;
                record.rho = rho;
            }
        }
        log.push(record);
    }

    let congestion = engine.congestion();
    let beta = engine.theoretical_beta();
    let accepted = engine.state().accepted().len();
    let benefit = engine.dual_value();
    let small = net.edge_count() <= config.opt_max_edges && requests.len() <= config.opt_max_requests;
    let (offline_opt, offline_opt_exact) = if small {
        let opt = offline_fractional_opt(net, requests, net.edge_count(), config.floor)?;
        (Some(opt.value), opt.exact)
    } else {
        (None, false)
    };
    let competitive_ratio = match offline_opt {
        Some(opt) if offline_opt_exact && benefit > 0.0 => Some(opt / benefit),
        _ => None,
    };
    let report = RunReport {
        mode: config.mode,
        requests: requests.len(),
        accepted,
        rejected: requests.len() - accepted,
        rejected_price,
        rejected_infeasible,
        rejected_unsupported,
        benefit,
        primal: engine.primal_value(),
        dual: engine.dual_value(),
        capacity_scale,
        max_congestion: congestion.max,
        max_congestion_effective: engine.congestion_report(engine.effective_network()).max,
        beta: beta.beta,
        beta_prime: beta.beta_prime,
        beta_rho: beta.beta_rho,
        beta_applicable: beta.applicable(),
        fractional_benefit: (config.mode == Mode::Fractional).then(|| engine.fractional_solution().benefit),
        offline_opt,
        offline_opt_exact,
        competitive_ratio,
        greedy_unit_weight_benefit: greedy_baseline(net, requests, GreedyPolicy::UnitWeight).benefit,
        greedy_load_ratio_benefit: greedy_baseline(net, requests, GreedyPolicy::LoadRatio).benefit,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(RunOutcome {
        report,
        log,
        congestion,
        engine,
    })
}

pub fn write_run_log(log: &[RunLogRecord], out: &mut impl Write) -> Result<(), ExperimentError> {
    for record in log {
        serde_json::to_writer(&mut *out, record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn resource_label(net: &SubstrateNetwork, r: ResourceId) -> (&'static str, String) {
    match r {
        ResourceId::Edge(e) => {
            let edge = net.edge(e);
            ("edge", format!("{}-{}", net.node(edge.u).name, net.node(edge.v).name))
        }
        ResourceId::Node(v) => ("node", net.node(v).name.clone()),
    }
}

/// Columns: `kind,resource,slot,load,capacity,congestion`.
pub fn write_congestion_csv(
    net: &SubstrateNetwork,
    report: &CongestionReport,
    out: impl Write,
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "resource", "slot", "load", "capacity", "congestion"])?;
    for entry in &report.entries {
        let (kind, name) = resource_label(net, entry.resource);
        w.write_record([
            kind.to_string(),
            name,
            entry.slot.to_string(),
            entry.load.to_string(),
            entry.capacity.to_string(),
            entry.ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `run_log.jsonl`, `report.json` and `congestion.csv` into `dir`.
pub fn write_outputs(dir: &Path, net: &SubstrateNetwork, outcome: &RunOutcome) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    let mut log = BufWriter::new(File::create(dir.join("run_log.jsonl"))?);
    write_run_log(&outcome.log, &mut log)?;
    log.flush()?;
    let report = serde_json::to_string_pretty(&outcome.report).map_err(std::io::Error::from)?;
    fs::write(dir.join("report.json"), report + "\n")?;
    write_congestion_csv(net, &outcome.congestion, File::create(dir.join("congestion.csv"))?)?;
    Ok(())
}
