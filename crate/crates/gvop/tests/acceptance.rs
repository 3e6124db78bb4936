//! Acceptance criteria 1-9. Runs as a plain binary so that one pass/fail
//! line per criterion is always printed, whatever the capture settings.
//!
//! Reference values are computed here, independently of the engine's own
//! bookkeeping: loads are re-summed from the admitted embeddings, observed
//! weights and benefits are tracked per request, Steiner optima come from
//! vertex-subset enumeration and hose reservations from traffic-matrix
//! enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gvop::experiment::{run_experiment, write_run_log, ExperimentConfig, Mode};
use gvop::generator::{generate_planted_instance, random_topology, GeneratorParams, PlantedInstance};
use gvop::io::Topology;
use gvop_core::engine::Engine;
use gvop_core::lp::{LinearProgram, Relation};
use gvop_core::offline::{enumerate_embeddings, offline_fractional_opt};
use gvop_core::oracles::steiner::{mst_steiner_2approx, node_weighted_steiner_greedy, SteinerTree};
use gvop_core::oracles::{hose_edge_reservation, SteinerMode};
use gvop_core::requests::{Demand, HoseBound, Slot};
use gvop_core::substrate::{Edge, Node, WeightedView};
use gvop_core::{
    Decision, EdgeId, Embedding, EngineConfig, NodeId, ResourceId, RoutingModel, SlotSet, SubstrateNetwork,
    TrafficSpec, VNetRequest,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ACCOUNTING_TOL: f64 = 1e-9;
const CONGESTION_TOL: f64 = 1e-6;
const OPT_TOL: f64 = 1e-6;
const HOSE_TOL: f64 = 1e-9;
const PLANTED_LIMIT: Duration = Duration::from_secs(120);
const MICRO_LIMIT: Duration = Duration::from_secs(60);
// Small enough that the flow oracle returns the unfloored LP optimum.
const MICRO_FLOOR: f64 = 1e-6;

struct Verdict {
    criterion: u8,
    title: &'static str,
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(criterion: u8, title: &'static str, failure: Option<String>, detail: String) -> Self {
        Verdict {
            criterion,
            title,
            passed: failure.is_none(),
            detail: failure.unwrap_or(detail),
        }
    }
}

fn first_failure(slot: &mut Option<String>, message: impl FnOnce() -> String) {
    if slot.is_none() {
        *slot = Some(message());
    }
}

/// Tracks what the engine admitted, from the decisions alone.
#[derive(Default)]
struct Observed {
    loads: BTreeMap<(ResourceId, Slot), f64>,
    benefit: f64,
    max_column_weight: f64,
    max_slot_weight: f64,
    max_benefit: f64,
    max_duration: usize,
    max_rho: f64,
}

impl Observed {
    fn admit(&mut self, req: &VNetRequest, embedding: &Embedding, rho: f64) {
        let slot_weight: f64 = embedding.entries().map(|(_, a)| a).sum();
        for (r, a) in embedding.entries() {
            for t in req.slots.iter() {
                *self.loads.entry((r, t)).or_insert(0.0) += a;
            }
        }
        self.benefit += req.benefit;
        self.max_slot_weight = self.max_slot_weight.max(slot_weight);
        self.max_column_weight = self.max_column_weight.max(slot_weight * req.slots.len() as f64);
        self.max_benefit = self.max_benefit.max(req.benefit);
        self.max_duration = self.max_duration.max(req.slots.len());
        self.max_rho = self.max_rho.max(rho);
    }

    fn max_congestion(&self, net: &SubstrateNetwork) -> f64 {
        self.loads
            .iter()
            .map(|(&(r, _), &l)| l / net.capacity(r).expect("loads sit on bounded resources"))
            .fold(0.0, f64::max)
    }
}

/// `sum x c + sum z` from the engine's raw prices and z values.
fn primal_from_state(engine: &Engine, requests: &[VNetRequest]) -> f64 {
    let net = engine.effective_network();
    let st = engine.state();
    let prices: f64 = st.prices().map(|(r, _, x)| x * net.capacity(r).unwrap()).sum();
    prices + requests.iter().map(|r| st.z(r.id)).sum::<f64>()
}

fn log2(x: f64) -> f64 {
    x.log2()
}

// ---------------------------------------------------------------------------
// Criteria 1-3: planted instances with exact oracles.

fn planted_instances() -> Vec<(PlantedInstance, bool)> {
    (0..50u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0000 + i);
            let n = rng.gen_range(8..=30);
            let topo = random_topology(n, rng.gen_range(0..=n), 1000 + i);
            let durations = i % 2 == 1;
            let count = rng.gen_range(50..=200);
            let params = GeneratorParams {
                requests: count,
                terminals: rng.gen_range(2..=4),
                stride: rng.gen_range(1..=3),
                ingress_min: 1.0,
                ingress_max: rng.gen_range(1.0..=3.0),
                benefit_min: 1.0,
                benefit_max: rng.gen_range(2.0..=20.0),
                arrival_slots: if durations { (count / 4) as u32 } else { rng.gen_range(1..=3) },
                max_duration: if durations { rng.gen_range(2..=8) } else { 1 },
                capacity_factor: 1.0,
            };
            let mut inst = generate_planted_instance(&topo, 2000 + i, &params).expect("planted generation");
            if i % 3 == 0 {
                // Oversubscribe: each link keeps room for one request only.
                let widest = params.ingress_max.ceil();
                let edges = inst
                    .network
                    .edges()
                    .iter()
                    .map(|e| Edge {
                        capacity: (e.capacity / 4.0).ceil().max(widest),
                        ..e.clone()
                    })
                    .collect();
                inst.network = SubstrateNetwork::new(inst.network.nodes().to_vec(), edges).unwrap();
            }
            (inst, durations)
        })
        .collect()
}

fn criteria_1_to_3() -> [Verdict; 3] {
    let started = Instant::now();
    let instances = planted_instances();
    let mut coupling: Option<String> = None;
    let mut congestion: Option<String> = None;
    let mut lemma: Option<String> = None;
    let (mut requests_seen, mut accepted, mut worst_coupling, mut worst_ratio, mut worst_lemma) =
        (0usize, 0usize, f64::INFINITY, 0.0f64, f64::INFINITY);
    let (mut beta_prime_runs, mut peak_congestion) = (0usize, 0.0f64);

    for (idx, (inst, durations)) in instances.iter().enumerate() {
        let net = &inst.network;
        let cfg = EngineConfig {
            steiner: SteinerMode::Exact,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(net, cfg).unwrap();
        let mut obs = Observed::default();
        let mut primal = 0.0;
        if *durations {
            beta_prime_runs += 1;
        }
        for req in &inst.requests {
            requests_seen += 1;
            let decision = engine.process_request(req).unwrap();
            let dual_increment = match &decision {
                Decision::Accepted(a) => {
                    if a.rho != 1.0 {
                        first_failure(&mut coupling, || format!("instance {idx}: oracle reported rho {}", a.rho));
                    }
                    obs.admit(req, &a.embedding, a.rho);
                    accepted += 1;
                    req.benefit
                }
                Decision::Rejected { .. } => 0.0,
            };
            // Criterion 1.
            let now = primal_from_state(&engine, &inst.requests);
            let slack = 2.0 * dual_increment - (now - primal);
            worst_coupling = worst_coupling.min(slack);
            if slack < -ACCOUNTING_TOL {
                first_failure(&mut coupling, || {
                    format!("instance {idx} request {}: primal +{} vs dual +{dual_increment}", req.id, now - primal)
                });
            }
            primal = now;

            // Criterion 2: theorem bound, or the duration bound when slots vary.
            let bound = if *durations {
                log2(1.0 + 3.0 * obs.max_duration as f64 * obs.max_slot_weight * obs.max_benefit)
            } else {
                log2(1.0 + 3.0 * obs.max_column_weight * obs.max_benefit)
            };
            // Criterion 3.
            for (&(r, t), &load) in &obs.loads {
                let c = net.capacity(r).unwrap();
                let engine_load = engine.state().load(r, t);
                if (engine_load - load).abs() > ACCOUNTING_TOL * load.max(1.0) {
                    first_failure(&mut congestion, || {
                        format!("instance {idx}: engine load {engine_load} on {r} slot {t}, admitted {load}")
                    });
                }
                worst_ratio = worst_ratio.max(load / (bound * c));
                peak_congestion = peak_congestion.max(load / c);
                if load > bound * c + CONGESTION_TOL {
                    first_failure(&mut congestion, || {
                        format!("instance {idx} after request {}: load {load} on {r} slot {t} exceeds {bound} x {c}", req.id)
                    });
                }
                let law = ((load / c).exp2() - 1.0) / obs.max_column_weight;
                let slack = engine.state().price(r, t) - law;
                worst_lemma = worst_lemma.min(slack);
                if slack < -ACCOUNTING_TOL {
                    first_failure(&mut lemma, || {
                        format!("instance {idx} after request {}: price on {r} slot {t} short by {}", req.id, -slack)
                    });
                }
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed > PLANTED_LIMIT {
        first_failure(&mut coupling, || format!("runtime {elapsed:?} exceeds {PLANTED_LIMIT:?}"));
    }
    let n = instances.len();
    [
        Verdict::new(
            1,
            "primal-dual coupling",
            coupling,
            format!(
                "{n} planted instances, {requests_seen} requests ({accepted} admitted), min slack {worst_coupling:.3e}, {:.1}s",
                elapsed.as_secs_f64()
            ),
        ),
        Verdict::new(
            2,
            "congestion bound",
            congestion,
            format!(
                "worst load/(bound c) {worst_ratio:.4}, peak congestion {peak_congestion:.3}, {beta_prime_runs} runs with durations up to 8 slots"
            ),
        ),
        Verdict::new(
            3,
            "price lower bound law",
            lemma,
            format!("checked after every request, min slack {worst_lemma:.3e}"),
        ),
    ]
}

// ---------------------------------------------------------------------------
// Criteria 4-5: exhaustive micro-instances.

fn micro_network(rng: &mut ChaCha8Rng) -> SubstrateNetwork {
    let n = rng.gen_range(3..=5);
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for v in 1..n {
        pairs.insert((rng.gen_range(0..v), v));
    }
    let max_edges = (n * (n - 1) / 2).min(8);
    let target = rng.gen_range(pairs.len()..=max_edges);
    while pairs.len() < target {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let routers = rng.gen_bool(0.3);
    let nodes = (0..n)
        .map(|i| Node {
            name: format!("m{i}"),
            capacity: (routers && rng.gen_bool(0.5)).then(|| rng.gen_range(1..=3) as f64),
        })
        .collect();
    let edges = pairs
        .into_iter()
        .map(|(u, v)| Edge {
            u: NodeId(u),
            v: NodeId(v),
            capacity: rng.gen_range(1..=4) as f64,
        })
        .collect();
    SubstrateNetwork::new(nodes, edges).unwrap()
}

fn micro_requests(rng: &mut ChaCha8Rng, net: &SubstrateNetwork) -> Vec<VNetRequest> {
    let n = net.node_count();
    let count = rng.gen_range(1..=6);
    let routers = net.nodes().iter().any(|v| v.capacity.is_some());
    let mut arrival: Slot = 0;
    let mut out = Vec::new();
    for id in 1..=count as u64 {
        arrival += rng.gen_range(0..=1);
        let slots = match rng.gen_range(0..3) {
            0 => SlotSet::single(arrival),
            1 => SlotSet::interval(arrival, arrival + 2),
            _ => SlotSet::new([arrival, arrival + 2]),
        };
        let mut nodes: Vec<NodeId> = (0..n).map(NodeId).collect();
        nodes.shuffle(rng);
        let k = rng.gen_range(2..=n.min(3));
        let terminals: Vec<NodeId> = nodes[..k].to_vec();
        let benefit = rng.gen_range(1.0..=5.0);
        let req = match rng.gen_range(0..3) {
            0 => {
                let routing = if k == 2 && rng.gen_bool(0.5) {
                    RoutingModel::SinglePath
                } else {
                    RoutingModel::Tree
                };
                let rate = if routers && rng.gen_bool(0.5) { rng.gen_range(1..=2) as f64 } else { 0.0 };
                VNetRequest::aggregate(id, terminals, rng.gen_range(1..=2) as f64, benefit)
                    .with_routing(routing)
                    .with_packet_rate(rate)
            }
            1 => {
                let bounds = terminals
                    .iter()
                    .map(|&node| HoseBound {
                        node,
                        b_in: *[1.0, 1.5, 2.0].choose(rng).unwrap(),
                        b_out: *[1.0, 1.5, 2.0].choose(rng).unwrap(),
                    })
                    .collect();
                VNetRequest {
                    id,
                    terminals,
                    traffic: TrafficSpec::Hose { bounds },
                    routing: RoutingModel::Tree,
                    benefit,
                    slots: SlotSet::single(0),
                    packet_rate: 0.0,
                }
            }
            _ => {
                let mut demands = vec![Demand {
                    from: terminals[0],
                    to: terminals[1],
                    amount: *[1.0, 1.5, 2.0].choose(rng).unwrap(),
                }];
                if rng.gen_bool(0.5) {
                    demands.push(Demand {
                        from: terminals[k - 1],
                        to: terminals[0],
                        amount: *[1.0, 2.0].choose(rng).unwrap(),
                    });
                }
                VNetRequest {
                    id,
                    terminals,
                    traffic: TrafficSpec::CustomerPipe { demands },
                    routing: RoutingModel::Multipath,
                    benefit,
                    slots: SlotSet::single(0),
                    packet_rate: 0.0,
                }
            }
        };
        out.push(req.with_slots(slots));
    }
    out
}

/// Cheapest fractional routing of a customer-pipe request under per-link
/// prices, as an arc-flow LP.
fn cheapest_multipath(net: &SubstrateNetwork, demands: &[Demand], edge_price: &[f64]) -> Option<f64> {
    let m = net.edge_count();
    let var = |k: usize, e: usize, dir: usize| (k * m + e) * 2 + dir;
    let mut objective = vec![0.0; demands.len() * m * 2];
    for k in 0..demands.len() {
        for e in 0..m {
            objective[var(k, e, 0)] = edge_price[e];
            objective[var(k, e, 1)] = edge_price[e];
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    for (k, d) in demands.iter().enumerate() {
        for v in net.node_ids() {
            let mut terms = Vec::new();
            for (e, edge) in net.edges().iter().enumerate() {
                if edge.u == v {
                    terms.push((var(k, e, 0), 1.0));
                    terms.push((var(k, e, 1), -1.0));
                } else if edge.v == v {
                    terms.push((var(k, e, 0), -1.0));
                    terms.push((var(k, e, 1), 1.0));
                }
            }
            let rhs = if v == d.from {
                d.amount
            } else if v == d.to {
                -d.amount
            } else {
                0.0
            };
            lp.add_sparse(&terms, Relation::Eq, rhs);
        }
    }
    for e in 0..m {
        let terms: Vec<(usize, f64)> = (0..demands.len())
            .flat_map(|k| [(var(k, e, 0), 1.0), (var(k, e, 1), 1.0)])
            .collect();
        lp.add_sparse(&terms, Relation::Le, net.edges()[e].capacity);
    }
    lp.solve().unwrap().optimal().map(|s| s.value)
}

fn criteria_4_and_5() -> [Verdict; 2] {
    let started = Instant::now();
    let mut competitive: Option<String> = None;
    let mut covering: Option<String> = None;
    let (mut instances, mut columns, mut worst_gap, mut worst_cover) = (0usize, 0usize, f64::INFINITY, f64::INFINITY);
    let (mut approx_admitted, mut worst_approx_ratio) = (0usize, 0.0f64);
    let mut seed = 0u64;
    while instances < 120 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(0x41C0_0000 + seed);
        let net = micro_network(&mut rng);
        let requests = micro_requests(&mut rng, &net);
        let opt = offline_fractional_opt(&net, &requests, 16, MICRO_FLOOR).unwrap();
        assert!(opt.exact, "micro-instance {seed} should enumerate exhaustively");
        instances += 1;

        // Exact oracles.
        let cfg = EngineConfig {
            steiner: SteinerMode::Exact,
            min_load_floor: MICRO_FLOOR,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(&net, cfg).unwrap();
        let mut benefit = 0.0;
        for req in &requests {
            if let Decision::Accepted(_) = engine.process_request(req).unwrap() {
                benefit += req.benefit;
            }
        }
        let primal = primal_from_state(&engine, &requests);
        worst_gap = worst_gap.min(primal - opt.value);
        if opt.value > primal + OPT_TOL {
            first_failure(&mut competitive, || format!("instance {seed}: OPT {} > primal {primal}", opt.value));
        }
        if opt.value > 2.0 * benefit + OPT_TOL {
            first_failure(&mut competitive, || format!("instance {seed}: OPT {} > 2 x benefit {benefit}", opt.value));
        }

        // Criterion 5 with the final prices.
        let st = engine.state();
        for req in &requests {
            let summed = |r: ResourceId| req.slots.iter().map(|t| st.price(r, t)).sum::<f64>();
            let edge_price: Vec<f64> = net.edge_ids().map(|e| summed(ResourceId::Edge(e))).collect();
            let node_price: Vec<f64> = net.node_ids().map(|v| summed(ResourceId::Node(v))).collect();
            let z = st.z(req.id);
            let costs: Vec<f64> = match &req.traffic {
                TrafficSpec::CustomerPipe { demands } => {
                    cheapest_multipath(&net, demands, &edge_price).into_iter().collect()
                }
                _ => enumerate_embeddings(&net, req, 16, MICRO_FLOOR)
                    .embeddings
                    .iter()
                    .map(|emb| emb.cost(&edge_price, &node_price))
                    .collect(),
            };
            for cost in costs {
                columns += 1;
                let slack = z + cost - req.benefit;
                worst_cover = worst_cover.min(slack);
                if slack < -ACCOUNTING_TOL {
                    first_failure(&mut covering, || {
                        format!("instance {seed} request {}: z {z} + cost {cost} < benefit {}", req.id, req.benefit)
                    });
                }
            }
        }

        // Forced approximate Steiner oracles.
        let cfg = EngineConfig {
            steiner: SteinerMode::Approximate,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(&net, cfg).unwrap();
        let mut obs = Observed::default();
        for req in &requests {
            if let Decision::Accepted(a) = engine.process_request(req).unwrap() {
                obs.admit(req, &a.embedding, a.rho);
                approx_admitted += 1;
            }
        }
        if obs.max_column_weight > 0.0 {
            let rho = obs.max_rho.max(1.0);
            let beta_rho = rho * log2(1.0 + 3.0 * rho * obs.max_column_weight * obs.max_benefit);
            let ratio = obs.max_congestion(&net) / beta_rho;
            worst_approx_ratio = worst_approx_ratio.max(ratio);
            if ratio > 1.0 + CONGESTION_TOL {
                first_failure(&mut competitive, || format!("instance {seed}: congestion above rho-bound"));
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed > MICRO_LIMIT {
        first_failure(&mut competitive, || format!("runtime {elapsed:?} exceeds {MICRO_LIMIT:?}"));
    }
    [
        Verdict::new(
            4,
            "competitiveness against exact OPT",
            competitive,
            format!(
                "{instances} micro-instances, min primal - OPT {worst_gap:.3e}, approximate oracles: {approx_admitted} admitted, worst congestion/bound {worst_approx_ratio:.3}, {:.1}s",
                elapsed.as_secs_f64()
            ),
        ),
        Verdict::new(
            5,
            "covering feasibility at termination",
            covering,
            format!("{columns} columns checked, min slack {worst_cover:.3e}"),
        ),
    ]
}

// ---------------------------------------------------------------------------
// Criterion 6: Steiner approximation ratios.

/// Minimum spanning forest weight of the subgraph induced by `keep`, or
/// `None` when it is disconnected.
fn induced_mst(net: &SubstrateNetwork, weights: &[f64], keep: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..net.edge_count())
        .filter(|&e| keep[net.edges()[e].u.0] && keep[net.edges()[e].v.0])
        .collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    let mut parent: Vec<usize> = (0..net.node_count()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let (mut total, mut joined) = (0.0, 0);
    for e in order {
        let (a, b) = (find(&mut parent, net.edges()[e].u.0), find(&mut parent, net.edges()[e].v.0));
        if a != b {
            parent[a] = b;
            total += weights[e];
            joined += 1;
        }
    }
    let kept = keep.iter().filter(|&&k| k).count();
    (joined + 1 == kept).then_some(total)
}

/// Exact Steiner optimum with edge and node costs: the best vertex set
/// containing the terminals, spanned by its minimum spanning tree.
fn steiner_by_vertex_sets(net: &SubstrateNetwork, edge_w: &[f64], node_w: &[f64], terminals: &[NodeId]) -> f64 {
    let n = net.node_count();
    let others: Vec<usize> = (0..n).filter(|v| !terminals.contains(&NodeId(*v))).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << others.len()) {
        let mut keep = vec![false; n];
        for t in terminals {
            keep[t.0] = true;
        }
        for (i, &v) in others.iter().enumerate() {
            if mask & (1 << i) != 0 {
                keep[v] = true;
            }
        }
        if let Some(tree) = induced_mst(net, edge_w, &keep) {
            let nodes: f64 = (0..n).filter(|&v| keep[v]).map(|v| node_w[v]).sum();
            best = best.min(tree + nodes);
        }
    }
    best
}

fn tree_is_valid(net: &SubstrateNetwork, tree: &SteinerTree, terminals: &[NodeId]) -> bool {
    let mut keep = vec![false; net.node_count()];
    for &e in &tree.edges {
        keep[net.edge(e).u.0] = true;
        keep[net.edge(e).v.0] = true;
    }
    let spans = terminals.iter().all(|t| keep[t.0]) || tree.edges.is_empty();
    let mut parent: Vec<usize> = (0..net.node_count()).collect();
    let mut acyclic = true;
    for &e in &tree.edges {
        let (mut a, mut b) = (net.edge(e).u.0, net.edge(e).v.0);
        while parent[a] != a {
            a = parent[a];
        }
        while parent[b] != b {
            b = parent[b];
        }
        if a == b {
            acyclic = false;
        }
        parent[a] = b;
    }
    let nodes = keep.iter().filter(|&&k| k).count();
    spans && acyclic && (tree.edges.is_empty() || nodes == tree.edges.len() + 1)
}

fn criterion_6() -> Verdict {
    let mut failure: Option<String> = None;
    let (mut worst_edge, mut worst_node) = (0.0f64, 0.0f64);
    for g in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x57E1_0000 + g);
        let n = rng.gen_range(3..=10);
        let topo: Topology = random_topology(n, rng.gen_range(0..=n), 0x9000 + g);
        let net = SubstrateNetwork::new(
            (0..n)
                .map(|i| Node {
                    name: format!("s{i}"),
                    capacity: None,
                })
                .collect(),
            topo.edges
                .iter()
                .map(|&(u, v, _)| Edge {
                    u: NodeId(u),
                    v: NodeId(v),
                    capacity: 1.0,
                })
                .collect(),
        )
        .unwrap();
        let edge_w: Vec<f64> = (0..net.edge_count()).map(|_| rng.gen_range(0.5..10.0)).collect();
        let node_w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let k = rng.gen_range(2..=n.min(6));
        let mut nodes: Vec<NodeId> = (0..n).map(NodeId).collect();
        nodes.shuffle(&mut rng);
        let terminals = &nodes[..k];

        let zero_nodes = vec![0.0; n];
        let opt = steiner_by_vertex_sets(&net, &edge_w, &zero_nodes, terminals);
        let brute = gvop_core::offline::brute_force_steiner(&net, &edge_w, terminals).unwrap().1;
        if (brute - opt).abs() > 1e-9 * opt.max(1.0) {
            first_failure(&mut failure, || format!("graph {g}: brute_force_steiner {brute} vs {opt}"));
        }
        let view = WeightedView::edge_weighted(&net, &edge_w);
        let approx = mst_steiner_2approx(&view, terminals).unwrap();
        let approx_cost: f64 = approx.edges.iter().map(|e| edge_w[e.0]).sum();
        if !tree_is_valid(&net, &approx, terminals) {
            first_failure(&mut failure, || format!("graph {g}: metric-closure tree is not a spanning tree"));
        }
        worst_edge = worst_edge.max(approx_cost / opt);
        if approx_cost > 2.0 * opt {
            first_failure(&mut failure, || format!("graph {g}: MST tree {approx_cost} > 2 x {opt}"));
        }

        let opt_nw = steiner_by_vertex_sets(&net, &edge_w, &node_w, terminals);
        let brute_nw = gvop_core::offline::brute_force_node_weighted(&net, &edge_w, &node_w, terminals).unwrap().1;
        if (brute_nw - opt_nw).abs() > 1e-9 * opt_nw.max(1.0) {
            first_failure(&mut failure, || format!("graph {g}: brute_force_node_weighted {brute_nw} vs {opt_nw}"));
        }
        let view = WeightedView {
            net: &net,
            edge_cost: edge_w.iter().copied().map(Some).collect(),
            node_cost: node_w.iter().copied().map(Some).collect(),
        };
        let greedy = node_weighted_steiner_greedy(&view, terminals).unwrap();
        let mut touched: BTreeSet<usize> = terminals.iter().map(|t| t.0).collect();
        for &e in &greedy.edges {
            touched.insert(net.edge(e).u.0);
            touched.insert(net.edge(e).v.0);
        }
        let greedy_cost: f64 =
            greedy.edges.iter().map(|e| edge_w[e.0]).sum::<f64>() + touched.iter().map(|&v| node_w[v]).sum::<f64>();
        if !tree_is_valid(&net, &greedy, terminals) {
            first_failure(&mut failure, || format!("graph {g}: greedy result is not a spanning tree"));
        }
        let bound = (2.0 * (k as f64).ln()).max(1.0);
        if opt_nw > 0.0 {
            worst_node = worst_node.max(greedy_cost / opt_nw / bound);
        }
        if greedy_cost > bound * opt_nw + 1e-9 {
            first_failure(&mut failure, || {
                format!("graph {g}: node-weighted greedy {greedy_cost} > {bound:.3} x {opt_nw}")
            });
        }
    }
    Verdict::new(
        6,
        "Steiner approximation ratios",
        failure,
        format!(
            "200 graphs, worst MST/OPT {worst_edge:.3} (limit 2), worst greedy/(2 ln k OPT) {worst_node:.3} (limit 1)"
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 7: scaled capacities.

fn is_tree_embedding(net: &SubstrateNetwork, req: &VNetRequest, emb: &Embedding) -> bool {
    let TrafficSpec::AggregateIngress { ingress } = req.traffic else {
        return false;
    };
    if emb.edge_reservation.values().any(|&a| a != ingress) {
        return false;
    }
    let tree = SteinerTree {
        edges: emb.edge_reservation.keys().copied().collect(),
        nodes: Vec::new(),
    };
    let mut touched = vec![false; net.node_count()];
    for &e in &tree.edges {
        touched[net.edge(e).u.0] = true;
        touched[net.edge(e).v.0] = true;
    }
    // Connected spanning tree: acyclic, n - 1 edges over its nodes, all
    // terminals touched.
    tree_is_valid(net, &tree, &req.terminals) && req.terminals.iter().all(|t| touched[t.0])
}

fn criterion_7() -> Verdict {
    let mut failure: Option<String> = None;
    let (mut runs, mut admitted, mut total, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5CA1_0000 + i);
        let n = rng.gen_range(6..=20);
        let topo = random_topology(n, rng.gen_range(0..=n), 0x7000 + i);
        let mut params = GeneratorParams {
            requests: rng.gen_range(20..=80),
            terminals: rng.gen_range(2..=4),
            stride: 2,
            ingress_min: 1.0,
            ingress_max: 2.0,
            benefit_min: 1.0,
            benefit_max: 10.0,
            arrival_slots: rng.gen_range(1..=5),
            max_duration: rng.gen_range(1..=3),
            capacity_factor: 1.0,
        };
        // Requests do not depend on the capacity factor; draw once to size it.
        let probe = generate_planted_instance(&topo, 0x8000 + i, &params).unwrap();
        let w = probe
            .requests
            .iter()
            .map(|r| {
                let TrafficSpec::AggregateIngress { ingress } = r.traffic else { unreachable!() };
                r.slots.len() as f64 * ingress * (n - 1) as f64
            })
            .fold(0.0, f64::max);
        let b = probe.requests.iter().map(|r| r.benefit).fold(0.0, f64::max);
        let max_ingress = probe
            .requests
            .iter()
            .map(|r| match r.traffic {
                TrafficSpec::AggregateIngress { ingress } => ingress,
                _ => unreachable!(),
            })
            .fold(0.0, f64::max);
        let beta = log2(1.0 + 3.0 * w * b);
        params.capacity_factor = beta * max_ingress;
        let inst = generate_planted_instance(&topo, 0x8000 + i, &params).unwrap();
        assert_eq!(inst.requests, probe.requests);
        let min_c = inst.network.edges().iter().map(|e| e.capacity).fold(f64::INFINITY, f64::min);
        assert!(min_c / beta >= max_ingress, "instance must satisfy min c / beta >= max load");

        let cfg = EngineConfig {
            capacity_scale: beta,
            steiner: SteinerMode::Exact,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(&inst.network, cfg).unwrap();
        let mut obs = Observed::default();
        for req in &inst.requests {
            total += 1;
            let before = engine.state().clone();
            match engine.process_request(req).unwrap() {
                Decision::Accepted(a) => {
                    if !is_tree_embedding(&inst.network, req, &a.embedding) {
                        first_failure(&mut failure, || format!("run {i} request {}: partial embedding", req.id));
                    }
                    obs.admit(req, &a.embedding, a.rho);
                    admitted += 1;
                }
                Decision::Rejected { .. } => {
                    if engine.state() != &before {
                        first_failure(&mut failure, || format!("run {i} request {}: rejection changed state", req.id));
                    }
                }
            }
        }
        runs += 1;
        let congestion = obs.max_congestion(&inst.network);
        worst = worst.max(congestion);
        if congestion > 1.0 + ACCOUNTING_TOL {
            first_failure(&mut failure, || format!("run {i}: congestion {congestion} against original capacities"));
        }
    }
    if admitted == 0 {
        first_failure(&mut failure, || "no request was admitted".to_string());
    }
    Verdict::new(
        7,
        "scaled capacities stay within original capacities",
        failure,
        format!("{runs} planted runs, {admitted}/{total} admitted whole, max congestion {worst:.4}"),
    )
}

// ---------------------------------------------------------------------------
// Criterion 8: hose cut formula against traffic-matrix enumeration.

/// Largest total of a matrix from `senders` to `receivers` on the 0.25
/// grid with row sums within `b_out` and column sums within `b_in`.
fn max_directed_traffic(senders: &[f64], receivers: &[f64]) -> f64 {
    fn go(i: usize, cells: &[(usize, usize)], out_left: &mut [f64], in_left: &mut [f64]) -> f64 {
        if i == cells.len() {
            return 0.0;
        }
        let (s, r) = cells[i];
        let mut best = 0.0f64;
        let mut amount = 0.0;
        while amount <= out_left[s] + 1e-12 && amount <= in_left[r] + 1e-12 {
            out_left[s] -= amount;
            in_left[r] -= amount;
            best = best.max(amount + go(i + 1, cells, out_left, in_left));
            out_left[s] += amount;
            in_left[r] += amount;
            amount += 0.25;
        }
        best
    }
    let cells: Vec<(usize, usize)> = (0..senders.len())
        .flat_map(|s| (0..receivers.len()).map(move |r| (s, r)))
        .collect();
    go(0, &cells, &mut senders.to_vec(), &mut receivers.to_vec())
}

fn criterion_8() -> Verdict {
    let mut failure: Option<String> = None;
    let (mut trees, mut edges_checked, mut worst) = (0usize, 0usize, 0.0f64);
    let grid = [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0];
    for i in 0..150u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x4053_0000 + i);
        let n = rng.gen_range(2..=6);
        // Random labelled tree.
        let edges: Vec<Edge> = (1..n)
            .map(|v| Edge {
                u: NodeId(rng.gen_range(0..v)),
                v: NodeId(v),
                capacity: 100.0,
            })
            .collect();
        let net = SubstrateNetwork::new(
            (0..n)
                .map(|v| Node {
                    name: format!("h{v}"),
                    capacity: None,
                })
                .collect(),
            edges,
        )
        .unwrap();
        let k = rng.gen_range(2..=n.min(4));
        let mut nodes: Vec<NodeId> = (0..n).map(NodeId).collect();
        nodes.shuffle(&mut rng);
        let bounds: Vec<HoseBound> = nodes[..k]
            .iter()
            .map(|&node| HoseBound {
                node,
                b_in: *grid.choose(&mut rng).unwrap(),
                b_out: *grid.choose(&mut rng).unwrap(),
            })
            .collect();
        let tree = SteinerTree {
            edges: net.edge_ids().collect(),
            nodes: net.node_ids().collect(),
        };
        trees += 1;
        for e in net.edge_ids() {
            // Side of the cut containing the edge's `u` endpoint.
            let mut side = vec![false; n];
            side[net.edge(e).u.0] = true;
            let mut stack = vec![net.edge(e).u];
            while let Some(v) = stack.pop() {
                for &(w, f) in net.neighbors(v) {
                    if f != e && !side[w.0] {
                        side[w.0] = true;
                        stack.push(w);
                    }
                }
            }
            let a: Vec<&HoseBound> = bounds.iter().filter(|b| side[b.node.0]).collect();
            let b: Vec<&HoseBound> = bounds.iter().filter(|b| !side[b.node.0]).collect();
            let out = |s: &[&HoseBound]| s.iter().map(|h| h.b_out).collect::<Vec<_>>();
            let inn = |s: &[&HoseBound]| s.iter().map(|h| h.b_in).collect::<Vec<_>>();
            // Crossing traffic in the two directions draws on disjoint bounds.
            let brute = max_directed_traffic(&out(&a), &inn(&b)) + max_directed_traffic(&out(&b), &inn(&a));
            let formula = hose_edge_reservation(&net, &tree, EdgeId(e.0), &bounds);
            edges_checked += 1;
            worst = worst.max((brute - formula).abs());
            if (brute - formula).abs() > HOSE_TOL {
                first_failure(&mut failure, || format!("tree {i} edge {e}: formula {formula}, enumeration {brute}"));
            }
        }
    }
    Verdict::new(
        8,
        "hose cut reservation",
        failure,
        format!("{trees} trees with 2-4 terminals, {edges_checked} edges, max deviation {worst:.1e}"),
    )
}

// ---------------------------------------------------------------------------
// Criterion 9: determinism.

fn run_log_bytes(net: &SubstrateNetwork, requests: &[VNetRequest], config: &ExperimentConfig) -> Vec<u8> {
    let outcome = run_experiment(net, requests, config).unwrap();
    let mut buf = Vec::new();
    write_run_log(&outcome.log, &mut buf).unwrap();
    buf
}

fn cli_run_log(args: &[&str], out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_gvop"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(out.join("run_log.jsonl")).map_err(|e| e.to_string())
}

fn criterion_9() -> Verdict {
    let mut failure: Option<String> = None;
    let mut fixtures = 0usize;
    let fixture_dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    for seed in [3u64, 17, 99] {
        let topo = random_topology(14, 10, seed);
        let params = GeneratorParams {
            requests: 60,
            terminals: 3,
            max_duration: 4,
            arrival_slots: 12,
            ..GeneratorParams::default()
        };
        for mode in [Mode::Plain, Mode::Scaled, Mode::Fractional] {
            let a = generate_planted_instance(&topo, seed, &params).unwrap();
            let b = generate_planted_instance(&topo, seed, &params).unwrap();
            let config = ExperimentConfig {
                mode,
                ..ExperimentConfig::default()
            };
            fixtures += 1;
            if run_log_bytes(&a.network, &a.requests, &config) != run_log_bytes(&b.network, &b.requests, &config) {
                first_failure(&mut failure, || format!("seed {seed} {mode:?}: run logs differ"));
            }
        }
    }
    let tmp = tempfile::tempdir().unwrap();
    let ring = format!("{fixture_dir}/ring.edges");
    let mixed_s = format!("{fixture_dir}/mixed_substrate.json");
    let mixed_r = format!("{fixture_dir}/mixed_requests.json");
    let cli_cases: [Vec<&str>; 3] = [
        vec!["run", "--substrate", &ring, "--generate", "--seed", "5", "--count", "40", "--max-duration", "3"],
        vec!["run", "--substrate", &mixed_s, "--requests", &mixed_r, "--mode", "scaled"],
        vec!["run", "--substrate", &mixed_s, "--requests", &mixed_r, "--steiner", "approximate"],
    ];
    for (i, args) in cli_cases.iter().enumerate() {
        let first = cli_run_log(args, &tmp.path().join(format!("a{i}")));
        let second = cli_run_log(args, &tmp.path().join(format!("b{i}")));
        fixtures += 1;
        match (first, second) {
            (Ok(x), Ok(y)) if x == y && !x.is_empty() => {}
            (Ok(_), Ok(_)) => first_failure(&mut failure, || format!("CLI case {i}: run logs differ")),
            (Err(e), _) | (_, Err(e)) => first_failure(&mut failure, || format!("CLI case {i} failed: {e}")),
        }
    }
    Verdict::new(
        9,
        "determinism",
        failure,
        format!("{fixtures} fixtures run twice, byte-identical run logs"),
    )
}

fn main() -> ExitCode {
    let mut verdicts = Vec::new();
    verdicts.extend(criteria_1_to_3());
    verdicts.extend(criteria_4_and_5());
    verdicts.push(criterion_6());
    verdicts.push(criterion_7());
    verdicts.push(criterion_8());
    verdicts.push(criterion_9());
    verdicts.sort_by_key(|v| v.criterion);
    for v in &verdicts {
        println!(
            "criterion {} {}: {} ({})",
            v.criterion,
            if v.passed { "PASS" } else { "FAIL" },
            v.title,
            v.detail
        );
    }
    if verdicts.iter().all(|v| v.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
