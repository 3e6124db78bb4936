//! Instance, request-sequence and topology file formats.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use gvop_core::requests::{Demand, HoseBound, RequestId, Slot};
use gvop_core::substrate::{Edge, Node, SubstrateError};
use gvop_core::{NodeId, RoutingModel, SlotSet, SubstrateNetwork, TrafficSpec, VNetRequest};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Substrate(#[from] SubstrateError),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("edge {0:?} has no capacity")]
    MissingCapacity((String, String)),
    #[error("line {line}: {message}")]
    EdgeList { line: usize, message: String },
}

/// Node identifiers may be written as strings or integers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeKey {
    Int(i64),
    Name(String),
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKey::Int(i) => write!(f, "{i}"),
            NodeKey::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: NodeKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    u: NodeKey,
    v: NodeKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

/// Graph skeleton whose edge capacities may be missing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Topology {
    pub nodes: Vec<String>,
    pub node_capacity: Vec<Option<f64>>,
    pub edges: Vec<(usize, usize, Option<f64>)>,
}

impl Topology {
    /// Adjacency lists, neighbours in ascending order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Builds a network, requiring every edge capacity to be known.
    pub fn into_network(self) -> Result<SubstrateNetwork, FormatError> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v, c) in &self.edges {
            let capacity =
                c.ok_or_else(|| FormatError::MissingCapacity((self.nodes[u].clone(), self.nodes[v].clone())))?;
            edges.push(Edge {
                u: NodeId(u),
                v: NodeId(v),
                capacity,
            });
        }
        let nodes = self
            .nodes
            .into_iter()
            .zip(self.node_capacity)
            .map(|(name, capacity)| Node { name, capacity })
            .collect();
        Ok(SubstrateNetwork::new(nodes, edges)?)
    }
}

impl From<&SubstrateNetwork> for Topology {
    fn from(net: &SubstrateNetwork) -> Self {
        Topology {
            nodes: net.nodes().iter().map(|n| n.name.clone()).collect(),
            node_capacity: net.nodes().iter().map(|n| n.capacity).collect(),
            edges: net.edges().iter().map(|e| (e.u.0, e.v.0, Some(e.capacity))).collect(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_instance(text: &str) -> Result<Topology, FormatError> {
    let doc: InstanceRecord = serde_json::from_str(text)?;
    let mut index = BTreeMap::new();
    let mut topo = Topology::default();
    for n in &doc.nodes {
        let name = n.id.to_string();
        if index.insert(name.clone(), topo.nodes.len()).is_some() {
            return Err(SubstrateError::DuplicateNode(name).into());
        }
        topo.nodes.push(name);
        topo.node_capacity.push(n.capacity);
    }
    for e in &doc.edges {
        let lookup = |k: &NodeKey| {
            let name = k.to_string();
            index.get(&name).copied().ok_or(FormatError::UnknownNode(name))
        };
        topo.edges.push((lookup(&e.u)?, lookup(&e.v)?, e.capacity));
    }
    Ok(topo)
}

/// Parses an instance document into a validated network.
pub fn load_substrate(text: &str) -> Result<SubstrateNetwork, FormatError> {
    parse_instance(text)?.into_network()
}

pub fn serialize_substrate(net: &SubstrateNetwork) -> String {
    let doc = InstanceRecord {
        nodes: net
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: NodeKey::Name(n.name.clone()),
                capacity: n.capacity,
            })
            .collect(),
        edges: net
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                u: NodeKey::Name(net.node(e.u).name.clone()),
                v: NodeKey::Name(net.node(e.v).name.clone()),
                capacity: Some(e.capacity),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("instance records always serialize")
}

/// Parses a plain edge list: one `u v [capacity]` per line, `#` or `%`
/// starting a comment. Repeated links are merged by summing known
/// capacities.
pub fn parse_edge_list(text: &str) -> Result<Topology, FormatError> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut topo = Topology::default();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', '%']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| FormatError::EdgeList {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let capacity = match fields.len() {
            2 => None,
            3 => Some(
                fields[2]
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad capacity {:?}: {e}", fields[2])))?,
            ),
            k => return Err(err(format!("expected 2 or 3 fields, found {k}"))),
        };
        let mut id = |name: &str| {
            *index.entry(name.to_string()).or_insert_with(|| {
                topo.nodes.push(name.to_string());
                topo.node_capacity.push(None);
                topo.nodes.len() - 1
            })
        };
        let (u, v) = (id(fields[0]), id(fields[1]));
        if u == v {
            return Err(err(format!("self-loop at {}", fields[0])));
        }
        let key = (u.min(v), u.max(v));
        match seen.get(&key) {
            Some(&i) => {
                let merged = &mut topo.edges[i].2;
                *merged = match (*merged, capacity) {
                    (Some(a), Some(b)) => Some(a + b),
                    (a, b) => a.or(b),
                };
            }
            None => {
                seen.insert(key, topo.edges.len());
                topo.edges.push((u, v, capacity));
            }
        }
    }
    Ok(topo)
}

/// Reads a topology from either an instance document or an edge list.
pub fn parse_topology(text: &str) -> Result<Topology, FormatError> {
    if text.trim_start().starts_with('{') {
        parse_instance(text)
    } else {
        parse_edge_list(text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandRecord {
    from: NodeKey,
    to: NodeKey,
    amount: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoseRecord {
    node: NodeKey,
    b_in: f64,
    b_out: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
enum TrafficRecord {
    CustomerPipe { demands: Vec<DemandRecord> },
    Hose { bounds: Vec<HoseRecord> },
    AggregateIngress { ingress: f64 },
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RoutingRecord {
    Multipath,
    SinglePath,
    Tree,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestRecord {
    id: RequestId,
    terminals: Vec<NodeKey>,
    traffic: TrafficRecord,
    routing: RoutingRecord,
    benefit: f64,
    slots: Vec<Slot>,
    #[serde(default)]
    packet_rate: f64,
}

/// Parses a request sequence against the network's node names. Request
/// invariants are checked later, by the engine.
pub fn load_requests(text: &str, net: &SubstrateNetwork) -> Result<Vec<VNetRequest>, FormatError> {
    let records: Vec<RequestRecord> = serde_json::from_str(text)?;
    let node = |k: &NodeKey| {
        let name = k.to_string();
        net.node_by_name(&name).ok_or(FormatError::UnknownNode(name))
    };
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let traffic = match r.traffic {
            TrafficRecord::CustomerPipe { demands } => TrafficSpec::CustomerPipe {
                demands: demands
                    .iter()
                    .map(|d| {
                        Ok(Demand {
                            from: node(&d.from)?,
                            to: node(&d.to)?,
                            amount: d.amount,
                        })
                    })
                    .collect::<Result<_, FormatError>>()?,
            },
            TrafficRecord::Hose { bounds } => TrafficSpec::Hose {
                bounds: bounds
                    .iter()
                    .map(|b| {
                        Ok(HoseBound {
                            node: node(&b.node)?,
                            b_in: b.b_in,
                            b_out: b.b_out,
                        })
                    })
                    .collect::<Result<_, FormatError>>()?,
            },
            TrafficRecord::AggregateIngress { ingress } => TrafficSpec::AggregateIngress { ingress },
        };
        out.push(VNetRequest {
            id: r.id,
            terminals: r.terminals.iter().map(node).collect::<Result<_, _>>()?,
            traffic,
            routing: match r.routing {
                RoutingRecord::Multipath => RoutingModel::Multipath,
                RoutingRecord::SinglePath => RoutingModel::SinglePath,
                RoutingRecord::Tree => RoutingModel::Tree,
            },
            benefit: r.benefit,
            slots: SlotSet::new(r.slots),
            packet_rate: r.packet_rate,
        });
    }
    Ok(out)
}

pub fn serialize_requests(requests: &[VNetRequest], net: &SubstrateNetwork) -> String {
    let name = |v: NodeId| NodeKey::Name(net.node(v).name.clone());
    let records: Vec<RequestRecord> = requests
        .iter()
        .map(|r| RequestRecord {
            id: r.id,
            terminals: r.terminals.iter().map(|&v| name(v)).collect(),
            traffic: match &r.traffic {
                TrafficSpec::CustomerPipe { demands } => TrafficRecord::CustomerPipe {
                    demands: demands
                        .iter()
                        .map(|d| DemandRecord {
                            from: name(d.from),
                            to: name(d.to),
                            amount: d.amount,
                        })
                        .collect(),
                },
                TrafficSpec::Hose { bounds } => TrafficRecord::Hose {
                    bounds: bounds
                        .iter()
                        .map(|b| HoseRecord {
                            node: name(b.node),
                            b_in: b.b_in,
                            b_out: b.b_out,
                        })
                        .collect(),
                },
                TrafficSpec::AggregateIngress { ingress } => TrafficRecord::AggregateIngress { ingress: *ingress },
            },
            routing: match r.routing {
                RoutingModel::Multipath => RoutingRecord::Multipath,
                RoutingModel::SinglePath => RoutingRecord::SinglePath,
                RoutingModel::Tree => RoutingRecord::Tree,
            },
            benefit: r.benefit,
            slots: r.slots.as_slice().to_vec(),
            packet_rate: r.packet_rate,
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("request records always serialize")
}
