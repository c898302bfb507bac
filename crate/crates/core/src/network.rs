//! Network graphs: monitors, internal nodes and Pauli-channel edges.
//!
//! Also holds the bookkeeping for progressive etching (which edges are
//! identified, which nodes act as monitors) and the deterministic branch
//! selection used by generalized Mergecast.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::pauli::{compose_channels, AlgebraError, Basis, PauliChannel};

/// The bundled 19-channel example network.
pub const TWO_RING_TOPO: &str = include_str!("../data/two_ring.topo");

/// Upper bound on enumerated candidate branches per Mergecast target.
const MAX_BRANCH_CANDIDATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Monitor,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub name: String,
    pub ends: (NodeId, NodeId),
    pub channel: PauliChannel,
}

impl Edge {
    pub fn touches(&self, n: NodeId) -> bool {
        self.ends.0 == n || self.ends.1 == n
    }

    /// The endpoint opposite `n`. Panics if `n` is not an endpoint.
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.ends.0 == n {
            self.ends.1
        } else {
            assert_eq!(self.ends.1, n, "node is not an endpoint of {}", self.name);
            self.ends.0
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("edge {0} connects a node to itself")]
    SelfLoop(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid topology: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unsupported: edges {0:?} form a loop of degree-2 nodes")]
    DegreeTwoLoop(Vec<String>),
    #[error("topology still has degree-2 internal node {0}")]
    NotSimplified(String),
    #[error("edge {0} has no endpoint acting as a monitor")]
    NotPeripheral(String),
    #[error("no pair of edge-disjoint branches to distinct monitors for edge {0}")]
    NoBranches(String),
    #[error("no monitor-to-monitor route isolating edge {0}")]
    NoRoute(String),
    #[error("edges {0:?} can never become identifiable")]
    Stuck(Vec<String>),
    #[error(transparent)]
    Channel(#[from] AlgebraError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Rule {
    Empty,
    NoMonitors,
    Disconnected,
    MonitorDegree(usize),
    DanglingInternal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Empty => write!(f, "topology has no nodes"),
            Rule::NoMonitors => write!(f, "topology has no monitor"),
            Rule::Disconnected => write!(f, "{} is not connected to the rest", self.subject),
            Rule::MonitorDegree(d) => write!(f, "monitor {} has degree {d}, expected 1", self.subject),
            Rule::DanglingInternal(d) => {
                write!(f, "internal node {} has degree {d}, expected at least 2", self.subject)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str, kind: NodeKind) -> Result<NodeId, NetworkError> {
        if self.node_by_name(name).is_some() {
            return Err(NetworkError::DuplicateNode(name.to_string()));
        }
        self.nodes.push(Node {
            name: name.to_string(),
            kind,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn add_edge(
        &mut self,
        name: &str,
        a: &str,
        b: &str,
        channel: PauliChannel,
    ) -> Result<EdgeId, NetworkError> {
        if self.edge_by_name(name).is_some() {
            return Err(NetworkError::DuplicateEdge(name.to_string()));
        }
        let na = self
            .node_by_name(a)
            .ok_or_else(|| NetworkError::UnknownNode(a.to_string()))?;
        let nb = self
            .node_by_name(b)
            .ok_or_else(|| NetworkError::UnknownNode(b.to_string()))?;
        if na == nb {
            return Err(NetworkError::SelfLoop(name.to_string()));
        }
        self.edges.push(Edge {
            name: name.to_string(),
            ends: (na, nb),
            channel,
        });
        Ok(EdgeId(self.edges.len() - 1))
    }

    /// Three monitors `A1`, `A2`, `B` around internal node `C`, via `P1`, `P2`, `P3`.
    pub fn star(channels: [PauliChannel; 3]) -> Self {
        let mut t = Topology::new();
        for (n, k) in [
            ("A1", NodeKind::Monitor),
            ("A2", NodeKind::Monitor),
            ("B", NodeKind::Monitor),
            ("C", NodeKind::Internal),
        ] {
            t.add_node(n, k).expect("fresh names");
        }
        for (i, (name, a)) in [("P1", "A1"), ("P2", "A2"), ("P3", "B")].iter().enumerate() {
            t.add_edge(name, a, "C", channels[i]).expect("fresh names");
        }
        t
    }

    /// The bundled 19-channel network with its default channels.
    pub fn two_ring() -> Self {
        parse_topology(TWO_RING_TOPO).expect("bundled topology is valid")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(EdgeId)
    }

    /// Look up several edges by name, failing on the first unknown one.
    pub fn edges_named(&self, names: &[&str]) -> Result<Vec<EdgeId>, NetworkError> {
        names
            .iter()
            .map(|n| {
                self.edge_by_name(n)
                    .ok_or_else(|| NetworkError::UnknownEdge(n.to_string()))
            })
            .collect()
    }

    pub fn is_monitor(&self, n: NodeId) -> bool {
        self.node(n).kind == NodeKind::Monitor
    }

    pub fn monitors(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&n| self.is_monitor(n)).collect()
    }

    /// Incident edges in ascending id order.
    pub fn incident(&self, n: NodeId) -> Vec<EdgeId> {
        self.edge_ids().filter(|&e| self.edge(e).touches(n)).collect()
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.edges.iter().filter(|e| e.touches(n)).count()
    }

    pub fn channel(&self, e: EdgeId) -> &PauliChannel {
        &self.edge(e).channel
    }

    pub fn channels(&self, path: &[EdgeId]) -> Vec<PauliChannel> {
        path.iter().map(|&e| *self.channel(e)).collect()
    }

    pub fn edge_names(&self, path: &[EdgeId]) -> Vec<String> {
        path.iter().map(|&e| self.edge(e).name.clone()).collect()
    }

    pub fn set_channel(&mut self, e: EdgeId, channel: PauliChannel) {
        self.edges[e.0].channel = channel;
    }

    /// Same graph with every edge carrying `channel`.
    pub fn with_uniform_channel(&self, channel: PauliChannel) -> Topology {
        let mut t = self.clone();
        for e in &mut t.edges {
            e.channel = channel;
        }
        t
    }

    /// Product of the `basis` parameters along a path.
    pub fn path_product(&self, path: &[EdgeId], basis: Basis) -> f64 {
        path.iter().map(|&e| self.channel(e).q(basis)).product()
    }

    fn degree2_nodes(&self) -> BTreeSet<NodeId> {
        self.node_ids()
            .filter(|&n| !self.is_monitor(n) && self.degree(n) == 2)
            .collect()
    }

    pub fn is_simplified(&self) -> bool {
        self.degree2_nodes().is_empty()
    }

    /// Line-oriented text form accepted by [`parse_topology`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let kind = match n.kind {
                NodeKind::Monitor => "monitor",
                NodeKind::Internal => "internal",
            };
            out.push_str(&format!("node {} {kind}\n", n.name));
        }
        for e in &self.edges {
            let [x, y, z] = e.channel.as_array();
            out.push_str(&format!(
                "edge {} {} {} {x:?} {y:?} {z:?}\n",
                e.name,
                self.node(e.ends.0).name,
                self.node(e.ends.1).name
            ));
        }
        out
    }

    /// Serializable snapshot for JSON tooling.
    pub fn export(&self) -> TopologyExport {
        TopologyExport {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeExport {
                    name: e.name.clone(),
                    a: self.node(e.ends.0).name.clone(),
                    b: self.node(e.ends.1).name.clone(),
                    q_x: e.channel.q_x(),
                    q_y: e.channel.q_y(),
                    q_z: e.channel.q_z(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyExport {
    pub nodes: Vec<Node>,
    pub edges: Vec<EdgeExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeExport {
    pub name: String,
    pub a: String,
    pub b: String,
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
}

/// Parse the text format:
///
/// ```text
/// # comment
/// node <id> monitor|internal
/// edge <id> <nodeA> <nodeB> <q_X> <q_Y> <q_Z>
/// ```
///
/// Nodes must be declared before the edges that use them. The result is
/// checked with [`validate`].
pub fn parse_topology(text: &str) -> Result<Topology, NetworkError> {
    let mut t = Topology::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| NetworkError::Parse { line, message };
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields[0] {
            "node" => {
                if fields.len() != 3 {
                    return Err(err(format!("expected `node <id> monitor|internal`, got {} fields", fields.len())));
                }
                let kind = match fields[2] {
                    "monitor" => NodeKind::Monitor,
                    "internal" => NodeKind::Internal,
                    other => return Err(err(format!("unknown node kind `{other}`"))),
                };
                t.add_node(fields[1], kind).map_err(|e| err(e.to_string()))?;
            }
            "edge" => {
                if fields.len() != 7 {
                    return Err(err(format!("expected `edge <id> <a> <b> qx qy qz`, got {} fields", fields.len())));
                }
                let mut q = [0.0; 3];
                for (slot, (name, tok)) in q.iter_mut().zip(["q_X", "q_Y", "q_Z"].iter().zip(&fields[4..])) {
                    *slot = tok
                        .parse::<f64>()
                        .map_err(|_| err(format!("{name}: cannot parse `{tok}` as a number")))?;
                }
                let ch = PauliChannel::new(q[0], q[1], q[2]).map_err(|e| err(e.to_string()))?;
                t.add_edge(fields[1], fields[2], fields[3], ch)
                    .map_err(|e| err(e.to_string()))?;
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    if t.nodes.is_empty() {
        return Err(NetworkError::Parse {
            line: 0,
            message: "no nodes declared".into(),
        });
    }
    let violations = validate(&t);
    if violations.is_empty() {
        Ok(t)
    } else {
        Err(NetworkError::Invalid(violations))
    }
}

/// Structural checks: non-empty, at least one monitor, connected, monitors of
/// degree 1 and no internal dead ends.
pub fn validate(t: &Topology) -> Vec<Violation> {
    let mut out = Vec::new();
    if t.nodes.is_empty() {
        out.push(Violation {
            subject: String::new(),
            rule: Rule::Empty,
        });
        return out;
    }
    if t.monitors().is_empty() {
        out.push(Violation {
            subject: String::new(),
            rule: Rule::NoMonitors,
        });
    }
    let reached = reachable(t, NodeId(0));
    for n in t.node_ids() {
        let name = t.node(n).name.clone();
        if !reached.contains(&n) {
            out.push(Violation {
                subject: name.clone(),
                rule: Rule::Disconnected,
            });
        }
        let d = t.degree(n);
        match t.node(n).kind {
            NodeKind::Monitor if d != 1 => out.push(Violation {
                subject: name,
                rule: Rule::MonitorDegree(d),
            }),
            NodeKind::Internal if d < 2 => out.push(Violation {
                subject: name,
                rule: Rule::DanglingInternal(d),
            }),
            _ => {}
        }
    }
    out
}

fn reachable(t: &Topology, start: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for e in t.incident(n) {
            let m = t.edge(e).other(n);
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// A maximal path through degree-2 internal nodes, replaced by one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    /// Original edges in path order.
    pub edge_ids: Vec<EdgeId>,
    pub composite: PauliChannel,
    /// Name of the replacement edge in the simplified topology.
    pub name: String,
}

/// Contract every maximal chain of degree-2 internal nodes into one edge.
///
/// Replacement edges take the position of their lowest-numbered member and are
/// named by joining member names with `+`. Returns the simplified topology and
/// the contracted chains in that order.
pub fn simplify_degree2(t: &Topology) -> Result<(Topology, Vec<EquivalentChannel>), NetworkError> {
    let deg2 = t.degree2_nodes();
    if deg2.is_empty() {
        return Ok((t.clone(), Vec::new()));
    }
    let mut chain_of: HashMap<EdgeId, usize> = HashMap::new();
    let mut chains: Vec<(Vec<EdgeId>, NodeId, NodeId)> = Vec::new();
    for e in t.edge_ids() {
        if chain_of.contains_key(&e) {
            continue;
        }
        let (a, b) = t.edge(e).ends;
        if !deg2.contains(&a) && !deg2.contains(&b) {
            continue;
        }
        let mut path = VecDeque::from([e]);
        let mut ends = [a, b];
        for (side, end) in ends.iter_mut().enumerate() {
            let mut prev = e;
            while deg2.contains(end) {
                let next = t
                    .incident(*end)
                    .into_iter()
                    .find(|&x| x != prev)
                    .expect("degree-2 node has a second edge");
                if next == e {
                    return Err(NetworkError::DegreeTwoLoop(t.edge_names(&Vec::from(path))));
                }
                if side == 0 {
                    path.push_front(next);
                } else {
                    path.push_back(next);
                }
                *end = t.edge(next).other(*end);
                prev = next;
            }
        }
        let path = Vec::from(path);
        if ends[0] == ends[1] {
            return Err(NetworkError::DegreeTwoLoop(t.edge_names(&path)));
        }
        for &x in &path {
            chain_of.insert(x, chains.len());
        }
        chains.push((path, ends[0], ends[1]));
    }

    let mut out = Topology::new();
    for n in t.node_ids().filter(|n| !deg2.contains(n)) {
        let node = t.node(n);
        out.add_node(&node.name, node.kind)?;
    }
    let mut equivalents = Vec::with_capacity(chains.len());
    for e in t.edge_ids() {
        let edge = t.edge(e);
        match chain_of.get(&e) {
            None => {
                out.add_edge(
                    &edge.name,
                    &t.node(edge.ends.0).name,
                    &t.node(edge.ends.1).name,
                    edge.channel,
                )?;
            }
            Some(&ci) => {
                let (path, a, b) = &chains[ci];
                if path.iter().min() != Some(&e) {
                    continue;
                }
                let composite = compose_channels(&t.channels(path))?;
                let name = t.edge_names(path).join("+");
                out.add_edge(&name, &t.node(*a).name, &t.node(*b).name, composite)?;
                equivalents.push(EquivalentChannel {
                    edge_ids: path.clone(),
                    composite,
                    name,
                });
            }
        }
    }
    Ok((out, equivalents))
}

/// Channel parameters recovered by tomography. Unlike [`PauliChannel`] these
/// are raw estimator outputs and need not be completely positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatedChannel {
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
}

impl EstimatedChannel {
    pub fn from_fn(mut f: impl FnMut(Basis) -> f64) -> Self {
        Self {
            q_x: f(Basis::X),
            q_y: f(Basis::Y),
            q_z: f(Basis::Z),
        }
    }

    pub fn q(&self, basis: Basis) -> f64 {
        match basis {
            Basis::X => self.q_x,
            Basis::Y => self.q_y,
            Basis::Z => self.q_z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedEdge {
    pub estimate: EstimatedChannel,
    /// 1-based etching round in which the edge was identified.
    pub step: usize,
}

/// Progress of progressive etching.
///
/// Every effective monitor carries a feeder: a path of already identified
/// edges linking it to a real monitor (empty for real monitors).
#[derive(Debug, Clone, PartialEq)]
pub struct EtchingState {
    identified: BTreeMap<EdgeId, IdentifiedEdge>,
    feeders: BTreeMap<NodeId, Vec<EdgeId>>,
}

impl EtchingState {
    pub fn new(t: &Topology) -> Self {
        Self {
            identified: BTreeMap::new(),
            feeders: t.monitors().into_iter().map(|m| (m, Vec::new())).collect(),
        }
    }

    pub fn is_effective_monitor(&self, n: NodeId) -> bool {
        self.feeders.contains_key(&n)
    }

    pub fn effective_monitors(&self) -> BTreeSet<NodeId> {
        self.feeders.keys().copied().collect()
    }

    pub fn feeder(&self, n: NodeId) -> Option<&[EdgeId]> {
        self.feeders.get(&n).map(Vec::as_slice)
    }

    pub fn identified(&self) -> &BTreeMap<EdgeId, IdentifiedEdge> {
        &self.identified
    }

    pub fn is_identified(&self, e: EdgeId) -> bool {
        self.identified.contains_key(&e)
    }

    pub fn estimate(&self, e: EdgeId) -> Option<&EstimatedChannel> {
        self.identified.get(&e).map(|i| &i.estimate)
    }

    /// Record an estimate and promote the plan's merge node.
    pub fn commit(&mut self, plan: &MergecastPlan, estimate: EstimatedChannel, step: usize) {
        self.identified
            .insert(plan.target, IdentifiedEdge { estimate, step });
        if !self.feeders.contains_key(&plan.merge) {
            let mut feeder = self.feeders[&plan.root].clone();
            feeder.push(plan.target);
            self.feeders.insert(plan.merge, feeder);
        }
    }
}

/// Unidentified edges with at least one endpoint among the effective monitors.
pub fn peripheral_edges(t: &Topology, s: &EtchingState) -> BTreeSet<EdgeId> {
    t.edge_ids()
        .filter(|&e| !s.is_identified(e))
        .filter(|&e| {
            let (a, b) = t.edge(e).ends;
            s.is_effective_monitor(a) || s.is_effective_monitor(b)
        })
        .collect()
}

/// Everything needed to run Mergecast on one target edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MergecastPlan {
    pub target: EdgeId,
    /// Effective monitor sending through the target.
    pub root: NodeId,
    /// Endpoint of the target where the CNOT merge happens.
    pub merge: NodeId,
    /// Branch from the merge node whose qubit is merged with the root's.
    pub branch_a2: Vec<EdgeId>,
    /// Branch from the merge node carrying the merged qubit out.
    pub branch_b: Vec<EdgeId>,
    /// Identified edges from a real monitor to the root.
    pub root_feeder: Vec<EdgeId>,
    /// `branch_a2` extended by the feeder of its end node.
    pub route_a2: Vec<EdgeId>,
    /// `branch_b` extended by the feeder of its end node.
    pub route_b: Vec<EdgeId>,
}

impl MergecastPlan {
    /// Edges traversed by the root qubit up to the merge node, target last.
    pub fn root_route(&self) -> Vec<EdgeId> {
        let mut r = self.root_feeder.clone();
        r.push(self.target);
        r
    }
}

fn branch_candidates(
    t: &Topology,
    s: &EtchingState,
    start: NodeId,
    root: NodeId,
    target: EdgeId,
) -> Vec<(Vec<EdgeId>, NodeId)> {
    let mut found = Vec::new();
    let mut visited = BTreeSet::from([start]);
    let mut path = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        t: &Topology,
        s: &EtchingState,
        node: NodeId,
        root: NodeId,
        target: EdgeId,
        visited: &mut BTreeSet<NodeId>,
        path: &mut Vec<EdgeId>,
        found: &mut Vec<(Vec<EdgeId>, NodeId)>,
    ) {
        for e in t.incident(node) {
            if found.len() >= MAX_BRANCH_CANDIDATES {
                return;
            }
            if e == target {
                continue;
            }
            let next = t.edge(e).other(node);
            if visited.contains(&next) || next == root {
                continue;
            }
            path.push(e);
            if s.is_effective_monitor(next) {
                found.push((path.clone(), next));
            } else {
                visited.insert(next);
                dfs(t, s, next, root, target, visited, path, found);
                visited.remove(&next);
            }
            path.pop();
        }
    }
    dfs(t, s, start, root, target, &mut visited, &mut path, &mut found);
    found.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    found
}

fn plan_with_root(
    t: &Topology,
    s: &EtchingState,
    target: EdgeId,
    root: NodeId,
) -> Option<MergecastPlan> {
    let merge = t.edge(target).other(root);
    let cands = branch_candidates(t, s, merge, root, target);
    for (i, (pa, ea)) in cands.iter().enumerate() {
        for (j, (pb, eb)) in cands.iter().enumerate() {
            if i == j || ea == eb || pa.iter().any(|e| pb.contains(e)) {
                continue;
            }
            let extend = |p: &Vec<EdgeId>, end: &NodeId| {
                let mut r = p.clone();
                r.extend(s.feeder(*end).expect("branch ends at an effective monitor").iter().rev());
                r
            };
            return Some(MergecastPlan {
                target,
                root,
                merge,
                branch_a2: pa.clone(),
                branch_b: pb.clone(),
                root_feeder: s.feeder(root).expect("root is effective").to_vec(),
                route_a2: extend(pa, ea),
                route_b: extend(pb, eb),
            });
        }
    }
    None
}

/// Choose the root and the two Mergecast branches for `target`.
///
/// Candidate branches are simple paths from the merge node that stop at the
/// first effective monitor, avoid the target and do not end at the root. They
/// are ordered by length, then by edge ids; the first candidate that has an
/// edge-disjoint partner ending elsewhere is taken together with its first
/// such partner. When both endpoints are effective monitors the one with the
/// shorter feeder (then lower id) is tried as root first.
pub fn select_mergecast_branches(
    t: &Topology,
    s: &EtchingState,
    target: EdgeId,
) -> Result<MergecastPlan, NetworkError> {
    let (a, b) = t.edge(target).ends;
    let mut roots: Vec<NodeId> = [a, b]
        .into_iter()
        .filter(|&n| s.is_effective_monitor(n))
        .collect();
    if roots.is_empty() {
        return Err(NetworkError::NotPeripheral(t.edge(target).name.clone()));
    }
    roots.sort_by_key(|&n| (s.feeder(n).map_or(0, <[EdgeId]>::len), n));
    roots
        .into_iter()
        .find_map(|r| plan_with_root(t, s, target, r))
        .ok_or_else(|| NetworkError::NoBranches(t.edge(target).name.clone()))
}

/// Plans for every frontier edge, all computed against the same state.
pub fn plan_round(t: &Topology, s: &EtchingState) -> Result<Vec<MergecastPlan>, NetworkError> {
    let frontier = peripheral_edges(t, s);
    if frontier.is_empty() {
        let rest: Vec<EdgeId> = t.edge_ids().filter(|&e| !s.is_identified(e)).collect();
        if !rest.is_empty() {
            return Err(NetworkError::Stuck(t.edge_names(&rest)));
        }
    }
    frontier
        .into_iter()
        .map(|e| select_mergecast_branches(t, s, e))
        .collect()
}

/// Path from a real monitor to one endpoint of the target, and from the other
/// endpoint to a different monitor; both avoid the target edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BypassRoute {
    pub source: NodeId,
    pub before: Vec<EdgeId>,
    pub target: EdgeId,
    pub after: Vec<EdgeId>,
    pub sink: NodeId,
}

fn shortest_to_monitor(
    t: &Topology,
    start: NodeId,
    banned_edge: EdgeId,
    banned_node: NodeId,
    exclude_monitor: Option<NodeId>,
) -> Option<(Vec<EdgeId>, NodeId)> {
    if t.is_monitor(start) && Some(start) != exclude_monitor {
        return Some((Vec::new(), start));
    }
    let mut prev: BTreeMap<NodeId, (NodeId, EdgeId)> = BTreeMap::new();
    let mut seen = BTreeSet::from([start, banned_node]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for e in t.incident(n) {
            if e == banned_edge {
                continue;
            }
            let m = t.edge(e).other(n);
            if !seen.insert(m) {
                continue;
            }
            prev.insert(m, (n, e));
            if t.is_monitor(m) && Some(m) != exclude_monitor {
                let mut path = Vec::new();
                let mut cur = m;
                while cur != start {
                    let (p, pe) = prev[&cur];
                    path.push(pe);
                    cur = p;
                }
                path.reverse();
                return Some((path, m));
            }
            queue.push_back(m);
        }
    }
    None
}

/// Shortest monitor-to-monitor route isolating `target`.
///
/// If the target touches a monitor, that monitor is the sink. `before` is
/// listed from the source towards the target, `after` from the target on.
pub fn bypass_route(t: &Topology, target: EdgeId) -> Result<BypassRoute, NetworkError> {
    let (a, b) = t.edge(target).ends;
    let orientations = if t.is_monitor(a) { [(b, a), (a, b)] } else { [(a, b), (b, a)] };
    for (near, far) in orientations {
        let Some((mut before, source)) = shortest_to_monitor(t, near, target, far, None) else {
            continue;
        };
        before.reverse();
        let Some((after, sink)) = shortest_to_monitor(t, far, target, near, Some(source)) else {
            continue;
        };
        return Ok(BypassRoute {
            source,
            before,
            target,
            after,
            sink,
        });
    }
    Err(NetworkError::NoRoute(t.edge(target).name.clone()))
}
