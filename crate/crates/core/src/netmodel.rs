//! Topology graph: switches, clients, servers and directed capacitated links.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Switch,
    Client,
    Server,
    /// Only produced by [`augment_virtual_server`].
    VirtualServer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Finite(Rational),
    Unbounded,
}

impl Capacity {
    pub fn finite(&self) -> Option<Rational> {
        match self {
            Capacity::Finite(c) => Some(*c),
            Capacity::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Capacity::Unbounded)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Capacity::Finite(c) => rate::to_f64(c),
            Capacity::Unbounded => f64::INFINITY,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(c) => write!(f, "{} kbps", rate::fmt_exact(c)),
            Capacity::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: Capacity,
}

/// Immutable directed graph with per-link capacities in kbps.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    links: Vec<Link>,
    by_name: HashMap<String, NodeId>,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<(String, NodeRole)>,
    links: Vec<(String, String, Capacity)>,
}

impl GraphBuilder {
    pub fn node(mut self, name: impl Into<String>, role: NodeRole) -> Self {
        self.nodes.push((name.into(), role));
        self
    }

    pub fn link(mut self, from: impl Into<String>, to: impl Into<String>, capacity: Capacity) -> Self {
        self.links.push((from.into(), to.into(), capacity));
        self
    }

    /// Two directed links of the same capacity.
    pub fn duplex(self, a: impl Into<String>, b: impl Into<String>, capacity: Capacity) -> Self {
        let (a, b) = (a.into(), b.into());
        self.link(a.clone(), b.clone(), capacity).link(b, a, capacity)
    }

    pub fn kbps(self, from: impl Into<String>, to: impl Into<String>, kbps: i128) -> Self {
        self.link(from, to, Capacity::Finite(rate::int(kbps)))
    }

    pub fn build(self) -> Result<NetworkGraph> {
        NetworkGraph::from_parts(self.nodes, self.links, false)
    }
}

impl NetworkGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    fn from_parts(
        node_specs: Vec<(String, NodeRole)>,
        link_specs: Vec<(String, String, Capacity)>,
        allow_virtual: bool,
    ) -> Result<Self> {
        if node_specs.is_empty() {
            return Err(Error::Validation("topology has no nodes".into()));
        }
        let mut nodes = Vec::with_capacity(node_specs.len());
        let mut by_name = HashMap::new();
        for (i, (name, role)) in node_specs.into_iter().enumerate() {
            if role == NodeRole::VirtualServer && !allow_virtual {
                return Err(Error::Validation(format!(
                    "node `{name}`: virtual servers cannot be declared in a topology"
                )));
            }
            if by_name.insert(name.clone(), NodeId(i)).is_some() {
                return Err(Error::Validation(format!("duplicate node name `{name}`")));
            }
            nodes.push(Node { id: NodeId(i), name, role });
        }

        let mut links = Vec::with_capacity(link_specs.len());
        let mut seen = HashSet::new();
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        for (from, to, capacity) in link_specs {
            let lookup = |n: &str| {
                by_name
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("link endpoint `{n}` is not a declared node")))
            };
            let (f, t) = (lookup(&from)?, lookup(&to)?);
            if f == t {
                return Err(Error::Validation(format!("self-loop on `{from}`")));
            }
            if !seen.insert((f, t)) {
                return Err(Error::Validation(format!("duplicate link {from} -> {to}")));
            }
            if let Capacity::Finite(c) = capacity {
                if c < Rational::zero() {
                    return Err(Error::Validation(format!("negative capacity on {from} -> {to}")));
                }
            }
            let id = LinkId(links.len());
            out_links[f.0].push(id);
            in_links[t.0].push(id);
            links.push(Link { id, from: f, to: t, capacity });
        }

        let graph = NetworkGraph { nodes, links, by_name, out_links, in_links };
        graph.check_client_attachments()?;
        Ok(graph)
    }

    fn check_client_attachments(&self) -> Result<()> {
        for node in self.nodes.iter().filter(|n| n.role == NodeRole::Client) {
            let peers: HashSet<NodeId> = self.out_links[node.id.0]
                .iter()
                .map(|l| self.links[l.0].to)
                .chain(self.in_links[node.id.0].iter().map(|l| self.links[l.0].from))
                .collect();
            if peers.len() != 1 {
                return Err(Error::Validation(format!(
                    "client `{}` must attach to exactly one switch, found {} neighbours",
                    node.name,
                    peers.len()
                )));
            }
            let peer = *peers.iter().next().unwrap();
            if self.nodes[peer.0].role != NodeRole::Switch {
                return Err(Error::Validation(format!(
                    "client `{}` attaches to `{}`, which is not a switch",
                    node.name, self.nodes[peer.0].name
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn out_links(&self, n: NodeId) -> &[LinkId] {
        &self.out_links[n.0]
    }

    pub fn in_links(&self, n: NodeId) -> &[LinkId] {
        &self.in_links[n.0]
    }

    pub fn find_link(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        self.out_links[from.0].iter().copied().find(|l| self.links[l.0].to == to)
    }

    pub fn role(&self, n: NodeId) -> NodeRole {
        self.nodes[n.0].role
    }

    pub fn with_role(&self, role: NodeRole) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.role == role).map(|n| n.id)
    }

    pub fn servers(&self) -> Vec<NodeId> {
        self.with_role(NodeRole::Server).collect()
    }

    pub fn clients(&self) -> Vec<NodeId> {
        self.with_role(NodeRole::Client).collect()
    }

    pub fn virtual_server(&self) -> Option<NodeId> {
        self.with_role(NodeRole::VirtualServer).next()
    }

    /// The switch a client hangs off.
    pub fn attach_switch(&self, client: NodeId) -> Result<NodeId> {
        if self.role(client) != NodeRole::Client {
            return Err(Error::Validation(format!("`{}` is not a client", self.name(client))));
        }
        let l = self.out_links[client.0]
            .first()
            .map(|l| self.links[l.0].to)
            .or_else(|| self.in_links[client.0].first().map(|l| self.links[l.0].from));
        l.ok_or_else(|| Error::Validation(format!("client `{}` is detached", self.name(client))))
    }

    /// Largest finite link capacity, if any link is finite.
    pub fn max_finite_capacity(&self) -> Option<Rational> {
        self.links.iter().filter_map(|l| l.capacity.finite()).max()
    }

    /// Maximum flow between two nodes (Edmonds-Karp on exact rationals).
    pub fn max_flow(&self, src: NodeId, dst: NodeId) -> Capacity {
        let caps: Vec<Capacity> = self.links.iter().map(|l| l.capacity).collect();
        max_flow_on(self, &caps, src, dst)
    }

    pub fn summary(&self) -> String {
        let count = |r| self.nodes.iter().filter(|n| n.role == r).count();
        format!(
            "{} nodes ({} switches, {} clients, {} servers), {} links",
            self.nodes.len(),
            count(NodeRole::Switch),
            count(NodeRole::Client),
            count(NodeRole::Server),
            self.links.len()
        )
    }
}

pub(crate) fn max_flow_on(g: &NetworkGraph, caps: &[Capacity], src: NodeId, dst: NodeId) -> Capacity {
    if src == dst {
        return Capacity::Unbounded;
    }
    let finite_total: Rational = caps.iter().filter_map(|c| c.finite()).sum();
    let big = finite_total + rate::int(1);
    // residual[2k] forward, residual[2k+1] backward
    let mut residual: Vec<Rational> = Vec::with_capacity(caps.len() * 2);
    for c in caps {
        residual.push(c.finite().unwrap_or(big));
        residual.push(Rational::zero());
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.nodes.len()];
    for (k, l) in g.links.iter().enumerate() {
        adj[l.from.0].push((2 * k, l.to.0));
        adj[l.to.0].push((2 * k + 1, l.from.0));
    }
    let mut total = Rational::zero();
    loop {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.nodes.len()];
        let mut seen = vec![false; g.nodes.len()];
        seen[src.0] = true;
        let mut q = VecDeque::from([src.0]);
        while let Some(u) = q.pop_front() {
            for &(arc, v) in &adj[u] {
                if !seen[v] && residual[arc] > Rational::zero() {
                    seen[v] = true;
                    prev[v] = Some((arc, u));
                    q.push_back(v);
                }
            }
        }
        if !seen[dst.0] {
            break;
        }
        let mut bottleneck = big;
        let mut v = dst.0;
        while let Some((arc, u)) = prev[v] {
            bottleneck = bottleneck.min(residual[arc]);
            v = u;
        }
        let mut v = dst.0;
        while let Some((arc, u)) = prev[v] {
            residual[arc] -= bottleneck;
            residual[arc ^ 1] += bottleneck;
            v = u;
        }
        total += bottleneck;
        if total >= big {
            return Capacity::Unbounded;
        }
    }
    Capacity::Finite(total)
}

/// Available capacity per link at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySnapshot {
    caps: Vec<Capacity>,
}

impl CapacitySnapshot {
    pub fn of(graph: &NetworkGraph) -> Self {
        CapacitySnapshot { caps: graph.links.iter().map(|l| l.capacity).collect() }
    }

    pub fn get(&self, link: LinkId) -> Capacity {
        self.caps.get(link.0).copied().unwrap_or(Capacity::Unbounded)
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LinkId, Capacity)> + '_ {
        self.caps.iter().enumerate().map(|(i, c)| (LinkId(i), *c))
    }

    /// Extends the snapshot to a graph that appended links (e.g. the
    /// virtual-server augmentation); appended links take their static capacity.
    pub fn extended_to(&self, graph: &NetworkGraph) -> Self {
        let mut caps = self.caps.clone();
        caps.extend(graph.links[self.caps.len().min(graph.links.len())..].iter().map(|l| l.capacity));
        CapacitySnapshot { caps }
    }

    /// Snapshot with every finite capacity replaced.
    pub fn with_all_finite(&self, value: Rational) -> Self {
        CapacitySnapshot {
            caps: self
                .caps
                .iter()
                .map(|c| if c.is_unbounded() { *c } else { Capacity::Finite(value) })
                .collect(),
        }
    }

    pub fn max_flow(&self, graph: &NetworkGraph, src: NodeId, dst: NodeId) -> Capacity {
        max_flow_on(graph, &self.caps, src, dst)
    }
}

/// Subtracts in-flight usage from the static capacities.
pub fn snapshot_bandwidth(
    graph: &NetworkGraph,
    in_flight: &BTreeMap<LinkId, Rational>,
) -> Result<CapacitySnapshot> {
    let mut snap = CapacitySnapshot::of(graph);
    for (&link, used) in in_flight {
        if link.0 >= graph.links.len() {
            return Err(Error::Validation(format!("in-flight usage on unknown link {link}")));
        }
        if *used < Rational::zero() {
            return Err(Error::Validation(format!("negative in-flight usage on {link}")));
        }
        if let Capacity::Finite(c) = snap.caps[link.0] {
            if *used > c {
                let l = graph.link(link);
                return Err(Error::Validation(format!(
                    "in-flight usage {} exceeds capacity {} on {} -> {}",
                    rate::fmt_exact(used),
                    rate::fmt_exact(&c),
                    graph.name(l.from),
                    graph.name(l.to)
                )));
            }
            snap.caps[link.0] = Capacity::Finite(c - used);
        }
    }
    Ok(snap)
}

pub const VIRTUAL_SERVER_NAME: &str = "virtual-server";

/// Adds one virtual server with an unbounded link to each listed server.
pub fn augment_virtual_server(graph: &NetworkGraph, servers: &[NodeId]) -> Result<NetworkGraph> {
    if graph.virtual_server().is_some() {
        return Err(Error::Validation("graph already contains a virtual server".into()));
    }
    if servers.is_empty() {
        return Err(Error::Validation("virtual server needs at least one real server".into()));
    }
    let mut uniq: Vec<NodeId> = servers.to_vec();
    uniq.sort();
    uniq.dedup();
    for &s in &uniq {
        if s.0 >= graph.nodes.len() || graph.role(s) != NodeRole::Server {
            return Err(Error::Validation(format!("node {s} is not a server")));
        }
    }
    let mut name = VIRTUAL_SERVER_NAME.to_string();
    while graph.by_name.contains_key(&name) {
        name.push('\'');
    }
    let mut nodes: Vec<(String, NodeRole)> =
        graph.nodes.iter().map(|n| (n.name.clone(), n.role)).collect();
    nodes.push((name.clone(), NodeRole::VirtualServer));
    let mut links: Vec<(String, String, Capacity)> = graph
        .links
        .iter()
        .map(|l| (graph.name(l.from).to_string(), graph.name(l.to).to_string(), l.capacity))
        .collect();
    for s in uniq {
        links.push((name.clone(), graph.name(s).to_string(), Capacity::Unbounded));
    }
    NetworkGraph::from_parts(nodes, links, true)
}

// ---------------------------------------------------------------------------
// Topology documents

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDoc {
    pub nodes: Vec<NodeDoc>,
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub from: String,
    pub to: String,
    pub kbps: KbpsDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KbpsDoc {
    Value(f64),
    Keyword(String),
}

impl KbpsDoc {
    fn capacity(&self) -> Result<Capacity> {
        match self {
            KbpsDoc::Value(v) if v.is_finite() => Ok(Capacity::Finite(rate::from_config_f64(*v))),
            KbpsDoc::Value(v) => Err(Error::Validation(format!("capacity {v} is not finite"))),
            KbpsDoc::Keyword(k) if k == "unbounded" => Ok(Capacity::Unbounded),
            KbpsDoc::Keyword(k) => Err(Error::Parse(format!("unknown capacity keyword `{k}`"))),
        }
    }
}

impl TopologyDoc {
    pub fn into_graph(self) -> Result<NetworkGraph> {
        let nodes = self.nodes.into_iter().map(|n| (n.name, n.role)).collect();
        let links = self
            .links
            .into_iter()
            .map(|l| Ok((l.from, l.to, l.kbps.capacity()?)))
            .collect::<Result<Vec<_>>>()?;
        NetworkGraph::from_parts(nodes, links, false)
    }

    pub fn from_graph(graph: &NetworkGraph) -> Self {
        TopologyDoc {
            nodes: graph
                .nodes
                .iter()
                .map(|n| NodeDoc { name: n.name.clone(), role: n.role })
                .collect(),
            links: graph
                .links
                .iter()
                .map(|l| LinkDoc {
                    from: graph.name(l.from).to_string(),
                    to: graph.name(l.to).to_string(),
                    kbps: match l.capacity {
                        Capacity::Finite(c) => KbpsDoc::Value(rate::to_f64(&c)),
                        Capacity::Unbounded => KbpsDoc::Keyword("unbounded".into()),
                    },
                })
                .collect(),
        }
    }
}

/// Parses and validates a JSON topology document.
pub fn load_topology(document: &str) -> Result<NetworkGraph> {
    let doc: TopologyDoc =
        serde_json::from_str(document).map_err(|e| Error::Parse(format!("topology: {e}")))?;
    doc.into_graph()
}

pub fn load_topology_file(path: impl AsRef<Path>) -> Result<NetworkGraph> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    load_topology(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> NetworkGraph {
        NetworkGraph::builder()
            .node("srv", NodeRole::Server)
            .node("sw", NodeRole::Switch)
            .node("cl", NodeRole::Client)
            .kbps("srv", "sw", 1000)
            .kbps("sw", "cl", 1000)
            .build()
            .unwrap()
    }

    #[test]
    fn chain_path_capacity() {
        let g = chain();
        let (s, c) = (g.node_by_name("srv").unwrap(), g.node_by_name("cl").unwrap());
        assert_eq!(g.max_flow(s, c), Capacity::Finite(rate::int(1000)));
        assert_eq!(g.attach_switch(c).unwrap(), g.node_by_name("sw").unwrap());
    }

    #[test]
    fn empty_topology_is_rejected() {
        let err = load_topology(r#"{"nodes": [], "links": []}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn loader_rejects_bad_documents() {
        assert!(matches!(load_topology("{"), Err(Error::Parse(_))));
        let unknown_key = r#"{"nodes": [{"name": "a", "role": "switch", "x": 1}], "links": []}"#;
        assert!(matches!(load_topology(unknown_key), Err(Error::Parse(_))));
        let dangling = r#"{"nodes": [{"name": "a", "role": "switch"}],
            "links": [{"from": "a", "to": "b", "kbps": 10}]}"#;
        assert!(matches!(load_topology(dangling), Err(Error::Validation(_))));
        let negative = r#"{"nodes": [{"name": "a", "role": "switch"}, {"name": "b", "role": "switch"}],
            "links": [{"from": "a", "to": "b", "kbps": -1}]}"#;
        assert!(matches!(load_topology(negative), Err(Error::Validation(_))));
        let dup = r#"{"nodes": [{"name": "a", "role": "switch"}, {"name": "b", "role": "switch"}],
            "links": [{"from": "a", "to": "b", "kbps": 1}, {"from": "a", "to": "b", "kbps": 2}]}"#;
        assert!(matches!(load_topology(dup), Err(Error::Validation(_))));
        let virt = r#"{"nodes": [{"name": "v", "role": "virtual_server"}], "links": []}"#;
        assert!(matches!(load_topology(virt), Err(Error::Validation(_))));
    }

    #[test]
    fn client_must_attach_to_one_switch() {
        let two = NetworkGraph::builder()
            .node("a", NodeRole::Switch)
            .node("b", NodeRole::Switch)
            .node("c", NodeRole::Client)
            .kbps("a", "c", 1)
            .kbps("b", "c", 1)
            .build();
        assert!(matches!(two, Err(Error::Validation(_))));
        let none = NetworkGraph::builder().node("c", NodeRole::Client).build();
        assert!(matches!(none, Err(Error::Validation(_))));
        let to_server = NetworkGraph::builder()
            .node("s", NodeRole::Server)
            .node("c", NodeRole::Client)
            .kbps("s", "c", 1)
            .build();
        assert!(matches!(to_server, Err(Error::Validation(_))));
    }

    #[test]
    fn unbounded_keyword_parses() {
        let g = load_topology(
            r#"{"nodes": [{"name": "s", "role": "server"}, {"name": "w", "role": "switch"}],
                "links": [{"from": "s", "to": "w", "kbps": "unbounded"}]}"#,
        )
        .unwrap();
        assert!(g.links()[0].capacity.is_unbounded());
        assert!(load_topology(
            r#"{"nodes": [{"name": "s", "role": "server"}, {"name": "w", "role": "switch"}],
                "links": [{"from": "s", "to": "w", "kbps": "lots"}]}"#
        )
        .is_err());
    }

    #[test]
    fn snapshot_subtracts_in_flight_usage() {
        let g = NetworkGraph::builder()
            .node("a", NodeRole::Switch)
            .node("b", NodeRole::Switch)
            .kbps("a", "b", 8000)
            .build()
            .unwrap();
        let l = LinkId(0);
        assert_eq!(snapshot_bandwidth(&g, &BTreeMap::new()).unwrap(), CapacitySnapshot::of(&g));
        let snap = snapshot_bandwidth(&g, &BTreeMap::from([(l, rate::int(3000))])).unwrap();
        assert_eq!(snap.get(l), Capacity::Finite(rate::int(5000)));
        let err = snapshot_bandwidth(&g, &BTreeMap::from([(l, rate::int(9000))]));
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn augmentation_adds_unbounded_links() {
        let g = NetworkGraph::builder()
            .node("s1", NodeRole::Server)
            .node("s2", NodeRole::Server)
            .node("w", NodeRole::Switch)
            .kbps("s1", "w", 10)
            .kbps("s2", "w", 10)
            .build()
            .unwrap();
        let servers = g.servers();
        let aug = augment_virtual_server(&g, &servers).unwrap();
        assert_eq!(aug.nodes().len(), g.nodes().len() + 1);
        assert_eq!(aug.links().len(), g.links().len() + 2);
        let v = aug.virtual_server().unwrap();
        assert!(aug.out_links(v).iter().all(|l| aug.link(*l).capacity.is_unbounded()));
        // original untouched, prefix of links preserved
        assert_eq!(&aug.links()[..2], g.links());
        assert!(augment_virtual_server(&aug, &servers).is_err());
        assert!(augment_virtual_server(&g, &[]).is_err());
        assert!(augment_virtual_server(&g, &[g.node_by_name("w").unwrap()]).is_err());
    }
}
