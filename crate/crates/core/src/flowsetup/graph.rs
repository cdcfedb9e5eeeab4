//! Exact per-flow rate graph with room for virtual parallel links.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::netmodel::{LinkId, NetworkGraph, NodeId};
use crate::rate::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct RateEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub rate: Rational,
    /// Physical link this edge runs on; virtual edges point at the link they
    /// were split from.
    pub physical: LinkId,
    pub is_virtual: bool,
    pub visited: bool,
}

/// One flow (a client-layer part) as exact rates on links.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGraph {
    node_count: usize,
    edges: Vec<RateEdge>,
    pub source: NodeId,
    pub sink: NodeId,
}

impl RateGraph {
    pub fn from_link_rates(
        graph: &NetworkGraph,
        rates: &BTreeMap<LinkId, Rational>,
        source: NodeId,
        sink: NodeId,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for (&l, &r) in rates {
            if l.0 >= graph.links().len() {
                return Err(Error::Decomposition(format!("rate on unknown link {l}")));
            }
            if r < Rational::zero() {
                return Err(Error::Decomposition(format!("negative rate on {l}")));
            }
            if r.is_zero() {
                continue;
            }
            let link = graph.link(l);
            edges.push(RateEdge {
                from: link.from,
                to: link.to,
                rate: r,
                physical: l,
                is_virtual: false,
                visited: false,
            });
        }
        Ok(RateGraph { node_count: graph.nodes().len(), edges, source, sink })
    }

    /// Sums path flows into link rates.
    pub fn from_paths(
        graph: &NetworkGraph,
        paths: &[(Vec<LinkId>, Rational)],
        source: NodeId,
        sink: NodeId,
    ) -> Result<Self> {
        let mut rates: BTreeMap<LinkId, Rational> = BTreeMap::new();
        for (links, r) in paths {
            for &l in links {
                *rates.entry(l).or_insert_with(Rational::zero) += *r;
            }
        }
        Self::from_link_rates(graph, &rates, source, sink)
    }

    pub fn edges(&self) -> &[RateEdge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &RateEdge {
        &self.edges[e.0]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub(crate) fn edge_mut(&mut self, e: EdgeId) -> &mut RateEdge {
        &mut self.edges[e.0]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    /// Positive-rate edges entering `n`, in edge order.
    pub fn in_edges(&self, n: NodeId) -> Vec<EdgeId> {
        self.edge_ids()
            .filter(|e| self.edges[e.0].to == n && rate::is_positive(&self.edges[e.0].rate))
            .collect()
    }

    pub fn out_edges(&self, n: NodeId) -> Vec<EdgeId> {
        self.edge_ids()
            .filter(|e| self.edges[e.0].from == n && rate::is_positive(&self.edges[e.0].rate))
            .collect()
    }

    /// Adds a virtual edge parallel to `parallel`.
    pub fn add_virtual(&mut self, parallel: EdgeId, rate: Rational, visited: bool) -> EdgeId {
        let p = &self.edges[parallel.0];
        let e = RateEdge {
            from: p.from,
            to: p.to,
            rate,
            physical: p.physical,
            is_virtual: true,
            visited,
        };
        self.edges.push(e);
        EdgeId(self.edges.len() - 1)
    }

    /// Net outflow per node.
    pub fn net_outflow(&self) -> Vec<Rational> {
        let mut net = vec![Rational::zero(); self.node_count];
        for e in &self.edges {
            net[e.from.0] += e.rate;
            net[e.to.0] -= e.rate;
        }
        net
    }

    /// Checks single-source single-sink conservation; returns the flow value.
    pub fn check_conservation(&self) -> Result<Rational> {
        let net = self.net_outflow();
        for (i, v) in net.iter().enumerate() {
            let n = NodeId(i);
            if n != self.source && n != self.sink && !v.is_zero() {
                return Err(Error::Decomposition(format!(
                    "flow not conserved at {n}: net outflow {}",
                    rate::fmt_exact(v)
                )));
            }
        }
        let value = net[self.source.0];
        if self.source != self.sink && value + net[self.sink.0] != Rational::zero() {
            return Err(Error::Decomposition("source and sink imbalance differ".into()));
        }
        if value < Rational::zero() {
            return Err(Error::Decomposition("flow runs into the source".into()));
        }
        Ok(value)
    }

    /// Total rate leaving the source.
    pub fn value(&self) -> Rational {
        self.net_outflow()[self.source.0]
    }

    /// Rates folded back onto physical links.
    pub fn link_rates(&self) -> BTreeMap<LinkId, Rational> {
        let mut out: BTreeMap<LinkId, Rational> = BTreeMap::new();
        for e in &self.edges {
            if rate::is_positive(&e.rate) {
                *out.entry(e.physical).or_insert_with(Rational::zero) += e.rate;
            }
        }
        out
    }

    pub fn positive_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| rate::is_positive(&e.rate)).count()
    }

    fn find_cycle(&self) -> Option<Vec<EdgeId>> {
        // iterative DFS with colors over positive edges
        let mut adj: Vec<Vec<EdgeId>> = vec![Vec::new(); self.node_count];
        for id in self.edge_ids() {
            let e = &self.edges[id.0];
            if rate::is_positive(&e.rate) {
                adj[e.from.0].push(id);
            }
        }
        let mut color = vec![0u8; self.node_count];
        let mut via: Vec<Option<EdgeId>> = vec![None; self.node_count];
        for start in 0..self.node_count {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            while let Some(&mut (u, ref mut i)) = stack.last_mut() {
                if *i < adj[u].len() {
                    let eid = adj[u][*i];
                    *i += 1;
                    let v = self.edges[eid.0].to.0;
                    match color[v] {
                        0 => {
                            color[v] = 1;
                            via[v] = Some(eid);
                            stack.push((v, 0));
                        }
                        1 => {
                            let mut cycle = vec![eid];
                            let mut w = u;
                            while w != v {
                                let e = via[w].expect("tree edge");
                                cycle.push(e);
                                w = self.edges[e.0].from.0;
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[u] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Removes circulations; returns the number of cycles cancelled.
    pub fn cancel_cycles(&mut self) -> usize {
        let mut n = 0;
        while let Some(cycle) = self.find_cycle() {
            let m = cycle.iter().map(|e| self.edges[e.0].rate).min().unwrap();
            for e in cycle {
                self.edges[e.0].rate -= m;
            }
            n += 1;
        }
        n
    }

    /// Nodes touched by positive flow in an order where every node comes
    /// after all nodes downstream of it (sink first). Ready nodes are taken
    /// by ascending id.
    pub(crate) fn reverse_topological(&self) -> Result<Vec<NodeId>> {
        let mut pending_out = vec![0usize; self.node_count];
        let mut active = BTreeSet::new();
        for e in &self.edges {
            if rate::is_positive(&e.rate) {
                pending_out[e.from.0] += 1;
                active.insert(e.from.0);
                active.insert(e.to.0);
            }
        }
        let mut ready: BTreeSet<usize> = active.iter().copied().filter(|&n| pending_out[n] == 0).collect();
        let mut order = Vec::with_capacity(active.len());
        while let Some(n) = ready.pop_first() {
            order.push(NodeId(n));
            for e in &self.edges {
                if e.to.0 == n && rate::is_positive(&e.rate) {
                    pending_out[e.from.0] -= 1;
                    if pending_out[e.from.0] == 0 {
                        ready.insert(e.from.0);
                    }
                }
            }
        }
        if order.len() != active.len() {
            return Err(Error::Decomposition("rate graph contains a cycle".into()));
        }
        Ok(order)
    }
}
