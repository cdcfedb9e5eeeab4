//! Base data rates: splitting a flow into constant-rate single-path pieces.
//!
//! Nodes are handled from the client-side switch back toward the server.
//! A node is handled only after every node downstream of it, so the
//! virtual links added on its in-links are final by the time it is reached.
//! Ties are broken by ascending node id and edge order.

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::flowsetup::graph::{EdgeId, RateGraph};
use crate::netmodel::{LinkId, NodeId};
use crate::rate::{self, Rational};

pub const DEFAULT_FAN_IN_CAP: usize = 12;

/// One egress piece of the server traced to the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub egress: EdgeId,
    pub rate: Rational,
    pub server_switch: NodeId,
    pub edges: Vec<EdgeId>,
    pub links: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// The rate graph after all virtual links were added.
    pub graph: RateGraph,
    /// Ordered by (server-side switch, rate, edge).
    pub pieces: Vec<Piece>,
}

impl Decomposition {
    pub fn base_rates(&self) -> Vec<Rational> {
        self.pieces.iter().map(|p| p.rate).collect()
    }

    pub fn virtual_edges(&self) -> Vec<EdgeId> {
        self.graph.edge_ids().filter(|e| self.graph.edge(*e).is_virtual).collect()
    }
}

fn unvisited(rg: &RateGraph, p: NodeId) -> Vec<EdgeId> {
    rg.in_edges(p).into_iter().filter(|e| !rg.edge(*e).visited).collect()
}

fn max_edge(rg: &RateGraph, lbar: &[EdgeId]) -> Option<EdgeId> {
    // highest rate, lowest edge id on ties
    lbar.iter().copied().fold(None, |best: Option<EdgeId>, e| match best {
        Some(b) if rg.edge(b).rate >= rg.edge(e).rate => Some(b),
        _ => Some(e),
    })
}

/// Exact subset of `lbar` summing to `target`, searched smallest rate first.
pub fn any_combination(rg: &RateGraph, target: Rational, lbar: &[EdgeId], cap: usize) -> Option<Vec<EdgeId>> {
    if lbar.len() > cap || target <= Rational::zero() {
        return None;
    }
    let mut sorted: Vec<EdgeId> = lbar.to_vec();
    sorted.sort_by(|a, b| rg.edge(*a).rate.cmp(&rg.edge(*b).rate).then(a.cmp(b)));
    let rates: Vec<Rational> = sorted.iter().map(|e| rg.edge(*e).rate).collect();
    // suffix sums for pruning
    let mut suffix = vec![Rational::zero(); rates.len() + 1];
    for i in (0..rates.len()).rev() {
        suffix[i] = suffix[i + 1] + rates[i];
    }
    fn go(
        i: usize,
        left: Rational,
        rates: &[Rational],
        suffix: &[Rational],
        pick: &mut Vec<usize>,
    ) -> bool {
        if left.is_zero() {
            return true;
        }
        if i == rates.len() || suffix[i] < left || rates[i] > left {
            return false;
        }
        pick.push(i);
        if go(i + 1, left - rates[i], rates, suffix, pick) {
            return true;
        }
        pick.pop();
        go(i + 1, left, rates, suffix, pick)
    }
    let mut pick = Vec::new();
    if go(0, target, &rates, &suffix, &mut pick) {
        Some(pick.into_iter().map(|i| sorted[i]).collect())
    } else {
        None
    }
}

/// Takes the smallest unvisited links until they cover `rate(l)`; the
/// excess moves to a new unvisited virtual link parallel to the last one
/// taken. Returns the links now feeding `l`.
pub fn update_data_rate_i(rg: &mut RateGraph, l: EdgeId, lbar: &[EdgeId]) -> Result<Vec<EdgeId>> {
    let need = rg.edge(l).rate;
    let mut sorted: Vec<EdgeId> = lbar.to_vec();
    sorted.sort_by(|a, b| rg.edge(*a).rate.cmp(&rg.edge(*b).rate).then(a.cmp(b)));
    let mut taken = Vec::new();
    let mut r = Rational::zero();
    for e in sorted {
        rg.edge_mut(e).visited = true;
        r += rg.edge(e).rate;
        taken.push(e);
        if r >= need {
            break;
        }
    }
    if r < need {
        return Err(Error::Decomposition(format!(
            "upstream links carry {} but the outgoing link needs {}",
            rate::fmt_exact(&r),
            rate::fmt_exact(&need)
        )));
    }
    let excess = r - need;
    if excess > Rational::zero() {
        let l2 = *taken.last().unwrap();
        rg.add_virtual(l2, excess, false);
        rg.edge_mut(l2).rate -= excess;
    }
    Ok(taken)
}

/// Splits `rate(l)` off the largest unvisited link into a visited virtual
/// link. Returns that virtual link.
pub fn update_data_rate_ii(rg: &mut RateGraph, l: EdgeId, lbar: &[EdgeId]) -> Result<Vec<EdgeId>> {
    let need = rg.edge(l).rate;
    let l2 = max_edge(rg, lbar).ok_or_else(|| Error::Decomposition("no upstream links to split".into()))?;
    if rg.edge(l2).rate < need {
        return Err(Error::Decomposition(format!(
            "largest upstream link carries {}, less than {}",
            rate::fmt_exact(&rg.edge(l2).rate),
            rate::fmt_exact(&need)
        )));
    }
    let vl = rg.add_virtual(l2, need, true);
    rg.edge_mut(l2).rate -= need;
    Ok(vec![vl])
}

/// Decomposes the flow from server `m` to client-side switch `n`.
pub fn base_data_rates(rg: &RateGraph, n: NodeId, m: NodeId) -> Result<Decomposition> {
    base_data_rates_with_cap(rg, n, m, DEFAULT_FAN_IN_CAP)
}

pub fn base_data_rates_with_cap(rg: &RateGraph, n: NodeId, m: NodeId, cap: usize) -> Result<Decomposition> {
    let mut g = rg.clone();
    g.source = m;
    g.sink = n;
    for e in g.edge_ids().collect::<Vec<_>>() {
        g.edge_mut(e).visited = false;
    }
    let value = g.check_conservation()?;
    if !rate::is_positive(&value) {
        return Err(Error::Decomposition("no flow leaves the server".into()));
    }
    let order = g.reverse_topological()?;

    // in-link of p -> the out-link of p it feeds
    let mut feeds: HashMap<EdgeId, EdgeId> = HashMap::new();
    for node in order {
        if node == m {
            continue;
        }
        for l in g.in_edges(node) {
            let p = g.edge(l).from;
            if p == m {
                continue;
            }
            let lbar = unvisited(&g, p);
            if lbar.is_empty() {
                return Err(Error::Decomposition(format!("no unvisited flow enters {p}")));
            }
            let need = g.edge(l).rate;
            let assigned = if let Some(comb) = any_combination(&g, need, &lbar, cap) {
                for e in &comb {
                    g.edge_mut(*e).visited = true;
                }
                comb
            } else {
                let top = g.edge(max_edge(&g, &lbar).unwrap()).rate;
                if need > top {
                    update_data_rate_i(&mut g, l, &lbar)?
                } else {
                    update_data_rate_ii(&mut g, l, &lbar)?
                }
            };
            for a in assigned {
                feeds.insert(a, l);
            }
        }
    }

    let mut pieces = Vec::new();
    for egress in g.out_edges(m) {
        let mut edges = vec![egress];
        let mut cur = egress;
        while g.edge(cur).to != n {
            cur = *feeds.get(&cur).ok_or_else(|| {
                Error::Decomposition(format!("flow on {} has no downstream assignment", g.edge(cur).physical))
            })?;
            edges.push(cur);
            if edges.len() > g.edges().len() {
                return Err(Error::Decomposition("piece does not reach the sink".into()));
            }
        }
        let e = g.edge(egress);
        pieces.push(Piece {
            egress,
            rate: e.rate,
            server_switch: e.to,
            links: edges.iter().map(|x| g.edge(*x).physical).collect(),
            edges,
        });
    }
    pieces.sort_by(|a, b| {
        (a.server_switch, a.rate, a.egress).cmp(&(b.server_switch, b.rate, b.egress))
    });
    Ok(Decomposition { graph: g, pieces })
}
