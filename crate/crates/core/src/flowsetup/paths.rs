//! Path decomposition of solver output and conversion to exact rates.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::netmodel::{LinkId, NetworkGraph, NodeId};
use crate::rate::{self, Rational};

/// Rates below this (kbps) are solver noise.
pub const FLOW_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FloatPath {
    pub links: Vec<LinkId>,
    pub rate: f64,
}

impl FloatPath {
    pub fn first_hop(&self, graph: &NetworkGraph) -> Option<NodeId> {
        self.links.first().map(|l| graph.link(*l).to)
    }
}

fn cancel_float_cycles(graph: &NetworkGraph, flow: &mut BTreeMap<LinkId, f64>) {
    loop {
        let n = graph.nodes().len();
        let mut color = vec![0u8; n];
        let mut via: Vec<Option<LinkId>> = vec![None; n];
        let mut found: Option<Vec<LinkId>> = None;
        'outer: for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            color[start] = 1;
            while let Some(top) = stack.last_mut() {
                let (u, i) = *top;
                let outs = graph.out_links(NodeId(u));
                if i < outs.len() {
                    top.1 += 1;
                    let l = outs[i];
                    if flow.get(&l).copied().unwrap_or(0.0) <= FLOW_EPS {
                        continue;
                    }
                    let v = graph.link(l).to.0;
                    match color[v] {
                        0 => {
                            color[v] = 1;
                            via[v] = Some(l);
                            stack.push((v, 0));
                        }
                        1 => {
                            let mut cyc = vec![l];
                            let mut w = u;
                            while w != v {
                                let e = via[w].unwrap();
                                cyc.push(e);
                                w = graph.link(e).from.0;
                            }
                            found = Some(cyc);
                            break 'outer;
                        }
                        _ => {}
                    }
                } else {
                    color[u] = 2;
                    stack.pop();
                }
            }
        }
        match found {
            Some(cyc) => {
                let m = cyc.iter().map(|l| flow[l]).fold(f64::INFINITY, f64::min);
                for l in cyc {
                    *flow.get_mut(&l).unwrap() -= m;
                }
            }
            None => return,
        }
    }
}

/// Splits a single-commodity float flow into source-to-sink paths.
/// Circulations are cancelled first and residual noise is dropped.
pub fn decompose_float(
    graph: &NetworkGraph,
    flows: &BTreeMap<LinkId, f64>,
    source: NodeId,
    sink: NodeId,
) -> Vec<FloatPath> {
    let mut flow: BTreeMap<LinkId, f64> = flows.iter().filter(|(_, v)| **v > FLOW_EPS).map(|(k, v)| (*k, *v)).collect();
    cancel_float_cycles(graph, &mut flow);
    let mut paths = Vec::new();
    let limit = graph.links().len() + 1;
    for _ in 0..(4 * flows.len() + 8) {
        let mut links = Vec::new();
        let mut cur = source;
        let mut seen = vec![false; graph.nodes().len()];
        seen[cur.0] = true;
        let mut stuck = None;
        while cur != sink && links.len() < limit {
            // widest outgoing link, lowest id on ties
            let next = graph
                .out_links(cur)
                .iter()
                .copied()
                .filter(|l| flow.get(l).copied().unwrap_or(0.0) > FLOW_EPS)
                .filter(|l| !seen[graph.link(*l).to.0])
                .fold(None, |best: Option<LinkId>, l| match best {
                    Some(b) if flow[&b] >= flow[&l] => Some(b),
                    _ => Some(l),
                });
            match next {
                Some(l) => {
                    links.push(l);
                    cur = graph.link(l).to;
                    seen[cur.0] = true;
                }
                None => {
                    stuck = links.last().copied();
                    break;
                }
            }
        }
        if cur != sink {
            match stuck {
                // dead end left by noise: drop the last hop and retry
                Some(l) => {
                    flow.insert(l, 0.0);
                    continue;
                }
                None => break,
            }
        }
        let bottleneck = links.iter().map(|l| flow[l]).fold(f64::INFINITY, f64::min);
        for l in &links {
            *flow.get_mut(l).unwrap() -= bottleneck;
        }
        paths.push(FloatPath { links, rate: bottleneck });
    }
    paths
}

/// Distributes `total` over `weights` at 1 bps resolution; the rounding
/// remainder goes to the largest share. Zero shares are dropped.
pub fn split_exact(total: Rational, weights: &[f64]) -> Vec<(usize, Rational)> {
    let sum: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if weights.is_empty() || sum <= 0.0 {
        return Vec::new();
    }
    let total_f = rate::to_f64(&total);
    let mut shares: Vec<(usize, Rational)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| (i, rate::from_kbps_f64(total_f * w / sum)))
        .collect();
    let assigned: Rational = shares.iter().map(|(_, r)| *r).sum();
    let largest = shares
        .iter()
        .enumerate()
        .fold(0, |b, (k, s)| if s.1 > shares[b].1 { k } else { b });
    shares[largest].1 += total - assigned;
    shares.retain(|(_, r)| *r > Rational::zero());
    shares
}

/// Rationalizes float paths so that their rates sum to exactly `total`.
pub fn rationalize(paths: &[FloatPath], total: Rational) -> Vec<(Vec<LinkId>, Rational)> {
    let weights: Vec<f64> = paths.iter().map(|p| p.rate).collect();
    split_exact(total, &weights)
        .into_iter()
        .map(|(i, r)| (paths[i].links.clone(), r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::NodeRole;

    fn diamond() -> NetworkGraph {
        NetworkGraph::builder()
            .node("s", NodeRole::Server)
            .node("u", NodeRole::Switch)
            .node("a", NodeRole::Switch)
            .node("b", NodeRole::Switch)
            .node("t", NodeRole::Switch)
            .kbps("s", "u", 10)
            .kbps("u", "a", 10)
            .kbps("u", "b", 10)
            .kbps("a", "t", 10)
            .kbps("b", "t", 10)
            .kbps("t", "a", 10)
            .build()
            .unwrap()
    }

    #[test]
    fn float_paths_cover_the_flow() {
        let g = diamond();
        let flows = BTreeMap::from([
            (LinkId(0), 5.0),
            (LinkId(1), 3.0),
            (LinkId(2), 2.0),
            (LinkId(3), 4.0),
            (LinkId(4), 2.0),
            (LinkId(5), 1.0),
        ]);
        let paths = decompose_float(&g, &flows, NodeId(0), NodeId(4));
        let total: f64 = paths.iter().map(|p| p.rate).sum();
        assert!((total - 5.0).abs() < 1e-12);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].rate, 3.0);
    }

    #[test]
    fn exact_split_sums_to_total() {
        let total = Rational::new(3250, 3);
        let shares = split_exact(total, &[1.0, 1.0, 1.0]);
        assert_eq!(shares.iter().map(|s| s.1).sum::<Rational>(), total);
        assert!(split_exact(total, &[]).is_empty());
        assert_eq!(split_exact(rate::int(5), &[0.0, 2.0]), vec![(1, rate::int(5))]);
    }
}
