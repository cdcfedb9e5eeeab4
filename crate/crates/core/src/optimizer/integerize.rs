//! Flooring the relaxation into whole layers and assigning them to the
//! servers that carry the client's aggregate flow.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::flowsetup::paths::{decompose_float, FloatPath, FLOW_EPS};
use crate::netmodel::{LinkId, NetworkGraph, NodeId};
use crate::optimizer::relax::LpSolution;
use crate::optimizer::{DeliveryPlan, Grant, LayerPart};
use crate::rate::{self, Rational};
use crate::slot::SlotInput;

/// Added to χ before flooring so that 2.9999999 counts as 3.
const FLOOR_TOL: f64 = 1e-7;
/// Link utilisation above 1 + this triggers a stretched deadline.
const OVERLOAD_TOL: f64 = 1e-9;
/// Stretched durations are rounded up to this many parts of a second.
const DURATION_DEN: i128 = 1_000_000;

struct ServerShare {
    server: NodeId,
    paths: Vec<FloatPath>,
    /// Kilobits this server carries for the client.
    total: f64,
    residual: f64,
}

fn shares_for(
    flows: &BTreeMap<LinkId, f64>,
    aug: &NetworkGraph,
    vs: NodeId,
    sink: NodeId,
    scale: f64,
    theta: f64,
) -> Vec<ServerShare> {
    let mut by_server: BTreeMap<NodeId, Vec<FloatPath>> = BTreeMap::new();
    for p in decompose_float(aug, flows, vs, sink) {
        let Some(server) = p.first_hop(aug) else { continue };
        let links = p.links[1..].to_vec();
        by_server.entry(server).or_default().push(FloatPath { links, rate: p.rate * scale });
    }
    by_server
        .into_iter()
        .map(|(server, paths)| {
            let total = paths.iter().map(|p| p.rate).sum::<f64>() * theta;
            ServerShare { server, paths, total, residual: total }
        })
        .collect()
}

/// Splits layer `l` over the holders with the most residual volume.
/// Returns `None` when the holders cannot cover it.
fn assign_layer(shares: &mut [ServerShare], holders: &[NodeId], size: Rational) -> Option<Vec<(usize, Rational)>> {
    let need = rate::to_f64(&size);
    let tol = 1e-6 * need.max(1.0);
    let mut order: Vec<usize> = (0..shares.len())
        .filter(|&k| holders.contains(&shares[k].server) && shares[k].residual > tol)
        .collect();
    let avail: f64 = order.iter().map(|&k| shares[k].residual).sum();
    if avail + tol < need {
        return None;
    }
    order.sort_by(|&a, &b| {
        shares[b]
            .residual
            .total_cmp(&shares[a].residual)
            .then(shares[a].server.cmp(&shares[b].server))
    });
    let mut parts = Vec::new();
    let mut assigned = Rational::zero();
    let mut left = need;
    for k in order {
        let take = shares[k].residual.min(left);
        if left - take <= tol {
            shares[k].residual = (shares[k].residual - left).max(0.0);
            parts.push((k, size - assigned));
            return Some(parts);
        }
        let exact = rate::from_kbps_f64(take);
        if exact.is_zero() {
            continue;
        }
        shares[k].residual -= take;
        left -= take;
        assigned += exact;
        parts.push((k, exact));
    }
    // only reachable through rounding at the tolerance boundary
    let (k, last) = parts.pop()?;
    parts.push((k, last + size - assigned));
    Some(parts)
}

/// Floors each client's χ, splits its aggregate flow per serving server and
/// assigns layers to servers. Deadlines are stretched where the scaled flows
/// overload a link.
pub fn integerize(sol: &LpSolution, input: &SlotInput, aug: &NetworkGraph) -> Result<DeliveryPlan> {
    let vs = aug
        .virtual_server()
        .ok_or_else(|| Error::Model("relaxation needs a graph with a virtual server".into()))?;
    if sol.chi.len() != input.demands.len() || sol.flows.len() != input.demands.len() {
        return Err(Error::Model("relaxation solution does not match the slot input".into()));
    }
    let mut plan = DeliveryPlan::default();
    for (c, d) in input.demands.iter().enumerate() {
        let chi = sol.chi[c];
        let x = ((chi + FLOOR_TOL).floor().max(0.0) as usize).min(d.m);
        let mut grant = Grant { demand: c, layers: 0, duration: d.theta, stretched: false, parts: Vec::new() };
        if x == 0 {
            plan.grants.push(grant);
            continue;
        }
        let theta = rate::to_f64(&d.theta);
        let scale = rate::to_f64(&d.prefix_size(x)) / (rate::to_f64(&d.avg_size()) * chi);
        let mut shares = shares_for(&sol.flows[c], aug, vs, d.switch, scale, theta);
        if shares.is_empty() {
            return Err(Error::Solver(format!("client `{}` has χ = {chi:.6} but no flow", d.client_name)));
        }
        let mut pieces: Vec<(usize, usize, Rational)> = Vec::new();
        for l in 1..=x {
            match assign_layer(&mut shares, &d.holders[l - 1], d.sizes[l - 1]) {
                Some(parts) => {
                    pieces.extend(parts.into_iter().map(|(k, sz)| (l, k, sz)));
                    grant.layers = l;
                }
                None => {
                    let msg = format!(
                        "slot {}: `{}` drops layers {l}..={x}; serving servers do not hold enough of layer {l}",
                        input.slot, d.client_name
                    );
                    log::warn!("{msg}");
                    plan.warnings.push(msg);
                    break;
                }
            }
        }
        for (layer, k, size) in pieces {
            let s = &shares[k];
            let frac = rate::to_f64(&size) / s.total;
            let paths = s
                .paths
                .iter()
                .map(|p| FloatPath { links: p.links.clone(), rate: p.rate * frac })
                .filter(|p| p.rate > FLOW_EPS)
                .collect();
            grant.parts.push(LayerPart { layer, server: s.server, size, paths });
        }
        plan.grants.push(grant);
    }
    stretch(&mut plan, input);
    Ok(plan)
}

fn stretch(plan: &mut DeliveryPlan, input: &SlotInput) {
    let load = plan.link_load();
    let rho: BTreeMap<LinkId, f64> = load
        .iter()
        .filter(|(_, v)| **v > FLOW_EPS)
        .filter_map(|(l, v)| {
            let cap = input.snapshot.get(*l).finite()?;
            let cap = rate::to_f64(&cap);
            let r = if cap > 0.0 { v / cap } else { f64::INFINITY };
            (r > 1.0 + OVERLOAD_TOL).then_some((*l, r))
        })
        .collect();
    if rho.is_empty() {
        return;
    }
    for g in &mut plan.grants {
        let f = g
            .parts
            .iter()
            .flat_map(|p| p.paths.iter())
            .flat_map(|p| p.links.iter())
            .filter_map(|l| rho.get(l).copied())
            .fold(1.0f64, f64::max);
        if f <= 1.0 || !f.is_finite() {
            continue;
        }
        let theta = g.duration;
        let secs = rate::to_f64(&theta) * f;
        let duration = Rational::new((secs * DURATION_DEN as f64).ceil() as i128, DURATION_DEN).max(theta);
        let shrink = rate::to_f64(&theta) / rate::to_f64(&duration);
        for p in &mut g.parts {
            for path in &mut p.paths {
                path.rate *= shrink;
            }
        }
        let d = &input.demands[g.demand];
        let msg = format!(
            "slot {}: `{}` delivery stretched from {}s to {}s (link load {:.4}x capacity)",
            input.slot,
            d.client_name,
            rate::fmt_exact(&theta),
            rate::to_f64(&duration),
            f
        );
        log::warn!("{msg}");
        plan.warnings.push(msg);
        g.duration = duration;
        g.stretched = true;
    }
}
