//! LP relaxation: fractional quality χ per client, one aggregate flow per
//! client sourced at a virtual server joined to every real server.

use std::collections::BTreeMap;

use web_time::Instant;

use crate::error::{Error, Result};
use crate::flowsetup::paths::FLOW_EPS;
use crate::lp::{Cmp, Model, VarId, WarmLp};
use crate::netmodel::{Capacity, LinkId, NetworkGraph, NodeId};
use crate::optimizer::milp::check_input;
use crate::optimizer::{OptimizerWeights, QoeValues, SolveStats};
use crate::rate;
use crate::slot::SlotInput;

#[derive(Debug, Clone)]
pub struct LpModel {
    pub model: Model,
    pub chi: Vec<VarId>,
    /// `flow[c][link]` over the augmented graph.
    pub flow: Vec<Vec<VarId>>,
    pub nu: Vec<VarId>,
    pub z: Vec<VarId>,
    pub t: Vec<VarId>,
    pub i: Vec<VarId>,
    pub n: Vec<VarId>,
    pub q: VarId,
    pub virtual_server: NodeId,
}

/// Builds the relaxation on a graph produced by
/// [`crate::netmodel::augment_virtual_server`].
pub fn build_lp(input: &SlotInput, aug: &NetworkGraph, weights: &OptimizerWeights) -> Result<LpModel> {
    let vs = aug
        .virtual_server()
        .ok_or_else(|| Error::Model("relaxation needs a graph with a virtual server".into()))?;
    check_input(input, aug)?;
    weights.validate()?;
    let snapshot = input.snapshot.extended_to(aug);
    let traffic = weights.traffic_coef();
    let k = input.demands.len() as f64;
    let mut model = Model::new();

    let mut chi = Vec::new();
    let mut flow = Vec::new();
    for (c, d) in input.demands.iter().enumerate() {
        // layers held by at least one server form a prefix
        let reachable = d.holders.iter().take_while(|h| !h.is_empty()).count();
        chi.push(model.add_var(format!("chi_c{c}"), 0.0, reachable as f64, 0.0, false));
        let fl: Vec<VarId> = aug
            .links()
            .iter()
            .map(|e| {
                let from_virtual = e.from == vs;
                let hi = if from_virtual && !d.holders.iter().any(|h| h.contains(&e.to)) {
                    0.0
                } else {
                    f64::INFINITY
                };
                let obj = if from_virtual { 0.0 } else { traffic };
                model.add_var(format!("t_c{c}_e{}", e.id.0), 0.0, hi, obj, false)
            })
            .collect();
        flow.push(fl);
    }
    let q = model.add_var("Q", 0.0, 1.0, weights.alpha, false);

    let (mut nu, mut z, mut t, mut iv, mut n) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (c, d) in input.demands.iter().enumerate() {
        let src_rate = rate::to_f64(&(d.avg_size() / d.theta));
        for node in aug.nodes() {
            let mut row: Vec<(VarId, f64)> = Vec::new();
            for e in aug.out_links(node.id) {
                row.push((flow[c][e.0], 1.0));
            }
            for e in aug.in_links(node.id) {
                row.push((flow[c][e.0], -1.0));
            }
            if node.id == vs {
                row.push((chi[c], -src_rate));
            }
            if node.id == d.switch {
                row.push((chi[c], src_rate));
            }
            if !row.is_empty() {
                model.add_row(format!("flow_c{c}_{}", node.name), row, Cmp::Eq, 0.0);
            }
        }

        let m = d.m as f64;
        let phi = d.phi() as f64;
        let h = d.history;
        let fresh = d.is_fresh();
        let zmax = if fresh { 0.0 } else { m.max(h.last as f64) };
        let tc = model.add_var(format!("T_c{c}"), 0.0, 1.0, -d.beta.quality / k, false);
        let ic = model.add_var(format!("I_c{c}"), 0.0, 1.0, d.beta.intensity / k, false);
        let nc = model.add_var(format!("N_c{c}"), 0.0, 1.0, d.beta.switches / k, false);
        let zc = model.add_var(format!("z_c{c}"), 0.0, zmax, 0.0, false);
        let nuc = model.add_var(format!("nu_c{c}"), 0.0, if fresh { 0.0 } else { 1.0 }, 0.0, false);
        let x = chi[c];
        model.add_row(format!("gap_c{c}"), vec![(x, -1.0), (q, -m)], Cmp::Le, -m);
        model.add_row(
            format!("quality_c{c}"),
            vec![(x, 1.0), (tc, -phi * input.t_max as f64)],
            Cmp::Eq,
            -(h.lambda as f64),
        );
        if !fresh {
            model.add_row(format!("absp_c{c}"), vec![(zc, 1.0), (x, -1.0)], Cmp::Ge, -(h.last as f64));
            model.add_row(format!("absn_c{c}"), vec![(zc, 1.0), (x, 1.0)], Cmp::Ge, h.last as f64);
        }
        model.add_row(
            format!("intensity_c{c}"),
            vec![(zc, 1.0), (ic, -phi * input.i_max as f64)],
            Cmp::Le,
            -(h.mu as f64),
        );
        model.add_row(format!("trigger_c{c}"), vec![(zc, 1.0), (nuc, -m)], Cmp::Le, 0.0);
        model.add_row(
            format!("switches_c{c}"),
            vec![(nuc, 1.0), (nc, -phi * input.n_max as f64)],
            Cmp::Le,
            -(h.nu as f64),
        );
        t.push(tc);
        iv.push(ic);
        n.push(nc);
        z.push(zc);
        nu.push(nuc);
    }

    for e in aug.links() {
        if let Capacity::Finite(cap) = snapshot.get(e.id) {
            let row: Vec<(VarId, f64)> = flow.iter().map(|fc| (fc[e.id.0], 1.0)).collect();
            model.add_row(format!("cap_e{}", e.id.0), row, Cmp::Le, rate::to_f64(&cap));
        }
    }

    Ok(LpModel { model, chi, flow, nu, z, t, i: iv, n, q, virtual_server: vs })
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub chi: Vec<f64>,
    /// Positive aggregate rates per client on the augmented graph.
    pub flows: Vec<BTreeMap<LinkId, f64>>,
    pub qoe: QoeValues,
    pub stats: SolveStats,
}

pub fn solve_lp(lm: &LpModel) -> Result<LpSolution> {
    let start = Instant::now();
    let w = WarmLp::solve(&lm.model)?
        .ok_or_else(|| Error::Solver("relaxation reported infeasible although χ = 0 is feasible".into()))?;
    let p = w.point();
    let x = p.x;
    let flows = lm
        .flow
        .iter()
        .map(|fc| {
            fc.iter()
                .enumerate()
                .filter(|(_, v)| x[v.0] > FLOW_EPS)
                .map(|(k, v)| (LinkId(k), x[v.0]))
                .collect()
        })
        .collect();
    let qoe = QoeValues {
        q: x[lm.q.0],
        t: lm.t.iter().map(|v| x[v.0]).collect(),
        i: lm.i.iter().map(|v| x[v.0]).collect(),
        n: lm.n.iter().map(|v| x[v.0]).collect(),
        nu: lm.nu.iter().map(|v| x[v.0]).collect(),
    };
    Ok(LpSolution {
        objective: p.objective,
        chi: lm.chi.iter().map(|v| x[v.0]).collect(),
        flows,
        qoe,
        stats: SolveStats { wall: start.elapsed(), nodes: 0, lp_solves: 1 },
        x,
    })
}
