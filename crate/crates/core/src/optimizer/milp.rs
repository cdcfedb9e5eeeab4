//! The joint server / layer / rate selection model.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::flowsetup::paths::decompose_float;
use crate::lp::{Cmp, Model, VarId};
use crate::netmodel::{Capacity, LinkId, NetworkGraph, NodeId};
use crate::optimizer::bnb::SolveStatus;
use crate::optimizer::{DeliveryPlan, Grant, LayerPart, OptimizerWeights, QoeValues, SolveStats};
use crate::rate;
use crate::slot::SlotInput;

/// Values at or above this count as a selected binary.
pub(crate) const ONE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub model: Model,
    /// `omega[c][l - 1][k]` for server `servers[k]`.
    pub omega: Vec<Vec<Vec<VarId>>>,
    /// `flow[c][l - 1][link]`.
    pub flow: Vec<Vec<Vec<VarId>>>,
    pub nu: Vec<VarId>,
    pub z: Vec<VarId>,
    pub t: Vec<VarId>,
    pub i: Vec<VarId>,
    pub n: Vec<VarId>,
    pub q: VarId,
    pub servers: Vec<NodeId>,
    /// Binaries in branching order: ν, then ω from the top layer down by
    /// (client, server).
    pub branch_order: Vec<VarId>,
}

fn client_rows(
    model: &mut Model,
    input: &SlotInput,
    c: usize,
    served: Vec<(VarId, f64)>,
    q: VarId,
) -> (VarId, VarId, VarId, VarId, VarId) {
    let d = &input.demands[c];
    let k = input.demands.len() as f64;
    let m = d.m as f64;
    let phi = d.phi() as f64;
    let h = d.history;
    let fresh = d.is_fresh();
    let zmax = if fresh { 0.0 } else { m.max(h.last as f64) };
    let t = model.add_var(format!("T_c{c}"), 0.0, 1.0, -d.beta.quality / k, false);
    let i = model.add_var(format!("I_c{c}"), 0.0, 1.0, d.beta.intensity / k, false);
    let n = model.add_var(format!("N_c{c}"), 0.0, 1.0, d.beta.switches / k, false);
    let z = model.add_var(format!("z_c{c}"), 0.0, zmax, 0.0, false);
    let nu = model.add_var(format!("nu_c{c}"), 0.0, if fresh { 0.0 } else { 1.0 }, 0.0, true);

    // (m - served) / m <= Q
    let mut row: Vec<(VarId, f64)> = served.iter().map(|(v, a)| (*v, -a)).collect();
    row.push((q, -m));
    model.add_row(format!("gap_c{c}"), row, Cmp::Le, -m);
    // (λ + served) / φ = T·Tmax
    let mut row = served.clone();
    row.push((t, -phi * input.t_max as f64));
    model.add_row(format!("quality_c{c}"), row, Cmp::Eq, -(h.lambda as f64));
    // z >= ±(served - last); the first answer has nothing to switch from
    if !fresh {
        let mut row = served.clone();
        row.iter_mut().for_each(|(_, a)| *a = -*a);
        row.push((z, 1.0));
        model.add_row(format!("absp_c{c}"), row, Cmp::Ge, -(h.last as f64));
        let mut row = served;
        row.push((z, 1.0));
        model.add_row(format!("absn_c{c}"), row, Cmp::Ge, h.last as f64);
    }
    // (μ + z) / φ <= I·Imax
    model.add_row(
        format!("intensity_c{c}"),
        vec![(z, 1.0), (i, -phi * input.i_max as f64)],
        Cmp::Le,
        -(h.mu as f64),
    );
    // z <= ν·m
    model.add_row(format!("trigger_c{c}"), vec![(z, 1.0), (nu, -m)], Cmp::Le, 0.0);
    // (ν̄ + ν) / φ <= N·Nmax
    model.add_row(
        format!("switches_c{c}"),
        vec![(nu, 1.0), (n, -phi * input.n_max as f64)],
        Cmp::Le,
        -(h.nu as f64),
    );
    (t, i, n, z, nu)
}

pub(crate) fn check_input(input: &SlotInput, graph: &NetworkGraph) -> Result<()> {
    if input.demands.is_empty() {
        return Err(Error::Model("no requests to optimize".into()));
    }
    if input.t_max == 0 || input.i_max == 0 || input.n_max == 0 {
        return Err(Error::Model("normalizers must be at least 1".into()));
    }
    if input.snapshot.len() < graph.links().len() {
        return Err(Error::Model("capacity snapshot does not cover the graph".into()));
    }
    for d in &input.demands {
        if d.switch.0 >= graph.nodes().len() {
            return Err(Error::Model(format!("client `{}` attaches to an unknown node", d.client_name)));
        }
        if d.sizes.len() != d.m || d.holders.len() != d.m || d.m == 0 {
            return Err(Error::Model(format!("client `{}` has inconsistent layer data", d.client_name)));
        }
    }
    Ok(())
}

/// Builds the model for one slot.
pub fn build_milp(input: &SlotInput, graph: &NetworkGraph, weights: &OptimizerWeights) -> Result<MilpModel> {
    check_input(input, graph)?;
    weights.validate()?;
    let mut model = Model::new();
    let servers = input.servers.clone();
    let links = graph.links();
    let traffic = weights.traffic_coef();

    let mut omega = Vec::new();
    let mut flow = Vec::new();
    for (c, d) in input.demands.iter().enumerate() {
        let mut om_c = Vec::with_capacity(d.m);
        let mut fl_c = Vec::with_capacity(d.m);
        for l in 1..=d.m {
            let om: Vec<VarId> = servers
                .iter()
                .map(|&s| {
                    let hi = if d.holds(s, l) { 1.0 } else { 0.0 };
                    model.add_var(format!("w_c{c}_l{l}_{}", graph.name(s)), 0.0, hi, 0.0, true)
                })
                .collect();
            let fl: Vec<VarId> = links
                .iter()
                .map(|e| model.add_var(format!("t_c{c}_l{l}_e{}", e.id.0), 0.0, f64::INFINITY, traffic, false))
                .collect();
            om_c.push(om);
            fl_c.push(fl);
        }
        omega.push(om_c);
        flow.push(fl_c);
    }
    let q = model.add_var("Q", 0.0, 1.0, weights.alpha, false);

    let (mut nu, mut z, mut t, mut iv, mut n) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (c, d) in input.demands.iter().enumerate() {
        for l in 1..=d.m {
            let om = &omega[c][l - 1];
            model.add_row(
                format!("unique_c{c}_l{l}"),
                om.iter().map(|v| (*v, 1.0)).collect(),
                Cmp::Le,
                1.0,
            );
            if l < d.m {
                let mut row: Vec<(VarId, f64)> = omega[c][l].iter().map(|v| (*v, 1.0)).collect();
                row.extend(om.iter().map(|v| (*v, -1.0)));
                model.add_row(format!("prefix_c{c}_l{l}"), row, Cmp::Le, 0.0);
            }
            let src_rate = rate::to_f64(&(d.sizes[l - 1] / d.theta));
            for node in graph.nodes() {
                let mut row: Vec<(VarId, f64)> = Vec::new();
                for e in graph.out_links(node.id) {
                    row.push((flow[c][l - 1][e.0], 1.0));
                }
                for e in graph.in_links(node.id) {
                    row.push((flow[c][l - 1][e.0], -1.0));
                }
                if let Ok(k) = servers.binary_search(&node.id) {
                    row.push((om[k], -src_rate));
                }
                if node.id == d.switch {
                    row.extend(om.iter().map(|v| (*v, src_rate)));
                }
                if !row.is_empty() {
                    model.add_row(format!("flow_c{c}_l{l}_{}", node.name), row, Cmp::Eq, 0.0);
                }
            }
        }
        let served: Vec<(VarId, f64)> = omega[c].iter().flatten().map(|v| (*v, 1.0)).collect();
        let (tc, ic, nc, zc, nuc) = client_rows(&mut model, input, c, served, q);
        t.push(tc);
        iv.push(ic);
        n.push(nc);
        z.push(zc);
        nu.push(nuc);
    }
    // deciding the top layers first settles the capacity split early
    let mut branch_order = nu.clone();
    let depth = omega.iter().map(Vec::len).max().unwrap_or(0);
    for l in (0..depth).rev() {
        for om_c in &omega {
            if let Some(om) = om_c.get(l) {
                branch_order.extend(om.iter().copied());
            }
        }
    }

    for e in links {
        if let Capacity::Finite(cap) = input.snapshot.get(e.id) {
            let row: Vec<(VarId, f64)> = flow
                .iter()
                .flat_map(|fc| fc.iter().map(|fl| (fl[e.id.0], 1.0)))
                .collect();
            if !row.is_empty() {
                model.add_row(format!("cap_e{}", e.id.0), row, Cmp::Le, rate::to_f64(&cap));
            }
        }
    }

    Ok(MilpModel { model, omega, flow, nu, z, t, i: iv, n, q, servers, branch_order })
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Serving server per (client, layer); `None` when not served.
    pub selection: Vec<Vec<Option<NodeId>>>,
    /// Positive link rates per (client, layer), kbps.
    pub layer_rates: Vec<Vec<BTreeMap<LinkId, f64>>>,
    pub qoe: QoeValues,
    pub stats: SolveStats,
}

impl MilpSolution {
    /// Σω per client.
    pub fn granted(&self) -> Vec<usize> {
        self.selection.iter().map(|s| s.iter().filter(|x| x.is_some()).count()).collect()
    }
}

impl MilpModel {
    pub(crate) fn extract(&self, x: Vec<f64>, objective: f64, status: SolveStatus, stats: SolveStats) -> MilpSolution {
        let selection = self
            .omega
            .iter()
            .map(|oc| {
                oc.iter()
                    .map(|ol| ol.iter().position(|v| x[v.0] >= ONE).map(|k| self.servers[k]))
                    .collect()
            })
            .collect();
        let layer_rates = self
            .flow
            .iter()
            .map(|fc| {
                fc.iter()
                    .map(|fl| {
                        fl.iter()
                            .enumerate()
                            .filter(|(_, v)| x[v.0] > crate::flowsetup::paths::FLOW_EPS)
                            .map(|(k, v)| (LinkId(k), x[v.0]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let qoe = QoeValues {
            q: x[self.q.0],
            t: self.t.iter().map(|v| x[v.0]).collect(),
            i: self.i.iter().map(|v| x[v.0]).collect(),
            n: self.n.iter().map(|v| x[v.0]).collect(),
            nu: self.nu.iter().map(|v| x[v.0]).collect(),
        };
        MilpSolution { status, objective, x, selection, layer_rates, qoe, stats }
    }

    pub fn num_binaries(&self) -> usize {
        self.model.num_integer()
    }
}

/// Turns a MILP solution into a delivery plan: each served layer is one part
/// from its selected server, delivered within θ.
pub fn milp_plan(sol: &MilpSolution, input: &SlotInput, graph: &NetworkGraph) -> Result<DeliveryPlan> {
    let mut plan = DeliveryPlan::default();
    for (c, d) in input.demands.iter().enumerate() {
        let mut parts = Vec::new();
        let mut layers = 0;
        for (l, sel) in sol.selection[c].iter().enumerate() {
            let Some(server) = *sel else { break };
            let paths = decompose_float(graph, &sol.layer_rates[c][l], server, d.switch);
            if paths.is_empty() {
                return Err(Error::Solver(format!(
                    "layer {} of `{}` is selected but carries no flow",
                    l + 1,
                    d.client_name
                )));
            }
            parts.push(LayerPart { layer: l + 1, server, size: d.sizes[l], paths });
            layers += 1;
        }
        plan.grants.push(Grant { demand: c, layers, duration: d.theta, stretched: false, parts });
    }
    Ok(plan)
}
