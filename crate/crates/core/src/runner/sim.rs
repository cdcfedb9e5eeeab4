//! The slot loop: gather, optimize, decompose, deliver, play out, report.

use std::collections::BTreeMap;

use num_traits::Zero;
use web_time::Instant;

use crate::clientsim::{ClientState, DeliveryEvent};
use crate::error::{Error, Result};
use crate::flowsetup::paths::rationalize;
use crate::flowsetup::{emit_rules, plan_flow, FlowRule, RateGraph, ServerDirective};
use crate::metrics::{ClientSlot, SlotReport};
use crate::netmodel::{augment_virtual_server, snapshot_bandwidth, Capacity, LinkId, NodeRole};
use crate::optimizer::{
    build_lp, build_milp, integerize, milp_plan, solve_lp, solve_milp, DeliveryPlan, QoeValues, SolveStatus,
};
use crate::rate::{self, Rational};
use crate::runner::scenario::{LoadedScenario, SolverKind};
use crate::slot::{gather, update_history, ClientHistory, Request, RequestIds, SlotInput};

/// Everything a run produced, in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solver: SolverKind,
    pub reports: Vec<SlotReport>,
    pub clients: Vec<ClientState>,
    /// `(slot, rule)` in emission order.
    pub rules: Vec<(usize, FlowRule)>,
    pub directives: Vec<(usize, ServerDirective)>,
    pub warnings: Vec<String>,
    /// Some slot hit the branch-and-bound budget.
    pub timed_out: bool,
}

impl RunOutcome {
    pub fn total_stalls(&self) -> usize {
        self.clients.iter().map(ClientState::stall_count).sum()
    }
}

struct Solved {
    plan: DeliveryPlan,
    objective: f64,
    status: SolveStatus,
    qoe: QoeValues,
    nodes: usize,
    lp_solves: usize,
}

fn solve_slot(ls: &LoadedScenario, input: &SlotInput, solver: SolverKind) -> Result<Solved> {
    match solver {
        SolverKind::Milp => {
            let mm = build_milp(input, &ls.graph, &ls.weights)?;
            let sol = solve_milp(&mm, &ls.budget)?;
            let plan = milp_plan(&sol, input, &ls.graph)?;
            Ok(Solved {
                plan,
                objective: sol.objective,
                status: sol.status,
                qoe: sol.qoe,
                nodes: sol.stats.nodes,
                lp_solves: sol.stats.lp_solves,
            })
        }
        SolverKind::Lp => {
            // every server gets a virtual link; non-holders' links carry nothing
            let servers: Vec<_> = ls.graph.with_role(NodeRole::Server).collect();
            let aug = augment_virtual_server(&ls.graph, &servers)?;
            let mut input = input.clone();
            input.snapshot = input.snapshot.extended_to(&aug);
            let lm = build_lp(&input, &aug, &ls.weights)?;
            let sol = solve_lp(&lm)?;
            let plan = integerize(&sol, &input, &aug)?;
            Ok(Solved {
                plan,
                objective: sol.objective,
                status: SolveStatus::Optimal,
                qoe: sol.qoe,
                nodes: 0,
                lp_solves: sol.stats.lp_solves,
            })
        }
    }
}

struct InFlight {
    until: Rational,
    rates: BTreeMap<LinkId, Rational>,
}

/// Runs the scenario with the given solver.
pub fn simulate(ls: &LoadedScenario, solver: SolverKind) -> Result<RunOutcome> {
    let tau = ls.tau;
    let mut clients = Vec::new();
    for (k, p) in ls.profiles.iter().enumerate() {
        let v = ls.catalog.video(&p.video)?;
        clients.push(ClientState::new(k, p.clone(), v.segments(), v.segment_duration, tau, ls.phases[k])?);
    }
    let mut histories = vec![ClientHistory::default(); clients.len()];
    let mut ids = RequestIds::default();
    let mut pending: Vec<Request> = Vec::new();
    let mut in_flight: Vec<InFlight> = Vec::new();
    let mut out = RunOutcome {
        solver,
        reports: Vec::new(),
        clients: Vec::new(),
        rules: Vec::new(),
        directives: Vec::new(),
        warnings: Vec::new(),
        timed_out: false,
    };
    let max_join = ls.profiles.iter().map(|p| p.join_slot).max().unwrap_or(1);
    let max_segments = clients.iter().map(|c| c.segments).max().unwrap_or(0);
    let limit = ls.scenario.slots.unwrap_or(max_join + 4 * max_segments + 8);

    let mut k = 1;
    loop {
        if clients.iter().all(ClientState::fetched_all) {
            break;
        }
        if k > limit {
            if ls.scenario.slots.is_some() {
                out.warnings.push(format!("stopped after {limit} slots with segments outstanding"));
                break;
            }
            return Err(Error::Model(format!("run did not finish within {limit} slots")));
        }
        let now = rate::int(k as i128) * tau;
        for c in &mut clients {
            c.advance(now);
            if let Some(r) = c.next_request(now, &mut ids) {
                pending.push(r);
            }
        }
        in_flight.retain(|f| f.until > now);
        let snapshot = {
            let mut used: BTreeMap<LinkId, Rational> = BTreeMap::new();
            for f in &in_flight {
                for (l, r) in &f.rates {
                    *used.entry(*l).or_insert_with(Rational::zero) += *r;
                }
            }
            // rationalized tag rates may overshoot a capacity by a few bps
            for (l, u) in used.iter_mut() {
                if let Capacity::Finite(c) = ls.graph.link(*l).capacity {
                    *u = (*u).min(c);
                }
            }
            snapshot_bandwidth(&ls.graph, &used).map_err(|e| e.in_slot(k))?
        };
        let input = gather(k, now, &pending, &ls.profiles, &histories, &ls.graph, &ls.catalog, snapshot)
            .map_err(|e| e.in_slot(k))?;
        let mut report = SlotReport::empty(k, now);
        if input.is_empty() {
            out.reports.push(report);
            k += 1;
            continue;
        }

        let start = Instant::now();
        let solved = solve_slot(ls, &input, solver).map_err(|e| e.in_slot(k))?;
        report.wall = start.elapsed();
        report.objective = Some(solved.objective);
        report.status = Some(solved.status);
        report.nodes = solved.nodes;
        report.lp_solves = solved.lp_solves;
        report.q = solved.qoe.q;
        report.t_max = input.t_max;
        report.i_max = input.i_max;
        report.n_max = input.n_max;
        report.warnings = solved.plan.warnings.clone();
        out.timed_out |= solved.status == SolveStatus::TimedOut;
        out.warnings.extend(solved.plan.warnings.iter().map(|w| w.to_string()));

        for g in &solved.plan.grants {
            let d = &input.demands[g.demand];
            let ci = d.request.client;
            let mut tag = 1u32;
            let mut rates: BTreeMap<LinkId, Rational> = BTreeMap::new();
            for part in &g.parts {
                let total = part.size / g.duration;
                let exact = rationalize(&part.paths, total);
                let mut rg = RateGraph::from_paths(&ls.graph, &exact, part.server, d.switch)
                    .map_err(|e| e.in_slot(k))?;
                rg.cancel_cycles();
                let (_, plan) = plan_flow(&rg, g.duration, tag).map_err(|e| e.in_slot(k))?;
                tag += plan.tags.len() as u32;
                report.sent_kb += plan.total_size();
                for (l, r) in plan.link_rates() {
                    *rates.entry(l).or_insert_with(Rational::zero) += r;
                }
                let (rules, directive) = emit_rules(&plan, &ls.graph, d.request.id, part.layer, d.client_node);
                report.rules += rules.len();
                out.rules.extend(rules.into_iter().map(|r| (k, r)));
                out.directives.push((k, directive));
            }
            let v = ls.catalog.video(&d.request.video)?;
            report.clients.push(ClientSlot {
                client: ci,
                name: d.client_name.clone(),
                segment: d.request.segment,
                m: d.m,
                layers: g.layers,
                quality: v.quality_of(d.request.segment, g.layers),
                history: histories[ci],
                t: solved.qoe.t[g.demand],
                i: solved.qoe.i[g.demand],
                n: solved.qoe.n[g.demand],
                nu: solved.qoe.nu[g.demand],
                stretched: g.stretched,
            });
            histories[ci] = update_history(&histories[ci], g.layers as u64);
            if g.layers == 0 {
                clients[ci].zero_grant(now)?;
                continue;
            }
            pending.retain(|r| r.id != d.request.id);
            clients[ci].deliver(&DeliveryEvent {
                request: d.request.id,
                completion: now + g.duration,
                layers: g.layers,
                extended: g.stretched,
            })?;
            in_flight.push(InFlight { until: now + g.duration, rates });
        }
        out.reports.push(report);
        k += 1;
    }

    let end = clients
        .iter()
        .filter_map(ClientState::playout_end)
        .max()
        .unwrap_or_else(|| rate::int(k as i128) * tau);
    for c in &mut clients {
        c.advance(end);
    }
    out.clients = clients;
    Ok(out)
}
