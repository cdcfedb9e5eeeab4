//! Slot reports, end-of-run QoE summaries, the fairness index and the
//! MILP-versus-LP comparison.
//!
//! CSV layouts (column order is stable):
//!
//! * `slots.csv`: `slot,time_s,client,segment,m,layers,quality,T,I,N,nu,stretched,Q,variance,max_gap,f_index,sent_kb,rules`
//! * `summary.csv`: `client,startup_delay_s,stalls,segments,answers,zero_grants,avg_layers,avg_quality,switch_count,switch_intensity,avg_switches,avg_intensity`
//! * `compare.csv`: `slot,milp_objective,lp_objective,milp_layers,lp_layers,milp_kb,lp_kb`
//! * `timing.csv`: `slot,solver,wall_ms,nodes,lp_solves` (wall clock, not reproducible)

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use num_traits::Zero;
use serde::Serialize;

use crate::catalog::Catalog;
use crate::clientsim::ClientState;
use crate::error::{Error, Result};
use crate::optimizer::SolveStatus;
use crate::rate::{self, Rational};
use crate::slot::{update_history, ClientHistory};

/// `1 − 2σ/(max − min)` with the population standard deviation.
pub fn f_index(scores: &[f64], score_min: f64, score_max: f64) -> Result<f64> {
    if !(score_max > score_min) || !score_min.is_finite() || !score_max.is_finite() {
        return Err(Error::Validation(format!("degenerate score range [{score_min}, {score_max}]")));
    }
    if scores.is_empty() {
        return Err(Error::Validation("no scores".into()));
    }
    let slack = 1e-9 * (score_max - score_min);
    if let Some(s) = scores.iter().find(|s| !(**s >= score_min - slack && **s <= score_max + slack)) {
        return Err(Error::Validation(format!("score {s} outside [{score_min}, {score_max}]")));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok((1.0 - 2.0 * var.sqrt() / (score_max - score_min)).clamp(0.0, 1.0))
}

/// One client's line in a slot report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientSlot {
    pub client: usize,
    pub name: String,
    pub segment: usize,
    pub m: usize,
    pub layers: usize,
    pub quality: f64,
    /// History before this answer.
    pub history: ClientHistory,
    /// Solver values; for the relaxation they refer to χ.
    pub t: f64,
    pub i: f64,
    pub n: f64,
    pub nu: f64,
    pub stretched: bool,
}

impl ClientSlot {
    /// φ as used by the normalizers: answers so far including this one.
    pub fn phi(&self) -> u64 {
        self.history.phi + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotReport {
    pub slot: usize,
    #[serde(skip)]
    pub time: Rational,
    pub clients: Vec<ClientSlot>,
    pub q: f64,
    pub objective: Option<f64>,
    pub status: Option<SolveStatus>,
    pub t_max: u64,
    pub i_max: u64,
    pub n_max: u64,
    /// Kilobits scheduled in this slot, Σ over tags of rate × duration.
    #[serde(skip)]
    pub sent_kb: Rational,
    #[serde(skip)]
    pub wall: Duration,
    pub nodes: usize,
    pub lp_solves: usize,
    pub rules: usize,
    pub warnings: Vec<String>,
}

impl SlotReport {
    pub fn empty(slot: usize, time: Rational) -> Self {
        SlotReport {
            slot,
            time,
            clients: Vec::new(),
            q: 0.0,
            objective: None,
            status: None,
            t_max: 1,
            i_max: 1,
            n_max: 1,
            sent_kb: Rational::zero(),
            wall: Duration::ZERO,
            nodes: 0,
            lp_solves: 0,
            rules: 0,
            warnings: Vec::new(),
        }
    }

    pub fn requested(&self) -> usize {
        self.clients.iter().map(|c| c.m).sum()
    }

    pub fn delivered(&self) -> usize {
        self.clients.iter().map(|c| c.layers).sum()
    }

    pub fn under_delivered(&self) -> bool {
        self.delivered() < self.requested()
    }

    fn normalized(&self) -> Vec<f64> {
        self.clients.iter().map(|c| c.layers as f64 / c.m as f64).collect()
    }

    /// Population variance of x/m.
    pub fn variance(&self) -> f64 {
        let v = self.normalized();
        if v.is_empty() {
            return 0.0;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }

    /// max (m − x)/m.
    pub fn max_gap(&self) -> f64 {
        self.normalized().iter().map(|x| 1.0 - x).fold(0.0, f64::max)
    }

    /// F-index over clients that received at least one layer.
    pub fn f_index(&self, range: (f64, f64)) -> Option<f64> {
        let scores: Vec<f64> = self.clients.iter().filter(|c| c.layers > 0).map(|c| c.quality).collect();
        f_index(&scores, range.0, range.1).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientSummary {
    pub name: String,
    pub startup_delay: Option<f64>,
    pub stalls: usize,
    /// Segments received.
    pub segments: usize,
    /// Requests answered, zero grants included.
    pub answers: u64,
    pub zero_grants: u64,
    pub avg_layers: f64,
    pub avg_quality: f64,
    pub switch_count: u64,
    pub switch_intensity: u64,
    pub avg_switches: f64,
    pub avg_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QoEReport {
    pub clients: Vec<ClientSummary>,
    /// `(slot, F)`; `None` when no client was served.
    pub f_trace: Vec<(usize, Option<f64>)>,
}

/// Replays the quality, intensity and switch accumulators from the
/// answers logged in slot reports. Entry `[k][j]` is the history of client
/// `reports[k].clients[j]` after that answer.
pub fn replay_histories(reports: &[SlotReport], clients: usize) -> Vec<Vec<ClientHistory>> {
    let mut h = vec![ClientHistory::default(); clients];
    reports
        .iter()
        .map(|r| {
            r.clients
                .iter()
                .map(|c| {
                    h[c.client] = update_history(&h[c.client], c.layers as u64);
                    h[c.client]
                })
                .collect()
        })
        .collect()
}

/// Largest gap between the replayed accumulators and the solver's
/// T, I, N multiplied back by φ and the slot normalizers.
pub fn metric_consistency(reports: &[SlotReport], clients: usize) -> f64 {
    let replay = replay_histories(reports, clients);
    let mut worst = 0.0f64;
    for (r, hs) in reports.iter().zip(&replay) {
        for (c, h) in r.clients.iter().zip(hs) {
            let phi = c.phi() as f64;
            worst = worst
                .max((c.t * phi * r.t_max as f64 - h.lambda as f64).abs())
                .max((c.i * phi * r.i_max as f64 - h.mu as f64).abs())
                .max((c.n * phi * r.n_max as f64 - h.nu as f64).abs());
        }
    }
    worst
}

pub fn compile_run_report(reports: &[SlotReport], clients: &[ClientState], catalog: &Catalog) -> QoEReport {
    let replay = replay_histories(reports, clients.len());
    let mut last: BTreeMap<usize, ClientHistory> = BTreeMap::new();
    let mut zeros = vec![0u64; clients.len()];
    for (r, hs) in reports.iter().zip(&replay) {
        for (c, h) in r.clients.iter().zip(hs) {
            last.insert(c.client, *h);
            zeros[c.client] += u64::from(c.layers == 0);
        }
    }
    let range = catalog.quality_range();
    let summaries = clients
        .iter()
        .enumerate()
        .map(|(k, cs)| {
            let h = last.get(&k).copied().unwrap_or_default();
            let phi = h.phi.max(1) as f64;
            let quals: Vec<f64> = cs
                .buffer
                .iter()
                .map(|b| catalog.quality_of(&cs.profile.video, b.segment, b.layers))
                .collect();
            ClientSummary {
                name: cs.profile.name.clone(),
                startup_delay: cs.startup_delay.map(|d| rate::to_f64(&d)),
                stalls: cs.stall_count(),
                segments: cs.buffer.len(),
                answers: h.phi,
                zero_grants: zeros[k],
                avg_layers: h.lambda as f64 / phi,
                avg_quality: if quals.is_empty() { 0.0 } else { quals.iter().sum::<f64>() / quals.len() as f64 },
                switch_count: h.nu,
                switch_intensity: h.mu,
                avg_switches: h.nu as f64 / phi,
                avg_intensity: h.mu as f64 / phi,
            }
        })
        .collect();
    QoEReport { clients: summaries, f_trace: reports.iter().map(|r| (r.slot, r.f_index(range))).collect() }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt6(v: Option<f64>) -> String {
    v.map(f6).unwrap_or_default()
}

pub fn write_slots_csv<W: Write>(out: W, reports: &[SlotReport], range: (f64, f64)) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "slot", "time_s", "client", "segment", "m", "layers", "quality", "T", "I", "N", "nu", "stretched", "Q",
        "variance", "max_gap", "f_index", "sent_kb", "rules",
    ])?;
    for r in reports {
        let (var, gap, f) = (f6(r.variance()), f6(r.max_gap()), opt6(r.f_index(range)));
        for c in &r.clients {
            w.write_record([
                r.slot.to_string(),
                f6(rate::to_f64(&r.time)),
                c.name.clone(),
                c.segment.to_string(),
                c.m.to_string(),
                c.layers.to_string(),
                f6(c.quality),
                f6(c.t),
                f6(c.i),
                f6(c.n),
                f6(c.nu),
                c.stretched.to_string(),
                f6(r.q),
                var.clone(),
                gap.clone(),
                f.clone(),
                f6(rate::to_f64(&r.sent_kb)),
                r.rules.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("slots.csv", e))?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, report: &QoEReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "client",
        "startup_delay_s",
        "stalls",
        "segments",
        "answers",
        "zero_grants",
        "avg_layers",
        "avg_quality",
        "switch_count",
        "switch_intensity",
        "avg_switches",
        "avg_intensity",
    ])?;
    for c in &report.clients {
        w.write_record([
            c.name.clone(),
            opt6(c.startup_delay),
            c.stalls.to_string(),
            c.segments.to_string(),
            c.answers.to_string(),
            c.zero_grants.to_string(),
            f6(c.avg_layers),
            f6(c.avg_quality),
            c.switch_count.to_string(),
            c.switch_intensity.to_string(),
            f6(c.avg_switches),
            f6(c.avg_intensity),
        ])?;
    }
    w.flush().map_err(|e| Error::io("summary.csv", e))?;
    Ok(())
}

/// One slot of the MILP-versus-LP comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub slot: usize,
    pub milp_objective: Option<f64>,
    pub lp_objective: Option<f64>,
    pub milp_layers: usize,
    pub lp_layers: usize,
    pub milp_kb: f64,
    pub lp_kb: f64,
    #[serde(skip)]
    pub milp_wall: Duration,
    #[serde(skip)]
    pub lp_wall: Duration,
}

/// Pairs two runs of the same scenario slot by slot.
pub fn compare_solvers(milp: &[SlotReport], lp: &[SlotReport]) -> Vec<CompareRow> {
    let by_slot: BTreeMap<usize, &SlotReport> = lp.iter().map(|r| (r.slot, r)).collect();
    let mut slots: Vec<usize> = milp.iter().map(|r| r.slot).chain(lp.iter().map(|r| r.slot)).collect();
    slots.sort_unstable();
    slots.dedup();
    let m_by: BTreeMap<usize, &SlotReport> = milp.iter().map(|r| (r.slot, r)).collect();
    slots
        .into_iter()
        .map(|s| {
            let a = m_by.get(&s);
            let b = by_slot.get(&s);
            CompareRow {
                slot: s,
                milp_objective: a.and_then(|r| r.objective),
                lp_objective: b.and_then(|r| r.objective),
                milp_layers: a.map_or(0, |r| r.delivered()),
                lp_layers: b.map_or(0, |r| r.delivered()),
                milp_kb: a.map_or(0.0, |r| rate::to_f64(&r.sent_kb)),
                lp_kb: b.map_or(0.0, |r| rate::to_f64(&r.sent_kb)),
                milp_wall: a.map_or(Duration::ZERO, |r| r.wall),
                lp_wall: b.map_or(Duration::ZERO, |r| r.wall),
            }
        })
        .collect()
}

pub fn write_compare_csv<W: Write>(out: W, rows: &[CompareRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "milp_objective", "lp_objective", "milp_layers", "lp_layers", "milp_kb", "lp_kb"])?;
    for r in rows {
        w.write_record([
            r.slot.to_string(),
            opt6(r.milp_objective),
            opt6(r.lp_objective),
            r.milp_layers.to_string(),
            r.lp_layers.to_string(),
            f6(r.milp_kb),
            f6(r.lp_kb),
        ])?;
    }
    w.flush().map_err(|e| Error::io("compare.csv", e))?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(out: W, solver: &str, reports: &[SlotReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "solver", "wall_ms", "nodes", "lp_solves"])?;
    for r in reports.iter().filter(|r| r.objective.is_some()) {
        w.write_record([
            r.slot.to_string(),
            solver.to_string(),
            format!("{:.3}", r.wall.as_secs_f64() * 1e3),
            r.nodes.to_string(),
            r.lp_solves.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("timing.csv", e))?;
    Ok(())
}
