//! Best-bound branch-and-bound over the model's binaries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Duration;

use serde::Serialize;
use web_time::Instant;

use crate::error::{Error, Result};
use crate::lp::{Model, VarId, WarmLp};
use crate::optimizer::milp::{MilpModel, MilpSolution};
use crate::optimizer::SolveStats;

/// Fractional part above which a binary is branched on.
const INT_TOL: f64 = 1e-6;
/// Nodes whose bound is within this of the incumbent are pruned.
const PRUNE_TOL: f64 = 1e-9;
/// Open nodes that keep their simplex state; the rest keep only their
/// fixings and are re-solved when popped.
const MAX_WARM: usize = 256;
/// A rounding dive runs at the root and then every this many nodes.
const DIVE_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Search stopped early; the solution is the best incumbent found.
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_nodes: 100_000, time_limit: Some(Duration::from_secs(60)) }
    }
}

struct Node {
    bound: f64,
    seq: u64,
    fixed: Vec<(VarId, f64)>,
    lp: Option<WarmLp>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound, then oldest, on top
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

fn fractional(mm: &MilpModel, lp: &WarmLp) -> Option<(VarId, f64)> {
    mm.branch_order.iter().find_map(|&v| {
        let x = lp.value(v);
        ((x - x.round()).abs() > INT_TOL).then_some((v, x))
    })
}

/// The best solution that serves nothing: all ω = 0, ν set where the
/// client had layers last time.
fn all_zero_incumbent(mm: &MilpModel) -> Result<Option<WarmLp>> {
    let mut fixed: Vec<(VarId, f64)> = mm
        .omega
        .iter()
        .flatten()
        .flatten()
        .map(|v| (*v, 0.0))
        .collect();
    for (c, &nu) in mm.nu.iter().enumerate() {
        let spec = &mm.model.vars[nu.0];
        // z is pinned to the last layer count when nothing is served
        let z_hi = mm.model.vars[mm.z[c].0].hi;
        let val = if spec.hi > 0.0 && z_hi > 0.0 { 1.0 } else { 0.0 };
        fixed.push((nu, val));
    }
    WarmLp::solve_fixed(&mm.model, &fixed)
}

/// Rounds the binary nearest to integrality and re-solves until the point
/// is integral; tries the other value when a rounding is infeasible.
fn dive(mm: &MilpModel, start: &WarmLp, stats: &mut SolveStats) -> Result<Option<WarmLp>> {
    let model = &mm.model;
    let mut lp = start.clone();
    loop {
        let pick = mm
            .branch_order
            .iter()
            .map(|&v| (v, lp.value(v)))
            .filter(|(_, x)| (x - x.round()).abs() > INT_TOL)
            .min_by(|a, b| (a.1 - a.1.round()).abs().total_cmp(&(b.1 - b.1.round()).abs()));
        let Some((var, x)) = pick else {
            return Ok(Some(lp));
        };
        let first = x.round();
        let mut next = None;
        for val in [first, 1.0 - first] {
            stats.lp_solves += 1;
            if let Some(child) = lp.fix(model, var, val)? {
                next = Some(child);
                break;
            }
        }
        match next {
            Some(child) => lp = child,
            None => return Ok(None),
        }
    }
}

/// Re-solves a node that was stored without its simplex state, replaying
/// its fixings from the root if the cold solve hits a singular basis.
fn rebuild(model: &Model, root: &WarmLp, fixed: &[(VarId, f64)]) -> Result<Option<WarmLp>> {
    match WarmLp::solve_fixed(model, fixed) {
        Err(Error::Numerical(msg)) => {
            log::debug!("cold node solve failed ({msg}); replaying fixings from the root");
            let mut lp = root.clone();
            for &(v, val) in fixed {
                match lp.fix(model, v, val)? {
                    Some(next) => lp = next,
                    None => return Ok(None),
                }
            }
            Ok(Some(lp))
        }
        r => r,
    }
}

/// Solves the model exactly within the budget.
pub fn solve_milp(mm: &MilpModel, budget: &Budget) -> Result<MilpSolution> {
    let start = Instant::now();
    let mut stats = SolveStats::default();
    let model = &mm.model;

    let root = WarmLp::solve(model)?.ok_or_else(|| {
        Error::Solver("relaxation reported infeasible although serving nothing is always feasible".into())
    })?;
    stats.lp_solves += 1;

    let mut incumbent: Option<(f64, Vec<f64>)> = all_zero_incumbent(mm)?.map(|w| (w.objective(), w.point().x));
    stats.lp_solves += 1;
    let mut status = SolveStatus::Optimal;

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut warm = 1usize;
    let root_lp = root.clone();
    heap.push(Node { bound: root.objective(), seq, fixed: Vec::new(), lp: Some(root) });

    while let Some(node) = heap.pop() {
        let best = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
        if node.bound >= best - PRUNE_TOL {
            // best-first: nothing left can improve
            break;
        }
        let over_nodes = stats.nodes >= budget.max_nodes;
        let over_time = budget.time_limit.is_some_and(|t| start.elapsed() > t);
        if over_nodes || over_time {
            status = SolveStatus::TimedOut;
            log::warn!(
                "branch-and-bound stopped after {} nodes; returning incumbent (gap {:.3e})",
                stats.nodes,
                best - node.bound
            );
            break;
        }
        stats.nodes += 1;
        let lp = match node.lp {
            Some(lp) => {
                warm -= 1;
                lp
            }
            None => {
                stats.lp_solves += 1;
                match rebuild(model, &root_lp, &node.fixed)? {
                    Some(lp) => lp,
                    None => continue,
                }
            }
        };

        let Some((var, x)) = fractional(mm, &lp) else {
            incumbent = Some((lp.objective(), lp.point().x));
            continue;
        };
        if stats.nodes % DIVE_EVERY == 1 {
            let found = dive(mm, &lp, &mut stats)?;
            log::debug!(
                "node {}: bound {:.6}, dive {:?}",
                stats.nodes,
                lp.objective(),
                found.as_ref().map(WarmLp::objective)
            );
            if let Some(d) = found {
                if d.objective() < incumbent.as_ref().map_or(f64::INFINITY, |i| i.0) {
                    incumbent = Some((d.objective(), d.point().x));
                }
            }
        }
        let best = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
        for val in [x.floor(), x.ceil()] {
            stats.lp_solves += 1;
            if let Some(child) = lp.fix(model, var, val)? {
                if child.objective() < best - PRUNE_TOL {
                    seq += 1;
                    let fixed = child.fixed().to_vec();
                    let keep = warm < MAX_WARM;
                    warm += usize::from(keep);
                    heap.push(Node { bound: child.objective(), seq, fixed, lp: keep.then_some(child) });
                }
            }
        }
    }

    let (objective, mut x) = incumbent
        .ok_or_else(|| Error::Solver("no feasible assignment found".into()))?;
    for &v in &mm.branch_order {
        x[v.0] = x[v.0].round();
    }
    stats.wall = start.elapsed();
    Ok(mm.extract(x, objective, status, stats))
}
