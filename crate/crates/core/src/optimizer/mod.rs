//! Per-slot optimization: the layer/server/rate MILP, its LP relaxation
//! with a virtual server, and the flooring step that turns the relaxation
//! into a delivery plan.

mod bnb;
mod integerize;
mod milp;
mod relax;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use bnb::{solve_milp, Budget, SolveStatus};
pub use integerize::integerize;
pub use milp::{build_milp, milp_plan, MilpModel, MilpSolution};
pub use relax::{build_lp, solve_lp, LpModel, LpSolution};

use crate::error::{Error, Result};
use crate::flowsetup::paths::FloatPath;
use crate::netmodel::{LinkId, NodeId};
use crate::rate::Rational;

/// Objective weights shared by all clients. Per-client β live on the
/// client profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerWeights {
    pub alpha: f64,
    pub epsilon: f64,
    /// kbps that one unit of the traffic term stands for.
    pub traffic_unit: f64,
}

impl Default for OptimizerWeights {
    fn default() -> Self {
        OptimizerWeights { alpha: 1.0, epsilon: 0.1, traffic_unit: 8000.0 }
    }
}

impl OptimizerWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Validation("alpha must be >= 0".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Validation("epsilon must be >= 0".into()));
        }
        if !(self.traffic_unit.is_finite() && self.traffic_unit > 0.0) {
            return Err(Error::Validation("traffic unit must be positive".into()));
        }
        Ok(())
    }

    /// Objective coefficient of one kbps on one link.
    pub fn traffic_coef(&self) -> f64 {
        self.epsilon / self.traffic_unit
    }
}

/// QoE bookkeeping values read back from a solved model.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QoeValues {
    pub q: f64,
    pub t: Vec<f64>,
    pub i: Vec<f64>,
    pub n: Vec<f64>,
    pub nu: Vec<f64>,
}

/// A slice of one layer served by one server along float paths.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPart {
    pub layer: usize,
    pub server: NodeId,
    /// Kilobits carried by this part.
    pub size: Rational,
    pub paths: Vec<FloatPath>,
}

/// What one demand receives in this slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Grant {
    /// Index into `SlotInput::demands`.
    pub demand: usize,
    pub layers: usize,
    /// Seconds from the optimization instant to completion.
    pub duration: Rational,
    /// `true` when the duration exceeds the requested deadline.
    pub stretched: bool,
    pub parts: Vec<LayerPart>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeliveryPlan {
    /// One entry per demand, in demand order.
    pub grants: Vec<Grant>,
    pub warnings: Vec<String>,
}

impl DeliveryPlan {
    pub fn layers(&self) -> Vec<usize> {
        self.grants.iter().map(|g| g.layers).collect()
    }

    /// Float rates per physical link summed over every part.
    pub fn link_load(&self) -> BTreeMap<LinkId, f64> {
        let mut load = BTreeMap::new();
        for g in &self.grants {
            for p in &g.parts {
                for path in &p.paths {
                    for l in &path.links {
                        *load.entry(*l).or_insert(0.0) += path.rate;
                    }
                }
            }
        }
        load
    }
}

/// Wall time and search statistics of one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub wall: Duration,
    pub nodes: usize,
    pub lp_solves: usize,
}
