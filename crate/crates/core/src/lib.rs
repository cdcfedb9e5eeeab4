//! Centralized rate control for layered (SVC) HTTP adaptive streaming.
//!
//! The crate simulates a software-defined network in which a controller
//! gathers DASH segment requests once per time slot, jointly picks serving
//! servers, SVC layer counts and multi-path link rates by solving a
//! mixed-integer program (or its LP relaxation), splits the chosen link
//! rates into tagged single-path sub-flows, and replays delivery against
//! client playout buffers.
//!
//! Module map:
//!
//! * [`netmodel`]: topology graph, capacity snapshots, virtual-server augmentation.
//! * [`catalog`]: per-segment layer sizes, quality table, server availability.
//! * [`slot`]: request gathering, client histories, QoE normalizers.
//! * [`optimizer`]: MILP and LP relaxation builders, branch-and-bound, flooring.
//! * [`flowsetup`]: base-rate decomposition, tags, switch rules.
//! * [`clientsim`]: playout buffers, start-up delay and stall detection.
//! * [`metrics`]: slot and run reports, fairness index, solver comparison.
//! * [`runner`]: scenario files, the slot loop, sweeps and SVG charts.

pub mod catalog;
pub mod clientsim;
pub mod error;
pub mod flowsetup;
pub mod lp;
pub mod metrics;
pub mod netmodel;
pub mod optimizer;
pub mod rate;
pub mod runner;
pub mod slot;

pub use error::{Error, Result};
pub use rate::Rational;
