//! Request admission, per-client QoE history and the per-slot optimizer input.
//!
//! Slot `k` starts at `k * tau`. A request that arrives in
//! `[(k - 1) * tau, k * tau)` is gathered during slot `k - 1` and optimized
//! at the start of slot `k`.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::netmodel::{CapacitySnapshot, NetworkGraph, NodeId, NodeRole};
use crate::rate::{self, Rational};

/// Per-client objective weights on I, N and T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub intensity: f64,
    pub switches: f64,
    pub quality: f64,
}

impl Default for Beta {
    fn default() -> Self {
        Beta { intensity: 0.2, switches: 0.2, quality: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientProfile {
    pub name: String,
    pub node: NodeId,
    pub switch: NodeId,
    pub video: String,
    /// Highest layer count the client can use.
    pub max_layers: usize,
    /// Delivery deadline, seconds.
    pub theta: Rational,
    pub join_slot: usize,
    pub beta: Beta,
}

impl ClientProfile {
    pub fn validate(&self) -> Result<()> {
        if self.max_layers == 0 {
            return Err(Error::Validation(format!("client `{}`: max layers must be at least 1", self.name)));
        }
        if !rate::is_positive(&self.theta) {
            return Err(Error::Validation(format!("client `{}`: theta must be positive", self.name)));
        }
        if self.join_slot == 0 {
            return Err(Error::Validation(format!("client `{}`: join slot is 1-based", self.name)));
        }
        for (what, v) in [
            ("beta1", self.beta.intensity),
            ("beta2", self.beta.switches),
            ("beta3", self.beta.quality),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!("client `{}`: {what} must be >= 0", self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    /// Index into the scenario's client list.
    pub client: usize,
    pub video: String,
    pub segment: usize,
    pub max_layers: usize,
    pub theta: Rational,
    /// Seconds.
    pub arrival: Rational,
}

/// Hands out run-unique request ids.
#[derive(Debug, Default, Clone)]
pub struct RequestIds {
    next: u64,
}

impl RequestIds {
    pub fn issue(&mut self, profile_index: usize, profile: &ClientProfile, segment: usize, arrival: Rational) -> Request {
        self.next += 1;
        Request {
            id: self.next,
            client: profile_index,
            video: profile.video.clone(),
            segment,
            max_layers: profile.max_layers,
            theta: profile.theta,
            arrival,
        }
    }
}

/// Running QoE accumulators of one client.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClientHistory {
    /// Total layers received.
    pub lambda: u64,
    /// Total switch intensity.
    pub mu: u64,
    /// Total switch count.
    pub nu: u64,
    /// Layers received for the previous segment.
    pub last: u64,
    /// Segments requested so far.
    pub phi: u64,
}

impl ClientHistory {
    /// No segment has been answered yet.
    pub fn is_fresh(&self) -> bool {
        self.phi == 0
    }
}

/// Folds one answered request into the history. The first answer sets the
/// reference layer count without counting a switch.
pub fn update_history(h: &ClientHistory, delivered: u64) -> ClientHistory {
    let mut n = *h;
    n.lambda += delivered;
    if !h.is_fresh() {
        n.mu += delivered.abs_diff(h.last);
        n.nu += u64::from(delivered != h.last);
    }
    n.last = delivered;
    n.phi += 1;
    n
}

/// Largest deadline that keeps the buffer ahead of playout.
pub fn stall_safe_deadline(segment_duration: Rational, tau: Rational) -> Result<Rational> {
    if tau >= segment_duration {
        return Err(Error::Validation(format!(
            "slot length {} s must be shorter than the segment duration {} s",
            rate::fmt_exact(&tau),
            rate::fmt_exact(&segment_duration)
        )));
    }
    Ok(segment_duration - tau)
}

/// Start time of slot `k`.
pub fn slot_start(k: usize, tau: Rational) -> Rational {
    tau * rate::int(k as i128)
}

/// First slot whose start is strictly after `arrival`.
pub fn slot_for_arrival(arrival: Rational, tau: Rational) -> usize {
    let q = (arrival / tau).floor();
    q.to_integer().to_usize().unwrap_or(0) + 1
}

/// One gathered request, resolved against topology and catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub request: Request,
    pub client_name: String,
    pub client_node: NodeId,
    /// Client-side switch: the flow sink.
    pub switch: NodeId,
    pub m: usize,
    pub theta: Rational,
    pub beta: Beta,
    /// History before this request.
    pub history: ClientHistory,
    /// δ for layers `1..=m`, kilobits.
    pub sizes: Vec<Rational>,
    /// Servers holding each layer `1..=m`, ascending id.
    pub holders: Vec<Vec<NodeId>>,
}

impl Demand {
    /// Segments requested including this one.
    pub fn phi(&self) -> u64 {
        self.history.phi + 1
    }

    pub fn avg_size(&self) -> Rational {
        self.sizes.iter().copied().sum::<Rational>() / rate::int(self.m as i128)
    }

    pub fn prefix_size(&self, x: usize) -> Rational {
        self.sizes[..x.min(self.m)].iter().copied().sum()
    }

    pub fn is_fresh(&self) -> bool {
        self.history.is_fresh()
    }

    pub fn holds(&self, server: NodeId, layer: usize) -> bool {
        self.holders[layer - 1].binary_search(&server).is_ok()
    }
}

/// Everything the optimizer needs for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotInput {
    pub slot: usize,
    pub time: Rational,
    /// Ordered by client index.
    pub demands: Vec<Demand>,
    /// Servers holding at least one requested layer, ascending.
    pub servers: Vec<NodeId>,
    /// Client-side switches with at least one demand, ascending.
    pub sinks: Vec<NodeId>,
    pub snapshot: CapacitySnapshot,
    pub t_max: u64,
    pub i_max: u64,
    pub n_max: u64,
}

impl SlotInput {
    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }
}

/// Batches requests that arrived before the slot starts.
///
/// `pending` may contain requests for later slots; only those with
/// `arrival < slot_start` are taken. `histories` is indexed by client.
#[allow(clippy::too_many_arguments)]
pub fn gather(
    slot: usize,
    slot_time: Rational,
    pending: &[Request],
    profiles: &[ClientProfile],
    histories: &[ClientHistory],
    graph: &NetworkGraph,
    catalog: &Catalog,
    snapshot: CapacitySnapshot,
) -> Result<SlotInput> {
    let mut demands = Vec::new();
    let mut seen_clients = BTreeSet::new();
    let mut taken: Vec<&Request> = pending.iter().filter(|r| r.arrival < slot_time).collect();
    taken.sort_by_key(|r| (r.client, r.id));
    for req in taken {
        let profile = profiles
            .get(req.client)
            .ok_or_else(|| Error::UnknownClient(format!("#{}", req.client)))?;
        if !seen_clients.insert(req.client) {
            return Err(Error::Validation(format!(
                "client `{}` has two outstanding requests in slot {slot}",
                profile.name
            )));
        }
        let video = catalog.video(&req.video)?;
        let layers = video.layer_count(req.segment)?;
        if req.max_layers > layers {
            return Err(Error::Validation(format!(
                "client `{}` asks for {} layers, segment {} has {layers}",
                profile.name, req.max_layers, req.segment
            )));
        }
        let m = req.max_layers;
        let sizes = (1..=m)
            .map(|l| video.layer_size(req.segment, l))
            .collect::<Result<Vec<_>>>()?;
        let mut holders = vec![Vec::new(); m];
        for s in graph.with_role(NodeRole::Server) {
            let k = video.max_available(graph.name(s), req.segment).min(m);
            for h in holders.iter_mut().take(k) {
                h.push(s);
            }
        }
        demands.push(Demand {
            request: req.clone(),
            client_name: profile.name.clone(),
            client_node: profile.node,
            switch: profile.switch,
            m,
            theta: req.theta,
            beta: profile.beta,
            history: histories.get(req.client).copied().unwrap_or_default(),
            sizes,
            holders,
        });
    }

    let servers: BTreeSet<NodeId> = demands.iter().flat_map(|d| d.holders.iter().flatten().copied()).collect();
    let sinks: BTreeSet<NodeId> = demands.iter().map(|d| d.switch).collect();
    let t_max = demands.iter().map(|d| d.history.lambda + d.m as u64).max().unwrap_or(1).max(1);
    let i_max = demands.iter().map(|d| d.history.mu + d.m as u64).max().unwrap_or(1).max(1);
    let n_max = demands.iter().map(|d| d.history.nu + 1).max().unwrap_or(1);

    Ok(SlotInput {
        slot,
        time: slot_time,
        demands,
        servers: servers.into_iter().collect(),
        sinks: sinks.into_iter().collect(),
        snapshot,
        t_max,
        i_max,
        n_max,
    })
}

/// Recomputes T, I, N for one demand from a granted layer count, using the
/// same formulas the optimizer encodes.
pub fn qoe_terms(d: &Demand, granted: u64, t_max: u64, i_max: u64, n_max: u64) -> (f64, f64, f64) {
    let phi = d.phi() as f64;
    let t = (d.history.lambda + granted) as f64 / (phi * t_max as f64);
    if d.is_fresh() {
        return (t, d.history.mu as f64 / (phi * i_max as f64), d.history.nu as f64 / (phi * n_max as f64));
    }
    let diff = granted.abs_diff(d.history.last);
    let i = (d.history.mu + diff) as f64 / (phi * i_max as f64);
    let n = (d.history.nu + u64::from(diff > 0)) as f64 / (phi * n_max as f64);
    (t, i, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_catalog;

    #[test]
    fn history_update_arithmetic() {
        let h = ClientHistory { lambda: 4, mu: 0, nu: 0, last: 4, phi: 1 };
        let n = update_history(&h, 2);
        assert_eq!(n, ClientHistory { lambda: 6, mu: 2, nu: 1, last: 2, phi: 2 });
        let same = update_history(&n, 2);
        assert_eq!((same.mu, same.nu), (2, 1));
    }

    #[test]
    fn first_segment_is_not_a_switch() {
        let n = update_history(&ClientHistory::default(), 3);
        assert_eq!(n, ClientHistory { lambda: 3, mu: 0, nu: 0, last: 3, phi: 1 });
    }

    #[test]
    fn oscillation_counts() {
        let mut h = ClientHistory::default();
        for x in [4, 2, 4] {
            h = update_history(&h, x);
        }
        assert_eq!((h.nu, h.mu), (2, 4));
    }

    #[test]
    fn stall_safe_deadlines() {
        assert_eq!(stall_safe_deadline(rate::int(5), rate::int(2)).unwrap(), rate::int(3));
        assert_eq!(stall_safe_deadline(rate::int(10), rate::int(2)).unwrap(), rate::int(8));
        assert!(stall_safe_deadline(rate::int(5), rate::int(5)).is_err());
    }

    #[test]
    fn arrival_maps_to_next_slot_start() {
        let tau = rate::int(2);
        assert_eq!(slot_for_arrival(rate::int(0), tau), 1);
        assert_eq!(slot_for_arrival(Rational::new(39, 10), tau), 2);
        assert_eq!(slot_for_arrival(rate::int(4), tau), 3);
    }

    fn fixture() -> (NetworkGraph, Catalog, Vec<ClientProfile>) {
        let g = NetworkGraph::builder()
            .node("A", NodeRole::Server)
            .node("B", NodeRole::Server)
            .node("sw", NodeRole::Switch)
            .node("c1", NodeRole::Client)
            .node("c2", NodeRole::Client)
            .kbps("A", "sw", 8000)
            .kbps("B", "sw", 8000)
            .kbps("sw", "c1", 8000)
            .kbps("sw", "c2", 8000)
            .build()
            .unwrap();
        let cat = load_catalog(
            r#"{"id": "v", "segment_duration_s": 5,
                "layers": [{"cumulative_kbps": 650, "quality": [0.8]}, {"cumulative_kbps": 1100, "quality": [0.9]}],
                "availability": {"A": 2}}"#,
        )
        .unwrap();
        let profile = |name: &str, m| ClientProfile {
            name: name.into(),
            node: g.node_by_name(name).unwrap(),
            switch: g.node_by_name("sw").unwrap(),
            video: "v".into(),
            max_layers: m,
            theta: rate::int(1),
            join_slot: 1,
            beta: Beta::default(),
        };
        let profiles = vec![profile("c1", 2), profile("c2", 1)];
        (g, cat, profiles)
    }

    #[test]
    fn gather_batches_and_normalizes() {
        let (g, cat, profiles) = fixture();
        let mut ids = RequestIds::default();
        let pending = vec![
            ids.issue(0, &profiles[0], 1, rate::int(1)),
            ids.issue(1, &profiles[1], 1, rate::int(3)),
        ];
        let hist = vec![ClientHistory::default(); 2];
        let snap = CapacitySnapshot::of(&g);
        let input = gather(1, rate::int(2), &pending, &profiles, &hist, &g, &cat, snap.clone()).unwrap();
        assert_eq!(input.demands.len(), 1);
        assert_eq!(input.t_max, 2);
        assert_eq!(input.servers, vec![g.node_by_name("A").unwrap()]);
        assert_eq!(input.demands[0].sizes, vec![rate::int(3250), rate::int(2250)]);

        let empty = gather(1, rate::int(0), &pending, &profiles, &hist, &g, &cat, snap.clone()).unwrap();
        assert!(empty.is_empty());

        let mut bad = pending.clone();
        bad[0].segment = 9;
        assert!(matches!(
            gather(1, rate::int(2), &bad, &profiles, &hist, &g, &cat, snap.clone()),
            Err(Error::UnknownSegment { .. })
        ));
        bad[0].client = 7;
        assert!(matches!(
            gather(1, rate::int(2), &bad, &profiles, &hist, &g, &cat, snap),
            Err(Error::UnknownClient(_))
        ));
    }
}
