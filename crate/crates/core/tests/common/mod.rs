//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svcflow::catalog::load_catalog;
use svcflow::flowsetup::RateGraph;
use svcflow::netmodel::{load_topology, Capacity, CapacitySnapshot, LinkId, NetworkGraph, NodeId, NodeRole};
use svcflow::optimizer::OptimizerWeights;
use svcflow::rate::{self, Rational};
use svcflow::slot::{gather, Beta, ClientHistory, ClientProfile, RequestIds, SlotInput};

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn r(n: i128) -> Rational {
    rate::int(n)
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex, Bland's rule. Variables are all >= 0.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Default)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
}

const PIV: f64 = 1e-9;

impl DenseLp {
    pub fn new(n: usize) -> Self {
        DenseLp { c: vec![0.0; n], rows: Vec::new() }
    }

    pub fn row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut a = vec![0.0; self.c.len()];
        for &(j, v) in terms {
            a[j] += v;
        }
        self.rows.push((a, sense, rhs));
    }

    /// `None` when infeasible. Panics when unbounded.
    pub fn solve(&self) -> Option<(f64, Vec<f64>)> {
        let n = self.c.len();
        let m = self.rows.len();
        let mut rows: Vec<(Vec<f64>, Sense, f64)> = self.rows.clone();
        for (a, s, b) in rows.iter_mut() {
            if *b < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                *b = -*b;
                *s = match *s {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
        }
        let slacks = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let arts = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let width = n + slacks + arts;
        let mut t = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0usize; m];
        let mut is_art = vec![false; width];
        let (mut si, mut ai) = (n, n + slacks);
        for (i, (a, s, b)) in rows.iter().enumerate() {
            t[i][..n].copy_from_slice(a);
            t[i][width] = *b;
            match s {
                Sense::Le => {
                    t[i][si] = 1.0;
                    basis[i] = si;
                    si += 1;
                }
                Sense::Ge => {
                    t[i][si] = -1.0;
                    si += 1;
                    t[i][ai] = 1.0;
                    is_art[ai] = true;
                    basis[i] = ai;
                    ai += 1;
                }
                Sense::Eq => {
                    t[i][ai] = 1.0;
                    is_art[ai] = true;
                    basis[i] = ai;
                    ai += 1;
                }
            }
        }
        let phase1: Vec<f64> = (0..width).map(|j| if is_art[j] { 1.0 } else { 0.0 }).collect();
        run(&mut t, &mut basis, &phase1, &vec![false; width]);
        let infeas: f64 = (0..m).filter(|&i| is_art[basis[i]]).map(|i| t[i][width]).sum();
        if infeas > 1e-7 {
            return None;
        }
        for i in 0..m {
            if is_art[basis[i]] {
                if let Some(j) = (0..width).find(|&j| !is_art[j] && t[i][j].abs() > PIV) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.c);
        run(&mut t, &mut basis, &cost, &is_art);
        let mut x = vec![0.0; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = t[i][width];
            }
        }
        let obj = self.c.iter().zip(&x).map(|(c, v)| c * v).sum();
        Some((obj, x))
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    t[r].iter_mut().for_each(|v| *v /= p);
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f != 0.0 {
                row.iter_mut().zip(&prow).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    basis[r] = c;
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], banned: &[bool]) {
    let width = cost.len();
    loop {
        let enter = (0..width).find(|&j| {
            if banned[j] || basis.contains(&j) {
                return false;
            }
            let rc = cost[j] - t.iter().zip(basis.iter()).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
            rc < -1e-10
        });
        let Some(j) = enter else { return };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[j] > PIV {
                let ratio = row[width] / row[j];
                leave = match leave {
                    Some((k, best)) if best < ratio - 1e-12 => Some((k, best)),
                    Some((k, best)) if (best - ratio).abs() <= 1e-12 && basis[k] < basis[i] => Some((k, best)),
                    _ => Some((i, ratio)),
                };
            }
        }
        let (i, _) = leave.expect("oracle LP is unbounded");
        pivot(t, basis, i, j);
    }
}

// ---------------------------------------------------------------------------
// Exhaustive selection oracle for one slot.

/// Minimum total link rate (kbps summed over links) that routes every
/// `(server, sink, rate)` commodity within the snapshot. `None` if the
/// commodities do not fit.
pub fn min_traffic(graph: &NetworkGraph, snap: &CapacitySnapshot, commodities: &[(NodeId, NodeId, f64)]) -> Option<f64> {
    if commodities.is_empty() {
        return Some(0.0);
    }
    let ne = graph.links().len();
    let var = |k: usize, e: usize| k * ne + e;
    let mut lp = DenseLp::new(commodities.len() * ne);
    lp.c.iter_mut().for_each(|c| *c = 1.0);
    for (k, &(src, dst, rate)) in commodities.iter().enumerate() {
        for node in graph.nodes() {
            let mut terms = Vec::new();
            for l in graph.out_links(node.id) {
                terms.push((var(k, l.0), 1.0));
            }
            for l in graph.in_links(node.id) {
                terms.push((var(k, l.0), -1.0));
            }
            let supply = if node.id == src {
                rate
            } else if node.id == dst {
                -rate
            } else {
                0.0
            };
            lp.row(&terms, Sense::Eq, supply);
        }
    }
    for (l, cap) in snap.iter() {
        if let Capacity::Finite(c) = cap {
            let terms: Vec<(usize, f64)> = (0..commodities.len()).map(|k| (var(k, l.0), 1.0)).collect();
            lp.row(&terms, Sense::Le, rate::to_f64(&c));
        }
    }
    lp.solve().map(|(obj, _)| obj)
}

/// Objective of a fixed layer count per client with QoE terms taken at
/// their tightest values.
pub fn qoe_part(input: &SlotInput, weights: &OptimizerWeights, served: &[usize]) -> f64 {
    let k = input.demands.len() as f64;
    let mut q: f64 = 0.0;
    let mut sum = 0.0;
    for (d, &x) in input.demands.iter().zip(served) {
        let m = d.m as f64;
        let phi = d.phi() as f64;
        let h = d.history;
        q = q.max((m - x as f64) / m);
        let t = (h.lambda as f64 + x as f64) / (phi * input.t_max as f64);
        let (z, nu) = if d.is_fresh() {
            (0.0, 0.0)
        } else {
            let z = (x as f64 - h.last as f64).abs();
            (z, if z > 0.0 { 1.0 } else { 0.0 })
        };
        let i = (h.mu as f64 + z) / (phi * input.i_max as f64);
        let n = (h.nu as f64 + nu) / (phi * input.n_max as f64);
        sum += d.beta.intensity * i + d.beta.switches * n - d.beta.quality * t;
    }
    weights.alpha * q + sum / k
}

/// Every prefix-valid server assignment per client: `choice[c][l]` is the
/// server serving layer `l + 1`.
fn assignments(input: &SlotInput) -> Vec<Vec<Vec<NodeId>>> {
    let mut per_client: Vec<Vec<Vec<NodeId>>> = Vec::new();
    for d in &input.demands {
        let mut opts: Vec<Vec<NodeId>> = vec![Vec::new()];
        let mut frontier: Vec<Vec<NodeId>> = vec![Vec::new()];
        for l in 0..d.m {
            let mut next = Vec::new();
            for prefix in &frontier {
                for &s in &d.holders[l] {
                    let mut p = prefix.clone();
                    p.push(s);
                    next.push(p);
                }
            }
            opts.extend(next.iter().cloned());
            frontier = next;
        }
        per_client.push(opts);
    }
    let mut combos: Vec<Vec<Vec<NodeId>>> = vec![Vec::new()];
    for opts in per_client {
        let mut next = Vec::new();
        for c in &combos {
            for o in &opts {
                let mut v = c.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        combos = next;
    }
    combos
}

/// Optimum by enumerating every selection and pricing each with a
/// min-traffic LP. Returns the objective and the layer counts.
pub fn exhaustive_optimum(graph: &NetworkGraph, input: &SlotInput, weights: &OptimizerWeights) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for combo in assignments(input) {
        let served: Vec<usize> = combo.iter().map(Vec::len).collect();
        let mut commodities = Vec::new();
        for (d, servers) in input.demands.iter().zip(&combo) {
            for (l, &s) in servers.iter().enumerate() {
                commodities.push((s, d.switch, rate::to_f64(&(d.sizes[l] / d.theta))));
            }
        }
        let Some(traffic) = min_traffic(graph, &input.snapshot, &commodities) else { continue };
        let obj = qoe_part(input, weights, &served) + weights.traffic_coef() * traffic;
        if obj < best.0 {
            best = (obj, served);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Random small slot instances.

pub struct Instance {
    pub graph: NetworkGraph,
    pub input: SlotInput,
    pub weights: OptimizerWeights,
}

fn pick_cap(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.25) {
        "\"unbounded\"".into()
    } else {
        (rng.gen_range(0..=24) * 250).to_string()
    }
}

/// At most 2 servers, 2 switches and 2 clients, 5 nodes in total, at most
/// 2 layers per client. `equal_sizes` makes every layer the same size.
pub fn random_instance(seed: u64, equal_sizes: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(1..=2usize);
    let nw = rng.gen_range(1..=2usize);
    let nc = rng.gen_range(1..=(5 - ns - nw).min(2));
    let servers: Vec<String> = (0..ns).map(|i| format!("S{i}")).collect();
    let switches: Vec<String> = (0..nw).map(|i| format!("W{i}")).collect();
    let clients: Vec<String> = (0..nc).map(|i| format!("C{i}")).collect();

    let mut nodes = Vec::new();
    for s in &servers {
        nodes.push(format!("{{\"name\":\"{s}\",\"role\":\"server\"}}"));
    }
    for w in &switches {
        nodes.push(format!("{{\"name\":\"{w}\",\"role\":\"switch\"}}"));
    }
    for c in &clients {
        nodes.push(format!("{{\"name\":\"{c}\",\"role\":\"client\"}}"));
    }
    let mut links = Vec::new();
    let mut link = |a: &str, b: &str, cap: String| links.push(format!("{{\"from\":\"{a}\",\"to\":\"{b}\",\"kbps\":{cap}}}"));
    for s in &servers {
        let mut any = false;
        for w in &switches {
            if rng.gen_bool(0.7) {
                link(s, w, pick_cap(&mut rng));
                any = true;
            }
        }
        if !any {
            let w = switches.choose(&mut rng).unwrap();
            link(s, w, pick_cap(&mut rng));
        }
    }
    if nw == 2 {
        if rng.gen_bool(0.85) {
            link("W0", "W1", pick_cap(&mut rng));
        }
        if rng.gen_bool(0.85) {
            link("W1", "W0", pick_cap(&mut rng));
        }
    }
    let attach: Vec<String> = clients.iter().map(|_| switches.choose(&mut rng).unwrap().clone()).collect();
    for (c, w) in clients.iter().zip(&attach) {
        link(w, c, "\"unbounded\"".into());
        link(c, w, "\"unbounded\"".into());
    }
    let topo = format!("{{\"nodes\":[{}],\"links\":[{}]}}", nodes.join(","), links.join(","));
    let graph = load_topology(&topo).expect("generated topology is valid");

    let b1 = rng.gen_range(4..=60) * 50;
    let b2 = if equal_sizes { 2 * b1 } else { b1 + rng.gen_range(4..=60) * 50 };
    let avail: Vec<String> = servers.iter().map(|s| format!("\"{s}\":{}", rng.gen_range(0..=2))).collect();
    let cat = format!(
        "{{\"id\":\"v\",\"segment_duration_s\":2,\"segments\":1,\"layers\":[\
         {{\"cumulative_kbps\":{b1},\"quality\":[0.9]}},{{\"cumulative_kbps\":{b2},\"quality\":[0.95]}}],\
         \"availability\":{{{}}}}}",
        avail.join(",")
    );
    let catalog = load_catalog(&cat).expect("generated catalog is valid");

    let thetas = [(1, 2), (1, 1), (3, 2), (2, 1)];
    let mut profiles = Vec::new();
    let mut histories = Vec::new();
    for (c, w) in clients.iter().zip(&attach) {
        let (tn, td) = thetas[rng.gen_range(0..thetas.len())];
        let m = rng.gen_range(1..=2usize);
        profiles.push(ClientProfile {
            name: c.clone(),
            node: graph.node_by_name(c).unwrap(),
            switch: graph.node_by_name(w).unwrap(),
            video: "v".into(),
            max_layers: m,
            theta: Rational::new(tn, td),
            join_slot: 1,
            beta: Beta {
                intensity: rng.gen_range(0..=6) as f64 * 0.25,
                switches: rng.gen_range(0..=6) as f64 * 0.25,
                quality: rng.gen_range(0..=6) as f64 * 0.25,
            },
        });
        histories.push(if rng.gen_bool(0.4) {
            ClientHistory::default()
        } else {
            let phi = rng.gen_range(1..=5u64);
            let last = rng.gen_range(0..=m as u64);
            ClientHistory {
                lambda: rng.gen_range(last..=phi * m as u64),
                mu: rng.gen_range(0..=phi * m as u64),
                nu: rng.gen_range(0..=phi),
                last,
                phi,
            }
        });
    }
    let mut ids = RequestIds::default();
    let pending: Vec<_> = profiles.iter().enumerate().map(|(i, p)| ids.issue(i, p, 1, r(0))).collect();
    let snap = CapacitySnapshot::of(&graph);
    let input = gather(1, r(1), &pending, &profiles, &histories, &graph, &catalog, snap).expect("gather");
    let weights = OptimizerWeights {
        alpha: rng.gen_range(0..=8) as f64 * 0.25,
        epsilon: rng.gen_range(0..=5) as f64 * 0.1,
        traffic_unit: rng.gen_range(1..=8) as f64 * 1000.0,
    };
    Instance { graph, input, weights }
}

// ---------------------------------------------------------------------------
// Rate graphs.

/// The six-switch example: link capacities equal the rates of the example
/// flow, so the flow is read back as `capacity` on every switch link.
pub fn fig5() -> (NetworkGraph, RateGraph) {
    let text = std::fs::read_to_string(scenarios_dir().join("fig5.topology.json")).unwrap();
    let graph = load_topology(&text).unwrap();
    let client = graph.node_by_name("B").unwrap();
    let sink = graph.attach_switch(client).unwrap();
    let rates: BTreeMap<LinkId, Rational> = graph
        .links()
        .iter()
        .filter_map(|l| l.capacity.finite().map(|c| (l.id, c)))
        .collect();
    let server = graph.node_by_name("A").unwrap();
    let rg = RateGraph::from_link_rates(&graph, &rates, server, sink).unwrap();
    (graph, rg)
}

/// A random loop-free flow from one server to a sink switch on at most
/// `max_nodes` nodes, built as a sum of paths along increasing node ids.
/// `reverse` adds an unused opposite link for every switch-to-switch link.
pub fn random_rate_graph(seed: u64, max_nodes: usize, reverse: bool) -> (NetworkGraph, RateGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_nodes.max(3));
    let mut b = NetworkGraph::builder().node("S", NodeRole::Server);
    for i in 1..n {
        b = b.node(format!("v{i}"), NodeRole::Switch);
    }
    let name = |i: usize| if i == 0 { "S".to_string() } else { format!("v{i}") };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            // the server only reaches a few switches, the chain is always present
            let keep = j == i + 1 || (i == 0 && rng.gen_bool(0.4)) || (i > 0 && rng.gen_bool(0.45));
            if keep {
                edges.push((i, j));
                b = b.link(name(i), name(j), Capacity::Unbounded);
                if reverse && i > 0 {
                    b = b.link(name(j), name(i), Capacity::Unbounded);
                }
            }
        }
    }
    let graph = b.build().unwrap();
    let link_of = |i: usize, j: usize| graph.find_link(NodeId(i), NodeId(j)).unwrap();
    let mut paths = Vec::new();
    for _ in 0..rng.gen_range(1..=6) {
        let mut at = 0usize;
        let mut links = Vec::new();
        while at != n - 1 {
            let outs: Vec<usize> = edges.iter().filter(|e| e.0 == at).map(|e| e.1).collect();
            let next = *outs.choose(&mut rng).unwrap();
            links.push(link_of(at, next));
            at = next;
        }
        let rate = Rational::new(rng.gen_range(1..=400), *[1, 1, 2, 3, 4].choose(&mut rng).unwrap());
        paths.push((links, rate));
    }
    let rg = RateGraph::from_paths(&graph, &paths, NodeId(0), NodeId(n - 1)).unwrap();
    (graph, rg)
}

/// Link rates of a rate graph summed per physical link.
pub fn physical_rates(rg: &RateGraph) -> BTreeMap<LinkId, Rational> {
    rg.link_rates()
}
