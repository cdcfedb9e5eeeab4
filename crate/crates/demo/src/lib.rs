//! Browser bindings: run a scenario and decompose a flow, entirely
//! client-side. The `*_json` functions are the plain-Rust core used by
//! both the bindings and the tests.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use svcflow::flowsetup::{emit_rules, plan_flow, RateGraph};
use svcflow::netmodel::{load_topology, NodeRole};
use svcflow::rate::{self, Rational};
use svcflow::runner::{simulate, Scenario, SolverKind};

const SCENARIO: &str = include_str!("../../../scenarios/default.scenario.json");
const TOPOLOGY: &str = include_str!("../../../scenarios/default.topology.json");
const CATALOG: &str = include_str!("../../../scenarios/default.catalog.json");
const FIG5: &str = include_str!("../../../scenarios/fig5.topology.json");

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// The bundled scenario with topology and catalog inlined.
pub fn default_scenario_json() -> String {
    let mut s: Value = serde_json::from_str(SCENARIO).expect("bundled scenario");
    s["topology"] = serde_json::from_str(TOPOLOGY).expect("bundled topology");
    s["catalog"] = serde_json::from_str(CATALOG).expect("bundled catalog");
    serde_json::to_string_pretty(&s).expect("serializable")
}

/// The six-switch example flow: a topology whose capacities are the rates.
pub fn example_flow_json() -> String {
    let topo: Value = serde_json::from_str(FIG5).expect("bundled topology");
    let rates: Vec<Value> = topo["links"]
        .as_array()
        .expect("links")
        .iter()
        .filter(|l| l["kbps"].is_number())
        .map(|l| json!({"from": l["from"], "to": l["to"], "kbps": l["kbps"]}))
        .collect();
    let doc = json!({"topology": topo, "server": "A", "client": "B", "theta_s": 2, "rates": rates});
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Runs a scenario whose documents are inline. Returns per-slot grants and
/// per-client playout.
pub fn simulate_json(scenario: &str, solver: &str) -> Result<String, String> {
    let s = Scenario::parse(scenario).map_err(err)?;
    let ls = s.resolve(std::path::Path::new(".")).map_err(err)?;
    let solver: SolverKind = solver.parse().map_err(err)?;
    let out = simulate(&ls, solver).map_err(err)?;
    let slots: Vec<Value> = out
        .reports
        .iter()
        .map(|r| {
            let clients: Vec<Value> =
                r.clients.iter().map(|c| json!({"name": c.name, "m": c.m, "layers": c.layers})).collect();
            json!({"slot": r.slot, "sent_kb": rate::to_f64(&r.sent_kb), "clients": clients})
        })
        .collect();
    let clients: Vec<Value> = out
        .clients
        .iter()
        .map(|c| {
            json!({
                "name": c.profile.name,
                "join_slot": c.profile.join_slot,
                "stalls": c.stall_count(),
                "startup_delay_s": c.startup_delay.map(|d| rate::to_f64(&d)),
                "layers": c.delivered_layers(),
            })
        })
        .collect();
    Ok(json!({"slots": slots, "clients": clients, "warnings": out.warnings}).to_string())
}

/// Splits a server-to-client flow into tagged constant-rate paths.
pub fn decompose_json(doc: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(doc).map_err(err)?;
    let graph = load_topology(&v["topology"].to_string()).map_err(err)?;
    let node = |key: &str| {
        let name = v[key].as_str().ok_or_else(|| format!("`{key}` must be a node name"))?;
        graph.node_by_name(name).ok_or_else(|| format!("unknown node `{name}`"))
    };
    let server = node("server")?;
    let client = node("client")?;
    if graph.role(server) != NodeRole::Server {
        return Err(format!("`{}` is not a server", graph.name(server)));
    }
    let sink = graph.attach_switch(client).map_err(err)?;
    let theta = v["theta_s"].as_f64().ok_or("`theta_s` must be a number")?;
    let theta = rate::from_kbps_f64(theta);
    let mut rates = BTreeMap::new();
    for r in v["rates"].as_array().ok_or("`rates` must be a list")? {
        let (Some(from), Some(to), Some(kbps)) = (r["from"].as_str(), r["to"].as_str(), r["kbps"].as_f64()) else {
            return Err(format!("bad rate entry {r}"));
        };
        let ends = graph.node_by_name(from).zip(graph.node_by_name(to));
        let link = ends.and_then(|(a, b)| graph.find_link(a, b)).ok_or_else(|| format!("no link {from} -> {to}"))?;
        rates.insert(link, rate::from_kbps_f64(kbps));
    }
    let rg = RateGraph::from_link_rates(&graph, &rates, server, sink).map_err(err)?;
    rg.check_conservation().map_err(err)?;
    let (_, plan) = plan_flow(&rg, theta, 1).map_err(err)?;
    let (rules, directive) = emit_rules(&plan, &graph, 1, 1, client);
    let tags: Vec<Value> = plan
        .tags
        .iter()
        .map(|t| {
            let mut path = vec![graph.name(server)];
            path.extend(t.path.iter().map(|l| graph.name(graph.link(*l).to)));
            json!({
                "tag": t.tag,
                "switch": graph.name(t.server_switch),
                "rate_kbps": rate::fmt_exact(&t.rate),
                "size_kb": rate::fmt_exact(&t.size),
                "path": path,
            })
        })
        .collect();
    let rules: Vec<String> = rules
        .iter()
        .map(|r| format!("{}: tag {} -> {} at {} kbps", r.switch, r.tag, r.forward_to, r.rate_kbps))
        .collect();
    let total: Rational = plan.total_size();
    Ok(json!({
        "base_rates_kbps": directive.base_rates_kbps,
        "tags": tags,
        "instructions": directive.describe(),
        "rules": rules,
        "total_kb": rate::fmt_exact(&total),
    })
    .to_string())
}

#[wasm_bindgen(js_name = defaultScenario)]
pub fn default_scenario() -> String {
    default_scenario_json()
}

#[wasm_bindgen(js_name = exampleFlow)]
pub fn example_flow() -> String {
    example_flow_json()
}

#[wasm_bindgen(js_name = runScenario)]
pub fn run_scenario(scenario: &str, solver: &str) -> Result<String, JsValue> {
    simulate_json(scenario, solver).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decompose(doc: &str) -> Result<String, JsValue> {
    decompose_json(doc).map_err(|e| JsValue::from_str(&e))
}
