//! Tagged sub-flows and switch rules for each granted layer.
//!
//! Each granted layer (or slice of a layer served by one server) becomes an
//! exact [`RateGraph`]. [`base_data_rates`] splits it into single-path
//! pieces, each piece gets a ToS tag, and [`emit_rules`] turns the tags into
//! per-switch forwarding rules plus one directive for the serving server.

mod algo;
mod graph;
pub mod paths;

use std::io::Write;

use num_traits::Zero;
use serde::Serialize;

pub use algo::{
    any_combination, base_data_rates, base_data_rates_with_cap, update_data_rate_i, update_data_rate_ii,
    Decomposition, Piece, DEFAULT_FAN_IN_CAP,
};
pub use graph::{EdgeId, RateEdge, RateGraph};

use crate::error::{Error, Result};
use crate::netmodel::{LinkId, NetworkGraph, NodeId, NodeRole};
use crate::rate::{self, Rational};

/// Distinct values available in the ToS field.
pub const MAX_TAGS: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Tag {
    pub tag: u32,
    pub server_switch: NodeId,
    /// kbps.
    pub rate: Rational,
    /// Kilobits sent under this tag.
    pub size: Rational,
    /// Physical links from the server to the client-side switch.
    pub path: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagPlan {
    pub server: NodeId,
    pub sink: NodeId,
    /// Seconds over which the tagged rates run.
    pub duration: Rational,
    pub base_rates: Vec<Rational>,
    pub tags: Vec<Tag>,
}

impl TagPlan {
    pub fn from_decomposition(d: &Decomposition, duration: Rational, first_tag: u32) -> Result<TagPlan> {
        let last = first_tag as u64 + d.pieces.len() as u64 - 1;
        if first_tag == 0 || last > MAX_TAGS as u64 {
            return Err(Error::Decomposition(format!(
                "flow needs tags {first_tag}..={last}, the ToS field allows {MAX_TAGS}"
            )));
        }
        let tags = d
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| Tag {
                tag: first_tag + i as u32,
                server_switch: p.server_switch,
                rate: p.rate,
                size: p.rate * duration,
                path: p.links.clone(),
            })
            .collect();
        Ok(TagPlan {
            server: d.graph.source,
            sink: d.graph.sink,
            duration,
            base_rates: d.base_rates(),
            tags,
        })
    }

    pub fn total_size(&self) -> Rational {
        self.tags.iter().map(|t| t.size).sum()
    }

    /// Per physical link sum of tag rates.
    pub fn link_rates(&self) -> std::collections::BTreeMap<LinkId, Rational> {
        let mut out = std::collections::BTreeMap::new();
        for t in &self.tags {
            for l in &t.path {
                *out.entry(*l).or_insert_with(Rational::zero) += t.rate;
            }
        }
        out
    }
}

/// Decomposes one flow and numbers its tags.
pub fn plan_flow(rg: &RateGraph, duration: Rational, first_tag: u32) -> Result<(Decomposition, TagPlan)> {
    let d = base_data_rates(rg, rg.sink, rg.source)?;
    let plan = TagPlan::from_decomposition(&d, duration, first_tag)?;
    Ok((d, plan))
}

/// Match/forward rule at one switch. Field order is the dump order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowRule {
    pub switch: String,
    pub tag: u32,
    pub request: u64,
    pub layer: usize,
    pub src: String,
    pub dst: String,
    pub forward_to: String,
    pub rate_kbps: String,
    /// Client-side switch replaces the server address with the default one.
    pub rewrite_source: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServerDirective {
    pub server: String,
    pub request: u64,
    pub client: String,
    pub layer: usize,
    pub deadline_s: String,
    pub base_rates_kbps: Vec<String>,
    pub tags: Vec<u32>,
    pub server_switches: Vec<String>,
    pub sizes_kb: Vec<String>,
}

impl ServerDirective {
    /// Human-readable instruction list, one entry per tag.
    pub fn describe(&self) -> Vec<String> {
        self.tags
            .iter()
            .enumerate()
            .map(|(i, t)| {
                format!(
                    "send {}x{} kb tagged {t} to {}",
                    self.deadline_s, self.base_rates_kbps[i], self.server_switches[i]
                )
            })
            .collect()
    }
}

/// Forwarding rules and server directive for one tag plan.
pub fn emit_rules(
    plan: &TagPlan,
    graph: &NetworkGraph,
    request: u64,
    layer: usize,
    client: NodeId,
) -> (Vec<FlowRule>, ServerDirective) {
    let src = graph.name(plan.server).to_string();
    let dst = graph.name(client).to_string();
    let mut rules = Vec::new();
    for t in &plan.tags {
        let rate_s = rate::fmt_exact(&t.rate);
        for l in &t.path {
            let link = graph.link(*l);
            if graph.role(link.from) != NodeRole::Switch {
                continue;
            }
            rules.push(FlowRule {
                switch: graph.name(link.from).to_string(),
                tag: t.tag,
                request,
                layer,
                src: src.clone(),
                dst: dst.clone(),
                forward_to: graph.name(link.to).to_string(),
                rate_kbps: rate_s.clone(),
                rewrite_source: false,
            });
        }
        rules.push(FlowRule {
            switch: graph.name(plan.sink).to_string(),
            tag: t.tag,
            request,
            layer,
            src: src.clone(),
            dst: dst.clone(),
            forward_to: dst.clone(),
            rate_kbps: rate_s,
            rewrite_source: true,
        });
    }
    let directive = ServerDirective {
        server: src,
        request,
        client: dst,
        layer,
        deadline_s: rate::fmt_exact(&plan.duration),
        base_rates_kbps: plan.base_rates.iter().map(rate::fmt_exact).collect(),
        tags: plan.tags.iter().map(|t| t.tag).collect(),
        server_switches: plan.tags.iter().map(|t| graph.name(t.server_switch).to_string()).collect(),
        sizes_kb: plan.tags.iter().map(|t| rate::fmt_exact(&t.size)).collect(),
    };
    (rules, directive)
}

/// Writes rules as JSON lines.
pub fn write_rules_jsonl<W: Write>(mut out: W, slot: usize, rules: &[FlowRule]) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        slot: usize,
        #[serde(flatten)]
        rule: &'a FlowRule,
    }
    for r in rules {
        serde_json::to_writer(&mut out, &Line { slot, rule: r })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
