//! Scenario documents and their resolution against topology and catalog.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{load_catalog, Catalog};
use crate::error::{Error, Result};
use crate::netmodel::{load_topology, NetworkGraph, NodeRole, TopologyDoc};
use crate::optimizer::{Budget, OptimizerWeights};
use crate::rate::{self, Rational};
use crate::slot::{Beta, ClientProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Milp,
    Lp,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Milp => "milp",
            SolverKind::Lp => "lp",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "milp" => Ok(SolverKind::Milp),
            "lp" => Ok(SolverKind::Lp),
            other => Err(Error::Validation(format!("unknown solver `{other}` (expected milp or lp)"))),
        }
    }
}

/// A file path relative to the scenario, or the document inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocRef {
    Path(String),
    Inline(serde_json::Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseDoc {
    Fixed(f64),
    /// `"random"`: drawn per client from the scenario seed.
    Keyword(PhaseKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKeyword {
    Random,
}

impl Default for PhaseDoc {
    fn default() -> Self {
        PhaseDoc::Fixed(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switches: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
}

impl BetaDoc {
    fn over(&self, base: Beta) -> Beta {
        Beta {
            intensity: self.intensity.unwrap_or(base.intensity),
            switches: self.switches.unwrap_or(base.switches),
            quality: self.quality.unwrap_or(base.quality),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientDoc {
    /// Client node name in the topology.
    pub name: String,
    pub max_layers: usize,
    pub join_slot: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetDoc {
    #[serde(default = "default_nodes")]
    pub max_nodes: usize,
    #[serde(default = "default_limit")]
    pub time_limit_s: Option<f64>,
}

fn default_nodes() -> usize {
    Budget::default().max_nodes
}

fn default_limit() -> Option<f64> {
    Budget::default().time_limit.map(|d| d.as_secs_f64())
}

impl Default for BudgetDoc {
    fn default() -> Self {
        BudgetDoc { max_nodes: default_nodes(), time_limit_s: default_limit() }
    }
}

fn one() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_tau() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub topology: DocRef,
    pub catalog: DocRef,
    #[serde(default = "default_tau")]
    pub tau_s: f64,
    #[serde(default = "one")]
    pub theta_s: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to the largest finite link capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_unit_kbps: Option<f64>,
    #[serde(default)]
    pub beta: BetaDoc,
    #[serde(default)]
    pub solver: SolverKind,
    /// Upper bound on simulated slots; the run ends earlier once every
    /// client has played out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub arrival_phase: PhaseDoc,
    #[serde(default)]
    pub budget: BudgetDoc,
    /// Replace every finite capacity with this value (kbps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_capacity_kbps: Option<f64>,
    pub clients: Vec<ClientDoc>,
}

/// A scenario with its documents loaded and cross-checked.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub graph: NetworkGraph,
    pub catalog: Catalog,
    pub profiles: Vec<ClientProfile>,
    /// Arrival phase of each client's first request, in [0, 1).
    pub phases: Vec<Rational>,
    pub tau: Rational,
    pub weights: OptimizerWeights,
    pub budget: Budget,
    /// SHA-256 over the scenario and both resolved documents.
    pub input_hash: String,
}

fn read_ref(r: &DocRef, base: &Path) -> Result<(String, PathBuf)> {
    match r {
        DocRef::Path(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok((text, path))
        }
        DocRef::Inline(v) => Ok((v.to_string(), PathBuf::from("<inline>"))),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<(Scenario, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Scenario::parse(&text)?, base))
    }

    /// Loads the referenced documents (paths relative to `base`) and
    /// validates everything.
    pub fn resolve(&self, base: &Path) -> Result<LoadedScenario> {
        let (topo_text, _) = read_ref(&self.topology, base)?;
        let (cat_text, _) = read_ref(&self.catalog, base)?;
        let mut graph = load_topology(&topo_text)?;
        if let Some(cap) = self.uniform_capacity_kbps {
            graph = with_uniform_capacity(&graph, cap)?;
        }
        let catalog = load_catalog(&cat_text)?;
        self.build(graph, catalog, &topo_text, &cat_text)
    }

    fn build(&self, graph: NetworkGraph, catalog: Catalog, topo_text: &str, cat_text: &str) -> Result<LoadedScenario> {
        for (what, v) in [("tau_s", self.tau_s), ("theta_s", self.theta_s)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{what} must be positive")));
            }
        }
        if self.clients.is_empty() {
            return Err(Error::Validation("scenario has no clients".into()));
        }
        let tau = rate::from_config_f64(self.tau_s);
        let traffic_unit = match self.traffic_unit_kbps {
            Some(u) => u,
            None => graph.max_finite_capacity().map_or(8000.0, |c| rate::to_f64(&c)),
        };
        let weights = OptimizerWeights { alpha: self.alpha, epsilon: self.epsilon, traffic_unit };
        weights.validate()?;
        let budget = Budget {
            max_nodes: self.budget.max_nodes,
            time_limit: match self.budget.time_limit_s {
                Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
                Some(_) => return Err(Error::Validation("time_limit_s must be positive".into())),
                None => None,
            },
        };
        let base_beta = self.beta.over(Beta::default());
        let default_video = catalog.videos().next().map(|v| v.id.clone()).unwrap_or_default();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut profiles = Vec::new();
        let mut phases = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.clients {
            if !seen.insert(c.name.clone()) {
                return Err(Error::Validation(format!("client `{}` listed twice", c.name)));
            }
            let node = graph
                .node_by_name(&c.name)
                .ok_or_else(|| Error::UnknownClient(c.name.clone()))?;
            if graph.role(node) != NodeRole::Client {
                return Err(Error::Validation(format!("`{}` is not a client node", c.name)));
            }
            let switch = graph.attach_switch(node)?;
            let video = c.video.clone().unwrap_or_else(|| default_video.clone());
            let v = catalog.video(&video)?;
            if c.max_layers > v.max_layers() {
                return Err(Error::Validation(format!(
                    "client `{}` wants {} layers, video `{video}` has {}",
                    c.name,
                    c.max_layers,
                    v.max_layers()
                )));
            }
            let theta = rate::from_config_f64(c.theta_s.unwrap_or(self.theta_s));
            let p = ClientProfile {
                name: c.name.clone(),
                node,
                switch,
                video,
                max_layers: c.max_layers,
                theta,
                join_slot: c.join_slot,
                beta: c.beta.map_or(base_beta, |b| b.over(base_beta)),
            };
            p.validate()?;
            if theta > v.segment_duration - tau {
                log::warn!(
                    "client `{}`: theta {}s exceeds segment duration minus tau; stalls are possible",
                    p.name,
                    rate::fmt_exact(&theta)
                );
            }
            let phase = match (c.arrival_phase, self.arrival_phase) {
                (Some(f), _) | (None, PhaseDoc::Fixed(f)) => f,
                (None, PhaseDoc::Keyword(PhaseKeyword::Random)) => rng.gen::<f64>(),
            };
            if !(0.0..1.0).contains(&phase) {
                return Err(Error::Validation(format!("arrival phase {phase} outside [0, 1)")));
            }
            phases.push(rate::from_f64_with_den(phase, 1_000_000));
            profiles.push(p);
        }

        let mut h = Sha256::new();
        h.update(serde_json::to_string(self).unwrap_or_default());
        h.update([0]);
        h.update(topo_text);
        h.update([0]);
        h.update(cat_text);
        let input_hash = hex::encode(h.finalize());

        Ok(LoadedScenario {
            scenario: self.clone(),
            graph,
            catalog,
            profiles,
            phases,
            tau,
            weights,
            budget,
            input_hash,
        })
    }
}

fn with_uniform_capacity(graph: &NetworkGraph, kbps: f64) -> Result<NetworkGraph> {
    if !(kbps.is_finite() && kbps >= 0.0) {
        return Err(Error::Validation("uniform_capacity_kbps must be >= 0".into()));
    }
    let mut doc = TopologyDoc::from_graph(graph);
    for l in &mut doc.links {
        if let crate::netmodel::KbpsDoc::Value(v) = &mut l.kbps {
            *v = kbps;
        }
    }
    doc.into_graph()
}

/// Loads a scenario file and its documents.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let (s, base) = Scenario::from_file(path)?;
    s.resolve(&base)
}
