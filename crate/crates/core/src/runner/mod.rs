//! Scenario runs, solver comparisons, parameter sweeps and their on-disk
//! artifacts.
//!
//! A run directory holds `slots.csv`, `summary.csv`, `timing.csv`,
//! `rules.jsonl`, `directives.jsonl`, `events/<client>.csv`,
//! `manifest.json` and `plots/*.svg`. Everything except `timing.csv` is
//! byte-identical across reruns of the same scenario.

mod plot;
mod scenario;
mod sim;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use plot::{plot, PlotFamily};
pub use scenario::{
    load_scenario, BetaDoc, BudgetDoc, ClientDoc, DocRef, LoadedScenario, PhaseDoc, PhaseKeyword, Scenario,
    SolverKind,
};
pub use sim::{simulate, RunOutcome};

use crate::clientsim::write_event_log;
use crate::error::{Error, Result};
use crate::flowsetup::write_rules_jsonl;
use crate::metrics::{
    compare_solvers, compile_run_report, write_compare_csv, write_slots_csv, write_summary_csv, write_timing_csv,
    CompareRow, QoEReport,
};

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub solver: Option<SolverKind>,
    pub seed: u64,
    pub input_hash: String,
    pub version: String,
    pub slots: usize,
    pub timed_out: bool,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub outcome: RunOutcome,
    pub report: QoEReport,
    pub manifest: Manifest,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let path = dir.join("manifest.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, m).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))
}

fn safe_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

/// Writes the CSV and JSON-lines artifacts of one run into `dir`.
pub fn write_run(ls: &LoadedScenario, outcome: &RunOutcome, dir: &Path) -> Result<(QoEReport, Vec<String>)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = compile_run_report(&outcome.reports, &outcome.clients, &ls.catalog);
    let range = ls.catalog.quality_range();
    let mut files = Vec::new();

    write_slots_csv(create(&dir.join("slots.csv"))?, &outcome.reports, range)?;
    files.push("slots.csv".to_string());
    write_summary_csv(create(&dir.join("summary.csv"))?, &report)?;
    files.push("summary.csv".to_string());
    write_timing_csv(create(&dir.join("timing.csv"))?, outcome.solver.name(), &outcome.reports)?;
    files.push("timing.csv".to_string());

    let path = dir.join("rules.jsonl");
    let mut w = create(&path)?;
    for (slot, r) in &outcome.rules {
        write_rules_jsonl(&mut w, *slot, std::slice::from_ref(r)).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    files.push("rules.jsonl".to_string());

    let path = dir.join("directives.jsonl");
    let mut w = create(&path)?;
    for (slot, d) in &outcome.directives {
        #[derive(Serialize)]
        struct Line<'a> {
            slot: usize,
            #[serde(flatten)]
            directive: &'a crate::flowsetup::ServerDirective,
        }
        serde_json::to_writer(&mut w, &Line { slot: *slot, directive: d }).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    files.push("directives.jsonl".to_string());

    for c in &outcome.clients {
        let rel = format!("events/{}.csv", safe_name(&c.profile.name));
        write_event_log(create(&dir.join(&rel))?, c)?;
        files.push(rel);
    }
    Ok((report, files))
}

/// Runs the scenario with the given solver (or the scenario's own) and
/// writes artifacts and plots into `out_dir`.
pub fn run(ls: &LoadedScenario, out_dir: &Path, solver: Option<SolverKind>) -> Result<RunArtifacts> {
    let solver = solver.unwrap_or(ls.scenario.solver);
    let outcome = simulate(ls, solver)?;
    let (report, mut files) = write_run(ls, &outcome, out_dir)?;
    let mut manifest = Manifest {
        name: ls.scenario.name.clone(),
        solver: Some(solver),
        seed: ls.scenario.seed,
        input_hash: ls.input_hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        slots: outcome.reports.len(),
        timed_out: outcome.timed_out,
        files: Vec::new(),
    };
    files.push("manifest.json".to_string());
    for fam in [PlotFamily::Layers, PlotFamily::Fairness, PlotFamily::Quality] {
        files.push(format!("plots/{}.svg", fam.name()));
    }
    manifest.files = files;
    write_manifest(out_dir, &manifest)?;
    for fam in [PlotFamily::Layers, PlotFamily::Fairness, PlotFamily::Quality] {
        plot(out_dir, fam)?;
    }
    Ok(RunArtifacts { dir: out_dir.to_path_buf(), outcome, report, manifest })
}

/// Runs both solvers and writes their artifacts under `milp/` and `lp/`
/// plus `compare.csv` and the overlay plot.
pub fn compare(ls: &LoadedScenario, out_dir: &Path) -> Result<(Vec<CompareRow>, RunArtifacts, RunArtifacts)> {
    let milp = run(ls, &out_dir.join("milp"), Some(SolverKind::Milp))?;
    let lp = run(ls, &out_dir.join("lp"), Some(SolverKind::Lp))?;
    let rows = compare_solvers(&milp.outcome.reports, &lp.outcome.reports);
    write_compare_csv(create(&out_dir.join("compare.csv"))?, &rows)?;
    let manifest = Manifest {
        name: ls.scenario.name.clone(),
        solver: None,
        seed: ls.scenario.seed,
        input_hash: ls.input_hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        slots: rows.len(),
        timed_out: milp.outcome.timed_out,
        files: vec!["compare.csv".into(), "milp/".into(), "lp/".into(), "plots/compare.svg".into()],
    };
    write_manifest(out_dir, &manifest)?;
    plot(out_dir, PlotFamily::Compare)?;
    Ok((rows, milp, lp))
}

/// Parameters accepted by [`sweep`]. `beta*` and `theta` may name one
/// client as `beta3@C2`.
pub const SWEEP_PARAMS: [&str; 7] = ["theta", "alpha", "epsilon", "tau", "beta1", "beta2", "beta3"];

/// Returns a copy of the scenario with one parameter changed.
pub fn apply_param(s: &Scenario, param: &str, value: f64) -> Result<Scenario> {
    let (name, client) = match param.split_once('@') {
        Some((n, c)) => (n, Some(c)),
        None => (param, None),
    };
    if !SWEEP_PARAMS.contains(&name) {
        return Err(Error::Validation(format!(
            "unknown sweep parameter `{param}` (expected one of {})",
            SWEEP_PARAMS.join(", ")
        )));
    }
    let mut out = s.clone();
    let targets: Vec<usize> = match client {
        Some(c) => {
            if !matches!(name, "theta" | "beta1" | "beta2" | "beta3") {
                return Err(Error::Validation(format!("`{name}` is not a per-client parameter")));
            }
            let k = s
                .clients
                .iter()
                .position(|x| x.name == c)
                .ok_or_else(|| Error::UnknownClient(c.to_string()))?;
            vec![k]
        }
        None => (0..s.clients.len()).collect(),
    };
    let set_beta = |b: &mut BetaDoc| match name {
        "beta1" => b.intensity = Some(value),
        "beta2" => b.switches = Some(value),
        _ => b.quality = Some(value),
    };
    match name {
        "alpha" => out.alpha = value,
        "epsilon" => out.epsilon = value,
        "tau" => out.tau_s = value,
        "theta" => {
            if client.is_none() {
                out.theta_s = value;
            }
            for &k in &targets {
                if client.is_some() || out.clients[k].theta_s.is_some() {
                    out.clients[k].theta_s = Some(value);
                }
            }
        }
        _ => {
            if client.is_none() {
                set_beta(&mut out.beta);
            }
            for &k in &targets {
                let c = &mut out.clients[k];
                if client.is_some() || c.beta.is_some() {
                    set_beta(c.beta.get_or_insert_with(BetaDoc::default));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub value: f64,
    pub artifacts: RunArtifacts,
}

fn value_label(v: f64) -> String {
    format!("{v}")
}

/// One run per value, each in `out_dir/<param>=<value>/`, plus
/// `sweep.csv`, `sweep_summary.csv` and the overlay plot.
pub fn sweep(s: &Scenario, base: &Path, param: &str, values: &[f64], out_dir: &Path) -> Result<Vec<SweepRun>> {
    if values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    let scenarios = values
        .iter()
        .map(|&v| apply_param(s, param, v).and_then(|sc| sc.resolve(base)))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<SweepRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(values)
            .map(|(ls, &v)| {
                let dir = out_dir.join(format!("{}={}", safe_name(param), value_label(v)));
                scope.spawn(move || run(ls, &dir, None).map(|artifacts| SweepRun { value: v, artifacts }))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Model("sweep worker panicked".into()))))
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(create(&out_dir.join("sweep.csv"))?);
    w.write_record(["param", "value", "slot", "client", "m", "layers", "quality"])?;
    for r in &runs {
        for rep in &r.artifacts.outcome.reports {
            for c in &rep.clients {
                w.write_record([
                    param.to_string(),
                    value_label(r.value),
                    rep.slot.to_string(),
                    c.name.clone(),
                    c.m.to_string(),
                    c.layers.to_string(),
                    format!("{:.6}", c.quality),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(out_dir.join("sweep.csv"), e))?;

    let mut w = csv::Writer::from_writer(create(&out_dir.join("sweep_summary.csv"))?);
    w.write_record(["param", "value", "client", "avg_layers", "avg_quality", "stalls", "zero_grants"])?;
    for r in &runs {
        for c in &r.artifacts.report.clients {
            w.write_record([
                param.to_string(),
                value_label(r.value),
                c.name.clone(),
                format!("{:.6}", c.avg_layers),
                format!("{:.6}", c.avg_quality),
                c.stalls.to_string(),
                c.zero_grants.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(out_dir.join("sweep_summary.csv"), e))?;

    let manifest = Manifest {
        name: format!("{} sweep {param}", s.name),
        solver: Some(s.solver),
        seed: s.seed,
        input_hash: runs[0].artifacts.manifest.input_hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        slots: runs.iter().map(|r| r.artifacts.outcome.reports.len()).max().unwrap_or(0),
        timed_out: runs.iter().any(|r| r.artifacts.outcome.timed_out),
        files: vec!["sweep.csv".into(), "sweep_summary.csv".into(), "plots/sweep.svg".into()],
    };
    write_manifest(out_dir, &manifest)?;
    plot(out_dir, PlotFamily::Sweep)?;
    Ok(runs)
}
