mod common;

use std::fs;

use svcflow::metrics::{metric_consistency, replay_histories};
use svcflow::runner::{plot, run, simulate, sweep, LoadedScenario, PlotFamily, Scenario, SolverKind};

use common::scenarios_dir;

const SMALL: &str = r#"{
  "name": "small",
  "topology": "default.topology.json",
  "catalog": {"id": "video", "segment_duration_s": 5, "segments": 3,
              "layers": [{"cumulative_kbps": 650, "quality": [0.92]},
                         {"cumulative_kbps": 1100, "quality": [0.95]},
                         {"cumulative_kbps": 1650, "quality": [0.97]}],
              "availability": {"A": 3, "B": 2}},
  "tau_s": 2,
  "theta_s": 1,
  "traffic_unit_kbps": 1000000,
  "arrival_phase": "random",
  "seed": 9,
  "clients": [
    {"name": "C1", "max_layers": 3, "join_slot": 1},
    {"name": "C2", "max_layers": 2, "join_slot": 2}
  ]
}"#;

fn small() -> (Scenario, LoadedScenario) {
    let s = Scenario::parse(SMALL).unwrap();
    let ls = s.resolve(&scenarios_dir()).unwrap();
    (s, ls)
}

#[test]
fn same_input_same_output() {
    let (_, ls) = small();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run(&ls, a.path(), None).unwrap();
    let rb = run(&ls, b.path(), None).unwrap();
    assert_eq!(ra.manifest.input_hash, rb.manifest.input_hash);
    for f in ["slots.csv", "summary.csv", "rules.jsonl", "directives.jsonl", "events/C1.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn random_phases_follow_the_seed() {
    let (s, ls) = small();
    let again = s.resolve(&scenarios_dir()).unwrap();
    assert_eq!(ls.phases, again.phases);
    let mut other = s.clone();
    other.seed = 10;
    let other = other.resolve(&scenarios_dir()).unwrap();
    assert_ne!(ls.phases, other.phases);
    assert_ne!(ls.input_hash, other.input_hash);
}

#[test]
fn run_writes_every_listed_artifact() {
    let (_, ls) = small();
    let dir = tempfile::tempdir().unwrap();
    let art = run(&ls, dir.path(), Some(SolverKind::Lp)).unwrap();
    for f in &art.manifest.files {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let svg = fs::read_to_string(dir.path().join("plots/layers.svg")).unwrap();
    assert!(svg.contains("<svg"));
    let again = plot(dir.path(), PlotFamily::Fairness).unwrap();
    assert!(again.is_file());
    assert!(plot(dir.path(), PlotFamily::Compare).is_err());
}

#[test]
fn every_client_plays_all_segments() {
    let (_, ls) = small();
    for solver in [SolverKind::Milp, SolverKind::Lp] {
        let out = simulate(&ls, solver).unwrap();
        for c in &out.clients {
            assert_eq!(c.delivered_layers().len(), 3, "{solver:?}");
            assert!(c.delivered_layers().iter().all(|&l| l >= 1 && l <= c.profile.max_layers));
        }
        assert_eq!(out.total_stalls(), 0);
        assert!(metric_consistency(&out.reports, ls.profiles.len()) < 1e-6);
    }
}

#[test]
fn report_histories_are_the_replayed_prefix() {
    let (_, ls) = small();
    let out = simulate(&ls, SolverKind::Milp).unwrap();
    let replay = replay_histories(&out.reports, ls.profiles.len());
    let mut prev = vec![Default::default(); ls.profiles.len()];
    for (r, hs) in out.reports.iter().zip(&replay) {
        for (c, h) in r.clients.iter().zip(hs) {
            assert_eq!(c.history, prev[c.client]);
            prev[c.client] = *h;
        }
    }
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let (s, _) = small();
    let dir = tempfile::tempdir().unwrap();
    let runs = sweep(&s, &scenarios_dir(), "alpha", &[0.5, 1.0], dir.path()).unwrap();
    assert_eq!(runs.len(), 2);
    assert!(dir.path().join("alpha=0.5/slots.csv").is_file());
    assert!(dir.path().join("sweep_summary.csv").is_file());
    assert!(sweep(&s, &scenarios_dir(), "gamma", &[1.0], dir.path()).is_err());
}
