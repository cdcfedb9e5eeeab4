use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use svcflow::runner::{self, load_scenario, PlotFamily, Scenario, SolverKind};
use svcflow::Error;

/// Time-slotted SVC/DASH delivery simulator.
#[derive(Parser)]
#[command(name = "svcflow", version)]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write reports, rules and plots.
    Run {
        scenario: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Overrides the scenario's solver.
        #[arg(long)]
        solver: Option<SolverKind>,
        /// Run both solvers and write compare.csv.
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// One run per parameter value.
    Sweep {
        scenario: PathBuf,
        /// theta, alpha, epsilon, tau, beta1, beta2, beta3; per client as beta3@C2.
        #[arg(long)]
        param: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Redraw one chart family from an artifact directory.
    Plot {
        dir: PathBuf,
        #[arg(long)]
        family: PlotFamily,
    },
    /// Load and check a scenario without running it.
    Validate { scenario: PathBuf },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_validation() {
        ExitCode::from(EXIT_VALIDATION)
    } else {
        ExitCode::FAILURE
    }
}

fn finish(timed_out: bool) -> ExitCode {
    if timed_out {
        eprintln!("warning: branch-and-bound stopped early in at least one slot");
        ExitCode::from(EXIT_TIMEOUT)
    } else {
        ExitCode::SUCCESS
    }
}

fn with_overrides(path: &PathBuf, tau: Option<f64>, theta: Option<f64>, alpha: Option<f64>) -> svcflow::Result<runner::LoadedScenario> {
    let (mut s, base) = Scenario::from_file(path)?;
    for (name, v) in [("tau", tau), ("theta", theta), ("alpha", alpha)] {
        if let Some(v) = v {
            s = runner::apply_param(&s, name, v)?;
        }
    }
    s.resolve(&base)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match cli.cmd {
        Cmd::Run { scenario, out, solver, compare, tau, theta, alpha } => {
            let ls = match with_overrides(&scenario, tau, theta, alpha) {
                Ok(ls) => ls,
                Err(e) => return fail(e),
            };
            if compare {
                return match runner::compare(&ls, &out) {
                    Ok((rows, milp, _)) => {
                        println!("{} slots compared, written to {}", rows.len(), out.display());
                        finish(milp.outcome.timed_out)
                    }
                    Err(e) => fail(e),
                };
            }
            match runner::run(&ls, &out, solver) {
                Ok(a) => {
                    let o = &a.outcome;
                    println!(
                        "{} slots, {} stalls, {} rules, written to {}",
                        o.reports.len(),
                        o.total_stalls(),
                        o.rules.len(),
                        out.display()
                    );
                    finish(o.timed_out)
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Sweep { scenario, param, values, out } => {
            let (s, base) = match Scenario::from_file(&scenario) {
                Ok(x) => x,
                Err(e) => return fail(e),
            };
            match runner::sweep(&s, &base, &param, &values, &out) {
                Ok(runs) => {
                    println!("{} runs written to {}", runs.len(), out.display());
                    finish(runs.iter().any(|r| r.artifacts.outcome.timed_out))
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Plot { dir, family } => match runner::plot(&dir, family) {
            Ok(p) => {
                println!("{}", p.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Cmd::Validate { scenario } => match load_scenario(&scenario) {
            Ok(ls) => {
                println!(
                    "ok: {} clients, {}, input hash {}",
                    ls.profiles.len(),
                    ls.graph.summary(),
                    ls.input_hash
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
