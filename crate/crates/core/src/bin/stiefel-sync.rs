use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stiefel_sync::harness::{self, ExperimentConfig, Mode, Overrides, RunOutcome};

/// Batch runner for Stiefel-manifold consensus experiments.
#[derive(Parser, Debug)]
#[command(name = "stiefel-sync", version)]
struct Args {
    /// Experiment config (JSON).
    config: PathBuf,
    /// monte_carlo | counterexample | certify | maximize_f | integer_programs
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn run(args: &Args) -> stiefel_sync::Result<i32> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    let mode = args.mode.as_deref().map(str::parse::<Mode>).transpose()?;
    cfg.apply(&Overrides {
        mode,
        trials: args.trials,
        seed: args.seed,
        threads: args.threads,
        out_dir: args.out_dir.clone(),
    })?;
    let (outcome, files) = harness::run(&cfg)?;
    match &outcome {
        RunOutcome::MonteCarlo(r) => {
            let s = &r.summary;
            println!(
                "{} trials: {} consensus, {} non-consensus equilibria, {} timeouts (fraction {:.4})",
                s.trials, s.consensus, s.non_consensus_equilibrium, s.timeout, s.consensus_fraction
            );
        }
        RunOutcome::Counterexample(r) => {
            for c in &r.cases {
                println!(
                    "N = {}: {:?}, distance to twisted state {:.3e}{}",
                    c.n,
                    c.reason,
                    c.final_twisted_distance,
                    if c.matches_expectation {
                        ""
                    } else {
                        "  (unexpected)"
                    }
                );
            }
        }
        RunOutcome::Certification(r) => {
            println!(
                "(p, n) = ({}, {}): bound {}, {}",
                r.p,
                r.n,
                if r.bound_holds {
                    "holds"
                } else {
                    "fails (exploratory)"
                },
                if r.passed {
                    "certificates pass"
                } else {
                    "CERTIFICATE FAILURE"
                }
            );
            for f in &r.failures {
                println!("  {f}");
            }
        }
    }
    let (trajectories, others): (Vec<_>, Vec<_>) = files
        .iter()
        .partition(|f| f.starts_with(cfg.output.dir.join(&cfg.output.trajectory_dir)));
    for f in others {
        println!("wrote {}", f.display());
    }
    if !trajectories.is_empty() {
        println!(
            "wrote {} trajectory files under {}",
            trajectories.len(),
            cfg.output.dir.join(&cfg.output.trajectory_dir).display()
        );
    }
    Ok(if outcome.acceptance_failed() { 3 } else { 0 })
}
