//! Monte-Carlo run through the batch harness, configured in code.
//!
//! `cargo run --release --example monte_carlo -- [out_dir]`

use stiefel_sync::harness::{run, ExperimentConfig, RunOutcome};

fn main() -> stiefel_sync::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/monte_carlo".into());
    let json = format!(
        r#"{{
            "mode": "monte_carlo",
            "manifold": {{"n": 5, "p": 2}},
            "graph": {{"type": "erdos_renyi", "N": 8, "edge_prob": 0.4}},
            "trials": 50,
            "seed": 7,
            "output": {{"dir": {out:?}}}
        }}"#
    );
    let cfg = ExperimentConfig::from_json_str(&json)?;
    let (outcome, files) = run(&cfg)?;
    if let RunOutcome::MonteCarlo(r) = outcome {
        println!(
            "{}",
            serde_json::to_string_pretty(&r.summary).expect("summary serializes")
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
