//! Random agents on the 2-sphere coupled along a 6-cycle flow to consensus.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stiefel_sync::analysis::potential;
use stiefel_sync::dynamics::{integrate, FlowConfig, SwarmState};
use stiefel_sync::graph::Graph;

fn main() -> stiefel_sync::Result<()> {
    let g = Graph::cycle(6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let state = SwarmState::random(3, 1, 6, &mut rng)?;
    println!("U(0) = {:.6}", potential(&state, &g)?);

    let cfg = FlowConfig {
        record_every: 200,
        ..FlowConfig::default()
    };
    let out = integrate(&state, &g, &cfg)?;
    let tr = &out.trajectory;
    for k in 0..tr.len() {
        println!(
            "t = {:8.3}  U = {:.3e}  max grad = {:.3e}  max edge = {:.3e}",
            tr.times[k], tr.potentials[k], tr.grad_norms[k], tr.edge_distances[k]
        );
    }
    println!(
        "{} after {} steps (t = {:.2}), orthonormality defect {:.1e}",
        out.reason.as_str(),
        out.steps,
        out.final_time,
        out.max_orthonormality_defect
    );
    Ok(())
}
