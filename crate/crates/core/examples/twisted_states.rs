//! Twisted states on the circle: unstable on short cycles, stable from N = 5.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiefel_sync::analysis::escape_direction;
use stiefel_sync::dynamics::{integrate, twisted_distance, twisted_state, FlowConfig, SwarmState};
use stiefel_sync::graph::Graph;

fn main() -> stiefel_sync::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 3..=8 {
        let g = Graph::cycle(n)?;
        let exact = SwarmState::from_angles(&twisted_state(n, 1)?)?;
        // second-order test only applies where the linearization is informative
        let escape = escape_direction(&exact, &g, 64, &mut rng)?;

        let perturbed: Vec<f64> = twisted_state(n, 1)?
            .into_iter()
            .map(|t| t + 1e-2 * rng.random_range(-1.0..1.0))
            .collect();
        let out = integrate(
            &SwarmState::from_angles(&perturbed)?,
            &g,
            &FlowConfig::default(),
        )?;
        println!(
            "N = {n}: escape direction {:<28} flow ends in {:<24} twisted distance {:.2e}",
            match &escape {
                Some(e) => format!("found (q = {:.3})", e.q_value),
                None => "none".to_string(),
            },
            out.reason.as_str(),
            twisted_distance(&out.final_state, 1)?
        );
    }
    Ok(())
}
