//! Hessian trace at equilibria: basis sum of the quadratic form versus the
//! closed form in pairwise Gram data.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stiefel_sync::analysis::{basis_trace, quadratic_form_q, trace_m};
use stiefel_sync::dynamics::SwarmState;
use stiefel_sync::graph::Graph;
use stiefel_sync::manifold::{random_stiefel, StiefelPoint};

fn report(name: &str, state: &SwarmState, g: &Graph) -> stiefel_sync::Result<()> {
    let sum = basis_trace(state, g, 1e-9)?;
    let closed = trace_m(state, g)?;
    println!("{name:<32} basis sum {sum:>12.6}  closed form {closed:>12.6}");
    Ok(())
}

fn main() -> stiefel_sync::Result<()> {
    let x = StiefelPoint::from_unit_vector(&[1.0, 0.0, 0.0])?;
    let y = StiefelPoint::from_unit_vector(&[-1.0, 0.0, 0.0])?;
    let pair = SwarmState::new(vec![x, y])?;
    let k2 = Graph::complete(2)?;
    report("antipodal pair, St(1,3)", &pair, &k2)?;
    let mut e2 = DMatrix::zeros(3, 1);
    e2[(1, 0)] = 1.0;
    println!("  q(e2) = {}", quadratic_form_q(&pair, &k2, &e2)?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (p, n) in [(1, 3), (2, 5), (4, 8)] {
        let s = random_stiefel(n, p, &mut rng)?;
        let g = Graph::complete(4)?;
        report(
            &format!("consensus, St({p},{n}), K4"),
            &SwarmState::consensus(s, 4)?,
            &g,
        )?;
    }

    let s = random_stiefel(6, 3, &mut rng)?.into_matrix();
    let flipped = SwarmState::from_matrices(vec![s.clone(), -s])?;
    report("antipodal pair, St(3,6)", &flipped, &k2)?;
    Ok(())
}
