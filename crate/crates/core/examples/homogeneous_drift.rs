//! A common drift `Omega S + S Xi` only rotates the drift-free solution:
//! `X(t) = exp(t Omega) S(t) exp(t Xi)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stiefel_sync::dynamics::{integrate_fixed, HomogeneousDrift, Scheme, SwarmState};
use stiefel_sync::graph::Graph;

fn skew(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    (&a - a.transpose()) * 0.5
}

fn main() -> stiefel_sync::Result<()> {
    let (n, p) = (4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = Graph::path(4)?;
    let (omega, xi) = (skew(n, &mut rng), skew(p, &mut rng));
    let drift = HomogeneousDrift::new(omega.clone(), xi.clone())?;
    let s0 = SwarmState::random(n, p, 4, &mut rng)?;

    let h = 0.01;
    let plain = integrate_fixed(&s0, &g, None, h, 1000, Scheme::Rk4)?;
    let drifted = integrate_fixed(&s0, &g, Some(&drift), h, 1000, Scheme::Rk4)?;
    for k in (0..=1000).step_by(200) {
        let t = k as f64 * h;
        let (l, r) = ((&omega * t).exp(), (&xi * t).exp());
        let gap = plain[k]
            .points()
            .iter()
            .zip(drifted[k].points())
            .map(|(s, x)| (&l * s.matrix() * &r - x.matrix()).norm())
            .fold(0.0, f64::max);
        println!("t = {t:5.2}  max |exp(t Omega) S exp(t Xi) - X| = {gap:.2e}");
    }
    Ok(())
}
