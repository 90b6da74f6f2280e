use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stiefel_sync::analysis::{
    minlp_objective, pair_gradient, pair_objective_f, potential, potential_pairwise,
};
use stiefel_sync::dynamics::{gradient_rhs, gradient_rhs_split, SwarmState};
use stiefel_sync::graph::Graph;
use stiefel_sync::manifold::{
    project_tangent, project_tangent_split, random_stiefel, retract, sym, StiefelPoint,
};

fn gaussian(n: usize, p: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| r.sample(StandardNormal))
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..8).prop_flat_map(|n| (Just(n), 1..n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_tangent((n, p) in dims(), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = random_stiefel(n, p, &mut r).unwrap();
        let x = gaussian(n, p, &mut r);
        let d = project_tangent(&x, &s).unwrap();
        prop_assert!(sym(&s.matrix().tr_mul(d.matrix())).abs().max() < 1e-12);
        let again = project_tangent(d.matrix(), &s).unwrap();
        prop_assert!((again.matrix() - d.matrix()).abs().max() < 1e-12);
        let split = project_tangent_split(&x, &s).unwrap();
        prop_assert!((split.matrix() - d.matrix()).abs().max() < 1e-12);
        // the residual is normal: orthogonal to every tangent vector
        let other = project_tangent(&gaussian(n, p, &mut r), &s).unwrap();
        prop_assert!((&x - d.matrix()).dot(other.matrix()).abs() < 1e-10 * (1.0 + x.norm_squared()));
    }

    #[test]
    fn retraction_stays_on_manifold((n, p) in dims(), seed in any::<u64>(), t in -3.0f64..3.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = random_stiefel(n, p, &mut r).unwrap();
        let d = project_tangent(&gaussian(n, p, &mut r), &s).unwrap();
        let moved = retract(&s, &d, t).unwrap();
        let gram = moved.matrix().tr_mul(moved.matrix());
        prop_assert!((gram - DMatrix::<f64>::identity(p, p)).abs().max() < 1e-10);
    }

    #[test]
    fn potential_forms_agree((n, p) in dims(), seed in any::<u64>(), agents in 2usize..7) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = Graph::complete(agents).unwrap();
        let state = SwarmState::random(n, p, agents, &mut r).unwrap();
        let a = potential(&state, &g).unwrap();
        let b = potential_pairwise(&state, &g).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        prop_assert!(a >= -1e-12);
    }

    #[test]
    fn field_forms_agree_and_are_equivariant((n, p) in dims(), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = Graph::cycle(5).unwrap();
        let state = SwarmState::random(n, p, 5, &mut r).unwrap();
        let a = gradient_rhs(&state, &g).unwrap();
        let b = gradient_rhs_split(&state, &g).unwrap();
        let q = random_stiefel(n + 1, n, &mut r).unwrap().into_matrix().rows(0, n).into_owned().qr().q();
        let rotated = state.rotate(&q).unwrap();
        let c = gradient_rhs(&rotated, &g).unwrap();
        for i in 0..5 {
            prop_assert!((a[i].matrix() - b[i].matrix()).abs().max() < 1e-12);
            prop_assert!((c[i].matrix() - &q * a[i].matrix()).abs().max() < 1e-12);
            prop_assert!(a[i].is_tangent_at(state.point(i), 1e-12));
        }
    }
}

/// On the boundary `2n = 3(p+1)`, a pair whose cross-Gramian has spectrum
/// `{lambda (m times), 1 (p - m times)}` has `f` equal to the MINLP
/// objective at `(lambda, m)`.
#[test]
fn minlp_objective_is_f_on_spectral_pairs() {
    for (p, n) in [(1usize, 3usize), (3, 6), (5, 9)] {
        for m in 0..=p.min(n - p) {
            for lambda in [0.0, 0.13, 0.5, 0.77, 1.0] {
                let x = DMatrix::<f64>::identity(n, p);
                let mut y = DMatrix::<f64>::identity(n, p);
                for j in 0..m {
                    y[(j, j)] = lambda;
                    y[(p + j, j)] = (1.0 - lambda * lambda).sqrt();
                }
                let x = StiefelPoint::new(x).unwrap();
                let y = StiefelPoint::new(y).unwrap();
                let f = pair_objective_f(&x, &y).unwrap();
                let h = minlp_objective(n, lambda, m);
                assert!(
                    (f - h).abs() < 1e-12,
                    "(p,n)=({p},{n}) m={m} lambda={lambda}: {f} vs {h}"
                );
            }
        }
    }
}

#[test]
fn pair_gradient_matches_finite_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for (p, n) in [(1, 3), (2, 4), (3, 6), (2, 7)] {
        let x = random_stiefel(n, p, &mut r).unwrap();
        let y = random_stiefel(n, p, &mut r).unwrap();
        let (gx, gy) = pair_gradient(&x, &y).unwrap();
        let dx = project_tangent(&gaussian(n, p, &mut r), &x).unwrap();
        let dy = project_tangent(&gaussian(n, p, &mut r), &y).unwrap();
        let at = |t: f64| {
            pair_objective_f(&retract(&x, &dx, t).unwrap(), &retract(&y, &dy, t).unwrap()).unwrap()
        };
        let h = 1e-5;
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let exact = gx.dot(dx.matrix()) + gy.dot(dy.matrix());
        assert!(
            (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
            "{fd} vs {exact}"
        );
    }
}

#[test]
fn edge_sum_is_bounded_by_worst_pair() {
    use stiefel_sync::analysis::{certify_equilibrium, trace_m};
    let mut r = ChaCha8Rng::seed_from_u64(9);
    for (p, n) in [(1, 3), (2, 5), (3, 6)] {
        let s = random_stiefel(n, p, &mut r).unwrap().into_matrix();
        // alternating signs on an even cycle: V_i = -2 S_i
        let mats: Vec<_> = (0..6)
            .map(|i| if i % 2 == 0 { s.clone() } else { -&s })
            .collect();
        let state = SwarmState::from_matrices(mats).unwrap();
        let g = Graph::cycle(6).unwrap();
        assert!(
            certify_equilibrium(&state, &g, 1e-10)
                .unwrap()
                .is_equilibrium
        );
        let half = 0.5 * trace_m(&state, &g).unwrap();
        let worst = g
            .edges()
            .iter()
            .map(|e| pair_objective_f(state.point(e.i), state.point(e.j)).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(half <= g.num_edges() as f64 * worst + 1e-12);
        assert!(half < 0.0);
    }
}

#[test]
fn objective_is_negative_away_from_identity_gramian() {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    for (p, n) in [(1, 3), (1, 4), (2, 5), (3, 6)] {
        let mut checked = 0;
        for k in 0..400 {
            let x = random_stiefel(n, p, &mut r).unwrap();
            // mix far pairs with pairs close to X
            let y = if k % 2 == 0 {
                random_stiefel(n, p, &mut r).unwrap()
            } else {
                let scale = 10f64.powf(r.random_range(-2.5..0.0));
                let d = project_tangent(&gaussian(n, p, &mut r), &x).unwrap();
                retract(&x, &d, scale / d.norm()).unwrap()
            };
            let z = x.matrix().tr_mul(y.matrix());
            if (z - DMatrix::<f64>::identity(p, p)).norm() > 1e-2 {
                let f = pair_objective_f(&x, &y).unwrap();
                assert!(f < -1e-6, "St({p},{n}): f = {f}");
                checked += 1;
            }
        }
        assert!(checked > 250);
    }
}

#[test]
fn stationary_pairs_have_clustered_normal_gramians() {
    use stiefel_sync::analysis::{
        lagrange_residual, maximize_f, spectral_certificate, MaximizeConfig, CLUSTER_TOL,
    };
    let cfg = MaximizeConfig {
        multistarts: 8,
        ..MaximizeConfig::default()
    };
    // includes pairs outside the bound, whose maxima sit at a middle root
    for (p, n) in [(1, 3), (2, 5), (3, 6), (2, 3), (3, 4), (4, 6)] {
        let best = maximize_f(n, p, &cfg, 4).unwrap();
        for run in best.runs.iter().filter(|r| r.converged) {
            let rep = lagrange_residual(&run.x, &run.y).unwrap();
            assert!(rep.skew_defect < 1e-6, "St({p},{n}): {rep:?}");
            assert!(
                rep.max_root_distance() < CLUSTER_TOL,
                "St({p},{n}): {rep:?}"
            );
            let cert = spectral_certificate(&run.x, &run.y, CLUSTER_TOL).unwrap();
            assert!(cert.clustered);
            assert_eq!(cert.m_minus + cert.m_star + cert.m_plus, p);
        }
    }
}
