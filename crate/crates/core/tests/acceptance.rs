//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stiefel_sync::analysis::{
    basis_trace, lagrange_residual, maximize_f, potential, quadratic_form_q, solve_integer_program,
    solve_minlp, trace_m, MaximizeConfig, CLUSTER_TOL,
};
use stiefel_sync::dynamics::{
    gradient_rhs, homogeneous_rhs, integrate, integrate_fixed, kuramoto_rhs, FlowConfig,
    HomogeneousDrift, Scheme, SwarmState, TerminationReason,
};
use stiefel_sync::graph::{Graph, GraphSpec};
use stiefel_sync::harness::{run_counterexample, run_monte_carlo, ExperimentConfig, Mode};
use stiefel_sync::manifold::{project_tangent, random_stiefel, retract, StiefelPoint};
use stiefel_sync::seed::derive_seed;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

/// `|a - b| / max(1, |b|)`: relative away from zero, absolute near it.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(n: usize, p: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| r.sample(StandardNormal))
}

fn random_orthogonal(n: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = random_stiefel(n + 1, n, r).unwrap().into_matrix();
    q.rows(0, n).into_owned().qr().q()
}

/// Agent `i` gets the first `p` columns of `R(theta_i) (+) I`.
fn planar_twist(n: usize, p: usize, thetas: &[f64]) -> SwarmState {
    let mats = thetas
        .iter()
        .map(|&t| {
            let mut q = DMatrix::<f64>::identity(n, n);
            q[(0, 0)] = t.cos();
            q[(1, 0)] = t.sin();
            q[(0, 1)] = -t.sin();
            q[(1, 1)] = t.cos();
            q.columns(0, p).into_owned()
        })
        .collect();
    SwarmState::from_matrices(mats).unwrap()
}

fn twisted_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Equilibria with known structure: consensus states, antipodal pairs and
/// planar twists on cycles.
fn equilibrium_zoo() -> Vec<(String, SwarmState, Graph)> {
    let mut zoo = Vec::new();
    let mut r = rng(11);
    for (n, p) in [(2, 1), (3, 1), (4, 2), (5, 3), (6, 2), (7, 4), (8, 4)] {
        for (name, g) in [
            ("cycle(5)", Graph::cycle(5).unwrap()),
            ("path(4)", Graph::path(4).unwrap()),
            ("complete(4)", Graph::complete(4).unwrap()),
        ] {
            let s = random_stiefel(n, p, &mut r).unwrap();
            let state = SwarmState::consensus(s, g.num_vertices()).unwrap();
            zoo.push((format!("consensus St({p},{n}) {name}"), state, g));
        }
    }
    let x = StiefelPoint::from_unit_vector(&[1.0, 0.0, 0.0]).unwrap();
    let y = StiefelPoint::from_unit_vector(&[-1.0, 0.0, 0.0]).unwrap();
    zoo.push((
        "antipodal St(1,3)".into(),
        SwarmState::new(vec![x, y]).unwrap(),
        Graph::complete(2).unwrap(),
    ));
    for (n, p) in [(4, 2), (6, 3)] {
        let s = random_stiefel(n, p, &mut r).unwrap().into_matrix();
        let state = SwarmState::from_matrices(vec![s.clone(), -s]).unwrap();
        zoo.push((
            format!("antipodal St({p},{n})"),
            state,
            Graph::complete(2).unwrap(),
        ));
    }
    for (n, p, size) in [(2, 1, 5), (3, 1, 6), (4, 2, 5), (5, 3, 7)] {
        zoo.push((
            format!("planar twist St({p},{n}) cycle({size})"),
            planar_twist(n, p, &twisted_angles(size)),
            Graph::cycle(size).unwrap(),
        ));
    }
    zoo
}

fn criterion_1() -> Check {
    let zoo = equilibrium_zoo();
    let mut worst = 0.0_f64;
    let mut consensus = 0;
    for (name, state, g) in &zoo {
        let oracle = basis_trace(state, g, 1e-9).map_err(|e| format!("{name}: {e}"))?;
        let closed = trace_m(state, g).map_err(|e| format!("{name}: {e}"))?;
        let err = rel_err(closed, oracle);
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!(
                "{name}: basis sum {oracle} vs closed form {closed}"
            ));
        }
        if name.starts_with("consensus") {
            consensus += 1;
            if closed.abs() > 1e-9 {
                return Err(format!("{name}: trace {closed} at consensus"));
            }
        }
        if name == "antipodal St(1,3)" && rel_err(closed, -8.0) > 1e-9 {
            return Err(format!("antipodal trace {closed}, expected -8"));
        }
    }
    if consensus < 20 {
        return Err(format!("only {consensus} consensus equilibria"));
    }
    Ok(format!(
        "{} equilibria ({consensus} consensus), worst relative error {worst:.2e}",
        zoo.len()
    ))
}

fn criterion_2() -> Check {
    let graphs = [
        GraphSpec::Cycle { n: 6 },
        GraphSpec::Path { n: 5 },
        GraphSpec::Complete { n: 4 },
        GraphSpec::ErdosRenyi {
            n: 8,
            edge_prob: 0.4,
            seed: Some(2024),
        },
    ];
    let mut total = 0;
    let mut worst_distance = 0.0_f64;
    for (k, (p, n)) in [(1, 3), (1, 4), (2, 5), (3, 6)].into_iter().enumerate() {
        for (l, spec) in graphs.iter().enumerate() {
            let cfg = ExperimentConfig {
                graph: Some(spec.clone()),
                trials: 100,
                seed: derive_seed(7, (4 * k + l) as u64),
                ..base_config(Mode::MonteCarlo, n, p)
            };
            let report = run_monte_carlo(&cfg).map_err(|e| e.to_string())?;
            let s = &report.summary;
            if s.consensus != s.trials {
                return Err(format!(
                    "St({p},{n}) {spec:?}: {} consensus, {} non-consensus, {} timeout",
                    s.consensus, s.non_consensus_equilibrium, s.timeout
                ));
            }
            for t in &report.trials {
                worst_distance = worst_distance.max(t.final_consensus_distance);
            }
            total += s.trials;
        }
    }
    if worst_distance >= 1e-6 {
        return Err(format!("final edge distance {worst_distance:e}"));
    }
    Ok(format!(
        "{total} trials all reached consensus, largest final edge distance {worst_distance:.2e}"
    ))
}

fn base_config(mode: Mode, n: usize, p: usize) -> ExperimentConfig {
    let json = format!(r#"{{"mode": "certify", "manifold": {{"n": {n}, "p": {p}}}}}"#);
    let mut cfg = ExperimentConfig::from_json_str(&json).unwrap();
    cfg.mode = mode;
    cfg
}

fn criterion_3() -> Check {
    let mut cfg = base_config(Mode::Counterexample, 2, 1);
    cfg.seed = 3;
    let report = run_counterexample(&cfg).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for c in &report.cases {
        let ok = if c.n <= 4 {
            c.reason == TerminationReason::Consensus
        } else {
            c.reason != TerminationReason::Consensus && c.final_twisted_distance < 1e-3
        };
        if !ok {
            return Err(format!(
                "N = {}: {:?}, twisted distance {:e}",
                c.n, c.reason, c.final_twisted_distance
            ));
        }
        parts.push(format!("N={} {:?}", c.n, c.reason));
    }
    Ok(parts.join(", "))
}

fn criterion_4() -> Check {
    let cfg = MaximizeConfig::default();
    let mut parts = Vec::new();
    for (p, n) in [(1, 3), (1, 4), (2, 5), (3, 6)] {
        let best = maximize_f(n, p, &cfg, 17).map_err(|e| format!("St({p},{n}): {e}"))?;
        let z = best.x.matrix().tr_mul(best.y.matrix());
        let dev = (z - DMatrix::<f64>::identity(p, p)).norm();
        if best.value > 1e-8 || dev >= 1e-4 {
            return Err(format!(
                "St({p},{n}): max f {:e}, ||Z - I|| {dev:e}",
                best.value
            ));
        }
        let mut worst_res = 0.0_f64;
        let mut worst_root = 0.0_f64;
        let mut stationary = 0;
        for run in best.runs.iter().filter(|r| r.converged) {
            let rep = lagrange_residual(&run.x, &run.y).map_err(|e| e.to_string())?;
            worst_res = worst_res.max(rep.residual_x).max(rep.residual_y);
            worst_root = worst_root.max(rep.max_root_distance());
            stationary += 1;
        }
        if worst_res >= 1e-6 || worst_root >= CLUSTER_TOL {
            return Err(format!(
                "St({p},{n}): Lagrange residual {worst_res:e}, root distance {worst_root:e}"
            ));
        }
        parts.push(format!(
            "St({p},{n}) max f {:.1e} ||Z-I|| {dev:.1e} ({stationary}/{} stationary)",
            best.value,
            best.runs.len()
        ));
    }
    Ok(parts.join("; "))
}

fn criterion_5() -> Check {
    let mut count = 0;
    for n in 2..=12 {
        for p in 1..n {
            let s = solve_integer_program(n, p).map_err(|e| e.to_string())?;
            if s.m_plus_opt != p || !s.recurrence_holds {
                return Err(format!("(p, n) = ({p}, {n}): {s:?}"));
            }
            let exact = s
                .objective_table
                .windows(2)
                .enumerate()
                .all(|(m, w)| w[1] - w[0] == 2 * (n as i64 - m as i64));
            if !exact {
                return Err(format!("(p, n) = ({p}, {n}): recurrence differs"));
            }
            count += 1;
        }
    }
    for (p, n) in [(1, 3), (3, 6), (5, 9)] {
        let s = solve_minlp(n, p, 1001).map_err(|e| e.to_string())?;
        if s.objective != 0.0 || s.maximizers.iter().any(|&(l, m)| l != 1.0 && m != 0) {
            return Err(format!("MINLP ({p}, {n}): {s:?}"));
        }
    }
    Ok(format!("{count} integer programs, 3 MINLPs"))
}

fn criterion_6() -> Check {
    let graphs = [
        Graph::cycle(5).unwrap(),
        Graph::path(4).unwrap(),
        Graph::complete(4).unwrap(),
        Graph::from_weighted_edges(4, &[(0, 1, 0.5), (1, 2, 2.0), (2, 3, 1.5), (0, 3, 0.7)])
            .unwrap(),
    ];
    let dims = [(1, 2), (1, 3), (2, 4), (3, 5), (2, 6)];
    let mut r = rng(23);
    let mut worst_grad = 0.0_f64;
    let t = 1e-5;
    for k in 0..100 {
        let g = &graphs[k % graphs.len()];
        let (p, n) = dims[k % dims.len()];
        let state = SwarmState::random(n, p, g.num_vertices(), &mut r).unwrap();
        let rhs = gradient_rhs(&state, g).unwrap();
        // steepest descent plus one random tangent direction
        let random: Vec<DMatrix<f64>> = state
            .points()
            .iter()
            .map(|s| {
                project_tangent(&gaussian(n, p, &mut r), s)
                    .unwrap()
                    .into_matrix()
            })
            .collect();
        let descent: Vec<DMatrix<f64>> = rhs.iter().map(|v| v.matrix().clone()).collect();
        for dir in [descent, random] {
            let moved = |h: f64| {
                let pts = state
                    .points()
                    .iter()
                    .zip(&dir)
                    .map(|(s, d)| retract(s, &project_tangent(d, s).unwrap(), h).unwrap())
                    .collect();
                potential(&SwarmState::new(pts).unwrap(), g).unwrap()
            };
            let fd = (moved(t) - moved(-t)) / (2.0 * t);
            let exact: f64 = -rhs
                .iter()
                .zip(&dir)
                .map(|(v, d)| v.matrix().dot(d))
                .sum::<f64>();
            let scale = exact.abs().max(
                rhs.iter().map(|v| v.norm().powi(2)).sum::<f64>().sqrt()
                    * dir.iter().map(|d| d.norm_squared()).sum::<f64>().sqrt(),
            );
            let err = (fd - exact).abs() / scale;
            worst_grad = worst_grad.max(err);
            if err >= 1e-5 {
                return Err(format!("gradient instance {k}: fd {fd}, exact {exact}"));
            }
        }
    }

    let mut worst_hess = 0.0_f64;
    let mut checked = 0;
    let h = 1e-4;
    for (name, state, g) in equilibrium_zoo() {
        let (n, p) = state.dims();
        let u0 = potential(&state, &g).unwrap();
        for _ in 0..4 {
            let delta = gaussian(n, p, &mut r);
            let q = quadratic_form_q(&state, &g, &delta).map_err(|e| format!("{name}: {e}"))?;
            let along = |s: f64| {
                let pts = state
                    .points()
                    .iter()
                    .map(|x| retract(x, &project_tangent(&delta, x).unwrap(), s).unwrap())
                    .collect();
                potential(&SwarmState::new(pts).unwrap(), &g).unwrap()
            };
            let fd = (along(h) - 2.0 * u0 + along(-h)) / (h * h);
            let err = rel_err(fd, q);
            worst_hess = worst_hess.max(err);
            if err >= 1e-4 {
                return Err(format!("{name}: second difference {fd}, q {q}"));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "gradient worst {worst_grad:.1e} over 200 directions; q worst {worst_hess:.1e} over {checked} directions"
    ))
}

fn criterion_7() -> Check {
    let mut r = rng(31);
    let mut parts = Vec::new();

    // drift and monotonicity along full default-step trajectories
    let mut worst_defect = 0.0_f64;
    let mut worst_rise = 0.0_f64;
    for (k, (p, n)) in [(1, 3), (1, 4), (2, 5), (3, 6), (1, 2)]
        .into_iter()
        .enumerate()
    {
        let g = match k % 3 {
            0 => Graph::cycle(6).unwrap(),
            1 => Graph::path(5).unwrap(),
            _ => Graph::complete(4).unwrap(),
        };
        for _ in 0..10 {
            let state = SwarmState::random(n, p, g.num_vertices(), &mut r).unwrap();
            let out = integrate(&state, &g, &FlowConfig::default()).map_err(|e| e.to_string())?;
            worst_defect = worst_defect.max(out.max_orthonormality_defect);
            worst_rise = worst_rise.max(out.max_potential_increase);
        }
    }
    if worst_defect >= 1e-8 || worst_rise > 1e-9 {
        return Err(format!(
            "orthonormality drift {worst_defect:e}, potential rise {worst_rise:e}"
        ));
    }
    parts.push(format!("drift {worst_defect:.1e}, U rise {worst_rise:.1e}"));

    // Kuramoto form on St(1, 2)
    let mut worst_kura = 0.0_f64;
    for size in [3, 5, 8] {
        let g = Graph::complete(size).unwrap();
        let thetas: Vec<f64> = (0..size).map(|_| r.random_range(-PI..PI)).collect();
        let state = SwarmState::from_angles(&thetas).unwrap();
        let rhs = gradient_rhs(&state, &g).unwrap();
        let dtheta = kuramoto_rhs(&thetas, &g).unwrap();
        for ((v, dt), th) in rhs.iter().zip(&dtheta).zip(&thetas) {
            let m = v.matrix();
            worst_kura = worst_kura
                .max((m[(0, 0)] + dt * th.sin()).abs())
                .max((m[(1, 0)] - dt * th.cos()).abs());
        }
    }
    if worst_kura >= 1e-12 {
        return Err(format!("Kuramoto mismatch {worst_kura:e}"));
    }
    parts.push(format!("Kuramoto {worst_kura:.1e}"));

    // common drift removed by a change of variables
    let (n, p) = (4, 2);
    let g = Graph::cycle(5).unwrap();
    let skew = |m: DMatrix<f64>| (&m - m.transpose()) * 0.5;
    let omega = skew(gaussian(n, n, &mut r));
    let xi = skew(gaussian(p, p, &mut r));
    let drift = HomogeneousDrift::new(omega.clone(), xi.clone()).unwrap();
    let state0 = SwarmState::random(n, p, 5, &mut r).unwrap();
    let (h, steps) = (0.01, 500);
    let plain = integrate_fixed(&state0, &g, None, h, steps, Scheme::Rk4).unwrap();
    let drifted = integrate_fixed(&state0, &g, Some(&drift), h, steps, Scheme::Rk4).unwrap();
    let mut worst_remark = 0.0_f64;
    for (k, (s, x)) in plain.iter().zip(&drifted).enumerate() {
        let t = k as f64 * h;
        let left = (&omega * t).exp();
        let right = (&xi * t).exp();
        for (sp, xp) in s.points().iter().zip(x.points()) {
            let mapped = &left * sp.matrix() * &right;
            worst_remark = worst_remark.max((mapped - xp.matrix()).norm());
        }
    }
    if worst_remark >= 1e-6 {
        return Err(format!("change of variables mismatch {worst_remark:e}"));
    }
    let field = homogeneous_rhs(&state0, &g, &omega, &xi).unwrap();
    let base = gradient_rhs(&state0, &g).unwrap();
    let drift_gap = field
        .iter()
        .zip(&base)
        .zip(state0.points())
        .map(|((f, b), s)| (f - b.matrix() - &omega * s.matrix() - s.matrix() * &xi).norm())
        .fold(0.0, f64::max);
    if drift_gap >= 1e-12 {
        return Err(format!("drift field mismatch {drift_gap:e}"));
    }
    parts.push(format!("change of variables {worst_remark:.1e}"));

    // SO(n) x O(p) equivariance
    let mut worst_eq = 0.0_f64;
    for (p, n) in [(1, 3), (2, 5), (3, 6)] {
        let g = Graph::complete(4).unwrap();
        let state = SwarmState::random(n, p, 4, &mut r).unwrap();
        let q = random_orthogonal(n, &mut r);
        let rp = random_orthogonal(p, &mut r);
        let moved = SwarmState::from_matrices(
            state
                .points()
                .iter()
                .map(|s| &q * s.matrix() * &rp)
                .collect(),
        )
        .unwrap();
        let a = gradient_rhs(&moved, &g).unwrap();
        let b = gradient_rhs(&state, &g).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst_eq = worst_eq.max((x.matrix() - &q * y.matrix() * &rp).abs().max());
        }
    }
    if worst_eq >= 1e-12 {
        return Err(format!("equivariance defect {worst_eq:e}"));
    }
    parts.push(format!("equivariance {worst_eq:.1e}"));
    Ok(parts.join(", "))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 trace oracle", criterion_1, Duration::from_secs(10)),
        (
            "2 connected graphs synchronize",
            criterion_2,
            Duration::from_secs(300),
        ),
        (
            "3 twisted-state counterexample",
            criterion_3,
            Duration::from_secs(30),
        ),
        (
            "4 pair objective maximum",
            criterion_4,
            Duration::from_secs(60),
        ),
        ("5 integer programs", criterion_5, Duration::from_secs(1)),
        (
            "6 gradient and Hessian oracles",
            criterion_6,
            Duration::from_secs(30),
        ),
        (
            "7 structural invariants",
            criterion_7,
            Duration::from_secs(60),
        ),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = if elapsed > budget {
            format!(" [over budget: {elapsed:.2?} > {budget:?}]")
        } else {
            String::new()
        };
        match outcome {
            Ok(msg) => println!("criterion {name}: PASS ({elapsed:.2?}) {msg}{over}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({elapsed:.2?}) {msg}{over}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
