use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use crate::analysis::{
    certify_equilibrium, is_boundary_case, lagrange_residual, maximize_f, solve_integer_program,
    solve_minlp, spectral_certificate, synchronization_bound, EquilibriumCertificate,
    IntegerProgramSolution, LagrangeReport, MinlpSolution, PairMaximum, SpectralCertificate,
    CLUSTER_TOL, EQUILIBRIUM_TOL,
};
use crate::dynamics::{
    integrate, twisted_distance, twisted_state, FlowConfig, FlowOutcome, SwarmState,
    TerminationReason, Trajectory,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed::derive_seed;

/// Acceptance thresholds for certificates on pairs satisfying the bound.
pub const MAX_F_TOL: f64 = 1e-8;
pub const Z_IDENTITY_TOL: f64 = 1e-4;
pub const LAGRANGE_TOL: f64 = 1e-6;

pub(crate) fn with_pool<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub reason: TerminationReason,
    pub final_potential: f64,
    pub final_consensus_distance: f64,
    pub iterations: usize,
    pub wall_ms: u64,
    /// The first attempt timed out and the trial was rerun with doubled
    /// `max_time`.
    pub retried: bool,
    #[serde(skip)]
    pub certificate: Option<EquilibriumCertificate>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonConsensusTrial {
    pub trial: usize,
    pub seed: u64,
    pub certificate: EquilibriumCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub consensus: usize,
    pub non_consensus_equilibrium: usize,
    pub timeout: usize,
    pub retried: usize,
    /// `consensus / trials`; timeouts count against it but are listed apart.
    pub consensus_fraction: f64,
    pub graph_vertices: usize,
    pub graph_edges: Vec<(usize, usize)>,
    pub non_consensus_trials: Vec<NonConsensusTrial>,
}

#[derive(Clone, Debug)]
pub struct MonteCarloReport {
    pub config: ExperimentConfig,
    pub summary: MonteCarloSummary,
    pub trials: Vec<TrialResult>,
}

fn run_trial(cfg: &ExperimentConfig, g: &Graph, trial: usize) -> Result<TrialResult> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state0 = SwarmState::random(cfg.manifold.n, cfg.manifold.p, g.num_vertices(), &mut rng)?;
    let started = Instant::now();
    let mut outcome = integrate(&state0, g, &cfg.flow)?;
    let mut retried = false;
    if outcome.reason == TerminationReason::Timeout {
        let doubled = FlowConfig {
            max_time: 2.0 * cfg.flow.max_time,
            ..cfg.flow.clone()
        };
        outcome = integrate(&state0, g, &doubled)?;
        retried = true;
    }
    let wall_ms = if cfg.record_wall_time {
        started.elapsed().as_millis() as u64
    } else {
        0
    };
    let certificate = if outcome.reason == TerminationReason::NonConsensusEquilibrium {
        Some(certify_equilibrium(
            &outcome.final_state,
            g,
            EQUILIBRIUM_TOL,
        )?)
    } else {
        None
    };
    let FlowOutcome {
        reason,
        final_potential,
        final_edge_distance,
        steps,
        trajectory,
        ..
    } = outcome;
    Ok(TrialResult {
        trial,
        seed,
        reason,
        final_potential,
        final_consensus_distance: final_edge_distance,
        iterations: steps,
        wall_ms,
        retried,
        certificate,
        trajectory: (cfg.flow.record_every > 0).then_some(trajectory),
    })
}

/// Samples uniform initial configurations, integrates each, and tallies
/// termination reasons. Rejects disconnected graphs.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let spec = cfg
        .graph
        .as_ref()
        .ok_or_else(|| Error::Config("monte_carlo mode needs a `graph`".into()))?;
    let g = spec.build(cfg.seed)?;
    if !g.is_connected() {
        return Err(Error::Graph("graph is disconnected".into()));
    }
    let trials = with_pool(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|k| run_trial(cfg, &g, k))
            .collect::<Result<Vec<_>>>()
    })??;

    let count = |r: TerminationReason| trials.iter().filter(|t| t.reason == r).count();
    let consensus = count(TerminationReason::Consensus);
    let summary = MonteCarloSummary {
        trials: trials.len(),
        consensus,
        non_consensus_equilibrium: count(TerminationReason::NonConsensusEquilibrium),
        timeout: count(TerminationReason::Timeout),
        retried: trials.iter().filter(|t| t.retried).count(),
        consensus_fraction: consensus as f64 / trials.len() as f64,
        graph_vertices: g.num_vertices(),
        graph_edges: g.edges().iter().map(|e| (e.i, e.j)).collect(),
        non_consensus_trials: trials
            .iter()
            .filter_map(|t| {
                t.certificate.as_ref().map(|c| NonConsensusTrial {
                    trial: t.trial,
                    seed: t.seed,
                    certificate: c.clone(),
                })
            })
            .collect(),
    };
    Ok(MonteCarloReport {
        config: cfg.clone(),
        summary,
        trials,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleCase {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub reason: TerminationReason,
    pub final_twisted_distance: f64,
    pub final_consensus_distance: f64,
    pub final_time: f64,
    pub reached_consensus: bool,
    pub returned_to_twisted: bool,
    /// Consensus for `N <= 4`, twisted state for `N >= 5`.
    pub matches_expectation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub config: ExperimentConfig,
    pub cases: Vec<CounterexampleCase>,
    pub all_match: bool,
}

/// Perturbed twisted states on `cycle(N)` in `St(1, 2)`, integrated to
/// termination.
pub fn run_counterexample(cfg: &ExperimentConfig) -> Result<CounterexampleReport> {
    cfg.validate()?;
    let ce = &cfg.counterexample;
    let run = |size: usize| -> Result<CounterexampleCase> {
        let seed = derive_seed(cfg.seed, size as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let thetas: Vec<f64> = twisted_state(size, ce.winding)?
            .into_iter()
            .map(|t| t + ce.perturbation * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let g = Graph::cycle(size)?;
        let state = SwarmState::from_angles(&thetas)?;
        let mut out = integrate(&state, &g, &cfg.flow)?;
        if out.reason == TerminationReason::Timeout {
            let doubled = FlowConfig {
                max_time: 2.0 * cfg.flow.max_time,
                ..cfg.flow.clone()
            };
            out = integrate(&state, &g, &doubled)?;
        }
        let dist = twisted_distance(&out.final_state, ce.winding)?;
        let reached_consensus = out.reason == TerminationReason::Consensus;
        let returned_to_twisted =
            out.reason == TerminationReason::NonConsensusEquilibrium && dist < ce.twisted_tol;
        let matches_expectation = if size <= 4 {
            reached_consensus
        } else {
            returned_to_twisted
        };
        Ok(CounterexampleCase {
            n: size,
            seed,
            reason: out.reason,
            final_twisted_distance: dist,
            final_consensus_distance: out.final_edge_distance,
            final_time: out.final_time,
            reached_consensus,
            returned_to_twisted,
            matches_expectation,
        })
    };
    let cases = with_pool(cfg.threads, || {
        ce.sizes
            .par_iter()
            .map(|&s| run(s))
            .collect::<Result<Vec<_>>>()
    })??;
    let all_match = cases.iter().all(|c| c.matches_expectation);
    Ok(CounterexampleReport {
        config: cfg.clone(),
        cases,
        all_match,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairMaximumSummary {
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `||X^T Y - I||` at the maximizer.
    pub z_identity_deviation: f64,
    pub lagrange: LagrangeReport,
    pub spectral: SpectralCertificate,
    pub converged_runs: usize,
    /// Largest Lagrange residual over every converged start.
    pub max_lagrange_residual: f64,
    /// Largest eigenvalue-to-root distance over every converged start.
    pub max_root_distance: f64,
}

fn summarize_maximum(best: &PairMaximum, converged: bool) -> Result<PairMaximumSummary> {
    let z = best.x.matrix().tr_mul(best.y.matrix());
    let p = z.nrows();
    let mut max_lagrange = 0.0_f64;
    let mut max_root = 0.0_f64;
    let mut converged_runs = 0;
    for run in best.runs.iter().filter(|r| r.converged) {
        let rep = lagrange_residual(&run.x, &run.y)?;
        max_lagrange = max_lagrange.max(rep.residual_x).max(rep.residual_y);
        max_root = max_root.max(rep.max_root_distance());
        converged_runs += 1;
    }
    Ok(PairMaximumSummary {
        value: best.value,
        grad_norm: best.grad_norm,
        iterations: best.iterations,
        converged,
        z_identity_deviation: (z - nalgebra::DMatrix::<f64>::identity(p, p)).norm(),
        lagrange: lagrange_residual(&best.x, &best.y)?,
        spectral: spectral_certificate(&best.x, &best.y, CLUSTER_TOL)?,
        converged_runs,
        max_lagrange_residual: max_lagrange,
        max_root_distance: max_root,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub config: ExperimentConfig,
    pub p: usize,
    pub n: usize,
    pub bound_holds: bool,
    /// The bound fails, so the numbers below carry no synchronization claim.
    pub exploratory: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integer_program: Option<IntegerProgramSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minlp: Option<MinlpSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maximize_f: Option<PairMaximumSummary>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Runs the bound check, the integer programs and the pair maximization
/// selected by the config's mode.
pub fn run_certification(cfg: &ExperimentConfig) -> Result<CertificationReport> {
    cfg.validate()?;
    let (n, p) = (cfg.manifold.n, cfg.manifold.p);
    let (do_programs, do_maximize) = match cfg.mode {
        Mode::Certify => (true, true),
        Mode::IntegerPrograms => (true, false),
        Mode::MaximizeF => (false, true),
        other => {
            return Err(Error::Config(format!(
                "mode {other:?} is not a certification mode"
            )))
        }
    };
    let bound_holds = synchronization_bound(p, n);
    let mut failures = Vec::new();

    let integer_program = if do_programs {
        let s = solve_integer_program(n, p)?;
        if s.m_plus_opt != p {
            failures.push(format!(
                "integer program optimum m_plus = {} != p",
                s.m_plus_opt
            ));
        }
        if !s.recurrence_holds {
            failures.push("integer program recurrence violated".into());
        }
        Some(s)
    } else {
        None
    };

    let minlp = if do_programs && is_boundary_case(p, n) {
        let s = solve_minlp(n, p, cfg.minlp_grid)?;
        if s.objective != 0.0 || s.maximizers.iter().any(|&(l, m)| l != 1.0 && m != 0) {
            failures.push("MINLP optimum not confined to lambda* = 1 or m* = 0".into());
        }
        Some(s)
    } else {
        None
    };

    let maximize = if do_maximize {
        let (best, converged) =
            match with_pool(cfg.threads, || maximize_f(n, p, &cfg.maximize, cfg.seed))? {
                Ok(b) => (b, true),
                Err(Error::NonConvergence { best, .. }) => (*best, false),
                Err(e) => return Err(e),
            };
        let s = summarize_maximum(&best, converged)?;
        if bound_holds {
            if !converged {
                failures.push(format!("ascent not stationary (grad {:e})", s.grad_norm));
            }
            if s.value > MAX_F_TOL {
                failures.push(format!("max f = {:e} exceeds {MAX_F_TOL:e}", s.value));
            }
            if s.z_identity_deviation >= Z_IDENTITY_TOL {
                failures.push(format!(
                    "||X^T Y - I|| = {:e} at the maximizer",
                    s.z_identity_deviation
                ));
            }
            if s.max_lagrange_residual >= LAGRANGE_TOL {
                failures.push(format!(
                    "Lagrange residual {:e} at a stationary point",
                    s.max_lagrange_residual
                ));
            }
            if s.max_root_distance >= CLUSTER_TOL {
                failures.push(format!(
                    "eigenvalue of Z {:e} away from {{-1, lambda*, 1}}",
                    s.max_root_distance
                ));
            }
        }
        Some(s)
    } else {
        None
    };

    let passed = !bound_holds || failures.is_empty();
    Ok(CertificationReport {
        config: cfg.clone(),
        p,
        n,
        bound_holds,
        exploratory: !bound_holds,
        integer_program,
        minlp,
        maximize_f: maximize,
        failures,
        passed,
    })
}
