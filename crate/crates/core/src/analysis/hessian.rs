//! Second-order information at equilibria.
//!
//! For a common perturbation `D in R^{n x p}` applied to every agent through
//! its own tangent projection `D_i = P_i(D)`, the intrinsic Hessian of the
//! potential gives the quadratic form
//!
//! ```text
//! q(D) = -2 sum_{e = {i,k}} a_ik <D_i, D_k>
//!        + sum_i <D_i, S_i sym(V_i^T D_i) + D_i P_i>,
//! ```
//!
//! valid only where `V_i = S_i P_i` with `P_i` symmetric. Summing `q` over
//! the elemental basis `E_st` gives a closed form in the pairwise Gram data;
//! [`trace_m`] evaluates that closed form and [`basis_trace`] the sum.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::equilibrium::{certify_equilibrium, EquilibriumCertificate, EQUILIBRIUM_TOL};
use crate::dynamics::{neighbor_sum, SwarmState};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::manifold::{check_same_shape, project_raw, sym};

/// Edge distance below which an equilibrium counts as consensus.
pub const CONSENSUS_DISTANCE_TOL: f64 = 1e-6;

/// Threshold for reporting a direction of negative curvature.
pub const ESCAPE_THRESHOLD: f64 = -1e-10;

fn require_equilibrium(state: &SwarmState, g: &Graph, tol: f64) -> Result<EquilibriumCertificate> {
    let cert = certify_equilibrium(state, g, tol)?;
    if !cert.is_equilibrium {
        return Err(Error::NotEquilibrium {
            max_residual: cert.max_residual(),
            tol,
        });
    }
    Ok(cert)
}

/// Evaluates `q` for a batch of perturbations once the equilibrium data has
/// been computed.
struct QuadraticForm<'a> {
    mats: Vec<DMatrix<f64>>,
    vs: Vec<DMatrix<f64>>,
    ps: Vec<DMatrix<f64>>,
    g: &'a Graph,
}

impl<'a> QuadraticForm<'a> {
    fn new(state: &SwarmState, g: &'a Graph) -> Self {
        let mats = state.matrices();
        let vs: Vec<_> = (0..mats.len()).map(|i| neighbor_sum(&mats, g, i)).collect();
        let ps = mats
            .iter()
            .zip(&vs)
            .map(|(s, v)| sym(&s.tr_mul(v)))
            .collect();
        Self { mats, vs, ps, g }
    }

    fn eval(&self, delta: &DMatrix<f64>) -> f64 {
        let projected: Vec<_> = self.mats.iter().map(|s| project_raw(delta, s)).collect();
        let cross: f64 = self
            .g
            .edges()
            .iter()
            .map(|e| -e.weight * projected[e.i].dot(&projected[e.j]))
            .sum();
        let diag: f64 = (0..self.mats.len())
            .map(|i| {
                let d = &projected[i];
                let block = &self.mats[i] * sym(&self.vs[i].tr_mul(d)) + d * &self.ps[i];
                d.dot(&block)
            })
            .sum();
        2.0 * cross + diag
    }
}

/// `q(D)` at an equilibrium, certified with [`EQUILIBRIUM_TOL`].
pub fn quadratic_form_q(state: &SwarmState, g: &Graph, delta: &DMatrix<f64>) -> Result<f64> {
    quadratic_form_q_with_tol(state, g, delta, EQUILIBRIUM_TOL)
}

pub fn quadratic_form_q_with_tol(
    state: &SwarmState,
    g: &Graph,
    delta: &DMatrix<f64>,
    tol: f64,
) -> Result<f64> {
    require_equilibrium(state, g, tol)?;
    check_same_shape(state.point(0).matrix(), delta)?;
    Ok(QuadraticForm::new(state, g).eval(delta))
}

/// `sum_{s,t} q(E_st)` over the `n p` elemental matrices.
pub fn basis_trace(state: &SwarmState, g: &Graph, tol: f64) -> Result<f64> {
    require_equilibrium(state, g, tol)?;
    let form = QuadraticForm::new(state, g);
    let (n, p) = state.dims();
    let mut total = 0.0;
    for s in 0..n {
        for t in 0..p {
            let mut e = DMatrix::zeros(n, p);
            e[(s, t)] = 1.0;
            total += form.eval(&e);
        }
    }
    Ok(total)
}

/// Per-edge term of the closed-form trace; identical to the pair objective
/// evaluated on the edge's endpoints.
pub(crate) fn trace_edge_term(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (n, p) = x.shape();
    let (n, p) = (n as f64, p as f64);
    let c = x.dot(y);
    let cross = x.tr_mul(y).norm_squared();
    (n - 0.5 * (p + 1.0)) * c - 0.25 * (p + 2.0) * cross - 0.25 * c * c + (1.0 - n + p) * p
}

/// Closed-form `tr M = 2 sum_e [ (n - (p+1)/2) <S_k, S_i> - (p+2)/4 ||S_k^T S_i||^2
/// - 1/4 <S_k, S_i>^2 + (1 - n + p) p ]`. Unit weights only.
pub fn trace_m(state: &SwarmState, g: &Graph) -> Result<f64> {
    state.check_graph(g)?;
    if let Some(e) = g.first_non_unit_edge() {
        return Err(Error::NonUnitWeights {
            edge: (e.i, e.j),
            weight: e.weight,
        });
    }
    let half: f64 = g
        .edges()
        .iter()
        .map(|e| trace_edge_term(state.point(e.i).matrix(), state.point(e.j).matrix()))
        .sum();
    Ok(2.0 * half)
}

/// A common perturbation with `q < 0`.
#[derive(Clone, Debug)]
pub struct EscapeDirection {
    pub delta: DMatrix<f64>,
    pub q_value: f64,
}

/// Searches the elemental basis and `attempts` unit-norm Gaussian
/// perturbations for the most negative `q`. Returns `None` when nothing
/// falls below [`ESCAPE_THRESHOLD`].
///
/// Rejects inputs that are not equilibria or are consensus states.
pub fn escape_direction<R: Rng + ?Sized>(
    state: &SwarmState,
    g: &Graph,
    attempts: usize,
    rng: &mut R,
) -> Result<Option<EscapeDirection>> {
    require_equilibrium(state, g, EQUILIBRIUM_TOL)?;
    if state.max_edge_distance(g) < CONSENSUS_DISTANCE_TOL {
        return Err(Error::ConsensusState);
    }
    let form = QuadraticForm::new(state, g);
    let (n, p) = state.dims();
    let mut best: Option<EscapeDirection> = None;
    let mut consider = |delta: DMatrix<f64>| {
        let q = form.eval(&delta);
        if q < ESCAPE_THRESHOLD && best.as_ref().is_none_or(|b| q < b.q_value) {
            best = Some(EscapeDirection { delta, q_value: q });
        }
    };
    for s in 0..n {
        for t in 0..p {
            let mut e = DMatrix::zeros(n, p);
            e[(s, t)] = 1.0;
            consider(e);
        }
    }
    for _ in 0..attempts {
        let d = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let norm = d.norm();
        consider(d / norm);
    }
    Ok(best)
}
