//! The consensus gradient flow on `St(p, n)^N`,
//!
//! ```text
//! dS_i/dt = P_i( sum_{j in N(i)} a_ij S_j ),
//! ```
//!
//! its time integration, the polar-coordinate (Kuramoto) form on `St(1, 2)`,
//! and the variant with a common drift `dS_i/dt = Omega S_i + S_i Xi + ...`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::potential_raw;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::manifold::{
    chordal_raw, max_abs, orthonormality_defect, polar_factor, project_raw, random_stiefel,
    retract_raw, skew, StiefelPoint, TangentVector,
};

/// Ordered configuration of `N` agents sharing one `(n, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState {
    points: Vec<StiefelPoint>,
}

impl SwarmState {
    pub fn new(points: Vec<StiefelPoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            for pt in &points[1..] {
                if pt.dims() != first.dims() {
                    return Err(Error::Mismatch {
                        expected: first.dims(),
                        got: pt.dims(),
                    });
                }
            }
        } else {
            return Err(Error::Config("swarm needs at least one agent".into()));
        }
        Ok(Self { points })
    }

    /// Wraps raw matrices, checking orthonormality at [`ORTH_TOL`](crate::manifold::ORTH_TOL).
    pub fn from_matrices(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let points = mats
            .into_iter()
            .map(StiefelPoint::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub(crate) fn from_matrices_unchecked(mats: Vec<DMatrix<f64>>) -> Self {
        Self {
            points: mats
                .into_iter()
                .map(StiefelPoint::from_matrix_unchecked)
                .collect(),
        }
    }

    /// `agents` independent Haar samples.
    pub fn random<R: Rng + ?Sized>(n: usize, p: usize, agents: usize, rng: &mut R) -> Result<Self> {
        let points = (0..agents)
            .map(|_| random_stiefel(n, p, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// All agents at `point`.
    pub fn consensus(point: StiefelPoint, agents: usize) -> Result<Self> {
        Self::new(vec![point; agents])
    }

    /// Embeds angles into `St(1, 2)` as `(cos theta, sin theta)`.
    pub fn from_angles(thetas: &[f64]) -> Result<Self> {
        Self::new(
            thetas
                .iter()
                .map(|&t| StiefelPoint::from_angle(t))
                .collect(),
        )
    }

    /// Inverse of [`SwarmState::from_angles`]; only meaningful on `St(1, 2)`.
    pub fn angles(&self) -> Result<Vec<f64>> {
        if self.dims() != (2, 1) {
            return Err(Error::Mismatch {
                expected: (2, 1),
                got: self.dims(),
            });
        }
        Ok(self
            .points
            .iter()
            .map(|s| s.matrix()[(1, 0)].atan2(s.matrix()[(0, 0)]))
            .collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.points[0].dims()
    }

    pub fn points(&self) -> &[StiefelPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &StiefelPoint {
        &self.points[i]
    }

    pub(crate) fn matrices(&self) -> Vec<DMatrix<f64>> {
        self.points.iter().map(|s| s.matrix().clone()).collect()
    }

    /// Applies `R S_i` to every agent.
    pub fn rotate(&self, r: &DMatrix<f64>) -> Result<Self> {
        Self::new(
            self.points
                .iter()
                .map(|s| s.rotate(r))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Largest `max |S_i^T S_i - I|` over agents.
    pub fn orthonormality_defect(&self) -> f64 {
        self.points
            .iter()
            .map(|s| orthonormality_defect(s.matrix()))
            .fold(0.0, f64::max)
    }

    /// Largest chordal distance across an edge of `g`.
    pub fn max_edge_distance(&self, g: &Graph) -> f64 {
        g.edges()
            .iter()
            .map(|e| chordal_raw(self.points[e.i].matrix(), self.points[e.j].matrix()))
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.len() != g.num_vertices() {
            return Err(Error::AgentCount {
                state: self.len(),
                graph: g.num_vertices(),
            });
        }
        Ok(())
    }
}

/// `V_i = sum_{j in N(i)} a_ij S_j`.
pub(crate) fn neighbor_sum(mats: &[DMatrix<f64>], g: &Graph, i: usize) -> DMatrix<f64> {
    let (n, p) = mats[i].shape();
    let mut v = DMatrix::<f64>::zeros(n, p);
    for &(j, w) in g.neighbors(i) {
        v += &mats[j] * w;
    }
    v
}

/// Negative intrinsic gradient `-grad_i U = P_i(V_i)` for every agent,
/// evaluated with the projection formula extended to arbitrary matrices.
pub(crate) fn flow_field_raw(mats: &[DMatrix<f64>], g: &Graph) -> Vec<DMatrix<f64>> {
    (0..mats.len())
        .map(|i| project_raw(&neighbor_sum(mats, g, i), &mats[i]))
        .collect()
}

/// Right-hand side of the consensus flow: `P_i(V_i)` for each agent.
pub fn gradient_rhs(state: &SwarmState, g: &Graph) -> Result<Vec<TangentVector>> {
    state.check_graph(g)?;
    Ok(flow_field_raw(&state.matrices(), g)
        .into_iter()
        .map(TangentVector::from_matrix)
        .collect())
}

/// The same field written as `S_i skew(S_i^T V_i) + (I - S_i S_i^T) V_i`.
pub fn gradient_rhs_split(state: &SwarmState, g: &Graph) -> Result<Vec<TangentVector>> {
    state.check_graph(g)?;
    let mats = state.matrices();
    Ok((0..mats.len())
        .map(|i| {
            let s = &mats[i];
            let v = neighbor_sum(&mats, g, i);
            let stv = s.tr_mul(&v);
            TangentVector::from_matrix(s * skew(&stv) + (&v - s * &stv))
        })
        .collect())
}

/// Common drift `(Omega, Xi)` with `Omega in so(n)`, `Xi in so(p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousDrift {
    omega: DMatrix<f64>,
    xi: DMatrix<f64>,
}

/// Skewness tolerance for drift matrices.
pub const SKEW_TOL: f64 = 1e-12;

impl HomogeneousDrift {
    pub fn new(omega: DMatrix<f64>, xi: DMatrix<f64>) -> Result<Self> {
        for (name, m) in [("omega", &omega), ("xi", &xi)] {
            if !m.is_square() {
                return Err(Error::Mismatch {
                    expected: (m.nrows(), m.nrows()),
                    got: m.shape(),
                });
            }
            let defect = max_abs(&(m + m.transpose())) * 0.5;
            if defect > SKEW_TOL {
                return Err(Error::NotSkew { name, defect });
            }
        }
        Ok(Self { omega, xi })
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn xi(&self) -> &DMatrix<f64> {
        &self.xi
    }

    fn check_dims(&self, (n, p): (usize, usize)) -> Result<()> {
        if self.omega.nrows() != n {
            return Err(Error::Mismatch {
                expected: (n, n),
                got: self.omega.shape(),
            });
        }
        if self.xi.nrows() != p {
            return Err(Error::Mismatch {
                expected: (p, p),
                got: self.xi.shape(),
            });
        }
        Ok(())
    }
}

fn drifted_field_raw(
    mats: &[DMatrix<f64>],
    g: &Graph,
    drift: Option<&HomogeneousDrift>,
) -> Vec<DMatrix<f64>> {
    let mut field = flow_field_raw(mats, g);
    if let Some(d) = drift {
        for (f, s) in field.iter_mut().zip(mats) {
            *f += &d.omega * s + s * &d.xi;
        }
    }
    field
}

/// `Omega S_i + S_i Xi - grad_i U` for each agent.
pub fn homogeneous_rhs(
    state: &SwarmState,
    g: &Graph,
    omega: &DMatrix<f64>,
    xi: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    state.check_graph(g)?;
    let drift = HomogeneousDrift::new(omega.clone(), xi.clone())?;
    drift.check_dims(state.dims())?;
    Ok(drifted_field_raw(&state.matrices(), g, Some(&drift)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit Euler step followed by the polar retraction.
    #[default]
    Euler,
    /// Classical four-stage Runge–Kutta on the ambient extension, polar
    /// factor taken after the combined update.
    Rk4,
}

pub const DEFAULT_STEP_SCALE: f64 = 0.05;
pub const DEFAULT_CONSENSUS_TOL: f64 = 1e-6;
pub const DEFAULT_GRAD_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_TIME: f64 = 500.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Time step; `None` means `0.05 / max_i sum_j a_ij`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub max_time: f64,
    /// Threshold on `max_i ||grad_i U||` for declaring an equilibrium.
    pub grad_tol: f64,
    /// Threshold on the largest edge chordal distance for declaring consensus.
    pub consensus_tol: f64,
    /// Record every k-th step; 0 records only the first and last sample.
    pub record_every: usize,
    pub scheme: Scheme,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: None,
            max_time: DEFAULT_MAX_TIME,
            grad_tol: DEFAULT_GRAD_TOL,
            consensus_tol: DEFAULT_CONSENSUS_TOL,
            record_every: 0,
            scheme: Scheme::Euler,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(h) = self.step {
            positive("step", h)?;
        }
        positive("max_time", self.max_time)?;
        positive("grad_tol", self.grad_tol)?;
        positive("consensus_tol", self.consensus_tol)
    }

    /// Effective step size on `g`.
    pub fn step_for(&self, g: &Graph) -> f64 {
        self.step.unwrap_or_else(|| default_step(g))
    }
}

/// `0.05 / max weighted degree`.
pub fn default_step(g: &Graph) -> f64 {
    let d = g.max_weighted_degree();
    if d > 0.0 {
        DEFAULT_STEP_SCALE / d
    } else {
        DEFAULT_STEP_SCALE
    }
}

fn advance_raw(
    mats: &[DMatrix<f64>],
    field: &[DMatrix<f64>],
    g: &Graph,
    drift: Option<&HomogeneousDrift>,
    h: f64,
    scheme: Scheme,
) -> Result<Vec<DMatrix<f64>>> {
    match scheme {
        Scheme::Euler => mats
            .iter()
            .zip(field)
            .map(|(s, f)| retract_raw(s, f, h))
            .collect(),
        Scheme::Rk4 => {
            let shifted = |k: &[DMatrix<f64>], c: f64| -> Vec<DMatrix<f64>> {
                mats.iter().zip(k).map(|(s, k)| s + k * c).collect()
            };
            let k1 = field;
            let k2 = drifted_field_raw(&shifted(k1, 0.5 * h), g, drift);
            let k3 = drifted_field_raw(&shifted(&k2, 0.5 * h), g, drift);
            let k4 = drifted_field_raw(&shifted(&k3, h), g, drift);
            (0..mats.len())
                .map(|i| {
                    let incr = (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) / 6.0;
                    polar_factor(&(&mats[i] + incr * h))
                })
                .collect()
        }
    }
}

/// One synchronous step of the flow: every agent moves from the current
/// configuration at once.
pub fn step_flow(state: &SwarmState, g: &Graph, config: &FlowConfig) -> Result<SwarmState> {
    state.check_graph(g)?;
    config.validate()?;
    let mats = state.matrices();
    let field = flow_field_raw(&mats, g);
    let next = advance_raw(&mats, &field, g, None, config.step_for(g), config.scheme)?;
    Ok(SwarmState::from_matrices_unchecked(next))
}

/// Fixed-step integration of the flow, optionally with a common drift.
/// Returns the `steps + 1` states including the initial one.
pub fn integrate_fixed(
    state0: &SwarmState,
    g: &Graph,
    drift: Option<&HomogeneousDrift>,
    h: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<Vec<SwarmState>> {
    state0.check_graph(g)?;
    if let Some(d) = drift {
        d.check_dims(state0.dims())?;
    }
    let mut mats = state0.matrices();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state0.clone());
    for k in 0..steps {
        let field = drifted_field_raw(&mats, g, drift);
        mats = advance_raw(&mats, &field, g, drift, h, scheme)?;
        if mats.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { step: k + 1 });
        }
        out.push(SwarmState::from_matrices_unchecked(mats.clone()));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    Consensus,
    NonConsensusEquilibrium,
    Timeout,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Consensus => "Consensus",
            TerminationReason::NonConsensusEquilibrium => "NonConsensusEquilibrium",
            TerminationReason::Timeout => "Timeout",
        }
    }
}

/// Samples recorded along an integration.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SwarmState>,
    pub potentials: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub edge_distances: Vec<f64>,
}

impl Trajectory {
    fn push(&mut self, t: f64, state: SwarmState, g: &Graph, grad_norm: f64, edge_distance: f64) {
        self.potentials.push(potential_raw(&state.matrices(), g));
        self.times.push(t);
        self.states.push(state);
        self.grad_norms.push(grad_norm);
        self.edge_distances.push(edge_distance);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub reason: TerminationReason,
    pub final_state: SwarmState,
    pub final_time: f64,
    pub steps: usize,
    pub final_potential: f64,
    pub final_grad_norm: f64,
    pub final_edge_distance: f64,
    /// Largest orthonormality defect seen at any step.
    pub max_orthonormality_defect: f64,
    /// Largest per-step increase of the potential (0 when monotone).
    pub max_potential_increase: f64,
    pub trajectory: Trajectory,
}

/// Integrates until consensus, a non-consensus equilibrium or `max_time`.
///
/// Consensus is tested before the equilibrium test, both before the timeout.
pub fn integrate(state0: &SwarmState, g: &Graph, config: &FlowConfig) -> Result<FlowOutcome> {
    state0.check_graph(g)?;
    config.validate()?;
    let h = config.step_for(g);
    let mut mats = state0.matrices();
    let mut trajectory = Trajectory::default();
    let mut step = 0usize;
    let mut max_defect = state0.orthonormality_defect();
    let mut max_increase = 0.0_f64;
    let mut last_u = potential_raw(&mats, g);

    loop {
        let t = step as f64 * h;
        let field = flow_field_raw(&mats, g);
        let grad_norm = field.iter().map(|f| f.norm()).fold(0.0, f64::max);
        let edge_distance = g
            .edges()
            .iter()
            .map(|e| chordal_raw(&mats[e.i], &mats[e.j]))
            .fold(0.0, f64::max);

        let reason = if edge_distance < config.consensus_tol {
            Some(TerminationReason::Consensus)
        } else if grad_norm < config.grad_tol {
            Some(TerminationReason::NonConsensusEquilibrium)
        } else if t >= config.max_time {
            Some(TerminationReason::Timeout)
        } else {
            None
        };

        let record = step == 0
            || reason.is_some()
            || (config.record_every > 0 && step.is_multiple_of(config.record_every));
        if record {
            trajectory.push(
                t,
                SwarmState::from_matrices_unchecked(mats.clone()),
                g,
                grad_norm,
                edge_distance,
            );
        }

        if let Some(reason) = reason {
            return Ok(FlowOutcome {
                reason,
                final_state: SwarmState::from_matrices_unchecked(mats),
                final_time: t,
                steps: step,
                final_potential: last_u,
                final_grad_norm: grad_norm,
                final_edge_distance: edge_distance,
                max_orthonormality_defect: max_defect,
                max_potential_increase: max_increase,
                trajectory,
            });
        }

        mats = match advance_raw(&mats, &field, g, None, h, config.scheme) {
            Ok(m) => m,
            Err(Error::RankDeficient { .. }) => return Err(Error::NonFinite { step: step + 1 }),
            Err(e) => return Err(e),
        };
        step += 1;
        if mats.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { step });
        }
        let u = potential_raw(&mats, g);
        max_increase = max_increase.max(u - last_u);
        last_u = u;
        max_defect = max_defect.max(mats.iter().map(orthonormality_defect).fold(0.0, f64::max));
    }
}

/// Polar form of the flow on `St(1, 2)`:
/// `dtheta_i/dt = sum_j a_ij sin(theta_j - theta_i)`.
pub fn kuramoto_rhs(thetas: &[f64], g: &Graph) -> Result<Vec<f64>> {
    if thetas.len() != g.num_vertices() {
        return Err(Error::AgentCount {
            state: thetas.len(),
            graph: g.num_vertices(),
        });
    }
    Ok((0..thetas.len())
        .map(|i| {
            g.neighbors(i)
                .iter()
                .map(|&(j, w)| w * (thetas[j] - thetas[i]).sin())
                .sum()
        })
        .collect())
}

/// Angles `theta_i = 2 pi w i / N`, `i = 0..N`.
pub fn twisted_state(n: usize, winding: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::Config(format!(
            "twisted state needs N >= 3, got {n}"
        )));
    }
    if winding >= n {
        return Err(Error::Config(format!(
            "winding {winding} must be below N = {n}"
        )));
    }
    Ok((0..n)
        .map(|i| 2.0 * PI * (winding * i) as f64 / n as f64)
        .collect())
}

/// Chordal distance from an `St(1, 2)` configuration to the closest rotation
/// of the winding-`w` twisted state.
pub fn twisted_distance(state: &SwarmState, winding: usize) -> Result<f64> {
    let thetas = state.angles()?;
    let n = thetas.len();
    let reference = twisted_state(n, winding)?;
    let (re, im) = thetas
        .iter()
        .zip(&reference)
        .fold((0.0, 0.0), |(re, im), (t, r)| {
            (re + (t - r).cos(), im + (t - r).sin())
        });
    let modulus = (re * re + im * im).sqrt();
    Ok((2.0 * n as f64 - 2.0 * modulus).max(0.0).sqrt())
}
