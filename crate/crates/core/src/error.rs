use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Stiefel dimensions (n = {n}, p = {p}); need 1 <= p < n")]
    Dimension { n: usize, p: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    Mismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("columns are not orthonormal: max |M^T M - I| = {deviation:e} exceeds {tol:e}")]
    NotOrthonormal { deviation: f64, tol: f64 },

    #[error("retraction undefined: S + t*D is numerically rank deficient (smallest singular value {sigma_min:e}, t = {step})")]
    RankDeficient { sigma_min: f64, step: f64 },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("no connected Erdos-Renyi sample after {attempts} attempts (N = {n}, edge_prob = {edge_prob})")]
    ResampleBudget {
        attempts: usize,
        n: usize,
        edge_prob: f64,
    },

    #[error("state has {state} agents but graph has {graph} vertices")]
    AgentCount { state: usize, graph: usize },

    #[error("drift matrix `{name}` is not skew-symmetric (defect {defect:e})")]
    NotSkew { name: &'static str, defect: f64 },

    #[error("integration produced non-finite values at step {step}")]
    NonFinite { step: usize },

    #[error("configuration is not an equilibrium (max residual {max_residual:e}, tol {tol:e})")]
    NotEquilibrium { max_residual: f64, tol: f64 },

    #[error("configuration is a consensus state; a non-consensus equilibrium is required")]
    ConsensusState,

    #[error("closed-form trace requires unit weights; edge {edge:?} has weight {weight}")]
    NonUnitWeights { edge: (usize, usize), weight: f64 },

    #[error("invalid multiplicities m_minus = {m_minus}, m_star = {m_star} for p = {p}")]
    Multiplicities {
        m_minus: usize,
        m_star: usize,
        p: usize,
    },

    #[error("(p, n) = ({p}, {n}) is not on the boundary 3(p + 1) = 2n")]
    NotBoundary { p: usize, n: usize },

    #[error("pair ascent did not reach stationarity within {iterations} iterations (best value {value:e}, gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        value: f64,
        grad_norm: f64,
        best: Box<crate::analysis::PairMaximum>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Json { .. }
            | Error::Graph(_)
            | Error::Dimension { .. }
            | Error::Mismatch { .. }
            | Error::AgentCount { .. }
            | Error::NotBoundary { .. }
            | Error::Multiplicities { .. }
            | Error::NotSkew { .. }
            | Error::NonUnitWeights { .. }
            | Error::ResampleBudget { .. } => 1,
            Error::Io { .. } | Error::Csv { .. } => 1,
            _ => 2,
        }
    }
}
