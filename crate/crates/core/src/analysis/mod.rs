//! Potential evaluation, equilibrium and second-order certificates, the pair
//! relaxation and its integer-program reductions.

mod equilibrium;
mod hessian;
mod pair;
mod potential;
mod programs;

pub use equilibrium::{certify_equilibrium, EquilibriumCertificate, EQUILIBRIUM_TOL};
pub use hessian::{
    basis_trace, escape_direction, quadratic_form_q, quadratic_form_q_with_tol, trace_m,
    EscapeDirection, CONSENSUS_DISTANCE_TOL, ESCAPE_THRESHOLD,
};
pub use pair::{
    lagrange_residual, maximize_f, pair_gradient, pair_objective_f, spectral_certificate,
    AscentRun, LagrangeReport, MaximizeConfig, PairMaximum, SpectralCertificate, CLUSTER_TOL,
    STATIONARITY_TOL,
};
pub(crate) use potential::potential_raw;
pub use potential::{potential, potential_pairwise};
pub use programs::{
    integer_objective, is_boundary_case, lambda_star, lambda_star_from_trace, m_minus_bound,
    minlp_objective, solve_integer_program, solve_minlp, synchronization_bound,
    IntegerProgramSolution, MinlpSolution,
};
