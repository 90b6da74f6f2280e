//! Kuramoto-type consensus on the compact Stiefel manifold `St(p, n)`.
//!
//! Each of `N` agents holds an `n x p` matrix with orthonormal columns and
//! follows the intrinsic gradient descent of
//! `U = sum_{ {i,j} in E } a_ij (p - <S_i, S_j>)`. The crate integrates that
//! flow, certifies its equilibria, evaluates the second-order quadratic form
//! and its closed-form trace, and runs the reductions showing that for
//! `3(p + 1) <= 2n` every minimizer of `U` on a connected graph is a
//! consensus state.
//!
//! * [`manifold`]: points, tangent projection, polar retraction, Haar sampling.
//! * [`graph`]: interaction topologies.
//! * [`dynamics`]: the flow, integrators, Kuramoto form, twisted states.
//! * [`analysis`]: potential, certificates, Hessian trace, pair relaxation.
//! * [`harness`]: batch experiments and result files.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod harness;
pub mod manifold;
pub mod seed;

pub use error::{Error, Result};
