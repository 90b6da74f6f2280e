use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{neighbor_sum, SwarmState};
use crate::error::Result;
use crate::graph::Graph;
use crate::manifold::skew;

/// Default residual tolerance for declaring an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-7;

/// Residuals of the two orthogonal equilibrium conditions
/// `skew(S_i^T V_i) = 0` and `(I - S_i S_i^T) V_i = 0`, `V_i = sum_j a_ij S_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    /// `||skew(S_i^T V_i)||` per agent.
    pub residual_skew: Vec<f64>,
    /// `||(I - S_i S_i^T) V_i||` per agent.
    pub residual_range: Vec<f64>,
    /// `||P_i - P_i^T||` with `P_i = S_i^T V_i`.
    #[serde(rename = "P_symmetry_defect")]
    pub p_symmetry_defect: Vec<f64>,
    pub is_equilibrium: bool,
    /// `P_i`, present when `is_equilibrium` holds.
    #[serde(skip)]
    pub p_matrices: Option<Vec<DMatrix<f64>>>,
    #[serde(skip)]
    pub tol: f64,
}

impl EquilibriumCertificate {
    pub fn max_residual(&self) -> f64 {
        self.residual_skew
            .iter()
            .chain(&self.residual_range)
            .cloned()
            .fold(0.0, f64::max)
    }
}

pub fn certify_equilibrium(
    state: &SwarmState,
    g: &Graph,
    tol: f64,
) -> Result<EquilibriumCertificate> {
    state.check_graph(g)?;
    let mats = state.matrices();
    let mut residual_skew = Vec::with_capacity(mats.len());
    let mut residual_range = Vec::with_capacity(mats.len());
    let mut p_symmetry_defect = Vec::with_capacity(mats.len());
    let mut ps = Vec::with_capacity(mats.len());
    for (i, s) in mats.iter().enumerate() {
        let v = neighbor_sum(&mats, g, i);
        let p = s.tr_mul(&v);
        residual_skew.push(skew(&p).norm());
        residual_range.push((&v - s * &p).norm());
        p_symmetry_defect.push((&p - p.transpose()).norm());
        ps.push(p);
    }
    let is_equilibrium = residual_skew
        .iter()
        .chain(&residual_range)
        .all(|&r| r < tol);
    Ok(EquilibriumCertificate {
        residual_skew,
        residual_range,
        p_symmetry_defect,
        is_equilibrium,
        p_matrices: is_equilibrium.then_some(ps),
        tol,
    })
}
