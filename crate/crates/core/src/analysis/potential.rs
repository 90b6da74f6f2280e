use nalgebra::DMatrix;

use crate::dynamics::SwarmState;
use crate::error::Result;
use crate::graph::Graph;

/// `U = sum_e a_ij (p - <S_i, S_j>)`.
pub fn potential(state: &SwarmState, g: &Graph) -> Result<f64> {
    state.check_graph(g)?;
    Ok(potential_raw(&state.matrices(), g))
}

/// `U = 1/2 sum_e a_ij ||S_i - S_j||^2`, which agrees with [`potential`] on
/// the manifold.
pub fn potential_pairwise(state: &SwarmState, g: &Graph) -> Result<f64> {
    state.check_graph(g)?;
    Ok(g.edges()
        .iter()
        .map(|e| {
            0.5 * e.weight * (state.point(e.i).matrix() - state.point(e.j).matrix()).norm_squared()
        })
        .sum())
}

pub(crate) fn potential_raw(mats: &[DMatrix<f64>], g: &Graph) -> f64 {
    let p = mats.first().map_or(0, |m| m.ncols()) as f64;
    g.edges()
        .iter()
        .map(|e| e.weight * (p - mats[e.i].dot(&mats[e.j])))
        .sum()
}
