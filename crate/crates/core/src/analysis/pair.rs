//! The two-agent relaxation
//!
//! ```text
//! f(X, Y) = (n - (p+1)/2) <X, Y> - (p+2)/4 ||X^T Y||^2 - 1/4 <X, Y>^2 + (1 - n + p) p
//! ```
//!
//! over `St(p, n) x St(p, n)`, its numerical maximization, and the
//! stationarity data of the maximizers: Lagrange residuals and the spectrum of
//! `Z = X^T Y`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hessian::trace_edge_term;
use super::programs::lambda_star_from_trace;
use crate::error::{Error, Result};
use crate::manifold::{
    check_same_shape, project_raw, random_stiefel, retract_raw, skew, sym, StiefelPoint,
};
use crate::seed::derive_seed;

/// Stationarity threshold on `||P_X df/dX|| + ||P_Y df/dY||`.
pub const STATIONARITY_TOL: f64 = 1e-7;

/// Line-search acceptance compares against the worst of this many recent
/// values, so single steps may decrease `f`.
const NONMONOTONE_WINDOW: usize = 10;

/// Band for assigning eigenvalues of `Z` to the roots `{-1, lambda*, 1}`.
pub const CLUSTER_TOL: f64 = 1e-4;

pub fn pair_objective_f(x: &StiefelPoint, y: &StiefelPoint) -> Result<f64> {
    check_same_shape(x.matrix(), y.matrix())?;
    Ok(trace_edge_term(x.matrix(), y.matrix()))
}

/// Euclidean partial derivative `df/dX`; `df/dY` follows by swapping.
fn partial(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let (nf, pf) = (n as f64, p as f64);
    let c = x.dot(y);
    let coeff = nf - 0.5 * (pf + 1.0) - 0.5 * c;
    y * coeff - y * y.tr_mul(x) * (0.5 * (pf + 2.0))
}

/// Riemannian gradient of `f` in both arguments.
pub fn pair_gradient(x: &StiefelPoint, y: &StiefelPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_same_shape(x.matrix(), y.matrix())?;
    Ok(riemannian_grad(x.matrix(), y.matrix()))
}

fn riemannian_grad(x: &DMatrix<f64>, y: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (
        project_raw(&partial(x, y), x),
        project_raw(&partial(y, x), y),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximizeConfig {
    pub multistarts: usize,
    pub max_iterations: usize,
    /// Iterate until the gradient norm drops below this, then stop.
    pub target_grad_norm: f64,
    pub armijo: f64,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        Self {
            multistarts: 32,
            max_iterations: 200_000,
            target_grad_norm: 1e-9,
            armijo: 1e-4,
            initial_step: 0.1,
            max_step: 1e6,
        }
    }
}

/// Outcome of one ascent run.
#[derive(Clone, Debug)]
pub struct AscentRun {
    pub start: usize,
    pub seed: u64,
    pub value: f64,
    pub x: StiefelPoint,
    pub y: StiefelPoint,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Best stationary pair over all multistarts.
#[derive(Clone, Debug)]
pub struct PairMaximum {
    pub value: f64,
    pub x: StiefelPoint,
    pub y: StiefelPoint,
    /// Iterations of the winning run.
    pub iterations: usize,
    pub grad_norm: f64,
    /// Every run, ordered by start index.
    pub runs: Vec<AscentRun>,
}

fn ascend(n: usize, p: usize, start: usize, seed: u64, cfg: &MaximizeConfig) -> Result<AscentRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = random_stiefel(n, p, &mut rng)?.into_matrix();
    let mut y = random_stiefel(n, p, &mut rng)?.into_matrix();
    let mut value = trace_edge_term(&x, &y);
    let mut step = cfg.initial_step;
    let mut iterations = 0;
    let (mut gx, mut gy) = riemannian_grad(&x, &y);
    let mut grad_norm = gx.norm() + gy.norm();
    let mut recent = VecDeque::from([value]);
    let mut previous: Option<[DMatrix<f64>; 4]> = None;

    while iterations < cfg.max_iterations && grad_norm >= cfg.target_grad_norm {
        let slope = gx.norm_squared() + gy.norm_squared();
        // Barzilai-Borwein guess; the degenerate maxima at the boundary are
        // quartic, where a fixed or slowly adapted step stalls.
        let guess = previous.as_ref().and_then(|[xp, yp, gxp, gyp]| {
            let (sx, sy) = (&x - xp, &y - yp);
            let curvature = -(sx.dot(&(&gx - gxp)) + sy.dot(&(&gy - gyp)));
            (curvature > 0.0).then(|| (sx.norm_squared() + sy.norm_squared()) / curvature)
        });
        let mut t = guess.unwrap_or(2.0 * step).clamp(1e-12, cfg.max_step);
        let reference = recent.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut accepted = None;
        while t > 1e-30 {
            let xn = retract_raw(&x, &gx, t)?;
            let yn = retract_raw(&y, &gy, t)?;
            let vn = trace_edge_term(&xn, &yn);
            if vn >= reference + cfg.armijo * t * slope {
                accepted = Some((xn, yn, vn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, yn, vn)) = accepted else {
            // no ascent step survives rounding; current iterate is as good as it gets
            break;
        };
        let (gxn, gyn) = riemannian_grad(&xn, &yn);
        previous = Some([
            std::mem::replace(&mut x, xn),
            std::mem::replace(&mut y, yn),
            std::mem::replace(&mut gx, gxn),
            std::mem::replace(&mut gy, gyn),
        ]);
        value = vn;
        step = t;
        iterations += 1;
        grad_norm = gx.norm() + gy.norm();
        recent.push_back(value);
        if recent.len() > NONMONOTONE_WINDOW {
            recent.pop_front();
        }
    }

    Ok(AscentRun {
        start,
        seed,
        value,
        x: StiefelPoint::from_matrix_unchecked(x),
        y: StiefelPoint::from_matrix_unchecked(y),
        iterations,
        grad_norm,
        converged: grad_norm < STATIONARITY_TOL,
    })
}

/// Maximizes `f` over `St(p, n)^2` by Riemannian gradient ascent with Armijo
/// backtracking, keeping the best of `cfg.multistarts` independent starts.
///
/// Start `k` is seeded with `derive_seed(seed, k)`, so results do not depend
/// on the thread count.
pub fn maximize_f(n: usize, p: usize, cfg: &MaximizeConfig, seed: u64) -> Result<PairMaximum> {
    crate::manifold::check_dims(n, p)?;
    if cfg.multistarts == 0 {
        return Err(Error::Config("multistarts must be at least 1".into()));
    }
    let runs = (0..cfg.multistarts)
        .into_par_iter()
        .map(|k| ascend(n, p, k, derive_seed(seed, k as u64), cfg))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value).then(b.start.cmp(&a.start)))
        .expect("at least one start")
        .clone();
    let result = PairMaximum {
        value: best.value,
        x: best.x,
        y: best.y,
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        runs,
    };
    if !best.converged {
        return Err(Error::NonConvergence {
            iterations: result.iterations,
            value: result.value,
            grad_norm: result.grad_norm,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Residuals of the first-order Lagrange conditions at `(X, Y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeReport {
    /// `||(c - tr Z / 2) Y - (p+2)/2 Y Y^T X + X Lambda||`.
    pub residual_x: f64,
    /// `||(c - tr Z / 2) X - (p+2)/2 X X^T Y + Y Xi||` with `Xi = Lambda^T`.
    pub residual_y: f64,
    pub skew_defect: f64,
    pub lambda_star: f64,
    /// Eigenvalues of `sym(Z)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Distance of each eigenvalue to the nearest of `{-1, lambda*, 1}`.
    pub root_distances: Vec<f64>,
}

impl LagrangeReport {
    pub fn max_root_distance(&self) -> f64 {
        self.root_distances.iter().cloned().fold(0.0, f64::max)
    }
}

fn sorted_sym_eigenvalues(z: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = sym(z)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lagrange_residual(x: &StiefelPoint, y: &StiefelPoint) -> Result<LagrangeReport> {
    check_same_shape(x.matrix(), y.matrix())?;
    let (xm, ym) = (x.matrix(), y.matrix());
    let (n, p) = xm.shape();
    let (nf, pf) = (n as f64, p as f64);
    let z = xm.tr_mul(ym);
    let tr = z.trace();
    let coeff = nf - 0.5 * (pf + 1.0) - 0.5 * tr;
    let half_p2 = 0.5 * (pf + 2.0);
    let lambda = &z * (-coeff) + &z * z.transpose() * half_p2;
    let xi = lambda.transpose();
    let eq_x = ym * coeff - ym * ym.tr_mul(xm) * half_p2 + xm * &lambda;
    let eq_y = xm * coeff - xm * xm.tr_mul(ym) * half_p2 + ym * xi;
    let lambda_star = lambda_star_from_trace(n, p, tr);
    let eigenvalues = sorted_sym_eigenvalues(&z);
    let root_distances = eigenvalues
        .iter()
        .map(|&ev| {
            [-1.0, lambda_star, 1.0]
                .iter()
                .map(|r| (ev - r).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(LagrangeReport {
        residual_x: eq_x.norm(),
        residual_y: eq_y.norm(),
        skew_defect: skew(&z).norm(),
        lambda_star,
        eigenvalues,
        root_distances,
    })
}

/// Eigenvalue multiplicities of `Z = X^T Y` at the roots `{-1, lambda*, 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCertificate {
    pub m_minus: usize,
    pub m_star: usize,
    pub m_plus: usize,
    pub lambda_star: f64,
    pub skew_defect: f64,
    #[serde(skip)]
    pub z: DMatrix<f64>,
    #[serde(skip)]
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue fell inside the band of some root.
    #[serde(skip)]
    pub clustered: bool,
}

/// Assigns each eigenvalue of `sym(Z)` to the nearest root within `band`.
///
/// `lambda*` comes from the trace of `Z`. When `lambda*` sits within the band
/// of `1` or `-1` the eigenvalue is counted at `+-1`, so `m_star` only counts
/// a genuinely distinct middle root.
pub fn spectral_certificate(
    x: &StiefelPoint,
    y: &StiefelPoint,
    band: f64,
) -> Result<SpectralCertificate> {
    check_same_shape(x.matrix(), y.matrix())?;
    let (n, p) = x.dims();
    let z = x.matrix().tr_mul(y.matrix());
    let lambda_star = lambda_star_from_trace(n, p, z.trace());
    let eigenvalues = sorted_sym_eigenvalues(&z);
    let (mut m_minus, mut m_star, mut m_plus) = (0, 0, 0);
    let mut clustered = true;
    for &ev in &eigenvalues {
        let d_minus = (ev + 1.0).abs();
        let d_plus = (ev - 1.0).abs();
        let d_star = (ev - lambda_star).abs();
        let star_distinct = (lambda_star - 1.0).abs() > band && (lambda_star + 1.0).abs() > band;
        if d_plus <= band && (d_plus <= d_star || !star_distinct) {
            m_plus += 1;
        } else if d_minus <= band && (d_minus <= d_star || !star_distinct) {
            m_minus += 1;
        } else if d_star <= band {
            m_star += 1;
        } else {
            clustered = false;
        }
    }
    Ok(SpectralCertificate {
        m_minus,
        m_star,
        m_plus,
        lambda_star,
        skew_defect: skew(&z).norm(),
        z,
        eigenvalues,
        clustered,
    })
}
