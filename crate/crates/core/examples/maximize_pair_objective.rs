//! Multistart maximization of the two-agent objective, with the stationarity
//! and spectral certificates of the maximizer.

use stiefel_sync::analysis::{
    lagrange_residual, maximize_f, spectral_certificate, synchronization_bound, MaximizeConfig,
    CLUSTER_TOL,
};
use stiefel_sync::Error;

fn main() -> stiefel_sync::Result<()> {
    let cfg = MaximizeConfig::default();
    for (p, n) in [(1, 3), (1, 4), (2, 5), (3, 6), (2, 3), (3, 4)] {
        let best = match maximize_f(n, p, &cfg, 17) {
            Ok(b) => b,
            Err(Error::NonConvergence { best, .. }) => *best,
            Err(e) => return Err(e),
        };
        let lag = lagrange_residual(&best.x, &best.y)?;
        let spec = spectral_certificate(&best.x, &best.y, CLUSTER_TOL)?;
        println!(
            "St({p},{n}) bound {:<5} max f = {:>10.3e}  grad {:.1e}  residual {:.1e}  (m-, m*, m+) = ({}, {}, {})  lambda* = {:.4}",
            synchronization_bound(p, n),
            best.value,
            best.grad_norm,
            lag.residual_x.max(lag.residual_y),
            spec.m_minus,
            spec.m_star,
            spec.m_plus,
            spec.lambda_star
        );
    }
    Ok(())
}
