//! Reductions of the pair problem to integer programs over eigenvalue
//! multiplicities, and the `3(p + 1) <= 2n` synchronization condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `lambda* = (2n - p - 1 - tr Z) / (p + 2)`.
pub fn lambda_star_from_trace(n: usize, p: usize, trace_z: f64) -> f64 {
    (2.0 * n as f64 - p as f64 - 1.0 - trace_z) / (p as f64 + 2.0)
}

/// `lambda* = (2n - 2p - 1 + 2 m_minus + m_star) / (p + 2 + m_star)`.
pub fn lambda_star(n: usize, p: usize, m_minus: usize, m_star: usize) -> Result<f64> {
    if m_minus + m_star > p {
        return Err(Error::Multiplicities { m_minus, m_star, p });
    }
    let num = 2.0 * n as f64 - 2.0 * p as f64 - 1.0 + 2.0 * m_minus as f64 + m_star as f64;
    Ok(num / (p as f64 + 2.0 + m_star as f64))
}

/// Upper bound `m_minus <= 3(p + 1)/2 - n` implied by `lambda* <= 1` when
/// `m_star > 0`.
pub fn m_minus_bound(n: usize, p: usize) -> f64 {
    1.5 * (p as f64 + 1.0) - n as f64
}

/// `3(p + 1) <= 2n`, i.e. `p <= 2n/3 - 1`, in exact integer arithmetic.
pub fn synchronization_bound(p: usize, n: usize) -> bool {
    3 * (p + 1) <= 2 * n
}

/// `3(p + 1) = 2n`.
pub fn is_boundary_case(p: usize, n: usize) -> bool {
    3 * (p + 1) == 2 * n
}

/// `h(m) = (2n + 1) m - m^2`.
pub fn integer_objective(n: usize, m_plus: usize) -> i64 {
    let (n, m) = (n as i64, m_plus as i64);
    (2 * n + 1) * m - m * m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerProgramSolution {
    pub m_plus_opt: usize,
    /// `h(m)` for `m = 0..=p`.
    pub objective_table: Vec<i64>,
    /// `h(m + 1) - h(m) = 2(n - m)` held across the table.
    pub recurrence_holds: bool,
}

/// Exhaustive maximization of `h` over `m_plus in {0, .., p}`. Ties go to the
/// larger `m_plus`.
pub fn solve_integer_program(n: usize, p: usize) -> Result<IntegerProgramSolution> {
    if p > n || n == 0 {
        return Err(Error::Dimension { n, p });
    }
    let objective_table: Vec<i64> = (0..=p).map(|m| integer_objective(n, m)).collect();
    let recurrence_holds = objective_table
        .windows(2)
        .enumerate()
        .all(|(m, w)| w[1] - w[0] == 2 * (n as i64 - m as i64));
    let m_plus_opt = objective_table
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(m, _)| m)
        .expect("table is non-empty");
    Ok(IntegerProgramSolution {
        m_plus_opt,
        objective_table,
        recurrence_holds,
    })
}

/// `-(n/6 + 1/4 + m/4) (1 - lambda)^2 m`.
pub fn minlp_objective(n: usize, lambda: f64, m_star: usize) -> f64 {
    let m = m_star as f64;
    -(n as f64 / 6.0 + 0.25 + 0.25 * m) * (1.0 - lambda).powi(2) * m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinlpSolution {
    pub lambda_opt: f64,
    pub m_star_opt: usize,
    pub objective: f64,
    /// Every grid point `(lambda, m_star)` attaining the optimum.
    pub maximizers: Vec<(f64, usize)>,
}

/// Grid search over `lambda in [0, 1]` (`grid_size` equispaced points, both
/// endpoints included) for every `m_star in {0, .., p}`. Only defined on the
/// boundary `3(p + 1) = 2n`.
pub fn solve_minlp(n: usize, p: usize, grid_size: usize) -> Result<MinlpSolution> {
    if !is_boundary_case(p, n) {
        return Err(Error::NotBoundary { p, n });
    }
    if grid_size < 2 {
        return Err(Error::Config(format!(
            "grid_size must be >= 2, got {grid_size}"
        )));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| k as f64 / (grid_size - 1) as f64)
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut maximizers = Vec::new();
    for m in 0..=p {
        for &lambda in &grid {
            let v = minlp_objective(n, lambda, m);
            if v > best {
                best = v;
                maximizers.clear();
            }
            if v == best {
                maximizers.push((lambda, m));
            }
        }
    }
    let (lambda_opt, m_star_opt) = maximizers[0];
    Ok(MinlpSolution {
        lambda_opt,
        m_star_opt,
        // -0.0 from the m* = 0 column
        objective: best + 0.0,
        maximizers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_star_examples() {
        assert_eq!(lambda_star(3, 1, 0, 0).unwrap(), 1.0);
        for &(n, p) in &[(3, 1), (5, 2), (9, 4)] {
            let expect = (2.0 * n as f64 - 2.0 * p as f64 - 1.0) / (p as f64 + 2.0);
            assert!((lambda_star_from_trace(n, p, p as f64) - expect).abs() < 1e-15);
        }
        assert!(lambda_star(4, 2, 2, 1).is_err());
    }

    #[test]
    fn lambda_star_forms_agree() {
        // tr Z = -m_minus + lambda* m_star + m_plus closes the loop.
        for n in 3..9 {
            for p in 1..n {
                for mm in 0..=p {
                    for ms in 0..=(p - mm) {
                        let l = lambda_star(n, p, mm, ms).unwrap();
                        let tr = -(mm as f64) + l * ms as f64 + (p - mm - ms) as f64;
                        assert!((lambda_star_from_trace(n, p, tr) - l).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_bound_is_zero() {
        assert_eq!(m_minus_bound(6, 3), 0.0);
    }

    #[test]
    fn bound_examples() {
        assert!(!synchronization_bound(1, 2));
        assert!(!synchronization_bound(2, 3));
        assert!(synchronization_bound(1, 3));
        assert!(synchronization_bound(2, 5));
        assert!(synchronization_bound(3, 6));
    }

    #[test]
    fn integer_program_examples() {
        let s = solve_integer_program(3, 1).unwrap();
        assert_eq!(s.m_plus_opt, 1);
        assert_eq!(s.objective_table[1] - s.objective_table[0], 6);
        assert_eq!(solve_integer_program(6, 3).unwrap().m_plus_opt, 3);
        assert!(solve_integer_program(3, 4).is_err());
    }

    #[test]
    fn minlp_examples() {
        let s = solve_minlp(6, 3, 101).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(s.maximizers.iter().all(|&(l, m)| l == 1.0 || m == 0));
        assert!(s.maximizers.contains(&(1.0, 3)));
        assert!(s.maximizers.contains(&(0.5, 0)));
        assert!((minlp_objective(6, 0.5, 1) + 0.375).abs() < 1e-15);
        assert!(matches!(
            solve_minlp(5, 2, 11),
            Err(Error::NotBoundary { .. })
        ));
    }
}
