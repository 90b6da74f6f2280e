//! The integer program over `m_plus` and, on the boundary `2n = 3(p + 1)`,
//! the mixed program over `(lambda*, m*)`.

use stiefel_sync::analysis::{is_boundary_case, solve_integer_program, solve_minlp};

fn main() -> stiefel_sync::Result<()> {
    for n in 2..=8 {
        for p in 1..n {
            let s = solve_integer_program(n, p)?;
            println!(
                "n = {n} p = {p}: argmax m+ = {}  table {:?}  recurrence {}",
                s.m_plus_opt, s.objective_table, s.recurrence_holds
            );
        }
    }
    for (p, n) in [(1, 3), (3, 6), (5, 9), (7, 12)] {
        assert!(is_boundary_case(p, n));
        let s = solve_minlp(n, p, 1001)?;
        println!(
            "boundary (p, n) = ({p}, {n}): optimum {} at {} grid points, e.g. lambda* = {}, m* = {}",
            s.objective,
            s.maximizers.len(),
            s.lambda_opt,
            s.m_star_opt
        );
    }
    Ok(())
}
