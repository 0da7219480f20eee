//! Term-by-term comparison of the spectral right-hand side with an
//! independent finite-difference evaluation.

use nlns::dynamics::rhs_oracle::{compare_rhs, smooth_test_state, unit_params};
use nlns::TorusGrid;

fn main() -> nlns::Result<()> {
    for (dim, n) in [(1, 64), (2, 32)] {
        let grid = TorusGrid::new(dim, 4.0, n)?;
        let params = unit_params(0.5, 4.0);
        let kernel = params.kernel_table(&grid)?;
        let state = smooth_test_state(grid)?;
        println!("d={dim} n={n}");
        for t in compare_rhs(&state, &params, &kernel, 1e-4)? {
            println!(
                "  {:14} relative {:.2e}  {}",
                t.term,
                t.relative,
                if t.pass { "ok" } else { "above 1e-4" }
            );
        }
    }
    Ok(())
}
