//! Certify the truncated attraction-repulsion kernel: cutoff constants,
//! Fourier positivity of the repulsive part, the interaction constant and
//! the force against the brute-force sum.

use nlns::kernel::{
    build_cutoff, build_kernel_table, fourier_positivity_check, interaction_lemma_constant, nonlocal_force,
    riesz_exponent, KernelSpec,
};
use nlns::{oracle, Field, TorusGrid};

fn main() -> nlns::Result<()> {
    let l = 4.0;
    let cutoff = build_cutoff(l)?;
    println!(
        "cutoff: C1 = {}, C2(d=3) = {:.4}",
        cutoff.gradient_constant(),
        cutoff.laplacian_constant(3)
    );

    for alpha in [0.5, 1.25, 1.5, 1.9] {
        let grid = TorusGrid::new(3, l, 16)?;
        let spec = KernelSpec::new(alpha, l)?.repulsion_only();
        let r = fourier_positivity_check(&grid, &spec, &cutoff)?;
        println!(
            "alpha {alpha:4}: min/max mode {:+.3e}, positive {}, r f(r) decreasing {}",
            r.min_mode_value / r.max_mode_value,
            r.positivity_pass,
            r.hypothesis_holds
        );
        if alpha > 1.0 {
            println!(
                "            Riesz exponent at p = 3/2: {:.4}",
                riesz_exponent(1.5, alpha, 3)?
            );
        }
    }

    let spec = KernelSpec::new(0.5, l)?;
    for d in 1..=3 {
        println!(
            "interaction constant d={d}: {:.4}",
            interaction_lemma_constant(&spec, &cutoff, d)
        );
    }

    let grid = TorusGrid::new(2, l, 32)?;
    let table = build_kernel_table(&grid, &spec, &cutoff)?;
    let rho = Field::from_fn(grid, |x| {
        (-(x[0] - 1.0).powi(2) - x[1] * x[1]).exp() + (-(x[0] + 1.0).powi(2) - x[1] * x[1]).exp()
    });
    let fast = nonlocal_force(&rho, &table)?;
    let slow = oracle::direct_nonlocal_force(&rho, &spec, &cutoff)?;
    let err = (0..2)
        .flat_map(|a| {
            fast.component(a)
                .iter()
                .zip(slow.component(a))
                .map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max);
    println!(
        "force: table vs direct max difference {err:.3e} (scale {:.3})",
        slow.max_norm()
    );
    Ok(())
}
