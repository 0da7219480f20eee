//! Spectral derivatives, FFT convolution against the direct sum, and the
//! mass-preserving mollifier.

use nlns::kernel::{build_cutoff, build_kernel_table, KernelSpec};
use nlns::spectral::{convolve_periodic, mollify, spectral_derivative};
use nlns::{oracle, Field, TorusGrid};
use std::f64::consts::PI;

fn main() -> nlns::Result<()> {
    let l = 2.0;
    let grid = TorusGrid::new(1, l, 64)?;
    let f = Field::from_fn(grid, |x| (PI * x[0] / l).sin() + 0.3 * (3.0 * PI * x[0] / l).cos());

    for order in 1..=4 {
        let d = spectral_derivative(&f, 0, order)?;
        println!("order {order}: max |d^{order} f| = {:.6}", d.max_abs());
    }

    // FFT convolution with the truncated kernel vs the O(N^2) sum
    let g2 = TorusGrid::new(2, 3.0, 32)?;
    let table = build_kernel_table(&g2, &KernelSpec::new(0.5, 3.0)?, &build_cutoff(3.0)?)?;
    let rho = Field::from_fn(g2, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    let fast = convolve_periodic(&rho, &table)?;
    let slow = oracle::direct_convolution(&rho, &table)?;
    let err = fast
        .values()
        .iter()
        .zip(slow.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "convolution: fft vs direct max difference {err:.3e} (scale {:.3})",
        slow.max_abs()
    );

    let step = Field::from_fn(grid, |x| if x[0].abs() < 0.5 { 1.0 } else { 0.0 });
    let smooth = mollify(&step, 4.0 * grid.spacing())?;
    println!(
        "mollify: integral {:.15} -> {:.15}, min {:.3e}",
        step.integral(),
        smooth.integral(),
        smooth.min()
    );
    Ok(())
}
