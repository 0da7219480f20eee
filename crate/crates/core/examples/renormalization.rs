//! The scalar machinery behind the Mellet-Vasseur estimate: F and F_n, the
//! convex conjugate and Young's inequality, density cutoffs, velocity
//! truncation and the weak Gronwall check.

use nlns::renormalization::{
    cutoff_report, gronwall_source, growth_bounds_check, mv_weight, weak_gronwall, DensityCutoffs, MvApprox,
};

fn main() -> nlns::Result<()> {
    let f = MvApprox::new(16)?;
    for z in [0.5, 4.0, 16.0, 64.0, 1e3] {
        println!(
            "z {z:7}: F {:.6e}  F_16 {:.6e}  z F'/F {:.4}",
            mv_weight(z),
            f.value(z),
            z * f.derivative(z) / f.value(z)
        );
    }

    let g = growth_bounds_check(16, 0.5)?;
    println!(
        "growth: F_n <= {:.3} z^1.5, F_n' <= {:.3} z^0.5, factor four {} (smallest n {:?})",
        g.value_constant, g.slope_constant, g.factor_four_holds, g.smallest_n_factor_four
    );

    // Young: a b <= F_n(a) + F_n*(b), tight when b = F_n'(a)
    for (a, b) in [(2.0, 1.0), (10.0, f.derivative(10.0)), (50.0, 3.0)] {
        let rhs = f.value(a) + f.numeric_conjugate(b);
        println!("Young a={a} b={b:.4}: {:.6} <= {:.6}", a * b, rhs);
    }

    let c = DensityCutoffs::new(20.0, 50.0)?;
    let r = cutoff_report(&c, None);
    println!(
        "cutoffs m=20 k=50: |phi0'| max {:.3} (paper target {:.1}), |phi_inf'| max {:.4} (target {:.4})",
        r.zero_slope_max, r.zero_slope_target, r.infinity_slope_max, r.infinity_slope_target
    );

    let dt = 0.01;
    let series: Vec<f64> = (0..200).map(|i| 1.0 + (i as f64 * dt * 3.0).sin().powi(2)).collect();
    let b = gronwall_source(&series, dt);
    let ok = weak_gronwall(&series, dt, 0.5, &b, 1e-12)?;
    let bad = weak_gronwall(&series, dt, 0.0, &vec![0.0; series.len()], 1e-12)?;
    println!(
        "weak Gronwall: with source {}, without source {} (margin {:.3e})",
        ok.pass, bad.pass, bad.worst_margin
    );
    Ok(())
}
