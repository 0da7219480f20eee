use nlns::kernel::{
    build_cutoff, build_kernel_table, fourier_positivity_check, laplacian_of_attractive_part,
    laplacian_of_singular_part, nonlocal_force, riesz_exponent, KernelSpec,
};
use nlns::{oracle, Field, TorusGrid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tables_are_even_and_gradients_odd(d in 1usize..=3, n in prop::sample::select(vec![4usize, 8, 12]),
                                         l in 1.0f64..6.0, alpha in 0.1f64..0.95) {
        let grid = TorusGrid::new(d, l, n).unwrap();
        let table = build_kernel_table(&grid, &KernelSpec::new(alpha, l).unwrap(), &build_cutoff(l).unwrap()).unwrap();
        let grad = table.gradient().unwrap();
        for i in 0..grid.len() {
            let j = grid.mirror(i);
            prop_assert_eq!(table.values()[i], table.values()[j]);
            for c in grad {
                prop_assert_eq!(c[i], -c[j]);
            }
        }
    }

    #[test]
    fn riesz_exponent_increases_in_p(alpha in 0.05f64..1.95, p1 in 1.0f64..3.0, dp in 1e-3f64..0.5) {
        let p2 = p1 + dp;
        if let (Ok(a), Ok(b)) = (riesz_exponent(p1, alpha, 3), riesz_exponent(p2, alpha, 3)) {
            prop_assert!(b > a);
        }
    }
}

#[test]
fn positivity_for_strong_singularity() {
    for alpha in [1.1, 1.5, 1.9] {
        for (n, l) in [(8, 2.0), (16, 4.0), (16, 8.0)] {
            let grid = TorusGrid::new(3, l, n).unwrap();
            let spec = KernelSpec::new(alpha, l).unwrap().repulsion_only();
            let r = fourier_positivity_check(&grid, &spec, &build_cutoff(l).unwrap()).unwrap();
            assert!(
                r.positivity_pass && r.hypothesis_holds,
                "alpha {alpha} n {n} L {l}: {r:?}"
            );
        }
    }
    let grid = TorusGrid::new(3, 4.0, 8).unwrap();
    let spec = KernelSpec::new(0.5, 4.0).unwrap().repulsion_only();
    assert!(
        !fourier_positivity_check(&grid, &spec, &build_cutoff(4.0).unwrap())
            .unwrap()
            .hypothesis_holds
    );
}

#[test]
fn closed_form_values() {
    assert!((laplacian_of_singular_part(0.5, 1.0).unwrap() + 0.25).abs() < 1e-15);
    assert!((laplacian_of_singular_part(0.5, 2.0).unwrap() + 0.0441941738).abs() < 1e-10);
    assert_eq!(laplacian_of_attractive_part(3), 3.0);
    assert!((riesz_exponent(1.5, 1.4, 3).unwrap() - 3.0 / 0.4).abs() < 1e-12);
    assert!((riesz_exponent(1.0, 1.0, 3).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn force_matches_direct_sum() {
    let l = 3.0;
    let grid = TorusGrid::new(2, l, 32).unwrap();
    let spec = KernelSpec::new(0.5, l).unwrap();
    let cutoff = build_cutoff(l).unwrap();
    let table = build_kernel_table(&grid, &spec, &cutoff).unwrap();
    let rho = Field::from_fn(grid, |x| {
        1.0 + 0.5 * (x[0] * 1.3).sin() * (x[1] * 0.7 + 0.2).cos() + 0.3 * (2.1 * x[1]).cos().powi(2)
    });
    let fast = nonlocal_force(&rho, &table).unwrap();
    let direct = oracle::direct_nonlocal_force(&rho, &spec, &cutoff).unwrap();
    let scale = direct.max_norm();
    for a in 0..2 {
        for (p, q) in fast.component(a).iter().zip(direct.component(a)) {
            assert!((p - q).abs() <= 1e-10 * scale, "{p} vs {q}");
        }
    }
}

#[test]
fn constant_density_feels_no_force() {
    let grid = TorusGrid::new(2, 2.0, 16).unwrap();
    let table = build_kernel_table(&grid, &KernelSpec::new(0.7, 2.0).unwrap(), &build_cutoff(2.0).unwrap()).unwrap();
    let f = nonlocal_force(&Field::constant(grid, 2.0), &table).unwrap();
    assert!(f.max_norm() < 1e-12);
}

#[test]
fn attraction_pulls_bumps_together() {
    let l = 8.0;
    let grid = TorusGrid::new(1, l, 128).unwrap();
    let a = 1.5;
    let rho = Field::from_fn(grid, |x| {
        (-(x[0] - a).powi(2) / 0.1).exp() + (-(x[0] + a).powi(2) / 0.1).exp()
    });
    let spec = KernelSpec::new(0.5, l).unwrap().attraction_only();
    let table = build_kernel_table(&grid, &spec, &build_cutoff(l).unwrap()).unwrap();
    let f = nonlocal_force(&rho, &table).unwrap();
    let direct = oracle::direct_nonlocal_force(&rho, &spec, &build_cutoff(l).unwrap()).unwrap();
    let right = grid.flatten(&[((a + l) / grid.spacing()).round() as usize]);
    let left = grid.flatten(&[((-a + l) / grid.spacing()).round() as usize]);
    assert!(f.component(0)[right] < 0.0 && direct.component(0)[right] < 0.0);
    assert!(f.component(0)[left] > 0.0 && direct.component(0)[left] > 0.0);
}
