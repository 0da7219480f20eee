use nlns::dynamics::{RegularizationParams, State};
use nlns::functionals::{
    bd_entropy, budget_column, energy, energy_budget_residual, gradient_integral, moment2, mv_functional, mv_table,
    parse_csv, rotation_integral, strain_integral, to_csv, DiagnosticsRecord,
};
use nlns::kernel::KernelTable;
use nlns::renormalization::mv_weight;
use nlns::spectral::Spectrum;
use nlns::{oracle, Field, TorusGrid, VecField};
use proptest::prelude::*;

fn smooth_positive(grid: TorusGrid, c: &[f64]) -> Field {
    let w = std::f64::consts::PI / grid.half_length();
    Field::from_fn(grid, |x| {
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(a, v)| c[a] * (w * v + c[a + 2]).cos() + 0.2 * c[a + 1] * (2.0 * w * v).sin())
            .sum();
        (0.5 * s).exp()
    })
}

fn smooth_velocity(grid: TorusGrid, c: &[f64]) -> VecField {
    let w = std::f64::consts::PI / grid.half_length();
    VecField::from_fn(grid, |x| {
        (0..x.len())
            .map(|a| c[a] * (w * x[(a + 1) % x.len()]).sin() + c[a + 1] * (w * x[a] + c[3]).cos())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_splits_into_strain_and_rotation(d in 1usize..=3, c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let n = if d == 3 { 8 } else { 16 };
        let grid = TorusGrid::new(d, 2.0, n).unwrap();
        let rho = smooth_positive(grid, &c);
        let u = smooth_velocity(grid, &c);
        let lhs = gradient_integral(&rho, &u);
        let rhs = strain_integral(&rho, &u) + 0.25 * rotation_integral(&rho, &u);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300));
    }

    #[test]
    fn pair_functionals_match_direct_sums(d in 1usize..=2, n in prop::sample::select(vec![4usize, 8, 12, 16, 24]),
                                          c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let grid = TorusGrid::new(d, 3.0, n).unwrap();
        let rho = smooth_positive(grid, &c);
        let m2 = moment2(&rho).unwrap();
        let m2_direct = oracle::direct_pair_sum(&rho, |r| r * r);
        prop_assert!((m2 - m2_direct).abs() <= 1e-10 * m2_direct);
        let state = State::from_velocity(0.0, rho.clone(), &VecField::zeros(grid)).unwrap();
        let (_, pair) = mv_functional(&state, &mv_table(&grid)).unwrap();
        let pair_direct = oracle::direct_pair_sum(&rho, mv_weight);
        prop_assert!((pair - pair_direct).abs() <= 1e-10 * pair_direct);
    }

    #[test]
    fn bd_excess_at_rest_is_fisher_information(d in 1usize..=2, c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let grid = TorusGrid::new(d, 2.0, 16).unwrap();
        let rho = smooth_positive(grid, &c);
        let params = RegularizationParams { kappa: 0.3, eta: 1e-3, ..RegularizationParams::zero(0.5, 2.0) };
        let kernel = KernelTable::zero(&grid);
        let state = State::from_velocity(0.0, rho.clone(), &VecField::zeros(grid)).unwrap();
        let e = energy(&state, &params, &kernel).unwrap().total();
        let bd = bd_entropy(&state, &params, &kernel).unwrap();
        let logr: Vec<f64> = rho.values().iter().map(|v| v.ln()).collect();
        let g = Spectrum::of(&grid, &logr).gradient();
        let fisher = 0.5 * (0..grid.len()).map(|i| rho.values()[i] * g.iter().map(|c| c[i] * c[i]).sum::<f64>()).sum::<f64>() * grid.cell_volume();
        prop_assert!(bd - e >= 0.0);
        prop_assert!(((bd - e) - fisher).abs() <= 1e-12 * fisher.max(1.0));
    }

    #[test]
    fn csv_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 22), count in 1usize..5) {
        let records: Vec<DiagnosticsRecord> = (0..count).map(|k| {
            let mut r = DiagnosticsRecord::default();
            let v = |i: usize| vals[i] * (k as f64 + 1.0);
            r.t = v(0); r.mass = v(1); r.energy_e = v(2);
            r.energy_parts.kinetic = v(3); r.energy_parts.interaction = v(4); r.energy_parts.barrier = v(5);
            r.energy_parts.quantum = v(6); r.energy_parts.highorder = v(7);
            r.bd_entropy = v(8); r.mv_velocity = v(9); r.mv_pair = v(10);
            r.dissipations.viscous = v(11); r.dissipations.bilaplacian = v(12); r.dissipations.r0_damping = v(13);
            r.dissipations.r1_damping = v(14); r.dissipations.quantum = v(15); r.dissipations.highorder = v(16);
            r.dissipations.barrier = v(17); r.dissipations.kernel = v(18);
            r.moment2 = v(19); r.rho_min = v(20); r.energy_budget_residual = v(21);
            r
        }).collect();
        prop_assert_eq!(parse_csv(&to_csv(&records)).unwrap(), records);
    }
}

#[test]
fn budget_residual_is_second_order_on_a_synthetic_decay() {
    let series = |dt: f64| -> Vec<DiagnosticsRecord> {
        (0..=40)
            .map(|i| {
                let t = i as f64 * dt;
                let mut r = DiagnosticsRecord {
                    t,
                    energy_e: 3.0 * (-t).exp(),
                    ..Default::default()
                };
                r.dissipations.viscous = 3.0 * (-t).exp();
                r
            })
            .collect()
    };
    let max = |v: Vec<f64>| v.into_iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let coarse = max(energy_budget_residual(&series(0.02)).unwrap());
    let fine = max(energy_budget_residual(&series(0.01)).unwrap());
    assert!(coarse < 1e-3 && coarse / fine > 3.5, "{coarse} {fine}");
    let col = budget_column(&series(0.01)).unwrap();
    assert_eq!(col.len(), 41);
    assert!(max(col) < 1e-3);
}
