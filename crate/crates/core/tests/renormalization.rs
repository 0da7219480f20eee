use nlns::renormalization::{
    apply_cutoffs, log_grid, mv_weight, truncate_velocity, uniform_growth_constants, DensityCutoffs, MvApprox,
};
use nlns::{Field, TorusGrid, VecField};
use proptest::prelude::*;

#[test]
fn weights_are_convex() {
    let z: Vec<f64> = (0..=20_000).map(|i| i as f64 * 0.005).collect();
    let check = |f: &dyn Fn(f64) -> f64| {
        for w in z.windows(3) {
            let second = f(w[0]) - 2.0 * f(w[1]) + f(w[2]);
            assert!(second >= -1e-12 * f(w[2]).abs().max(1.0), "at {}", w[1]);
        }
    };
    check(&mv_weight);
    for n in [1, 2, 5, 16, 40] {
        let f = MvApprox::new(n).unwrap();
        check(&|x| f.value(x));
        for &x in &log_grid(1e-3, 1e4, 2000) {
            assert!(f.second_derivative(x) > 0.0);
        }
    }
}

#[test]
fn growth_constants_do_not_depend_on_n() {
    let ns: Vec<u32> = (1..=32).collect();
    let (cv, cs) = uniform_growth_constants(&ns, 0.5);
    assert!(cv.is_finite() && cs.is_finite());
    for n in [1u32, 7, 32] {
        let (v, s) = uniform_growth_constants(&[n], 0.5);
        assert!(v <= cv && s <= cs);
    }
    // the shared bound also covers larger n
    let (v64, s64) = uniform_growth_constants(&[64, 128], 0.5);
    assert!(
        v64 <= cv * (1.0 + 1e-12) && s64 <= cs * (1.0 + 1e-12),
        "{v64} {cv} {s64} {cs}"
    );
}

fn pair_grid() -> TorusGrid {
    TorusGrid::new(2, 1.0, 2).unwrap()
}

proptest! {
    #[test]
    fn truncation_is_one_lipschitz(a in prop::collection::vec(-20.0f64..20.0, 8), b in prop::collection::vec(-20.0f64..20.0, 8),
                                   limit in 0.01f64..10.0) {
        let g = pair_grid();
        let ua = VecField::new(g, vec![a[..4].to_vec(), a[4..].to_vec()]).unwrap();
        let ub = VecField::new(g, vec![b[..4].to_vec(), b[4..].to_vec()]).unwrap();
        let ta = truncate_velocity(&ua, limit).unwrap();
        let tb = truncate_velocity(&ub, limit).unwrap();
        for i in 0..4 {
            let d_in: f64 = (0..2).map(|c| (ua.component(c)[i] - ub.component(c)[i]).powi(2)).sum::<f64>().sqrt();
            let d_out: f64 = (0..2).map(|c| (ta.component(c)[i] - tb.component(c)[i]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d_out <= d_in * (1.0 + 1e-12) + 1e-15);
            prop_assert!(ta.norm_sq_at(i).sqrt() <= limit * (1.0 + 1e-12));
        }
    }

    #[test]
    fn cutoffs_never_increase_speed(rho in prop::collection::vec(0.0f64..50.0, 4), u in prop::collection::vec(-5.0f64..5.0, 8),
                                    m in 1.0f64..100.0, k in 1.0f64..100.0) {
        let g = pair_grid();
        let c = DensityCutoffs::new(m, k).unwrap();
        let rho = Field::new(g, rho).unwrap();
        let u = VecField::new(g, vec![u[..4].to_vec(), u[4..].to_vec()]).unwrap();
        let (v, _) = apply_cutoffs(&rho, &u, &c).unwrap();
        for i in 0..4 {
            prop_assert!(v.norm_sq_at(i) <= u.norm_sq_at(i) * (1.0 + 1e-12));
        }
    }
}
