use super::params::RegularizationParams;
use super::rhs::State;
use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid, VecField};
use crate::kernel::{build_cutoff, singular_cell_average, KernelTable};
use crate::spectral::{self, Spectrum};
use serde::Serialize;

/// Quantities controlled by the truncation step, reported alongside the
/// prepared state.
#[derive(Clone, Debug, Serialize)]
pub struct InitialReport {
    /// `||grad sqrt(rho_{0,L})||_2`
    pub grad_sqrt_truncated: f64,
    /// `||grad sqrt(rho_0)||_2 + C1/L ||rho_0||_1^(1/2)`
    pub grad_sqrt_bound: f64,
    /// `int int rho_{0,L} rho_{0,L} K_L` on the torus
    pub interaction_truncated: f64,
    /// `int int rho_0 rho_0 K` without truncation or periodization
    pub interaction_whole_space: f64,
    pub kinetic_truncated: f64,
    pub kinetic_original: f64,
    /// `||rho_{0,L} - rho_0||_1`
    pub l1_truncation_error: f64,
    /// `||rho_{0,L} * xi - rho_0||_1`
    pub l1_mollified_error: f64,
    pub truncated_mass: f64,
}

impl InitialReport {
    pub fn gradient_bound_holds(&self) -> bool {
        self.grad_sqrt_truncated <= self.grad_sqrt_bound * (1.0 + 1e-12)
    }

    pub fn interaction_bound_holds(&self) -> bool {
        self.interaction_truncated <= self.interaction_whole_space + 1e-12 * self.interaction_whole_space.abs().max(1.0)
    }
}

/// Prepared initial state plus the intermediate fields.
#[derive(Clone, Debug)]
pub struct PreparedInitial {
    pub state: State,
    /// `rho_0 phi_L^2` before mollification and flooring
    pub truncated: Field,
    pub report: InitialReport,
}

fn l2_gradient_norm(f: &Field) -> f64 {
    let g = Spectrum::of(f.grid(), f.values()).gradient();
    let s: f64 = (0..f.grid().len())
        .map(|i| g.iter().map(|c| c[i] * c[i]).sum::<f64>())
        .sum();
    (s * f.grid().cell_volume()).sqrt()
}

/// `int int rho(x) rho(y) K(x - y)` for the untruncated kernel, using a
/// zero-padded grid so the sum is not periodized.
fn whole_space_interaction(rho: &Field, params: &RegularizationParams) -> Result<f64> {
    let grid = *rho.grid();
    let spec = params.kernel_spec();
    if !spec.is_active() {
        return Ok(0.0);
    }
    let big = TorusGrid::new(grid.dim(), 2.0 * grid.half_length(), 2 * grid.points_per_axis())?;
    let origin = if spec.include_repulsion {
        singular_cell_average(spec.alpha, grid.spacing(), grid.dim())?
    } else {
        0.0
    };
    let table = KernelTable::radial(&big, |r| if r == 0.0 { origin } else { spec.radial(r) });
    let n = grid.points_per_axis();
    let mut padded = vec![0.0; big.len()];
    for (i, v) in rho.values().iter().enumerate() {
        let idx = grid.unflatten(i);
        let mut b = [0usize; 3];
        for a in 0..grid.dim() {
            b[a] = idx[a] + n / 2;
        }
        padded[big.flatten(&b[..grid.dim()])] = *v;
    }
    let conv = spectral::convolve_values(&big, &padded, table.transform());
    let s: f64 = padded.iter().zip(&conv).map(|(r, c)| r * c).sum();
    Ok(s * big.cell_volume())
}

/// Truncate, mollify and floor the initial density; zero the velocity on
/// the vacuum of the truncated density.
pub fn initial_data(rho0: &Field, u0: &VecField, params: &RegularizationParams) -> Result<PreparedInitial> {
    params.validate()?;
    let grid = *rho0.grid();
    grid.same_as(u0.grid())?;
    if (grid.half_length() - params.half_length).abs() > 0.0 {
        return Err(Error::GridMismatch(format!(
            "params L = {} but grid L = {}",
            params.half_length,
            grid.half_length()
        )));
    }
    rho0.check_finite("initial density")?;
    rho0.check_nonnegative()?;
    u0.check_finite("initial velocity")?;

    let cutoff = build_cutoff(grid.half_length())?;
    let truncated = Field::new(
        grid,
        rho0.values()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let x = grid.position(i);
                let radius = x[..grid.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
                let phi = cutoff.value(radius);
                r * phi * phi
            })
            .collect(),
    )?;
    let smoothed = spectral::mollify(&truncated, params.mollifier_width)?;
    let floor = 1.0 / params.m1;
    let rho = smoothed.map(|v| v + floor);

    let comps: Vec<Vec<f64>> = u0
        .components()
        .iter()
        .map(|c| {
            c.iter()
                .zip(truncated.values())
                .map(|(u, r)| if *r == 0.0 { 0.0 } else { *u })
                .collect()
        })
        .collect();
    let u = VecField::new(grid, comps)?;
    let state = State::from_velocity(0.0, rho, &u)?;

    let w = grid.cell_volume();
    let kinetic = |r: &Field, v: &VecField| -> f64 {
        r.values()
            .iter()
            .enumerate()
            .map(|(i, ri)| ri * v.norm_sq_at(i))
            .sum::<f64>()
            * w
    };
    let table = params.kernel_table(&grid)?;
    let conv = spectral::convolve_values(&grid, truncated.values(), table.transform());
    let interaction_truncated = truncated.values().iter().zip(&conv).map(|(a, b)| a * b).sum::<f64>() * w;
    let l1 = |a: &Field| {
        a.values()
            .iter()
            .zip(rho0.values())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            * w
    };

    let report = InitialReport {
        grad_sqrt_truncated: l2_gradient_norm(&truncated.map(f64::sqrt)),
        grad_sqrt_bound: l2_gradient_norm(&rho0.map(f64::sqrt))
            + cutoff.gradient_constant() / grid.half_length() * rho0.integral().sqrt(),
        interaction_truncated,
        interaction_whole_space: whole_space_interaction(rho0, params)?,
        kinetic_truncated: kinetic(&truncated, &u),
        kinetic_original: kinetic(rho0, u0),
        l1_truncation_error: l1(&truncated),
        l1_mollified_error: l1(&smoothed),
        truncated_mass: truncated.integral(),
    };
    Ok(PreparedInitial {
        state,
        truncated,
        report,
    })
}

/// Normalized Gaussian of the given mass and width centered at `center`.
pub fn gaussian_bump(grid: TorusGrid, center: &[f64], width: f64, mass: f64) -> Field {
    let d = grid.dim() as i32;
    let norm = mass / (2.0 * std::f64::consts::PI * width * width).powf(d as f64 / 2.0);
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
        norm * (-r2 / (2.0 * width * width)).exp()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_gives_floor() {
        let g = TorusGrid::new(2, 2.0, 16).unwrap();
        let p = RegularizationParams {
            mollifier_width: 0.5,
            ..RegularizationParams::inviscid_limit(0.5, 2.0)
        };
        let u = VecField::from_fn(g, |x| vec![x[0].sin(), 1.0]);
        let out = initial_data(&Field::zeros(g), &u, &p).unwrap();
        for v in out.state.rho.values() {
            assert_eq!(*v, 0.1);
        }
        assert_eq!(out.state.momentum.max_norm(), 0.0);
    }

    #[test]
    fn compact_bump_is_untouched_by_truncation() {
        let g = TorusGrid::new(1, 8.0, 128).unwrap();
        let p = RegularizationParams {
            mollifier_width: 0.4,
            ..RegularizationParams::inviscid_limit(0.5, 8.0)
        };
        let rho0 = gaussian_bump(g, &[0.0], 0.5, 1.0);
        let out = initial_data(&rho0, &VecField::zeros(g), &p).unwrap();
        assert!(out.report.l1_truncation_error < 1e-13);
        assert!((out.report.truncated_mass - 1.0).abs() < 1e-12);
        assert!(out.report.gradient_bound_holds());
        assert!(out.report.interaction_bound_holds());
    }

    #[test]
    fn negative_density_rejected() {
        let g = TorusGrid::new(1, 2.0, 8).unwrap();
        let mut rho = Field::constant(g, 1.0);
        rho.values_mut()[2] = -1.0;
        let p = RegularizationParams::inviscid_limit(0.5, 2.0);
        assert!(initial_data(&rho, &VecField::zeros(g), &p).is_err());
    }
}
