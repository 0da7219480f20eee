//! The attraction-repulsion kernel `K(x) = |x|^-alpha + |x|^2/2`, its torus
//! truncation `K_L = K phi_L`, and the related certification utilities.
//!
//! Tables are indexed by minimum-image offset: entry `j` holds the kernel at
//! displacement `grid.offset_vector(j)`. Since `supp K_L` lies in `B(0, L)` and
//! the torus has period `2L`, periodic convolution with such a table is the
//! whole-space convolution with the truncated kernel.

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid, VecField};
use crate::quadrature::integrate;
use crate::spectral::{self, Spectrum};
use num_complex::Complex64;
use serde::Serialize;

/// Which parts of `K` are active, and the singularity exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    pub half_length: f64,
    pub include_attraction: bool,
    pub include_repulsion: bool,
}

impl KernelSpec {
    pub fn new(alpha: f64, half_length: f64) -> Result<Self> {
        let spec = Self {
            alpha,
            half_length,
            include_attraction: true,
            include_repulsion: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn repulsion_only(self) -> Self {
        Self {
            include_attraction: false,
            include_repulsion: true,
            ..self
        }
    }

    pub fn attraction_only(self) -> Self {
        Self {
            include_attraction: true,
            include_repulsion: false,
            ..self
        }
    }

    pub fn disabled(self) -> Self {
        Self {
            include_attraction: false,
            include_repulsion: false,
            ..self
        }
    }

    pub fn is_active(&self) -> bool {
        self.include_attraction || self.include_repulsion
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(Error::validation("L must be positive"));
        }
        if self.include_repulsion && !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::validation("alpha must lie in (0,2)"));
        }
        Ok(())
    }

    /// `K(r)` without truncation (r > 0).
    pub fn radial(&self, r: f64) -> f64 {
        let mut k = 0.0;
        if self.include_repulsion {
            k += r.powf(-self.alpha);
        }
        if self.include_attraction {
            k += 0.5 * r * r;
        }
        k
    }

    /// `K'(r)` without truncation (r > 0).
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let mut k = 0.0;
        if self.include_repulsion {
            k -= self.alpha * r.powf(-self.alpha - 1.0);
        }
        if self.include_attraction {
            k += r;
        }
        k
    }
}

/// Radial cutoff `phi_L`: 1 on `|x| < L/2`, 0 on `|x| >= L`, quintic
/// smoothstep in between (C^2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    half_length: f64,
}

fn smoothstep(s: f64) -> f64 {
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn smoothstep_d1(s: f64) -> f64 {
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

fn smoothstep_d2(s: f64) -> f64 {
    60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

pub fn build_cutoff(half_length: f64) -> Result<CutoffProfile> {
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::validation(format!("L must be positive (got {half_length})")));
    }
    Ok(CutoffProfile { half_length })
}

impl CutoffProfile {
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    fn ramp(&self, r: f64) -> Option<f64> {
        let half = 0.5 * self.half_length;
        let s = (r - half) / half;
        if s <= 0.0 || s >= 1.0 {
            None
        } else {
            Some(s)
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 0.5 * self.half_length {
            1.0
        } else if r >= self.half_length {
            0.0
        } else {
            1.0 - smoothstep((r - 0.5 * self.half_length) / (0.5 * self.half_length))
        }
    }

    /// `d phi / dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        self.ramp(r).map_or(0.0, |s| -smoothstep_d1(s) * 2.0 / self.half_length)
    }

    /// `d^2 phi / dr^2`.
    pub fn second_derivative(&self, r: f64) -> f64 {
        self.ramp(r)
            .map_or(0.0, |s| -smoothstep_d2(s) * 4.0 / (self.half_length * self.half_length))
    }

    /// Radial Laplacian `phi'' + (d-1)/r phi'`.
    pub fn laplacian(&self, r: f64, dim: usize) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.second_derivative(r) + (dim as f64 - 1.0) / r * self.derivative(r)
    }

    /// `C1` with `|grad phi_L| <= C1 / L` (exact for the quintic: 15/4).
    pub fn gradient_constant(&self) -> f64 {
        self.half_length * smoothstep_d1(0.5) * 2.0 / self.half_length
    }

    /// `C2` with `|Delta phi_L| <= C2 / L^2`, measured on a dense radial grid.
    pub fn laplacian_constant(&self, dim: usize) -> f64 {
        let samples = 200_000;
        let l = self.half_length;
        (0..=samples)
            .map(|i| {
                let r = 0.5 * l + 0.5 * l * i as f64 / samples as f64;
                self.laplacian(r, dim).abs()
            })
            .fold(0.0, f64::max)
            * l
            * l
    }
}

/// Sampled `K_L`, its gradient, and the transform used for fast convolution.
#[derive(Clone, Debug)]
pub struct KernelTable {
    grid: TorusGrid,
    values: Vec<f64>,
    gradient: Option<Vec<Vec<f64>>>,
    transform: Vec<Complex64>,
    gradient_transforms: Option<Vec<Vec<Complex64>>>,
}

fn offset_radius(grid: &TorusGrid, j: usize) -> f64 {
    let x = grid.offset_vector(j);
    x[..grid.dim()].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scaled_transform(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let w = grid.cell_volume();
    spectral::forward(grid, values).into_iter().map(|c| c * w).collect()
}

/// Average of `|x|^-alpha` over the grid cell `[-h/2, h/2]^dim`.
///
/// Each octant is split into `dim` congruent pyramids on which the Duffy map
/// factors out the radial singularity, leaving a smooth integrand.
pub fn singular_cell_average(alpha: f64, h: f64, dim: usize) -> Result<f64> {
    let a = 0.5 * h;
    let d = dim as f64;
    if alpha >= d {
        return Err(Error::validation("singular kernel not integrable in 1D"));
    }
    let angular = match dim {
        1 => 1.0,
        2 => integrate(|t| (1.0 + t * t).powf(-0.5 * alpha), 0.0, 1.0, 48),
        3 => integrate(
            |s| integrate(|t| (1.0 + s * s + t * t).powf(-0.5 * alpha), 0.0, 1.0, 48),
            0.0,
            1.0,
            48,
        ),
        _ => return Err(Error::validation("dim must be 1, 2 or 3")),
    };
    let octants = 2f64.powi(dim as i32);
    let integral = octants * d * a.powf(d - alpha) / (d - alpha) * angular;
    Ok(integral / h.powi(dim as i32))
}

/// Sample `K_L` on the grid and precompute its transform.
pub fn build_kernel_table(grid: &TorusGrid, spec: &KernelSpec, cutoff: &CutoffProfile) -> Result<KernelTable> {
    spec.validate()?;
    if cutoff.half_length() != grid.half_length() || spec.half_length != grid.half_length() {
        return Err(Error::GridMismatch(format!(
            "cutoff L = {}, kernel L = {}, grid L = {}",
            cutoff.half_length(),
            spec.half_length,
            grid.half_length()
        )));
    }
    if spec.include_repulsion && grid.dim() == 1 && spec.alpha >= 1.0 {
        return Err(Error::validation("singular kernel not integrable in 1D"));
    }
    let dim = grid.dim();
    let origin = if spec.include_repulsion {
        singular_cell_average(spec.alpha, grid.spacing(), dim)?
    } else {
        0.0
    };
    let mut values = vec![0.0; grid.len()];
    let mut gradient = vec![vec![0.0; grid.len()]; dim];
    for j in 0..grid.len() {
        let r = offset_radius(grid, j);
        if r == 0.0 {
            values[j] = origin;
            continue;
        }
        // rounding can put the torus corner a hair inside the support
        if r >= grid.half_length() * (1.0 - 1e-12) {
            continue;
        }
        let phi = cutoff.value(r);
        values[j] = spec.radial(r) * phi;
        if grid.mirror(j) == j {
            // an odd table must vanish where x and -x coincide
            continue;
        }
        let dr = spec.radial_derivative(r) * phi + spec.radial(r) * cutoff.derivative(r);
        let x = grid.offset_vector(j);
        for a in 0..dim {
            gradient[a][j] = dr * x[a] / r;
        }
    }
    let transform = scaled_transform(grid, &values);
    let gradient_transforms = gradient.iter().map(|g| scaled_transform(grid, g)).collect();
    Ok(KernelTable {
        grid: *grid,
        values,
        gradient: Some(gradient),
        transform,
        gradient_transforms: Some(gradient_transforms),
    })
}

impl KernelTable {
    /// Table of a radial profile `f(|x|)` at minimum-image distance, with no
    /// truncation and no gradient (used for the pair functionals).
    pub fn radial(grid: &TorusGrid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|j| f(offset_radius(grid, j))).collect();
        let transform = scaled_transform(grid, &values);
        Self {
            grid: *grid,
            values,
            gradient: None,
            transform,
            gradient_transforms: None,
        }
    }

    /// All-zero table (kernel switched off).
    pub fn zero(grid: &TorusGrid) -> Self {
        Self::radial(grid, |_| 0.0)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradient(&self) -> Option<&[Vec<f64>]> {
        self.gradient.as_deref()
    }

    /// DFT of the table scaled by `h^dim`.
    pub fn transform(&self) -> &[Complex64] {
        &self.transform
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// `Delta |x|^-alpha = -alpha (1 - alpha) / |x|^(alpha + 2)` in three
/// dimensions, valid for `0 < alpha < 1`.
pub fn laplacian_of_singular_part(alpha: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::validation("r must be positive"));
    }
    if (1.0..2.0).contains(&alpha) {
        return Err(Error::validation(
            "distributional case: the Laplacian of |x|^-alpha is not a function for alpha >= 1",
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation("alpha must lie in (0,2)"));
    }
    Ok(-alpha * (1.0 - alpha) / r.powf(alpha + 2.0))
}

/// `Delta (|x|^2 / 2) = dim`.
pub fn laplacian_of_attractive_part(dim: usize) -> f64 {
    dim as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub min_mode_value: f64,
    pub max_mode_value: f64,
    pub tolerance: f64,
    pub positivity_pass: bool,
    /// Whether `r * phi_L(r) / r^alpha` is non-increasing on the sampled radii.
    pub hypothesis_holds: bool,
}

/// Minimum over all discrete modes of the DFT of `phi_L / |x|^alpha`.
pub fn fourier_positivity_check(
    grid: &TorusGrid,
    spec: &KernelSpec,
    cutoff: &CutoffProfile,
) -> Result<PositivityReport> {
    let rep = spec.repulsion_only();
    let table = build_kernel_table(grid, &rep, cutoff)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in table.transform() {
        lo = lo.min(c.re);
        hi = hi.max(c.re);
    }
    let tolerance = 1e-10;
    let samples = 20_000;
    let l = grid.half_length();
    let profile = |r: f64| r.powf(1.0 - spec.alpha) * cutoff.value(r);
    let mut hypothesis_holds = true;
    let mut prev = profile(l / samples as f64);
    for i in 2..=samples {
        let cur = profile(l * i as f64 / samples as f64);
        if cur > prev * (1.0 + 1e-14) + 1e-300 {
            hypothesis_holds = false;
            break;
        }
        prev = cur;
    }
    Ok(PositivityReport {
        min_mode_value: lo,
        max_mode_value: hi,
        tolerance,
        positivity_pass: lo >= -tolerance * hi,
        hypothesis_holds,
    })
}

/// Sobolev exponent of the Riesz potential `I_{3-alpha}` on `L^p` in 3-d:
/// `p* = 3p / (3 - (3 - alpha) p)`.
pub fn riesz_exponent(p: f64, alpha: f64, dim: usize) -> Result<f64> {
    if dim != 3 {
        return Err(Error::validation("riesz exponent map is defined for dim = 3"));
    }
    if !(p >= 1.0) || !(alpha > 0.0 && alpha <= 3.0) {
        return Err(Error::validation("exponent out of range"));
    }
    let denom = 3.0 - (3.0 - alpha) * p;
    if denom <= 0.0 {
        return Err(Error::validation("exponent out of range"));
    }
    Ok(3.0 * p / denom)
}

/// `C_impl` in `int grad(K_L * rho) . grad(rho) >= -C_impl ||rho||_1^2`.
///
/// Attractive part: `|Delta(|x|^2 phi_L / 2)| <= dim + 2 C1 + C2 / 2`.
/// Repulsive part: the cross terms of `Delta(|x|^-alpha phi_L)` on
/// `L/2 < |x| < L`, the principal part being non-negative.
pub fn interaction_lemma_constant(spec: &KernelSpec, cutoff: &CutoffProfile, dim: usize) -> f64 {
    let l = cutoff.half_length();
    let c1 = cutoff.gradient_constant();
    let c2 = cutoff.laplacian_constant(dim);
    let mut c = 0.0;
    if spec.include_attraction {
        c += dim as f64 + 2.0 * c1 + 0.5 * c2;
    }
    if spec.include_repulsion {
        let r = 0.5 * l;
        c += 2.0 * spec.alpha * r.powf(-spec.alpha - 1.0) * c1 / l + r.powf(-spec.alpha) * c2 / (l * l);
    }
    c
}

/// Nonlocal force `-rho (grad K_L * rho)` using the analytic gradient tables.
pub fn nonlocal_force(rho: &Field, table: &KernelTable) -> Result<VecField> {
    let grid = *rho.grid();
    grid.same_as(table.grid())?;
    let dim = grid.dim();
    let comps = match &table.gradient_transforms {
        Some(gt) => gt
            .iter()
            .map(|t| {
                let conv = spectral::convolve_values(&grid, rho.values(), t);
                conv.iter().zip(rho.values()).map(|(c, r)| -r * c).collect()
            })
            .collect(),
        None => return Err(Error::validation("kernel table carries no gradient")),
    };
    let out = VecField::new(grid, comps)?;
    debug_assert_eq!(out.components().len(), dim);
    out.check_finite("nonlocal force")?;
    Ok(out)
}

/// Energy-consistent force `-rho grad(K_L * rho)`, the gradient taken
/// spectrally so it is the exact discrete variation of `1/2 int rho K_L * rho`.
pub fn nonlocal_force_spectral(rho: &Field, table: &KernelTable) -> Result<VecField> {
    let grid = *rho.grid();
    grid.same_as(table.grid())?;
    let potential = spectral::convolve_values(&grid, rho.values(), table.transform());
    let spec = Spectrum::of(&grid, &potential);
    let comps = spec
        .gradient()
        .into_iter()
        .map(|g| g.iter().zip(rho.values()).map(|(g, r)| -r * g).collect())
        .collect();
    let out = VecField::new(grid, comps)?;
    out.check_finite("nonlocal force")?;
    Ok(out)
}
