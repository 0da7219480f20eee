//! Fourier collocation on the torus: transforms, derivatives, the 2/3
//! dealiasing filter, periodic convolution and mollification.
//!
//! Transforms are complex-to-complex over all axes; the external contract is
//! purely real. FFT plans are cached per thread, and every reduction runs in
//! index order so repeated evaluations are bit-identical.

use crate::error::{Error, Result};
use crate::grid::{check_finite, Field, TorusGrid};
use crate::kernel::KernelTable;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, PlanPair>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> PlanPair {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    })
}

fn fft_nd(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / grid.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Unnormalized forward DFT of a real field.
pub fn forward(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(grid, &mut data, false);
    data
}

/// Inverse DFT (with `1/N`), keeping the real part.
pub fn inverse_real(grid: &TorusGrid, mut coeffs: Vec<Complex64>) -> Vec<f64> {
    fft_nd(grid, &mut coeffs, true);
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Multiplier of `d^order / dx_axis^order` at spectral index `idx`.
fn derivative_symbol(grid: &TorusGrid, idx: &[usize; 3], axis: usize, order: u32) -> Complex64 {
    let i = idx[axis];
    if order % 2 == 1 && grid.is_nyquist(i) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, grid.wavenumber(i)).powu(order)
}

/// Fourier coefficients of a real field, with helpers for derived fields.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(grid: &TorusGrid, values: &[f64]) -> Self {
        Self {
            grid: *grid,
            coeffs: forward(grid, values),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Multiply by a symbol built from per-axis spectral indices and return the
    /// real field.
    pub fn apply(&self, symbol: impl Fn(&[usize; 3]) -> Complex64) -> Vec<f64> {
        let out: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(f, c)| c * symbol(&self.grid.unflatten(f)))
            .collect();
        inverse_real(&self.grid, out)
    }

    pub fn derivative(&self, axis: usize, order: u32) -> Vec<f64> {
        let g = self.grid;
        self.apply(|idx| derivative_symbol(&g, idx, axis, order))
    }

    /// Mixed second derivative `d_a d_b` (plain second derivative when a == b).
    pub fn second(&self, a: usize, b: usize) -> Vec<f64> {
        let g = self.grid;
        if a == b {
            return self.derivative(a, 2);
        }
        self.apply(|idx| derivative_symbol(&g, idx, a, 1) * derivative_symbol(&g, idx, b, 1))
    }

    pub fn gradient(&self) -> Vec<Vec<f64>> {
        (0..self.grid.dim()).map(|a| self.derivative(a, 1)).collect()
    }

    /// `Delta^power` (power 0 returns the field).
    pub fn laplacian_power(&self, power: u32) -> Vec<f64> {
        let g = self.grid;
        self.apply(|idx| {
            let k2: f64 = (0..g.dim()).map(|a| g.wavenumber(idx[a]).powi(2)).sum();
            Complex64::new((-k2).powi(power as i32), 0.0)
        })
    }

    pub fn laplacian(&self) -> Vec<f64> {
        self.laplacian_power(1)
    }

    /// `d_axis Delta^power`.
    pub fn derivative_of_laplacian_power(&self, axis: usize, power: u32) -> Vec<f64> {
        let g = self.grid;
        self.apply(|idx| {
            let k2: f64 = (0..g.dim()).map(|a| g.wavenumber(idx[a]).powi(2)).sum();
            derivative_symbol(&g, idx, axis, 1) * (-k2).powi(power as i32)
        })
    }

    /// `||f||_2^2` computed from the coefficients (Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        s * self.grid.cell_volume() / self.grid.len() as f64
    }
}

/// Fourier-collocation derivative of `f` of the given order along `axis`.
pub fn spectral_derivative(f: &Field, axis: usize, order: u32) -> Result<Field> {
    let grid = *f.grid();
    if !(1..=6).contains(&order) {
        return Err(Error::validation(format!(
            "derivative order must be in 1..=6 (got {order})"
        )));
    }
    if axis >= grid.dim() {
        return Err(Error::validation(format!(
            "axis {axis} out of range for a {}-d grid",
            grid.dim()
        )));
    }
    f.check_finite("derivative input")?;
    Field::new(grid, Spectrum::of(&grid, f.values()).derivative(axis, order))
}

/// Largest retained mode index under the 2/3 rule.
pub fn dealias_cutoff(grid: &TorusGrid) -> usize {
    grid.points_per_axis() / 3
}

/// Zero every mode with `|j| > n/3` along any axis.
pub fn dealias(grid: &TorusGrid, values: &[f64]) -> Vec<f64> {
    let cut = dealias_cutoff(grid) as i64;
    let g = *grid;
    let spec = Spectrum::of(grid, values);
    spec.apply(|idx| {
        let keep = (0..g.dim()).all(|a| {
            let j = idx[a] as i64;
            let j = if j > g.points_per_axis() as i64 / 2 {
                j - g.points_per_axis() as i64
            } else {
                j
            };
            j.abs() <= cut
        });
        Complex64::new(if keep { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Discrete periodic convolution scaled by `h^dim`, approximating
/// `int K_L(x - y) f(y) dy` on the torus.
pub fn convolve_periodic(f: &Field, table: &KernelTable) -> Result<Field> {
    f.grid().same_as(table.grid())?;
    Field::new(*f.grid(), convolve_values(f.grid(), f.values(), table.transform()))
}

/// Convolution against a precomputed transform (already scaled by `h^dim`).
pub(crate) fn convolve_values(grid: &TorusGrid, values: &[f64], transform: &[Complex64]) -> Vec<f64> {
    let mut spec = forward(grid, values);
    for (s, t) in spec.iter_mut().zip(transform) {
        *s *= t;
    }
    inverse_real(grid, spec)
}

/// Convolve with a periodized standard mollifier `exp(-1/(1-r^2/w^2))`,
/// normalized to unit discrete mass. Evaluated as a direct stencil sum so
/// non-negativity is preserved exactly.
pub fn mollify(f: &Field, width: f64) -> Result<Field> {
    let grid = *f.grid();
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::validation(format!(
            "mollifier width must be positive (got {width})"
        )));
    }
    if width >= grid.half_length() {
        return Err(Error::validation(format!(
            "mollifier width {width} must be smaller than L = {}",
            grid.half_length()
        )));
    }
    check_finite(f.values(), "mollifier input")?;
    let h = grid.spacing();
    let reach = (width / h).floor() as i64;
    let dim = grid.dim();
    let n = grid.points_per_axis() as i64;

    // stencil of (offsets, weight)
    let span = 2 * reach + 1;
    let mut stencil: Vec<([i64; 3], f64)> = Vec::new();
    let total = span.pow(dim as u32);
    for s in 0..total {
        let mut rem = s;
        let mut off = [0i64; 3];
        let mut r2 = 0.0;
        for o in off.iter_mut().take(dim) {
            *o = rem % span - reach;
            rem /= span;
            r2 += (*o as f64 * h).powi(2);
        }
        let q = r2 / (width * width);
        if q < 1.0 {
            stencil.push((off, (-1.0 / (1.0 - q)).exp()));
        }
    }
    let mass: f64 = stencil.iter().map(|(_, w)| w).sum::<f64>();
    for (_, w) in stencil.iter_mut() {
        *w /= mass;
    }

    let src = f.values();
    let mut out = vec![0.0; grid.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let idx = grid.unflatten(i);
        let mut acc = 0.0;
        for (off, w) in &stencil {
            let mut j = 0usize;
            for a in 0..dim {
                let v = (idx[a] as i64 - off[a]).rem_euclid(n) as usize;
                j = j * n as usize + v;
            }
            acc += w * src[j];
        }
        *o = acc;
    }
    Field::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_bandlimited(grid: TorusGrid, modes: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = grid.half_length();
        let mut terms = Vec::new();
        for _ in 0..6 {
            let k: Vec<f64> = (0..grid.dim())
                .map(|_| PI / l * rng.gen_range(-(modes as i64)..=modes as i64) as f64)
                .collect();
            terms.push((k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
        }
        Field::from_fn(grid, |x| {
            terms
                .iter()
                .map(|(k, a, p)| a * (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + p).cos())
                .sum()
        })
    }

    #[test]
    fn sine_derivative_is_cosine() {
        let g = TorusGrid::new(1, 3.0, 32).unwrap();
        let l = g.half_length();
        let f = Field::from_fn(g, |x| (PI * x[0] / l).sin());
        let d = spectral_derivative(&f, 0, 1).unwrap();
        for (i, v) in d.values().iter().enumerate() {
            let x = g.coordinate(i);
            assert!((v - PI / l * (PI * x / l).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let g = TorusGrid::new(2, 1.0, 16).unwrap();
        let f = Field::constant(g, 2.5);
        for axis in 0..2 {
            for order in 1..=6 {
                let d = spectral_derivative(&f, axis, order).unwrap();
                assert!(d.max_abs() < 1e-12, "axis {axis} order {order}");
            }
        }
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let g = TorusGrid::new(1, 4.0, 256).unwrap();
        let f = random_bandlimited(g, 4, 3);
        let d2 = spectral_derivative(&f, 0, 2).unwrap();
        let h = g.spacing();
        let v = f.values();
        let n = v.len();
        let mut err: f64 = 0.0;
        for i in 0..n {
            // fourth-order centered stencil
            let fd = (-v[(i + 2) % n] + 16.0 * v[(i + 1) % n] - 30.0 * v[i] + 16.0 * v[(i + n - 1) % n]
                - v[(i + n - 2) % n])
                / (12.0 * h * h);
            err = err.max((fd - d2.values()[i]).abs());
        }
        assert!(err / d2.max_abs() <= 1e-6, "relative error {}", err / d2.max_abs());
    }

    #[test]
    fn rejects_bad_derivative_requests() {
        let g = TorusGrid::new(1, 1.0, 8).unwrap();
        let mut f = Field::zeros(g);
        assert!(spectral_derivative(&f, 1, 1).is_err());
        assert!(spectral_derivative(&f, 0, 7).is_err());
        f.values_mut()[5] = f64::NAN;
        match spectral_derivative(&f, 0, 1) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parseval() {
        let g = TorusGrid::new(2, 2.0, 32).unwrap();
        let f = random_bandlimited(g, 5, 11);
        let phys: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        let spec = Spectrum::of(&g, f.values()).l2_norm_sq();
        assert!((phys - spec).abs() <= 1e-10 * phys);
    }

    #[test]
    fn derivative_of_even_field_is_odd() {
        let g = TorusGrid::new(1, 2.0, 64).unwrap();
        let f = Field::from_fn(g, |x| (-x[0] * x[0]).exp() + (PI * x[0] / 2.0).cos());
        let d = spectral_derivative(&f, 0, 1).unwrap();
        for i in 1..64 {
            let j = 64 - i;
            assert!((d.values()[i] + d.values()[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let g = TorusGrid::new(1, PI, 48).unwrap();
        let low = Field::from_fn(g, |x| (3.0 * x[0]).sin() + (16.0 * x[0]).cos());
        let out = dealias(&g, low.values());
        for (a, b) in out.iter().zip(low.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        let high = Field::from_fn(g, |x| (17.0 * x[0]).cos());
        assert!(dealias(&g, high.values()).iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn mollify_constant_and_mass() {
        let g = TorusGrid::new(1, 4.0, 64).unwrap();
        let c = Field::constant(g, 0.7);
        let m = mollify(&c, 4.0 * g.spacing()).unwrap();
        assert!(m.values().iter().all(|v| (v - 0.7).abs() < 1e-15));

        let step = Field::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 0.0 });
        let m = mollify(&step, 4.0 * g.spacing()).unwrap();
        assert!(m.min() >= 0.0);
        assert!((m.integral() - step.integral()).abs() <= 1e-12 * step.integral());
        // transition is smoothed: interior points strictly between 0 and 1
        let mid = m.values()[32];
        assert!(mid > 0.0 && mid < 1.0);
        assert!(mollify(&step, 4.0).is_err());
        assert!(mollify(&step, 0.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn derivative_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let g = TorusGrid::new(2, 1.5, 16).unwrap();
            let f = random_bandlimited(g, 3, seed);
            let h = random_bandlimited(g, 3, seed + 7);
            let comb = Field::new(g, f.values().iter().zip(h.values()).map(|(x, y)| a * x + b * y).collect()).unwrap();
            for axis in 0..2 {
                let lhs = spectral_derivative(&comb, axis, 1).unwrap();
                let df = spectral_derivative(&f, axis, 1).unwrap();
                let dh = spectral_derivative(&h, axis, 1).unwrap();
                let scale = lhs.max_abs().max(1.0);
                for i in 0..g.len() {
                    let rhs = a * df.values()[i] + b * dh.values()[i];
                    proptest::prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
