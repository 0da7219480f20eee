//! Periodic torus grid and the real-valued fields living on it.
//!
//! The domain is `[-L, L)^dim` with `n` points per axis. Storage is row-major
//! with axis 0 slowest, so flat index `i = ((i0 * n) + i1) * n + i2`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Uniform periodic grid on the torus of side `2L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    half_length: f64,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, half_length: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::validation(format!("dim must be 1, 2 or 3 (got {dim})")));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::validation(format!(
                "L must be positive and finite (got {half_length})"
            )));
        }
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "points per axis must be a positive even integer (got {n})"
            )));
        }
        Ok(Self { dim, half_length, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(2L)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Coordinate of grid index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    /// Signed minimum-image offset (in index units) of index `i`.
    pub fn signed_index(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `pi j / L` of DFT index `i`. The Nyquist index
    /// `n/2` maps to the negative frequency.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let j = if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        };
        PI * j as f64 / self.half_length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Split a flat index into per-axis indices (unused axes are 0).
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0usize, |acc, &i| acc * self.n + i)
    }

    /// Physical position of a flat index.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// Minimum-image displacement vector of a flat offset index.
    pub fn offset_vector(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.signed_index(idx[a]) as f64 * h;
        }
        x
    }

    /// Flat index of the mirrored offset `-j` (componentwise mod n).
    pub fn mirror(&self, flat: usize) -> usize {
        let idx = self.unflatten(flat);
        let mut m = [0usize; 3];
        for a in 0..self.dim {
            m[a] = (self.n - idx[a]) % self.n;
        }
        self.flatten(&m[..self.dim])
    }

    pub fn same_as(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Scalar field on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i)[..grid.dim()])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Midpoint/trapezoid quadrature (identical on a periodic uniform grid).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        check_finite(&self.values, what)
    }

    /// Density fields must be non-negative; violations are reported, never clamped.
    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0 || v.is_nan()) {
            Some(index) => Err(Error::NegativeDensity {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            what: what.to_string(),
            index,
        }),
        None => Ok(()),
    }
}

/// Vector field with one component per spatial dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct VecField {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
}

impl VecField {
    pub fn new(grid: TorusGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::validation(format!(
                "vector field has {} components on a {}-d grid",
                components.len(),
                grid.dim()
            )));
        }
        if let Some(c) = components.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::validation(format!(
                "component has {} values, grid needs {}",
                c.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            components: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            let v = f(&grid.position(i)[..grid.dim()]);
            for (c, vc) in out.components.iter_mut().zip(v) {
                c[i] = vc;
            }
        }
        out
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn component_field(&self, axis: usize) -> Field {
        Field {
            grid: self.grid,
            values: self.components[axis].clone(),
        }
    }

    /// Squared Euclidean norm at a grid point.
    pub fn norm_sq_at(&self, i: usize) -> f64 {
        self.components.iter().map(|c| c[i] * c[i]).sum()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.norm_sq_at(i))
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        for c in &self.components {
            check_finite(c, what)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_points_is_torus_length() {
        for n in [2, 4, 8, 16, 32, 64, 128, 256] {
            let g = TorusGrid::new(2, 8.0, n).unwrap();
            assert_eq!(g.spacing() * n as f64, 16.0);
            assert_eq!(g.cell_volume() * g.len() as f64, g.volume());
        }
        let g = TorusGrid::new(3, 3.7, 24).unwrap();
        let rel = (g.spacing() * 24.0 - 7.4).abs() / 7.4;
        assert!(rel < 1e-15);
    }

    #[test]
    fn wavenumbers_antisymmetric_with_single_nyquist() {
        let g = TorusGrid::new(1, 2.0, 16).unwrap();
        let k = g.wavenumbers();
        for j in 1..8 {
            assert_eq!(k[j], -k[16 - j]);
        }
        let nyq = k.iter().filter(|v| v.abs() == PI * 8.0 / 2.0).count();
        assert_eq!(nyq, 1);
        assert_eq!(k[0], 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(4, 1.0, 8).is_err());
        assert!(TorusGrid::new(1, 0.0, 8).is_err());
        assert!(TorusGrid::new(1, 1.0, 7).is_err());
    }

    #[test]
    fn flatten_roundtrip_and_mirror() {
        let g = TorusGrid::new(3, 1.0, 6).unwrap();
        for f in 0..g.len() {
            let idx = g.unflatten(f);
            assert_eq!(g.flatten(&idx[..3]), f);
            assert_eq!(g.mirror(g.mirror(f)), f);
            let a = g.offset_vector(f);
            let b = g.offset_vector(g.mirror(f));
            for ax in 0..3 {
                // the Nyquist offset is its own mirror
                if idx[ax] != 3 {
                    assert_eq!(a[ax], -b[ax]);
                }
            }
        }
    }

    #[test]
    fn field_length_checked() {
        let g = TorusGrid::new(2, 1.0, 4).unwrap();
        assert!(Field::new(g, vec![0.0; 15]).is_err());
        assert!(VecField::new(g, vec![vec![0.0; 16]]).is_err());
        let f = Field::new(g, vec![-1.0; 16]).unwrap();
        assert!(matches!(
            f.check_nonnegative(),
            Err(Error::NegativeDensity { index: 0, .. })
        ));
    }
}
