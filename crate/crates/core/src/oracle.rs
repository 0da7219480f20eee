//! Brute-force O(N^2) reference sums. Slow by design; they exist so the FFT
//! paths have something independent to be checked against.

use crate::error::Result;
use crate::grid::{Field, TorusGrid, VecField};
use crate::kernel::{CutoffProfile, KernelSpec, KernelTable};

/// Flat index of the offset `i - j` (componentwise mod n).
pub fn offset_index(grid: &TorusGrid, i: usize, j: usize) -> usize {
    let n = grid.points_per_axis();
    let a = grid.unflatten(i);
    let b = grid.unflatten(j);
    let mut d = [0usize; 3];
    for ax in 0..grid.dim() {
        d[ax] = (a[ax] + n - b[ax]) % n;
    }
    grid.flatten(&d[..grid.dim()])
}

/// `sum_j table[i - j] f[j] h^dim` for every `i`.
pub fn direct_convolution(f: &Field, table: &KernelTable) -> Result<Field> {
    let grid = *f.grid();
    grid.same_as(table.grid())?;
    let w = grid.cell_volume();
    let vals = f.values();
    let tab = table.values();
    let out = (0..grid.len())
        .map(|i| {
            let mut s = 0.0;
            for (j, fj) in vals.iter().enumerate() {
                s += tab[offset_index(&grid, i, j)] * fj;
            }
            s * w
        })
        .collect();
    Field::new(grid, out)
}

/// `sum_i sum_j g(|x_i - x_j|) rho_i rho_j h^(2 dim)` with minimum-image
/// distances and `g` evaluated directly per pair.
pub fn direct_pair_sum(rho: &Field, g: impl Fn(f64) -> f64) -> f64 {
    let grid = *rho.grid();
    let w = grid.cell_volume();
    let vals = rho.values();
    let mut total = 0.0;
    for (i, ri) in vals.iter().enumerate() {
        if *ri == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for (j, rj) in vals.iter().enumerate() {
            let x = grid.offset_vector(offset_index(&grid, i, j));
            let r = x[..grid.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
            s += g(r) * rj;
        }
        total += ri * s;
    }
    total * w * w
}

/// `-rho(x_i) sum_j grad K_L(x_i - x_j) rho_j h^dim`, with the gradient
/// evaluated analytically per pair (zero on the diagonal).
pub fn direct_nonlocal_force(rho: &Field, spec: &KernelSpec, cutoff: &CutoffProfile) -> Result<VecField> {
    let grid = *rho.grid();
    let dim = grid.dim();
    let w = grid.cell_volume();
    let vals = rho.values();
    let mut comps = vec![vec![0.0; grid.len()]; dim];
    for i in 0..grid.len() {
        let mut acc = [0.0; 3];
        for (j, rj) in vals.iter().enumerate() {
            if i == j || *rj == 0.0 {
                continue;
            }
            let x = grid.offset_vector(offset_index(&grid, i, j));
            let r = x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= cutoff.half_length() {
                continue;
            }
            let dk = spec.radial_derivative(r) * cutoff.value(r) + spec.radial(r) * cutoff.derivative(r);
            for a in 0..dim {
                acc[a] += dk * x[a] / r * rj;
            }
        }
        for a in 0..dim {
            comps[a][i] = -vals[i] * acc[a] * w;
        }
    }
    VecField::new(grid, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_index_wraps() {
        let g = TorusGrid::new(2, 1.0, 4).unwrap();
        let i = g.flatten(&[0, 1]);
        let j = g.flatten(&[1, 3]);
        assert_eq!(g.unflatten(offset_index(&g, i, j)), [3, 2, 0]);
        assert_eq!(offset_index(&g, j, j), 0);
    }
}
