//! Second, independent evaluation of the right-hand side: 12th-order central
//! differences (applied repeatedly for higher derivatives), no dealiasing, and
//! a direct-sum convolution for the nonlocal potential.

use super::params::RegularizationParams;
use super::rhs::{rhs_terms, RhsTerms, State, Term};
use crate::error::Result;
use crate::grid::{Field, TorusGrid};
use crate::kernel::KernelTable;
use crate::oracle;
use serde::Serialize;

const HALF_WIDTH: usize = 6;

fn stencil() -> [f64; HALF_WIDTH] {
    // c_k = (-1)^(k+1) (p!)^2 / (k (p-k)! (p+k)!)
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    let p = HALF_WIDTH;
    let mut c = [0.0; HALF_WIDTH];
    for (k, slot) in c.iter_mut().enumerate() {
        let k = k + 1;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        *slot = sign * fact(p).powi(2) / (k as f64 * fact(p - k) * fact(p + k));
    }
    c
}

struct Fd {
    grid: TorusGrid,
    coeffs: [f64; HALF_WIDTH],
}

impl Fd {
    fn d(&self, v: &[f64], axis: usize) -> Vec<f64> {
        let g = &self.grid;
        let n = g.points_per_axis();
        let h = g.spacing();
        (0..g.len())
            .map(|i| {
                let idx = g.unflatten(i);
                let mut s = 0.0;
                for (k, c) in self.coeffs.iter().enumerate() {
                    let k = k + 1;
                    let mut fwd = idx;
                    let mut bwd = idx;
                    fwd[axis] = (idx[axis] + k) % n;
                    bwd[axis] = (idx[axis] + n - k % n) % n;
                    s += c * (v[g.flatten(&fwd[..g.dim()])] - v[g.flatten(&bwd[..g.dim()])]);
                }
                s / h
            })
            .collect()
    }

    fn lap(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for a in 0..self.grid.dim() {
            let dd = self.d(&self.d(v, a), a);
            for (o, x) in out.iter_mut().zip(dd) {
                *o += x;
            }
        }
        out
    }
}

fn zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

/// Same terms as [`rhs_terms`], by finite differences.
pub fn rhs_terms_fd(state: &State, params: &RegularizationParams, kernel: &KernelTable) -> Result<RhsTerms> {
    let grid = *state.grid();
    let dim = grid.dim();
    let fd = Fd {
        grid,
        coeffs: stencil(),
    };
    let rho = state.rho.values();
    let (uf, floor_hits) = state.velocity_counted();
    let u = uf.components();
    let m = state.momentum.components();
    let kernel_active = !kernel.is_zero();
    let on = |t: Term| t.coefficient(params, kernel_active) != 0.0;
    let len = grid.len();

    let mut density = Vec::new();
    let mut div = vec![0.0; len];
    for (a, ma) in m.iter().enumerate() {
        for (x, y) in div.iter_mut().zip(fd.d(ma, a)) {
            *x -= y;
        }
    }
    density.push((Term::Transport, div));
    if on(Term::Diffusion) {
        density.push((
            Term::Diffusion,
            fd.lap(rho).iter().map(|v| params.epsilon * v).collect(),
        ));
    }

    let mut momentum: Vec<(Term, Vec<Vec<f64>>)> = Vec::new();
    let grad_u: Vec<Vec<Vec<f64>>> = u.iter().map(|ui| (0..dim).map(|j| fd.d(ui, j)).collect()).collect();

    let mut adv = vec![vec![0.0; len]; dim];
    for i in 0..dim {
        for j in 0..dim {
            for (x, y) in adv[i].iter_mut().zip(fd.d(&zip(&m[j], &u[i], |a, b| a * b), j)) {
                *x -= y;
            }
        }
    }
    momentum.push((Term::Advection, adv));

    if on(Term::Viscosity) {
        let mut out = vec![vec![0.0; len]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let s: Vec<f64> = (0..len)
                    .map(|k| rho[k] * 0.5 * (grad_u[i][j][k] + grad_u[j][i][k]))
                    .collect();
                for (x, y) in out[i].iter_mut().zip(fd.d(&s, j)) {
                    *x += params.viscosity * y;
                }
            }
        }
        momentum.push((Term::Viscosity, out));
    }

    if on(Term::Nonlocal) {
        let potential = oracle::direct_convolution(&state.rho, kernel)?;
        let out = (0..dim)
            .map(|a| zip(rho, &fd.d(potential.values(), a), |r, g| -r * g))
            .collect();
        momentum.push((Term::Nonlocal, out));
    }

    if on(Term::LinearDamping) {
        momentum.push((
            Term::LinearDamping,
            u.iter().map(|c| c.iter().map(|v| -params.r0 * v).collect()).collect(),
        ));
    }

    if on(Term::CubicDamping) {
        let out = u
            .iter()
            .map(|c| {
                (0..len)
                    .map(|k| -params.r1 * rho[k] * uf.norm_sq_at(k) * c[k])
                    .collect()
            })
            .collect();
        momentum.push((Term::CubicDamping, out));
    }

    if on(Term::Quantum) {
        let root: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
        let q = zip(&fd.lap(&root), &root, |l, s| l / s);
        let out = (0..dim)
            .map(|a| zip(rho, &fd.d(&q, a), |r, g| params.kappa * r * g))
            .collect();
        momentum.push((Term::Quantum, out));
    }

    if on(Term::GradientTransport) {
        let grad_rho: Vec<Vec<f64>> = (0..dim).map(|a| fd.d(rho, a)).collect();
        let out = (0..dim)
            .map(|i| {
                (0..len)
                    .map(|k| -params.epsilon * (0..dim).map(|j| grad_rho[j][k] * grad_u[i][j][k]).sum::<f64>())
                    .collect()
            })
            .collect();
        momentum.push((Term::GradientTransport, out));
    }

    if on(Term::Bilaplacian) {
        let out = u
            .iter()
            .map(|c| fd.lap(&fd.lap(c)).iter().map(|v| -params.nu * v).collect())
            .collect();
        momentum.push((Term::Bilaplacian, out));
    }

    if on(Term::Barrier) {
        let floor = state.density_floor();
        let p: Vec<f64> = rho.iter().map(|r| r.max(floor).powi(-6)).collect();
        let out = (0..dim)
            .map(|a| fd.d(&p, a).iter().map(|v| params.eta * v).collect())
            .collect();
        momentum.push((Term::Barrier, out));
    }

    if on(Term::HighOrder) {
        let l3 = fd.lap(&fd.lap(&fd.lap(rho)));
        let out = (0..dim)
            .map(|a| zip(rho, &fd.d(&l3, a), |r, g| params.delta * r * g))
            .collect();
        momentum.push((Term::HighOrder, out));
    }

    Ok(RhsTerms {
        density,
        momentum,
        floor_hits,
    })
}

/// Discrepancy of one term: `max|spectral - fd| / max|fd|`.
#[derive(Clone, Debug, Serialize)]
pub struct TermCheck {
    pub term: &'static str,
    pub relative: f64,
    pub scale: f64,
    pub pass: bool,
}

fn discrepancy(a: &[&[f64]], b: &[&[f64]]) -> (f64, f64) {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y.iter()) {
            diff = diff.max((p - q).abs());
            scale = scale.max(q.abs());
        }
    }
    let rel = if scale > 0.0 { diff / scale } else { diff };
    (rel, scale)
}

/// Compare every active term of the spectral right-hand side to the
/// finite-difference oracle.
pub fn compare_rhs(
    state: &State,
    params: &RegularizationParams,
    kernel: &KernelTable,
    tolerance: f64,
) -> Result<Vec<TermCheck>> {
    let spec = rhs_terms(state, params, kernel)?;
    let fd = rhs_terms_fd(state, params, kernel)?;
    let mut out = Vec::new();
    for ((t, a), (_, b)) in spec.density.iter().zip(&fd.density) {
        let (relative, scale) = discrepancy(&[a.as_slice()], &[b.as_slice()]);
        out.push(TermCheck {
            term: t.name(),
            relative,
            scale,
            pass: relative <= tolerance,
        });
    }
    for ((t, a), (_, b)) in spec.momentum.iter().zip(&fd.momentum) {
        let av: Vec<&[f64]> = a.iter().map(|c| c.as_slice()).collect();
        let bv: Vec<&[f64]> = b.iter().map(|c| c.as_slice()).collect();
        let (relative, scale) = discrepancy(&av, &bv);
        out.push(TermCheck {
            term: t.name(),
            relative,
            scale,
            pass: relative <= tolerance,
        });
    }
    Ok(out)
}

/// Smooth, well-resolved positive state used by the term-by-term check.
pub fn smooth_test_state(grid: TorusGrid) -> Result<State> {
    let l = grid.half_length();
    let w = std::f64::consts::PI / l;
    let rho = Field::from_fn(grid, |x| {
        let mut v = 1.0;
        for (a, xa) in x.iter().enumerate() {
            v += 0.25 * (w * xa + 0.4 * a as f64).cos() / (a + 1) as f64;
            v += 0.08 * (2.0 * w * xa + 0.3).sin();
        }
        v
    });
    let u = crate::grid::VecField::from_fn(grid, |x| {
        (0..x.len())
            .map(|a| 0.4 * (w * x[a]).sin() + 0.15 * (3.0 * w * x[(a + 1) % x.len()] + 0.2 * a as f64).cos())
            .collect()
    });
    State::from_velocity(0.0, rho, &u)
}

/// Parameters with every term switched on at unit strength.
pub fn unit_params(alpha: f64, half_length: f64) -> RegularizationParams {
    RegularizationParams {
        epsilon: 1.0,
        nu: 1.0,
        eta: 1.0,
        delta: 1.0,
        kappa: 1.0,
        r0: 1.0,
        r1: 1.0,
        viscosity: 1.0,
        kernel: super::params::KernelMode::Full,
        ..RegularizationParams::inviscid_limit(alpha, half_length)
    }
}
