use super::params::RegularizationParams;
use crate::error::{Error, Result};
use crate::grid::{check_finite, Field, TorusGrid, VecField};
use crate::kernel::KernelTable;
use crate::spectral::{self, Spectrum};

/// Relative density floor used when recovering velocity from momentum.
pub const FLOOR_FRACTION: f64 = 1e-12;

/// Solution at one instant, stored as density and momentum `m = rho u`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub rho: Field,
    pub momentum: VecField,
}

impl State {
    pub fn new(t: f64, rho: Field, momentum: VecField) -> Result<Self> {
        rho.grid().same_as(momentum.grid())?;
        Ok(Self { t, rho, momentum })
    }

    pub fn from_velocity(t: f64, rho: Field, u: &VecField) -> Result<Self> {
        rho.grid().same_as(u.grid())?;
        let comps = u
            .components()
            .iter()
            .map(|c| c.iter().zip(rho.values()).map(|(v, r)| v * r).collect())
            .collect();
        let momentum = VecField::new(*rho.grid(), comps)?;
        Ok(Self { t, rho, momentum })
    }

    /// Uniform density `c` at rest.
    pub fn rest(grid: TorusGrid, c: f64) -> Self {
        Self {
            t: 0.0,
            rho: Field::constant(grid, c),
            momentum: VecField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.rho.grid()
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    /// `1e-12 * mean(rho)`.
    pub fn density_floor(&self) -> f64 {
        FLOOR_FRACTION * self.mass() / self.grid().volume()
    }

    /// `u = m / max(rho, floor)`.
    pub fn velocity(&self) -> VecField {
        self.velocity_counted().0
    }

    /// Velocity together with the number of points where the floor engaged.
    pub fn velocity_counted(&self) -> (VecField, usize) {
        let floor = self.density_floor();
        let hits = self.rho.values().iter().filter(|r| **r < floor).count();
        let comps = self
            .momentum
            .components()
            .iter()
            .map(|c| c.iter().zip(self.rho.values()).map(|(m, r)| m / r.max(floor)).collect())
            .collect();
        (VecField::new(*self.grid(), comps).expect("same grid"), hits)
    }
}

/// Individual contributions to the right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Transport,
    Diffusion,
    Advection,
    Viscosity,
    Nonlocal,
    LinearDamping,
    CubicDamping,
    Quantum,
    GradientTransport,
    Bilaplacian,
    Barrier,
    HighOrder,
}

impl Term {
    pub const DENSITY: [Term; 2] = [Term::Transport, Term::Diffusion];
    pub const MOMENTUM: [Term; 10] = [
        Term::Advection,
        Term::Viscosity,
        Term::Nonlocal,
        Term::LinearDamping,
        Term::CubicDamping,
        Term::Quantum,
        Term::GradientTransport,
        Term::Bilaplacian,
        Term::Barrier,
        Term::HighOrder,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Term::Transport => "transport",
            Term::Diffusion => "diffusion",
            Term::Advection => "advection",
            Term::Viscosity => "viscosity",
            Term::Nonlocal => "nonlocal",
            Term::LinearDamping => "r0_damping",
            Term::CubicDamping => "r1_damping",
            Term::Quantum => "quantum",
            Term::GradientTransport => "eps_transport",
            Term::Bilaplacian => "bilaplacian",
            Term::Barrier => "barrier",
            Term::HighOrder => "highorder",
        }
    }

    pub fn coefficient(&self, p: &RegularizationParams, kernel_active: bool) -> f64 {
        match self {
            Term::Transport | Term::Advection => 1.0,
            Term::Diffusion | Term::GradientTransport => p.epsilon,
            Term::Viscosity => p.viscosity,
            Term::Nonlocal => {
                if kernel_active {
                    1.0
                } else {
                    0.0
                }
            }
            Term::LinearDamping => p.r0,
            Term::CubicDamping => p.r1,
            Term::Quantum => p.kappa,
            Term::Bilaplacian => p.nu,
            Term::Barrier => p.eta,
            Term::HighOrder => p.delta,
        }
    }
}

/// Every active term, already multiplied by its coefficient.
#[derive(Clone, Debug)]
pub struct RhsTerms {
    pub density: Vec<(Term, Vec<f64>)>,
    pub momentum: Vec<(Term, Vec<Vec<f64>>)>,
    pub floor_hits: usize,
}

/// Time derivatives of density and momentum.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub d_rho: Field,
    pub d_momentum: VecField,
    pub floor_hits: usize,
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn scale(v: &mut [f64], c: f64) {
    for x in v {
        *x *= c;
    }
}

fn gradient(grid: &TorusGrid, v: &[f64]) -> Vec<Vec<f64>> {
    Spectrum::of(grid, v).gradient()
}

/// Check the floor where the active terms need a positive density.
fn check_floor(state: &State, params: &RegularizationParams) -> Result<()> {
    if !params.needs_positive_density() {
        return Ok(());
    }
    let floor = state.density_floor();
    for (i, r) in state.rho.values().iter().enumerate() {
        if !(*r >= floor) || *r <= 0.0 {
            return Err(Error::DensityUnderflow {
                index: i,
                value: *r,
                floor,
            });
        }
    }
    Ok(())
}

/// Evaluate each active term of the right-hand side separately.
pub fn rhs_terms(state: &State, params: &RegularizationParams, kernel: &KernelTable) -> Result<RhsTerms> {
    let grid = *state.grid();
    grid.same_as(kernel.grid())?;
    state.rho.check_finite("density")?;
    state.momentum.check_finite("momentum")?;
    check_floor(state, params)?;
    let dim = grid.dim();
    let rho = state.rho.values();
    let (uf, floor_hits) = state.velocity_counted();
    let u = uf.components();
    let m = state.momentum.components();
    let dealias = |v: Vec<f64>| spectral::dealias(&grid, &v);
    let active = |t: Term| t.coefficient(params, !kernel.is_zero()) != 0.0;

    let mut density = Vec::new();
    {
        let mut div = vec![0.0; grid.len()];
        for (a, ma) in m.iter().enumerate() {
            let d = Spectrum::of(&grid, ma).derivative(a, 1);
            for (x, y) in div.iter_mut().zip(d) {
                *x -= y;
            }
        }
        density.push((Term::Transport, div));
    }
    let rho_spec = Spectrum::of(&grid, rho);
    if active(Term::Diffusion) {
        let mut lap = rho_spec.laplacian();
        scale(&mut lap, params.epsilon);
        density.push((Term::Diffusion, lap));
    }

    // velocity gradients, grad_u[i][j] = d_j u_i
    let needs_grad_u = active(Term::Viscosity) || active(Term::GradientTransport);
    let grad_u: Vec<Vec<Vec<f64>>> = if needs_grad_u {
        u.iter().map(|ui| gradient(&grid, ui)).collect()
    } else {
        Vec::new()
    };
    let grad_rho = if active(Term::GradientTransport) {
        rho_spec.gradient()
    } else {
        Vec::new()
    };

    let mut momentum = Vec::new();
    let mut push = |term: Term, comps: Vec<Vec<f64>>| -> Result<()> {
        for c in &comps {
            check_finite(c, term.name())?;
        }
        momentum.push((term, comps));
        Ok(())
    };

    // -div(m (x) u)
    {
        let mut out = vec![vec![0.0; grid.len()]; dim];
        for (i, ui) in u.iter().enumerate() {
            for (j, mj) in m.iter().enumerate() {
                let flux = dealias(mul(mj, ui));
                let d = Spectrum::of(&grid, &flux).derivative(j, 1);
                for (x, y) in out[i].iter_mut().zip(d) {
                    *x -= y;
                }
            }
        }
        push(Term::Advection, out)?;
    }

    if active(Term::Viscosity) {
        let mut out = vec![vec![0.0; grid.len()]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let strain: Vec<f64> = grad_u[i][j]
                    .iter()
                    .zip(&grad_u[j][i])
                    .zip(rho)
                    .map(|((a, b), r)| 0.5 * (a + b) * r)
                    .collect();
                let d = Spectrum::of(&grid, &dealias(strain)).derivative(j, 1);
                for (x, y) in out[i].iter_mut().zip(d) {
                    *x += params.viscosity * y;
                }
            }
        }
        push(Term::Viscosity, out)?;
    }

    if active(Term::Nonlocal) {
        let potential = spectral::convolve_values(&grid, rho, kernel.transform());
        let out = gradient(&grid, &potential)
            .into_iter()
            .map(|g| {
                let mut f = dealias(mul(rho, &g));
                scale(&mut f, -1.0);
                f
            })
            .collect();
        push(Term::Nonlocal, out)?;
    }

    if active(Term::LinearDamping) {
        let out = u.iter().map(|ui| ui.iter().map(|v| -params.r0 * v).collect()).collect();
        push(Term::LinearDamping, out)?;
    }

    if active(Term::CubicDamping) {
        let speed2: Vec<f64> = (0..grid.len()).map(|k| uf.norm_sq_at(k)).collect();
        let out = u
            .iter()
            .map(|ui| {
                let prod: Vec<f64> = (0..grid.len()).map(|k| rho[k] * speed2[k] * ui[k]).collect();
                let mut f = dealias(prod);
                scale(&mut f, -params.r1);
                f
            })
            .collect();
        push(Term::CubicDamping, out)?;
    }

    if active(Term::Quantum) {
        let root: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
        let lap = Spectrum::of(&grid, &root).laplacian();
        let bohm: Vec<f64> = lap.iter().zip(&root).map(|(l, s)| l / s).collect();
        let out = gradient(&grid, &bohm)
            .into_iter()
            .map(|g| {
                let mut f = dealias(mul(rho, &g));
                scale(&mut f, params.kappa);
                f
            })
            .collect();
        push(Term::Quantum, out)?;
    }

    if active(Term::GradientTransport) {
        let out = (0..dim)
            .map(|i| {
                let mut acc = vec![0.0; grid.len()];
                for j in 0..dim {
                    for (k, a) in acc.iter_mut().enumerate() {
                        *a += grad_rho[j][k] * grad_u[i][j][k];
                    }
                }
                let mut f = dealias(acc);
                scale(&mut f, -params.epsilon);
                f
            })
            .collect();
        push(Term::GradientTransport, out)?;
    }

    if active(Term::Bilaplacian) {
        let out = u
            .iter()
            .map(|ui| {
                let mut f = Spectrum::of(&grid, ui).laplacian_power(2);
                scale(&mut f, -params.nu);
                f
            })
            .collect();
        push(Term::Bilaplacian, out)?;
    }

    if active(Term::Barrier) {
        let floor = state.density_floor();
        let p: Vec<f64> = rho.iter().map(|r| r.max(floor).powi(-6)).collect();
        let out = gradient(&grid, &p)
            .into_iter()
            .map(|mut g| {
                scale(&mut g, params.eta);
                g
            })
            .collect();
        push(Term::Barrier, out)?;
    }

    if active(Term::HighOrder) {
        let out = (0..dim)
            .map(|a| {
                let d = rho_spec.derivative_of_laplacian_power(a, 3);
                let mut f = dealias(mul(rho, &d));
                scale(&mut f, params.delta);
                f
            })
            .collect();
        push(Term::HighOrder, out)?;
    }

    for (t, v) in &density {
        check_finite(v, t.name())?;
    }
    Ok(RhsTerms {
        density,
        momentum,
        floor_hits,
    })
}

/// Time derivatives of `(rho, m)` for the regularized system.
pub fn rhs(state: &State, params: &RegularizationParams, kernel: &KernelTable) -> Result<Rhs> {
    let grid = *state.grid();
    let terms = rhs_terms(state, params, kernel)?;
    let mut d_rho = vec![0.0; grid.len()];
    for (_, v) in &terms.density {
        for (x, y) in d_rho.iter_mut().zip(v) {
            *x += y;
        }
    }
    let mut d_m = vec![vec![0.0; grid.len()]; grid.dim()];
    for (_, comps) in &terms.momentum {
        for (acc, c) in d_m.iter_mut().zip(comps) {
            for (x, y) in acc.iter_mut().zip(c) {
                *x += y;
            }
        }
    }
    Ok(Rhs {
        d_rho: Field::new(grid, d_rho)?,
        d_momentum: VecField::new(grid, d_m)?,
        floor_hits: terms.floor_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::params::KernelMode;
    use crate::kernel::{build_cutoff, build_kernel_table, KernelSpec};

    fn all_on(l: f64) -> RegularizationParams {
        RegularizationParams {
            epsilon: 0.1,
            nu: 0.01,
            eta: 1e-3,
            delta: 1e-6,
            kappa: 0.05,
            r0: 0.2,
            r1: 0.3,
            viscosity: 1.0,
            alpha: 0.5,
            half_length: l,
            m1: 10.0,
            mollifier_width: 0.5,
            kernel: KernelMode::Full,
        }
    }

    #[test]
    fn rest_state_is_stationary() {
        for (dim, n) in [(1, 32), (2, 16)] {
            let g = TorusGrid::new(dim, 4.0, n).unwrap();
            let spec = KernelSpec::new(0.5, 4.0).unwrap();
            let table = build_kernel_table(&g, &spec, &build_cutoff(4.0).unwrap()).unwrap();
            let s = State::rest(g, 0.7);
            let r = rhs(&s, &all_on(4.0), &table).unwrap();
            assert!(r.d_rho.max_abs() < 1e-13);
            assert!(r.d_momentum.max_norm() < 1e-12, "{}", r.d_momentum.max_norm());
        }
    }

    #[test]
    fn heat_mode_only() {
        let l = 2.0;
        let g = TorusGrid::new(1, l, 32).unwrap();
        let k = 3.0 * std::f64::consts::PI / l;
        let rho = Field::from_fn(g, |x| 1.0 + 0.01 * (k * x[0]).cos());
        let s = State::from_velocity(0.0, rho.clone(), &VecField::zeros(g)).unwrap();
        let mut p = RegularizationParams::zero(0.5, l);
        p.epsilon = 0.3;
        let r = rhs(&s, &p, &KernelTable::zero(&g)).unwrap();
        for (i, d) in r.d_rho.values().iter().enumerate() {
            let expect = -p.epsilon * k * k * (rho.values()[i] - 1.0);
            assert!((d - expect).abs() < 1e-10);
        }
        assert!(r.d_momentum.max_norm() < 1e-14);
    }

    #[test]
    fn barrier_rejects_underflow() {
        let g = TorusGrid::new(1, 2.0, 16).unwrap();
        let mut rho = Field::constant(g, 1.0);
        rho.values_mut()[5] = 0.0;
        let s = State::rest(g, 1.0);
        let s = State { rho, ..s };
        let mut p = RegularizationParams::zero(0.5, 2.0);
        p.eta = 1e-3;
        let err = rhs(&s, &p, &KernelTable::zero(&g)).unwrap_err();
        assert!(err.to_string().contains("density underflow at (5)"));
    }

    #[test]
    fn floor_counter_reports_vacuum() {
        let g = TorusGrid::new(1, 2.0, 16).unwrap();
        let mut rho = Field::constant(g, 1.0);
        rho.values_mut()[3] = 0.0;
        let s = State::new(0.0, rho, VecField::zeros(g)).unwrap();
        let r = rhs(&s, &RegularizationParams::zero(0.5, 2.0), &KernelTable::zero(&g)).unwrap();
        assert_eq!(r.floor_hits, 1);
    }
}
