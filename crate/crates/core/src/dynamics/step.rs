use super::params::RegularizationParams;
use super::rhs::{rhs, State};
use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid, VecField};
use crate::kernel::KernelTable;
use crate::spectral;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Time integration scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    /// Lawson integrating-factor RK4: the constant-coefficient stiff parts are
    /// propagated exactly in Fourier space.
    #[default]
    IntegratingFactorRk4,
    /// Classical RK4 on the full right-hand side.
    ExplicitRk4,
}

/// Stiff linear symbols, frozen for one step.
struct Linear {
    grid: TorusGrid,
    density: Vec<f64>,
    momentum: Vec<f64>,
}

impl Linear {
    fn new(grid: TorusGrid, params: &RegularizationParams, mean_rho: f64) -> Self {
        let mut density = Vec::with_capacity(grid.len());
        let mut momentum = Vec::with_capacity(grid.len());
        for f in 0..grid.len() {
            let idx = grid.unflatten(f);
            let k2: f64 = (0..grid.dim()).map(|a| grid.wavenumber(idx[a]).powi(2)).sum();
            density.push(-params.epsilon * k2);
            momentum.push(-(params.nu * k2 * k2 + params.r0) / mean_rho);
        }
        Self {
            grid,
            density,
            momentum,
        }
    }

    fn map(&self, v: &[f64], symbol: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut c = spectral::forward(&self.grid, v);
        for (x, s) in c.iter_mut().zip(symbol) {
            *x *= Complex64::new(f(*s), 0.0);
        }
        spectral::inverse_real(&self.grid, c)
    }
}

/// Flat state vector `(rho, m_0, .., m_{d-1})`.
#[derive(Clone)]
struct Packed {
    rho: Vec<f64>,
    m: Vec<Vec<f64>>,
}

impl Packed {
    fn of(s: &State) -> Self {
        Self {
            rho: s.rho.values().to_vec(),
            m: s.momentum.components().to_vec(),
        }
    }

    fn unpack(&self, grid: TorusGrid, t: f64) -> Result<State> {
        State::new(
            t,
            Field::new(grid, self.rho.clone())?,
            VecField::new(grid, self.m.clone())?,
        )
    }

    fn axpy(&self, a: f64, x: &Packed) -> Packed {
        let add = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p + a * q).collect::<Vec<_>>();
        Packed {
            rho: add(&self.rho, &x.rho),
            m: self.m.iter().zip(&x.m).map(|(u, v)| add(u, v)).collect(),
        }
    }

    fn propagate(&self, lin: &Linear, tau: f64) -> Packed {
        Packed {
            rho: lin.map(&self.rho, &lin.density, |s| (s * tau).exp()),
            m: self
                .m
                .iter()
                .map(|c| lin.map(c, &lin.momentum, |s| (s * tau).exp()))
                .collect(),
        }
    }

    fn apply_linear(&self, lin: &Linear) -> Packed {
        Packed {
            rho: lin.map(&self.rho, &lin.density, |s| s),
            m: self.m.iter().map(|c| lin.map(c, &lin.momentum, |s| s)).collect(),
        }
    }
}

struct Evaluator<'a> {
    grid: TorusGrid,
    params: &'a RegularizationParams,
    kernel: &'a KernelTable,
    floor_hits: usize,
}

impl Evaluator<'_> {
    fn full(&mut self, x: &Packed, t: f64) -> Result<Packed> {
        let r = rhs(&x.unpack(self.grid, t)?, self.params, self.kernel)?;
        self.floor_hits += r.floor_hits;
        Ok(Packed {
            rho: r.d_rho.into_values(),
            m: r.d_momentum.into_components(),
        })
    }

    /// Full right-hand side minus the part handled by the integrating factor.
    fn remainder(&mut self, x: &Packed, t: f64, lin: &Linear) -> Result<Packed> {
        let f = self.full(x, t)?;
        Ok(f.axpy(-1.0, &x.apply_linear(lin)))
    }
}

/// Outcome of one accepted step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub state: State,
    /// Points where velocity recovery hit the density floor, summed over stages.
    pub floor_hits: usize,
}

fn reject(t: f64, dt: f64, err: Error) -> Error {
    match err {
        Error::DensityUnderflow { index, value, floor } => Error::StepRejected {
            t,
            reason: format!("density underflow at ({index}): {value} below floor {floor}"),
            suggested_dt: 0.5 * dt,
        },
        other => other,
    }
}

/// Advance one step and report floor engagement.
pub fn step_report(
    state: &State,
    dt: f64,
    params: &RegularizationParams,
    kernel: &KernelTable,
    scheme: Scheme,
) -> Result<StepReport> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(format!("dt must be positive (got {dt})")));
    }
    let grid = *state.grid();
    let t = state.t;
    let mut ev = Evaluator {
        grid,
        params,
        kernel,
        floor_hits: 0,
    };
    let u0 = Packed::of(state);
    let next = match scheme {
        Scheme::IntegratingFactorRk4 => {
            let mean = state.mass() / grid.volume();
            if !(mean > 0.0) {
                return Err(Error::Numerical(format!("non-positive mean density {mean}")));
            }
            let lin = Linear::new(grid, params, mean);
            let h = 0.5 * dt;
            let k1 = ev.remainder(&u0, t, &lin).map_err(|e| reject(t, dt, e))?;
            let e_u = u0.propagate(&lin, h);
            let a = u0.axpy(h, &k1).propagate(&lin, h);
            let k2 = ev.remainder(&a, t + h, &lin).map_err(|e| reject(t, dt, e))?;
            let b = e_u.axpy(h, &k2);
            let k3 = ev.remainder(&b, t + h, &lin).map_err(|e| reject(t, dt, e))?;
            let c = u0.propagate(&lin, dt).axpy(dt, &k3.propagate(&lin, h));
            let k4 = ev.remainder(&c, t + dt, &lin).map_err(|e| reject(t, dt, e))?;
            let mid = k2.axpy(1.0, &k3).propagate(&lin, h);
            let sum = k1.propagate(&lin, dt).axpy(2.0, &mid).axpy(1.0, &k4);
            u0.propagate(&lin, dt).axpy(dt / 6.0, &sum)
        }
        Scheme::ExplicitRk4 => {
            let h = 0.5 * dt;
            let k1 = ev.full(&u0, t).map_err(|e| reject(t, dt, e))?;
            let k2 = ev.full(&u0.axpy(h, &k1), t + h).map_err(|e| reject(t, dt, e))?;
            let k3 = ev.full(&u0.axpy(h, &k2), t + h).map_err(|e| reject(t, dt, e))?;
            let k4 = ev.full(&u0.axpy(dt, &k3), t + dt).map_err(|e| reject(t, dt, e))?;
            let sum = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
            u0.axpy(dt / 6.0, &sum)
        }
    };
    let out = next.unpack(grid, t + dt)?;
    out.rho.check_finite("density after step")?;
    out.momentum.check_finite("momentum after step")?;
    let floor = out.density_floor();
    if let Some((i, v)) = out.rho.values().iter().enumerate().find(|(_, v)| !(**v >= floor)) {
        return Err(Error::StepRejected {
            t,
            reason: format!("density {v} at ({i}) fell below the floor {floor}"),
            suggested_dt: 0.5 * dt,
        });
    }
    Ok(StepReport {
        state: out,
        floor_hits: ev.floor_hits,
    })
}

/// Advance one step of size `dt`.
pub fn step(
    state: &State,
    dt: f64,
    params: &RegularizationParams,
    kernel: &KernelTable,
    scheme: Scheme,
) -> Result<State> {
    step_report(state, dt, params, kernel, scheme).map(|r| r.state)
}

/// Safety factor and cap for [`suggest_dt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtPolicy {
    pub safety: f64,
    pub cap: f64,
}

impl Default for DtPolicy {
    fn default() -> Self {
        Self {
            safety: 0.25,
            cap: 1e-2,
        }
    }
}

/// Per-term time scales used by [`suggest_dt`] (infinite when inactive).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtBounds {
    pub advective: f64,
    pub viscous: f64,
    pub quantum: f64,
    pub highorder: f64,
    pub barrier: f64,
    pub damping: f64,
    pub nonlocal: f64,
}

impl DtBounds {
    pub fn min(&self) -> f64 {
        [
            self.advective,
            self.viscous,
            self.quantum,
            self.highorder,
            self.barrier,
            self.damping,
            self.nonlocal,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

fn inv(rate: f64) -> f64 {
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// Time scale of each explicitly treated term on `state`.
pub fn dt_bounds(state: &State, params: &RegularizationParams, kernel: &KernelTable) -> DtBounds {
    let grid = *state.grid();
    let h = grid.spacing();
    let d = grid.dim() as f64;
    let kmax2 = d * (PI / h).powi(2);
    let rho_min = state.rho.min().max(state.density_floor());
    let rho_max = state.rho.max().max(rho_min);
    let u = state.velocity();
    let umax = u.max_norm();
    let mut speed = umax;
    if params.epsilon > 0.0 {
        let g = spectral::Spectrum::of(&grid, state.rho.values()).gradient();
        let gmax = (0..grid.len())
            .map(|i| g.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        speed += params.epsilon * gmax / rho_min;
    }
    let nonlocal = if kernel.is_zero() {
        f64::INFINITY
    } else {
        let peak = kernel
            .transform()
            .iter()
            .enumerate()
            .map(|(f, c)| {
                let idx = grid.unflatten(f);
                let k2: f64 = (0..grid.dim()).map(|a| grid.wavenumber(idx[a]).powi(2)).sum();
                k2 * c.norm()
            })
            .fold(0.0, f64::max);
        inv((rho_max * peak).sqrt())
    };
    DtBounds {
        advective: if speed > 0.0 { h / speed } else { f64::INFINITY },
        viscous: inv(params.viscosity * kmax2),
        quantum: inv((0.5 * params.kappa).sqrt() * kmax2 * (rho_max / rho_min).sqrt()),
        highorder: inv((params.delta * rho_max).sqrt() * kmax2 * kmax2),
        barrier: inv((6.0 * params.eta / rho_min.powi(7)).sqrt() * kmax2.sqrt()),
        damping: inv(params.r0 / rho_min + 3.0 * params.r1 * rho_max * umax * umax),
        nonlocal,
    }
}

/// `safety * min(bounds)`, capped.
pub fn suggest_dt(state: &State, params: &RegularizationParams, kernel: &KernelTable, policy: &DtPolicy) -> f64 {
    (policy.safety * dt_bounds(state, params, kernel).min()).min(policy.cap)
}
