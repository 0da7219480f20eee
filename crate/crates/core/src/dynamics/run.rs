//! Simulation driver: builds the initial state from a [`RunConfig`],
//! integrates to the final time and collects diagnostics.

use super::initial::{gaussian_bump, initial_data, InitialReport};
use super::rhs::State;
use super::step::{step_report, suggest_dt, DtPolicy};
use crate::config::{DtSetting, InitialKind, RunConfig};
use crate::error::{Error, Result};
use crate::functionals::{budget_column, diagnostics, DiagnosticTables, DiagnosticsRecord};
use crate::grid::{Field, TorusGrid, VecField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Everything a run produces apart from snapshots.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    pub dt: f64,
    /// total floor engagements during velocity recovery
    pub floor_hits: usize,
    pub initial_report: InitialReport,
}

/// Initial density and velocity described by the config, before truncation.
pub fn initial_profile(config: &RunConfig) -> Result<(Field, VecField)> {
    let grid = config.grid()?;
    let l = grid.half_length();
    let d = grid.dim();
    let rho = match config.initial {
        InitialKind::Bump => gaussian_bump(grid, &[0.0; 3][..d], config.bump_width, config.bump_mass),
        InitialKind::TwoBumps => {
            let mut a = [0.0; 3];
            a[0] = -0.25 * l;
            let mut b = [0.0; 3];
            b[0] = 0.25 * l;
            let half = 0.5 * config.bump_mass;
            let left = gaussian_bump(grid, &a[..d], config.bump_width, half);
            let right = gaussian_bump(grid, &b[..d], config.bump_width, half);
            Field::new(
                grid,
                left.values().iter().zip(right.values()).map(|(x, y)| x + y).collect(),
            )?
        }
        InitialKind::Random => random_density(grid, config.seed, config.bump_width, config.bump_mass)?,
        InitialKind::Vacuum => Field::zeros(grid),
    };
    let a = config.velocity_amplitude;
    let u = VecField::from_fn(grid, |x| {
        let mut v = vec![0.0; d];
        v[0] = a * (std::f64::consts::PI * x[0] / l).sin();
        v
    });
    Ok((rho, u))
}

/// Gaussian envelope modulated by a few random low modes; strictly positive
/// inside the envelope and normalized to `mass`.
fn random_density(grid: TorusGrid, seed: u64, width: f64, mass: f64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_length();
    let d = grid.dim();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..6)
        .map(|_| {
            let k: Vec<f64> = (0..d)
                .map(|_| std::f64::consts::PI * rng.gen_range(-3i32..=3) as f64 / l)
                .collect();
            (k, rng.gen_range(0.0..0.3), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let envelope = gaussian_bump(grid, &[0.0; 3][..d], width * 2.0, 1.0);
    let raw = Field::new(
        grid,
        envelope
            .values()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let x = grid.position(i);
                let s: f64 = modes
                    .iter()
                    .map(|(k, a, p)| a * (k.iter().zip(&x).map(|(ki, xi)| ki * xi).sum::<f64>() + p).cos())
                    .sum();
                e * s.exp()
            })
            .collect(),
    )?;
    let total = raw.integral();
    Ok(raw.map(|v| v * mass / total))
}

/// Step count and step size for the config: `dt=auto` is evaluated once on
/// the initial state, then both settings are adjusted so that an integer
/// number of equal steps lands exactly on `T`.
pub fn plan_steps(config: &RunConfig, state: &State, kernel: &crate::kernel::KernelTable) -> (usize, f64) {
    let raw = match config.dt {
        DtSetting::Fixed(v) => v,
        DtSetting::Auto => suggest_dt(
            state,
            &config.params,
            kernel,
            &DtPolicy {
                safety: config.safety,
                cap: config.dt_max,
            },
        ),
    };
    let steps = ((config.final_time / raw) - 1e-9).ceil().max(1.0) as usize;
    (steps, config.final_time / steps as f64)
}

/// Run to completion, discarding snapshots.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let (out, err) = run_with(config, &mut |_, _| Ok(()))?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Run and call `on_snapshot(step, state)` every `snapshot_every` steps
/// (including step 0). Setup failures are returned as `Err`; a failure
/// during integration returns the diagnostics gathered so far together with
/// the error.
pub fn run_with(
    config: &RunConfig,
    on_snapshot: &mut dyn FnMut(usize, &State) -> Result<()>,
) -> Result<(RunOutput, Option<Error>)> {
    let grid = config.grid()?;
    let params = &config.params;
    params.validate()?;
    let (rho0, u0) = initial_profile(config)?;
    let prepared = initial_data(&rho0, &u0, params)?;
    let kernel = params.kernel_table(&grid)?;
    let tables = DiagnosticTables::new(&grid, kernel.clone());
    let mut state = prepared.state;
    let (steps, dt) = plan_steps(config, &state, &kernel);

    let mut records = vec![diagnostics(&state, params, &tables)?];
    let mut floor_hits = 0;
    let mut failure = None;
    if config.snapshot_every > 0 {
        on_snapshot(0, &state)?;
    }
    for i in 1..=steps {
        let next = step_report(&state, dt, params, &kernel, config.scheme).map(|r| {
            // pin the clock to the grid of step times so records stay uniform
            let mut s = r.state;
            s.t = i as f64 * dt;
            (s, r.floor_hits)
        });
        match next {
            Ok((s, hits)) => {
                state = s;
                floor_hits += hits;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        if i % config.diagnostics_every == 0 {
            match diagnostics(&state, params, &tables) {
                Ok(r) => records.push(r),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        if config.snapshot_every > 0 && i % config.snapshot_every == 0 {
            if let Err(e) = on_snapshot(i, &state) {
                failure = Some(e);
                break;
            }
        }
    }
    if records.len() >= 3 {
        if let Ok(col) = budget_column(&records) {
            for (r, b) in records.iter_mut().zip(col) {
                r.energy_budget_residual = b;
            }
        }
    }
    Ok((
        RunOutput {
            final_state: state,
            records,
            steps,
            dt,
            floor_hits,
            initial_report: prepared.report,
        },
        failure,
    ))
}
