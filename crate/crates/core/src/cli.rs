//! `nlns` command-line front end.
//!
//! Exit codes: 0 on success, 1 for bad input or usage, 2 when the numerics
//! fail. Errors are printed to stderr as a single JSON line.

use crate::config::{load_config, Preset, RunConfig};
use crate::dynamics::rhs_oracle::{compare_rhs, smooth_test_state, unit_params};
use crate::dynamics::run::run_with;
use crate::error::{Error, Result};
use crate::functionals::{energy_budget_residual, parse_csv, to_csv};
use crate::grid::{Field, TorusGrid};
use crate::kernel::{build_cutoff, build_kernel_table, fourier_positivity_check, KernelSpec};
use crate::renormalization::{cutoff_report, growth_bounds_check, truncate_velocity, DensityCutoffs};
use crate::snapshot::Snapshot;
use crate::{oracle, spectral};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "nlns",
    about = "Regularized nonlocal pressureless Navier-Stokes on a periodic torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a configuration and write diagnostics, manifest and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the parameter presets.
    Presets,
    /// Compare each right-hand-side term with a finite-difference oracle.
    RhsCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Fourier positivity and cutoff constants of the kernel table.
    KernelReport {
        #[arg(long)]
        alpha: f64,
        #[arg(long = "L", alias = "half-length")]
        half_length: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Growth bounds of the renormalized weight and the density cutoffs.
    ScalarCheck {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        k: f64,
        #[arg(long = "M")]
        velocity_limit: f64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
    /// FFT convolution against the direct sum on a random density.
    OracleConvolve {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long = "L", default_value_t = 4.0)]
        half_length: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximum normalized energy budget residual of a diagnostics CSV.
    Budget {
        #[arg(long)]
        diagnostics: PathBuf,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e);
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn report_error(e: &Error) {
    let line = json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{line}");
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"))?;
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Run { config } => run_command(&config, out),
        Command::Presets => presets(out),
        Command::RhsCheck { config, tolerance } => rhs_check(&config, tolerance, out),
        Command::KernelReport {
            alpha,
            half_length,
            n,
            dim,
        } => kernel_report(alpha, half_length, n, dim, out),
        Command::ScalarCheck {
            n,
            m,
            k,
            velocity_limit,
            delta,
        } => scalar_check(n, m, k, velocity_limit, delta, out),
        Command::OracleConvolve {
            dim,
            n,
            half_length,
            alpha,
            seed,
        } => oracle_convolve(dim, n, half_length, alpha, seed, out),
        Command::Budget { diagnostics } => budget(&diagnostics, out),
    }
}

fn snapshot_of(state: &crate::dynamics::State) -> Result<Snapshot> {
    let mut s = Snapshot::new(*state.grid());
    s.push("rho", state.rho.values().to_vec())?;
    let u = state.velocity();
    for (a, c) in u.components().iter().enumerate() {
        s.push(&format!("u_{a}"), c.clone())?;
    }
    Ok(s)
}

/// Run `config` writing `manifest.cfg`, `diagnostics.csv` and
/// `snapshot_<step>.bin` into its output directory. Diagnostics gathered
/// before a failure are still written.
pub fn execute(config: &RunConfig) -> Result<crate::dynamics::RunOutput> {
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.cfg"), config.manifest())?;
    let (out, failure) = run_with(config, &mut |i, state| {
        snapshot_of(state)?.write(&dir.join(format!("snapshot_{i:06}.bin")))
    })?;
    std::fs::write(dir.join("diagnostics.csv"), to_csv(&out.records))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn run_command(path: &Path, out: &mut dyn Write) -> Result<()> {
    let config = load_config(path)?;
    let o = execute(&config)?;
    let last = o.records.last().expect("at least the initial record");
    emit(
        out,
        json!({
            "output_dir": config.output_dir.display().to_string(),
            "steps": o.steps,
            "dt": o.dt,
            "final_time": o.final_state.t,
            "records": o.records.len(),
            "mass_initial": o.records[0].mass,
            "mass_final": last.mass,
            "energy_initial": o.records[0].energy_e,
            "energy_final": last.energy_e,
            "rho_min_final": last.rho_min,
            "floor_hits": o.floor_hits,
        }),
    )
}

fn presets(out: &mut dyn Write) -> Result<()> {
    for p in Preset::ALL {
        writeln!(out, "{}: {}", p.name(), p.description())?;
        let nonzero: Vec<String> = p
            .coefficients(1.0)
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(k, v)| {
                if k == "delta" {
                    format!("{k}={v:e}*h^6")
                } else {
                    format!("{k}={v:e}")
                }
            })
            .collect();
        writeln!(out, "  {}", nonzero.join(" "))?;
    }
    Ok(())
}

fn rhs_check(path: &Path, tolerance: f64, out: &mut dyn Write) -> Result<()> {
    let config = load_config(path)?;
    let grid = config.grid()?;
    let params = unit_params(config.params.alpha, config.params.half_length);
    let kernel = params.kernel_table(&grid)?;
    let state = smooth_test_state(grid)?;
    let checks = compare_rhs(&state, &params, &kernel, tolerance)?;
    let pass = checks.iter().all(|c| c.pass);
    emit(out, json!({ "tolerance": tolerance, "pass": pass, "terms": checks }))?;
    if pass {
        Ok(())
    } else {
        Err(Error::Numerical(
            "rhs terms disagree with the finite-difference oracle".into(),
        ))
    }
}

fn kernel_report(alpha: f64, l: f64, n: usize, dim: usize, out: &mut dyn Write) -> Result<()> {
    let grid = TorusGrid::new(dim, l, n)?;
    let spec = KernelSpec::new(alpha, l)?.repulsion_only();
    let cutoff = build_cutoff(l)?;
    let r = fourier_positivity_check(&grid, &spec, &cutoff)?;
    emit(
        out,
        json!({
            "alpha": alpha,
            "L": l,
            "n": n,
            "dim": dim,
            "min_mode_value": r.min_mode_value,
            "max_mode_value": r.max_mode_value,
            "positivity_pass": r.positivity_pass,
            "hypothesis_holds": r.hypothesis_holds,
            "cutoff_C1": cutoff.gradient_constant(),
            "cutoff_C2": cutoff.laplacian_constant(dim),
        }),
    )
}

fn scalar_check(n: u32, m: f64, k: f64, limit: f64, delta: f64, out: &mut dyn Write) -> Result<()> {
    let growth = growth_bounds_check(n, delta)?;
    let cutoffs = DensityCutoffs::new(m, k)?;
    let cut = cutoff_report(&cutoffs, None);
    // truncation on a probe velocity spanning well past the limit
    let grid = TorusGrid::new(1, 1.0, 64)?;
    let probe = crate::grid::VecField::from_fn(grid, |x| vec![4.0 * limit * (std::f64::consts::PI * x[0]).sin()]);
    let t = truncate_velocity(&probe, limit)?;
    let truncation_max = t.max_norm();
    emit(
        out,
        json!({
            "n": n,
            "m": m,
            "k": k,
            "M": limit,
            "growth": growth,
            "cutoffs": cut,
            "truncation_max": truncation_max,
            "truncation_pass": truncation_max <= limit * (1.0 + 1e-12),
            "factor_four_pass": growth.factor_four_holds,
        }),
    )
}

fn oracle_convolve(dim: usize, n: usize, l: f64, alpha: f64, seed: u64, out: &mut dyn Write) -> Result<()> {
    let grid = TorusGrid::new(dim, l, n)?;
    let spec = KernelSpec::new(alpha, l)?;
    let table = build_kernel_table(&grid, &spec, &build_cutoff(l)?)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rho = Field::new(grid, (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect())?;
    let fast = spectral::convolve_periodic(&rho, &table)?;
    let direct = oracle::direct_convolution(&rho, &table)?;
    let scale = direct.max_abs().max(1e-300);
    let diff = fast
        .values()
        .iter()
        .zip(direct.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    emit(
        out,
        json!({
            "dim": dim,
            "n": n,
            "L": l,
            "alpha": alpha,
            "max_abs_difference": diff,
            "max_relative_difference": diff / scale,
            "pass": diff / scale <= 1e-12,
        }),
    )
}

fn budget(path: &Path, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let records = parse_csv(&text)?;
    let res = energy_budget_residual(&records)?;
    let max = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    emit(out, json!({ "records": records.len(), "max_normalized_residual": max }))
}
