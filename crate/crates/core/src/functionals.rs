//! Energy, Bresch-Desjardins entropy, Mellet-Vasseur functional, dissipation
//! integrals, moments and the energy-budget residual.
//!
//! Integrals are midpoint sums on the uniform periodic grid; every double
//! integral is reduced to a convolution.

use crate::dynamics::{RegularizationParams, State};
use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid, VecField};
use crate::kernel::{build_cutoff, interaction_lemma_constant, KernelTable};
use crate::renormalization::mv_weight;
use crate::spectral::{self, Spectrum};
use serde::{Deserialize, Serialize};

fn quad(grid: &TorusGrid, v: impl Iterator<Item = f64>) -> f64 {
    v.sum::<f64>() * grid.cell_volume()
}

fn grad_sq(grid: &TorusGrid, f: &[f64]) -> Vec<f64> {
    let g = Spectrum::of(grid, f).gradient();
    (0..grid.len()).map(|i| g.iter().map(|c| c[i] * c[i]).sum()).collect()
}

/// `sum_{a,b} (d_a d_b f)^2` pointwise.
fn hessian_sq(grid: &TorusGrid, f: &[f64]) -> Vec<f64> {
    let spec = Spectrum::of(grid, f);
    let mut out = vec![0.0; grid.len()];
    for a in 0..grid.dim() {
        for b in a..grid.dim() {
            let w = if a == b { 1.0 } else { 2.0 };
            for (o, v) in out.iter_mut().zip(spec.second(a, b)) {
                *o += w * v * v;
            }
        }
    }
    out
}

fn require_positive(rho: &Field, what: &str) -> Result<()> {
    if let Some((i, v)) = rho.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::validation(format!(
            "{what} needs a positive density; found {v} at index {i}"
        )));
    }
    Ok(())
}

/// Components of the energy `E`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    /// `1/2 int rho |u|^2`
    pub kinetic: f64,
    /// `1/2 int rho (K_L * rho)`
    pub interaction: f64,
    /// `eta/7 int rho^-6`
    pub barrier: f64,
    /// `kappa int |grad sqrt(rho)|^2`
    pub quantum: f64,
    /// `delta/2 int |grad Delta rho|^2`
    pub highorder: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.interaction + self.barrier + self.quantum + self.highorder
    }
}

/// `int rho (K * rho)`.
pub fn interaction_integral(rho: &Field, kernel: &KernelTable) -> Result<f64> {
    if kernel.is_zero() {
        return Ok(0.0);
    }
    let conv = spectral::convolve_periodic(rho, kernel)?;
    Ok(quad(
        rho.grid(),
        rho.values().iter().zip(conv.values()).map(|(a, b)| a * b),
    ))
}

/// The parts shared by `E` and `E_BD` besides kinetic and interaction.
fn regularizer_parts(rho: &Field, params: &RegularizationParams) -> Result<(f64, f64, f64)> {
    let grid = rho.grid();
    let barrier = if params.eta > 0.0 {
        require_positive(rho, "barrier energy")?;
        params.eta / 7.0 * quad(grid, rho.values().iter().map(|r| r.powi(-6)))
    } else {
        0.0
    };
    let quantum = if params.kappa > 0.0 {
        let root: Vec<f64> = rho.values().iter().map(|r| r.max(0.0).sqrt()).collect();
        params.kappa * quad(grid, grad_sq(grid, &root).into_iter())
    } else {
        0.0
    };
    let highorder = if params.delta > 0.0 {
        let spec = Spectrum::of(grid, rho.values());
        let mut s = 0.0;
        for a in 0..grid.dim() {
            s += quad(grid, spec.derivative_of_laplacian_power(a, 1).iter().map(|v| v * v));
        }
        0.5 * params.delta * s
    } else {
        0.0
    };
    Ok((barrier, quantum, highorder))
}

/// Energy `E(rho, u)` split into its parts.
pub fn energy(state: &State, params: &RegularizationParams, kernel: &KernelTable) -> Result<EnergyParts> {
    let grid = state.grid();
    let u = state.velocity();
    let rho = state.rho.values();
    let kinetic = 0.5 * quad(grid, (0..grid.len()).map(|i| rho[i] * u.norm_sq_at(i)));
    let interaction = 0.5 * interaction_integral(&state.rho, kernel)?;
    let (barrier, quantum, highorder) = regularizer_parts(&state.rho, params)?;
    Ok(EnergyParts {
        kinetic,
        interaction,
        barrier,
        quantum,
        highorder,
    })
}

/// Bresch-Desjardins entropy: `E` with the velocity shifted by `grad log rho`
/// and the interaction counted twice.
pub fn bd_entropy(state: &State, params: &RegularizationParams, kernel: &KernelTable) -> Result<f64> {
    require_positive(&state.rho, "BD entropy")?;
    let grid = *state.grid();
    let rho = state.rho.values();
    let logr: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let glog = Spectrum::of(&grid, &logr).gradient();
    let u = state.velocity();
    let kin = 0.5
        * quad(
            &grid,
            (0..grid.len()).map(|i| {
                let s: f64 = (0..grid.dim()).map(|a| (u.component(a)[i] + glog[a][i]).powi(2)).sum();
                rho[i] * s
            }),
        );
    let inter = interaction_integral(&state.rho, kernel)?;
    let (barrier, quantum, highorder) = regularizer_parts(&state.rho, params)?;
    Ok(kin + inter + barrier + quantum + highorder)
}

/// `int |grad sqrt(rho)|^2`.
pub fn sqrt_gradient_integral(rho: &Field) -> Result<f64> {
    rho.check_nonnegative()?;
    let root: Vec<f64> = rho.values().iter().map(|v| v.sqrt()).collect();
    Ok(quad(rho.grid(), grad_sq(rho.grid(), &root).into_iter()))
}

/// Bound on `sup_t int |grad sqrt(rho)|^2` over `[0, horizon]` from the
/// initial state: `2 E + int (|grad sqrt(rho)|^2 - r0 log rho) + C horizon mass^2`
/// with `C` the interaction constant of the kernel.
pub fn bd_growth_bound(
    initial: &State,
    params: &RegularizationParams,
    kernel: &KernelTable,
    horizon: f64,
) -> Result<f64> {
    require_positive(&initial.rho, "BD growth bound")?;
    let grid = initial.grid();
    let e = energy(initial, params, kernel)?.total();
    let log_part = quad(grid, initial.rho.values().iter().map(|r| r.ln())) * params.r0;
    let spec = params.kernel_spec();
    let c = if spec.is_active() {
        interaction_lemma_constant(&spec, &build_cutoff(params.half_length)?, grid.dim())
    } else {
        0.0
    };
    let mass = initial.mass();
    Ok(2.0 * e + sqrt_gradient_integral(&initial.rho)? - log_part + c * horizon * mass * mass)
}

/// Radial table of `F(|x|)` at minimum-image distance.
pub fn mv_table(grid: &TorusGrid) -> KernelTable {
    KernelTable::radial(grid, mv_weight)
}

/// Radial table of `|x|^2` at minimum-image distance.
pub fn moment_table(grid: &TorusGrid) -> KernelTable {
    KernelTable::radial(grid, |r| r * r)
}

/// `(int rho F(|u|), int int F(|x - y|) rho rho)`.
pub fn mv_functional(state: &State, table_f: &KernelTable) -> Result<(f64, f64)> {
    let grid = state.grid();
    let u = state.velocity();
    let rho = state.rho.values();
    let vel = quad(
        grid,
        (0..grid.len()).map(|i| rho[i] * mv_weight(u.norm_sq_at(i).sqrt())),
    );
    let pair = interaction_integral(&state.rho, table_f)?;
    Ok((vel, pair))
}

/// Double second moment `int int |x - y|^2 rho rho` (minimum-image distance).
pub fn moment2(rho: &Field) -> Result<f64> {
    moment2_with(rho, &moment_table(rho.grid()))
}

pub fn moment2_with(rho: &Field, table: &KernelTable) -> Result<f64> {
    interaction_integral(rho, table)
}

/// Velocity gradient `g[i][j] = d_j u_i`.
fn velocity_gradient(u: &VecField) -> Vec<Vec<Vec<f64>>> {
    let grid = u.grid();
    u.components()
        .iter()
        .map(|c| Spectrum::of(grid, c).gradient())
        .collect()
}

/// `int rho |D u|^2` with `D u` the symmetric gradient.
pub fn strain_integral(rho: &Field, u: &VecField) -> f64 {
    let grid = rho.grid();
    let g = velocity_gradient(u);
    let d = grid.dim();
    quad(
        grid,
        (0..grid.len()).map(|k| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += (0.5 * (g[i][j][k] + g[j][i][k])).powi(2);
                }
            }
            rho.values()[k] * s
        }),
    )
}

/// `int rho |grad u|^2`.
pub fn gradient_integral(rho: &Field, u: &VecField) -> f64 {
    let grid = rho.grid();
    let g = velocity_gradient(u);
    quad(
        grid,
        (0..grid.len()).map(|k| rho.values()[k] * g.iter().flatten().map(|c| c[k] * c[k]).sum::<f64>()),
    )
}

/// `int rho |grad u - grad u^T|^2`.
pub fn rotation_integral(rho: &Field, u: &VecField) -> f64 {
    let grid = rho.grid();
    let g = velocity_gradient(u);
    let d = grid.dim();
    quad(
        grid,
        (0..grid.len()).map(|k| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += (g[i][j][k] - g[j][i][k]).powi(2);
                }
            }
            rho.values()[k] * s
        }),
    )
}

/// `int grad(K * rho) . grad rho`.
pub fn kernel_pairing(rho: &Field, kernel: &KernelTable) -> Result<f64> {
    if kernel.is_zero() {
        return Ok(0.0);
    }
    let grid = *rho.grid();
    let pot = spectral::convolve_periodic(rho, kernel)?;
    let gp = Spectrum::of(&grid, pot.values()).gradient();
    let gr = Spectrum::of(&grid, rho.values()).gradient();
    Ok(quad(
        &grid,
        (0..grid.len()).map(|i| (0..grid.dim()).map(|a| gp[a][i] * gr[a][i]).sum::<f64>()),
    ))
}

/// Dissipation integrals of the energy identity, coefficients included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dissipations {
    /// `viscosity int rho |D u|^2`
    pub viscous: f64,
    /// `nu int |Delta u|^2`
    pub bilaplacian: f64,
    /// `r0 int |u|^2`
    pub r0_damping: f64,
    /// `r1 int rho |u|^4`
    pub r1_damping: f64,
    /// `kappa eps / 2 int rho |grad^2 log rho|^2`
    pub quantum: f64,
    /// `eps delta int |Delta^2 rho|^2`
    pub highorder: f64,
    /// `2/3 eps eta int |grad rho^-3|^2`
    pub barrier: f64,
    /// `eps int grad(K_L * rho) . grad rho` (may be negative)
    pub kernel: f64,
}

impl Dissipations {
    pub fn total(&self) -> f64 {
        self.viscous
            + self.bilaplacian
            + self.r0_damping
            + self.r1_damping
            + self.quantum
            + self.highorder
            + self.barrier
            + self.kernel
    }
}

/// Dissipations plus the lower-bound check on the kernel pairing.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DissipationReport {
    pub dissipations: Dissipations,
    /// `int grad(K_L * rho) . grad rho` without the `eps` factor
    pub kernel_pairing: f64,
    /// `-C_impl ||rho||_1^2`
    pub kernel_lower_bound: f64,
    pub kernel_bound_holds: bool,
}

pub fn dissipation_suite(
    state: &State,
    params: &RegularizationParams,
    kernel: &KernelTable,
) -> Result<DissipationReport> {
    let grid = *state.grid();
    let rho = &state.rho;
    let r = rho.values();
    let u = state.velocity();
    let eps = params.epsilon;
    let mut d = Dissipations::default();
    if params.viscosity > 0.0 {
        d.viscous = params.viscosity * strain_integral(rho, &u);
    }
    if params.nu > 0.0 {
        let mut s = 0.0;
        for c in u.components() {
            s += quad(&grid, Spectrum::of(&grid, c).laplacian().iter().map(|v| v * v));
        }
        d.bilaplacian = params.nu * s;
    }
    if params.r0 > 0.0 {
        d.r0_damping = params.r0 * quad(&grid, (0..grid.len()).map(|i| u.norm_sq_at(i)));
    }
    if params.r1 > 0.0 {
        d.r1_damping = params.r1 * quad(&grid, (0..grid.len()).map(|i| r[i] * u.norm_sq_at(i).powi(2)));
    }
    if params.kappa > 0.0 && eps > 0.0 {
        require_positive(rho, "quantum dissipation")?;
        let logr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
        let h = hessian_sq(&grid, &logr);
        d.quantum = 0.5 * params.kappa * eps * quad(&grid, h.iter().zip(r).map(|(a, b)| a * b));
    }
    if params.delta > 0.0 && eps > 0.0 {
        d.highorder = eps * params.delta * quad(&grid, Spectrum::of(&grid, r).laplacian_power(2).iter().map(|v| v * v));
    }
    if params.eta > 0.0 && eps > 0.0 {
        require_positive(rho, "barrier dissipation")?;
        let p: Vec<f64> = r.iter().map(|v| v.powi(-3)).collect();
        d.barrier = 2.0 / 3.0 * eps * params.eta * quad(&grid, grad_sq(&grid, &p).into_iter());
    }
    let pairing = kernel_pairing(rho, kernel)?;
    d.kernel = eps * pairing;
    let c_impl = if kernel.is_zero() {
        0.0
    } else {
        interaction_lemma_constant(&params.kernel_spec(), &build_cutoff(params.half_length)?, grid.dim())
    };
    let mass = rho.integral();
    let lower = -c_impl * mass * mass;
    Ok(DissipationReport {
        dissipations: d,
        kernel_pairing: pairing,
        kernel_lower_bound: lower,
        kernel_bound_holds: pairing >= lower,
    })
}

/// Result of the two Jungel inequalities.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JungelReport {
    /// `int rho |grad^2 log rho|^2`
    pub lhs: f64,
    /// `1/7 int |grad^2 sqrt(rho)|^2`
    pub rhs1: f64,
    /// `1/8 int |grad rho^(1/4)|^4`
    pub rhs2: f64,
    pub pass: bool,
}

pub fn jungel_check(rho: &Field) -> Result<JungelReport> {
    require_positive(rho, "Jungel check")?;
    let grid = *rho.grid();
    let r = rho.values();
    let logr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let lhs = quad(&grid, hessian_sq(&grid, &logr).iter().zip(r).map(|(h, v)| h * v));
    let root: Vec<f64> = r.iter().map(|v| v.sqrt()).collect();
    let rhs1 = quad(&grid, hessian_sq(&grid, &root).into_iter()) / 7.0;
    let quarter: Vec<f64> = r.iter().map(|v| v.powf(0.25)).collect();
    let rhs2 = quad(&grid, grad_sq(&grid, &quarter).iter().map(|v| v * v)) / 8.0;
    let slack = 1.0 - 1e-8;
    Ok(JungelReport {
        lhs,
        rhs1,
        rhs2,
        pass: lhs >= rhs1 * slack && lhs >= rhs2 * slack,
    })
}

/// One row of the diagnostics series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy_e: f64,
    pub energy_parts: EnergyParts,
    pub bd_entropy: f64,
    pub mv_velocity: f64,
    pub mv_pair: f64,
    pub dissipations: Dissipations,
    pub moment2: f64,
    pub rho_min: f64,
    pub energy_budget_residual: f64,
}

/// Tables reused across every diagnostics evaluation of a run.
#[derive(Clone, Debug)]
pub struct DiagnosticTables {
    pub kernel: KernelTable,
    pub mv: KernelTable,
    pub moment: KernelTable,
}

impl DiagnosticTables {
    pub fn new(grid: &TorusGrid, kernel: KernelTable) -> Self {
        Self {
            kernel,
            mv: mv_table(grid),
            moment: moment_table(grid),
        }
    }
}

/// Evaluate every functional on `state`; the budget residual is filled in
/// later from the neighbouring records.
pub fn diagnostics(
    state: &State,
    params: &RegularizationParams,
    tables: &DiagnosticTables,
) -> Result<DiagnosticsRecord> {
    let parts = energy(state, params, &tables.kernel)?;
    let (mv_velocity, mv_pair) = mv_functional(state, &tables.mv)?;
    let rec = DiagnosticsRecord {
        t: state.t,
        mass: state.mass(),
        energy_e: parts.total(),
        energy_parts: parts,
        bd_entropy: bd_entropy(state, params, &tables.kernel)?,
        mv_velocity,
        mv_pair,
        dissipations: dissipation_suite(state, params, &tables.kernel)?.dissipations,
        moment2: moment2_with(&state.rho, &tables.moment)?,
        rho_min: state.rho.min(),
        energy_budget_residual: 0.0,
    };
    Ok(rec)
}

fn check_uniform(records: &[DiagnosticsRecord]) -> Result<f64> {
    if records.len() < 3 {
        return Err(Error::validation(format!(
            "energy budget needs at least 3 records (got {})",
            records.len()
        )));
    }
    let dt = (records[records.len() - 1].t - records[0].t) / (records.len() - 1) as f64;
    for w in records.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
            return Err(Error::validation("energy budget needs records at a uniform interval"));
        }
    }
    if !(dt > 0.0) {
        return Err(Error::validation("records must advance in time"));
    }
    Ok(dt)
}

/// `(dE/dt + sum of dissipations) / max(|E|, 1)` at the interior records,
/// with `dE/dt` by centered differences.
pub fn energy_budget_residual(records: &[DiagnosticsRecord]) -> Result<Vec<f64>> {
    let dt = check_uniform(records)?;
    Ok((1..records.len() - 1)
        .map(|i| {
            let de = (records[i + 1].energy_e - records[i - 1].energy_e) / (2.0 * dt);
            (de + records[i].dissipations.total()) / records[i].energy_e.abs().max(1.0)
        })
        .collect())
}

/// Residual for every record: centered inside, one-sided second-order
/// differences at the two ends.
pub fn budget_column(records: &[DiagnosticsRecord]) -> Result<Vec<f64>> {
    let interior = energy_budget_residual(records)?;
    let dt = check_uniform(records)?;
    let n = records.len();
    let e = |i: usize| records[i].energy_e;
    let ends = |i: usize, de: f64| (de + records[i].dissipations.total()) / records[i].energy_e.abs().max(1.0);
    let first = ends(0, (-3.0 * e(0) + 4.0 * e(1) - e(2)) / (2.0 * dt));
    let last = ends(n - 1, (3.0 * e(n - 1) - 4.0 * e(n - 2) + e(n - 3)) / (2.0 * dt));
    let mut out = Vec::with_capacity(n);
    out.push(first);
    out.extend(interior);
    out.push(last);
    Ok(out)
}

pub const CSV_FIELDS: [&str; 22] = [
    "t",
    "mass",
    "energy_E",
    "energy_parts.kinetic",
    "energy_parts.interaction",
    "energy_parts.barrier",
    "energy_parts.quantum",
    "energy_parts.highorder",
    "bd_entropy",
    "mv_velocity",
    "mv_pair",
    "dissipations.viscous",
    "dissipations.bilaplacian",
    "dissipations.r0_damping",
    "dissipations.r1_damping",
    "dissipations.quantum",
    "dissipations.highorder",
    "dissipations.barrier",
    "dissipations.kernel",
    "moment2",
    "rho_min",
    "energy_budget_residual",
];

impl DiagnosticsRecord {
    fn to_array(self) -> [f64; 22] {
        let p = &self.energy_parts;
        let d = &self.dissipations;
        [
            self.t,
            self.mass,
            self.energy_e,
            p.kinetic,
            p.interaction,
            p.barrier,
            p.quantum,
            p.highorder,
            self.bd_entropy,
            self.mv_velocity,
            self.mv_pair,
            d.viscous,
            d.bilaplacian,
            d.r0_damping,
            d.r1_damping,
            d.quantum,
            d.highorder,
            d.barrier,
            d.kernel,
            self.moment2,
            self.rho_min,
            self.energy_budget_residual,
        ]
    }

    fn from_array(v: &[f64; 22]) -> Self {
        Self {
            t: v[0],
            mass: v[1],
            energy_e: v[2],
            energy_parts: EnergyParts {
                kinetic: v[3],
                interaction: v[4],
                barrier: v[5],
                quantum: v[6],
                highorder: v[7],
            },
            bd_entropy: v[8],
            mv_velocity: v[9],
            mv_pair: v[10],
            dissipations: Dissipations {
                viscous: v[11],
                bilaplacian: v[12],
                r0_damping: v[13],
                r1_damping: v[14],
                quantum: v[15],
                highorder: v[16],
                barrier: v[17],
                kernel: v[18],
            },
            moment2: v[19],
            rho_min: v[20],
            energy_budget_residual: v[21],
        }
    }
}

/// `%.17g` formatting.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mant), sign, exp.abs())
    }
}

pub fn csv_header() -> String {
    CSV_FIELDS.join(",")
}

pub fn csv_row(r: &DiagnosticsRecord) -> String {
    r.to_array()
        .iter()
        .map(|v| format_g17(*v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Render records (budget column included) as CSV text.
pub fn to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = csv_header();
    s.push('\n');
    for r in records {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

/// Parse a diagnostics CSV produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::validation("empty diagnostics file"))?;
    if header.trim() != csv_header() {
        return Err(Error::validation(
            "diagnostics header does not match the expected columns",
        ));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::validation(format!("diagnostics row {}: {e}", i + 2)))?;
            let arr: [f64; 22] = vals
                .try_into()
                .map_err(|_| Error::validation(format!("diagnostics row {}: expected 22 columns", i + 2)))?;
            Ok(DiagnosticsRecord::from_array(&arr))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::KernelMode;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(123456789.0), "123456789");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(0.0001), "0.0001");
        for x in [std::f64::consts::PI, 1.0 / 3.0, -7.25e-300, 6.02e23] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn kinetic_half_on_unit_torus() {
        let g = TorusGrid::new(3, 0.5, 4).unwrap();
        let rho = Field::constant(g, 1.0);
        let u = VecField::from_fn(g, |_| vec![1.0, 0.0, 0.0]);
        let s = State::from_velocity(0.0, rho, &u).unwrap();
        let p = RegularizationParams::zero(0.5, 0.5);
        let e = energy(&s, &p, &KernelTable::zero(&g)).unwrap();
        assert!((e.kinetic - 0.5).abs() < 1e-14);
        assert_eq!(e.total(), e.kinetic);
    }

    #[test]
    fn bd_kinetic_vanishes_for_gradient_velocity() {
        let g = TorusGrid::new(1, 2.0, 64).unwrap();
        let rho = Field::from_fn(g, |x| (0.5 * (std::f64::consts::PI * x[0] / 2.0).sin()).exp());
        let logr: Vec<f64> = rho.values().iter().map(|v| v.ln()).collect();
        let gl = Spectrum::of(&g, &logr).gradient();
        let u = VecField::new(g, vec![gl[0].iter().map(|v| -v).collect()]).unwrap();
        let s = State::from_velocity(0.0, rho, &u).unwrap();
        let p = RegularizationParams::zero(0.5, 2.0);
        let bd = bd_entropy(&s, &p, &KernelTable::zero(&g)).unwrap();
        assert!(bd.abs() < 1e-20);
    }

    #[test]
    fn budget_needs_three_records() {
        assert!(energy_budget_residual(&[DiagnosticsRecord::default(); 2]).is_err());
        let recs: Vec<_> = (0..5)
            .map(|i| DiagnosticsRecord {
                t: i as f64 * 0.1,
                ..Default::default()
            })
            .collect();
        assert!(energy_budget_residual(&recs).unwrap().iter().all(|r| *r == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let r = DiagnosticsRecord {
            t: 0.125,
            mass: 1.0 / 3.0,
            energy_e: -2.0e-9,
            dissipations: Dissipations {
                kernel: 1.5,
                ..Default::default()
            },
            ..Default::default()
        };
        let text = to_csv(&[r, r]);
        assert_eq!(parse_csv(&text).unwrap(), vec![r, r]);
        assert!(text.starts_with("t,mass,energy_E,energy_parts.kinetic"));
    }

    #[test]
    fn kernel_lower_bound_flag() {
        let g = TorusGrid::new(1, 4.0, 64).unwrap();
        let p = RegularizationParams {
            epsilon: 1e-3,
            kernel: KernelMode::Full,
            ..RegularizationParams::inviscid_limit(0.5, 4.0)
        };
        let table = p.kernel_table(&g).unwrap();
        let s = State::rest(g, 1.0);
        let rep = dissipation_suite(&s, &p, &table).unwrap();
        assert!(rep.kernel_bound_holds);
        assert!(rep.kernel_pairing.abs() < 1e-12);
    }
}
