//! Run configuration: a flat `key=value` file with `#` comments.
//!
//! Presets are expanded first, explicit keys override them, and the derived
//! defaults (mollifier width, high-order coefficient) are filled in last, so
//! the emitted manifest lists every effective value.

use crate::dynamics::{KernelMode, RegularizationParams, Scheme};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Named parameter regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// every regularization active
    GalerkinFull,
    /// quantum term and damping only
    BdRegime,
    /// kernel force and density-weighted viscosity only
    Limit,
    /// nothing preset; unset coefficients are zero
    None,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::GalerkinFull, Preset::BdRegime, Preset::Limit];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "galerkin-full" => Some(Self::GalerkinFull),
            "bd-regime" => Some(Self::BdRegime),
            "limit" => Some(Self::Limit),
            "none" => Some(Self::None),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GalerkinFull => "galerkin-full",
            Self::BdRegime => "bd-regime",
            Self::Limit => "limit",
            Self::None => "none",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::GalerkinFull => "all regularizing terms active",
            Self::BdRegime => "quantum term with linear and cubic damping; no diffusion, no higher-order terms",
            Self::Limit => "kernel force and density-weighted viscosity only",
            Self::None => "no preset values",
        }
    }

    /// Coefficient values on a grid with spacing `h`. The high-order
    /// coefficient scales with `h^6` so its stiffness stays bounded.
    pub fn coefficients(&self, h: f64) -> Vec<(&'static str, f64)> {
        match self {
            Self::GalerkinFull => vec![
                ("epsilon", 1e-2),
                ("nu", 1e-4),
                ("eta", 1e-8),
                ("delta", 1e-10 * h.powi(6)),
                ("kappa", 1e-3),
                ("r0", 1e-2),
                ("r1", 1e-2),
                ("viscosity", 1.0),
            ],
            Self::BdRegime => vec![
                ("epsilon", 0.0),
                ("nu", 0.0),
                ("eta", 0.0),
                ("delta", 0.0),
                ("kappa", 1e-4),
                ("r0", 1e-3),
                ("r1", 1e-3),
                ("viscosity", 1.0),
            ],
            Self::Limit => vec![
                ("epsilon", 0.0),
                ("nu", 0.0),
                ("eta", 0.0),
                ("delta", 0.0),
                ("kappa", 0.0),
                ("r0", 0.0),
                ("r1", 0.0),
                ("viscosity", 1.0),
            ],
            Self::None => vec![],
        }
    }
}

/// Time step policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtSetting {
    Auto,
    Fixed(f64),
}

/// Shape of the initial density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialKind {
    /// centered Gaussian
    Bump,
    /// two Gaussians at `+-L/4` along the first axis
    TwoBumps,
    /// smooth random positive field drawn from `seed`
    Random,
    /// vacuum (the floor `1/m1` only)
    Vacuum,
}

impl InitialKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bump" => Some(Self::Bump),
            "two-bumps" => Some(Self::TwoBumps),
            "random" => Some(Self::Random),
            "vacuum" => Some(Self::Vacuum),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bump => "bump",
            Self::TwoBumps => "two-bumps",
            Self::Random => "random",
            Self::Vacuum => "vacuum",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub n: usize,
    pub final_time: f64,
    pub dt: DtSetting,
    pub dt_max: f64,
    pub safety: f64,
    pub scheme: Scheme,
    pub preset: Preset,
    pub params: RegularizationParams,
    /// snapshot cadence in steps (0 disables snapshots)
    pub snapshot_every: usize,
    /// diagnostics cadence in steps
    pub diagnostics_every: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub initial: InitialKind,
    pub bump_width: f64,
    pub bump_mass: f64,
    pub velocity_amplitude: f64,
}

impl RunConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.params.half_length, self.n)
    }

    /// Canonical `key=value` listing with sorted keys.
    pub fn manifest(&self) -> String {
        let p = &self.params;
        let f = |v: f64| format!("{v:?}");
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("dim", self.dim.to_string());
        m.insert("n", self.n.to_string());
        m.insert("L", f(p.half_length));
        m.insert("alpha", f(p.alpha));
        m.insert("T", f(self.final_time));
        m.insert(
            "dt",
            match self.dt {
                DtSetting::Auto => "auto".into(),
                DtSetting::Fixed(v) => f(v),
            },
        );
        m.insert("dt_max", f(self.dt_max));
        m.insert("safety", f(self.safety));
        m.insert(
            "scheme",
            match self.scheme {
                Scheme::IntegratingFactorRk4 => "if-rk4".into(),
                Scheme::ExplicitRk4 => "rk4".into(),
            },
        );
        m.insert("preset", self.preset.name().into());
        m.insert("epsilon", f(p.epsilon));
        m.insert("nu", f(p.nu));
        m.insert("eta", f(p.eta));
        m.insert("delta", f(p.delta));
        m.insert("kappa", f(p.kappa));
        m.insert("r0", f(p.r0));
        m.insert("r1", f(p.r1));
        m.insert("viscosity", f(p.viscosity));
        m.insert("kernel", p.kernel.name().into());
        m.insert("m1", f(p.m1));
        m.insert("mollifier_width", f(p.mollifier_width));
        m.insert("snapshot_every", self.snapshot_every.to_string());
        m.insert("diagnostics_every", self.diagnostics_every.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("output_dir", self.output_dir.display().to_string());
        m.insert("initial", self.initial.name().into());
        m.insert("bump_width", f(self.bump_width));
        m.insert("bump_mass", f(self.bump_mass));
        m.insert("velocity_amplitude", f(self.velocity_amplitude));
        let mut out = String::new();
        for (k, v) in m {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

const KEYS: [&str; 29] = [
    "dim",
    "n",
    "L",
    "alpha",
    "T",
    "dt",
    "dt_max",
    "safety",
    "scheme",
    "preset",
    "epsilon",
    "nu",
    "eta",
    "delta",
    "kappa",
    "r0",
    "r1",
    "viscosity",
    "kernel",
    "m1",
    "mollifier_width",
    "snapshot_every",
    "diagnostics_every",
    "seed",
    "output_dir",
    "initial",
    "bump_width",
    "bump_mass",
    "velocity_amplitude",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.0)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Config {
                line: *line,
                message: format!("bad value '{v}' for {key}: {e}"),
            }),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parse(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(Error::Config {
                    line: self.line(key),
                    message: format!("{key} must be finite"),
                });
            }
        }
        Ok(v)
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected key=value, found '{line}'"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config {
                line: line_no,
                message: format!("unknown key '{k}'"),
            });
        }
        if let Some((prev, _)) = map.get(k) {
            return Err(Error::Config {
                line: line_no,
                message: format!("duplicate key '{k}' on lines {prev} and {line_no}"),
            });
        }
        map.insert(k.to_string(), (line_no, v.to_string()));
    }
    Ok(Entries { map })
}

fn range_error(e: &Entries, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line: e.line(key),
        message: message.into(),
    }
}

/// Parse and fully resolve a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = tokenize(text)?;
    let dim: usize = e.parse("dim")?.unwrap_or(1);
    if !(1..=3).contains(&dim) {
        return Err(range_error(&e, "dim", "dim must be 1, 2 or 3"));
    }
    let n: usize = e.parse("n")?.unwrap_or(64);
    if n < 2 || !n.is_multiple_of(2) {
        return Err(range_error(&e, "n", "n must be an even integer >= 2"));
    }
    let l = e.number("L")?.unwrap_or(8.0);
    if !(l > 0.0) {
        return Err(range_error(&e, "L", "L must be positive"));
    }
    let alpha = e.number("alpha")?.unwrap_or(0.5);
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(range_error(&e, "alpha", "alpha must lie in (0,2)"));
    }
    let h = 2.0 * l / n as f64;

    let preset = match e.raw("preset") {
        None => Preset::None,
        Some((line, v)) => Preset::parse(v).ok_or_else(|| Error::Config {
            line: *line,
            message: format!("unknown preset '{v}' (expected galerkin-full, bd-regime, limit or none)"),
        })?,
    };
    let mut coeffs: BTreeMap<&str, f64> = BTreeMap::new();
    for k in ["epsilon", "nu", "eta", "delta", "kappa", "r0", "r1"] {
        coeffs.insert(k, 0.0);
    }
    coeffs.insert("viscosity", 1.0);
    for (k, v) in preset.coefficients(h) {
        coeffs.insert(k, v);
    }
    for k in ["epsilon", "nu", "eta", "delta", "kappa", "r0", "r1", "viscosity"] {
        if let Some(v) = e.number(k)? {
            if v < 0.0 {
                return Err(range_error(&e, k, format!("{k} must be non-negative")));
            }
            coeffs.insert(k, v);
        }
    }
    let kernel = match e.raw("kernel") {
        None => KernelMode::Full,
        Some((line, v)) => KernelMode::parse(v).ok_or_else(|| Error::Config {
            line: *line,
            message: format!("unknown kernel mode '{v}' (expected full, attraction, repulsion or none)"),
        })?,
    };
    if dim == 1 && alpha >= 1.0 && matches!(kernel, KernelMode::Full | KernelMode::Repulsion) {
        return Err(range_error(&e, "alpha", "singular kernel not integrable in 1D"));
    }
    let m1 = e.number("m1")?.unwrap_or(10.0);
    if !(m1 > 0.0) {
        return Err(range_error(&e, "m1", "m1 must be positive"));
    }
    let mollifier_width = e.number("mollifier_width")?.unwrap_or(3.0 * h);
    if !(mollifier_width > 0.0 && mollifier_width < l) {
        return Err(range_error(&e, "mollifier_width", "mollifier_width must lie in (0, L)"));
    }
    let final_time = e.number("T")?.unwrap_or(1.0);
    if !(final_time > 0.0) {
        return Err(range_error(&e, "T", "T must be positive"));
    }
    let dt = match e.raw("dt") {
        None => DtSetting::Auto,
        Some((_, v)) if v == "auto" => DtSetting::Auto,
        Some(_) => {
            let v = e.number("dt")?.expect("present");
            if !(v > 0.0) {
                return Err(range_error(&e, "dt", "dt must be positive or 'auto'"));
            }
            DtSetting::Fixed(v)
        }
    };
    let dt_max = e.number("dt_max")?.unwrap_or(1e-2);
    if !(dt_max > 0.0) {
        return Err(range_error(&e, "dt_max", "dt_max must be positive"));
    }
    let safety = e.number("safety")?.unwrap_or(0.25);
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(range_error(&e, "safety", "safety must lie in (0, 1]"));
    }
    let scheme = match e.raw("scheme").map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "if-rk4")) => Scheme::IntegratingFactorRk4,
        Some((_, "rk4")) => Scheme::ExplicitRk4,
        Some((line, v)) => {
            return Err(Error::Config {
                line,
                message: format!("unknown scheme '{v}' (expected if-rk4 or rk4)"),
            })
        }
    };
    let initial = match e.raw("initial") {
        None => InitialKind::Bump,
        Some((line, v)) => InitialKind::parse(v).ok_or_else(|| Error::Config {
            line: *line,
            message: format!("unknown initial profile '{v}' (expected bump, two-bumps, random or vacuum)"),
        })?,
    };
    let bump_width = e.number("bump_width")?.unwrap_or(0.5);
    if !(bump_width > 0.0) {
        return Err(range_error(&e, "bump_width", "bump_width must be positive"));
    }
    let bump_mass = e.number("bump_mass")?.unwrap_or(1.0);
    if !(bump_mass >= 0.0) {
        return Err(range_error(&e, "bump_mass", "bump_mass must be non-negative"));
    }
    let velocity_amplitude = e.number("velocity_amplitude")?.unwrap_or(0.0);
    let snapshot_every: usize = e.parse("snapshot_every")?.unwrap_or(0);
    let diagnostics_every: usize = e.parse("diagnostics_every")?.unwrap_or(1);
    if diagnostics_every == 0 {
        return Err(range_error(
            &e,
            "diagnostics_every",
            "diagnostics_every must be at least 1",
        ));
    }
    let seed: u64 = e.parse("seed")?.unwrap_or(0);
    let output_dir = PathBuf::from(e.raw("output_dir").map_or("nlns-out", |(_, v)| v.as_str()));

    let params = RegularizationParams {
        epsilon: coeffs["epsilon"],
        nu: coeffs["nu"],
        eta: coeffs["eta"],
        delta: coeffs["delta"],
        kappa: coeffs["kappa"],
        r0: coeffs["r0"],
        r1: coeffs["r1"],
        viscosity: coeffs["viscosity"],
        alpha,
        half_length: l,
        m1,
        mollifier_width,
        kernel,
    };
    params.validate()?;
    Ok(RunConfig {
        dim,
        n,
        final_time,
        dt,
        dt_max,
        safety,
        scheme,
        preset,
        params,
        snapshot_every,
        diagnostics_every,
        seed,
        output_dir,
        initial,
        bump_width,
        bump_mass,
        velocity_amplitude,
    })
}

/// Read and parse a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_config(&text)
}
