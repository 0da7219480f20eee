use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::kernel::{build_cutoff, build_kernel_table, KernelSpec, KernelTable};
use serde::Serialize;

/// Which parts of the interaction kernel drive the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    Full,
    Attraction,
    Repulsion,
    None,
}

impl KernelMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Self::Full),
            "attraction" => Some(Self::Attraction),
            "repulsion" => Some(Self::Repulsion),
            "none" => Some(Self::None),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Attraction => "attraction",
            Self::Repulsion => "repulsion",
            Self::None => "none",
        }
    }
}

/// Coefficients of the regularized system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularizationParams {
    /// artificial density diffusion
    pub epsilon: f64,
    /// bi-Laplacian velocity damping
    pub nu: f64,
    /// `rho^-6` barrier
    pub eta: f64,
    /// seventh-order density term
    pub delta: f64,
    /// Bohm (quantum) term
    pub kappa: f64,
    pub r0: f64,
    pub r1: f64,
    /// coefficient of the degenerate viscosity `div(rho D u)`
    pub viscosity: f64,
    pub alpha: f64,
    pub half_length: f64,
    /// initial data floor is `1/m1`
    pub m1: f64,
    pub mollifier_width: f64,
    pub kernel: KernelMode,
}

impl RegularizationParams {
    /// Everything off except the kernel and the density-weighted viscosity.
    pub fn inviscid_limit(alpha: f64, half_length: f64) -> Self {
        Self {
            epsilon: 0.0,
            nu: 0.0,
            eta: 0.0,
            delta: 0.0,
            kappa: 0.0,
            r0: 0.0,
            r1: 0.0,
            viscosity: 1.0,
            alpha,
            half_length,
            m1: 10.0,
            mollifier_width: 0.1 * half_length,
            kernel: KernelMode::Full,
        }
    }

    /// All coefficients zero and the kernel off: the pure transport system.
    pub fn zero(alpha: f64, half_length: f64) -> Self {
        Self {
            viscosity: 0.0,
            kernel: KernelMode::None,
            ..Self::inviscid_limit(alpha, half_length)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("epsilon", self.epsilon),
            ("nu", self.nu),
            ("eta", self.eta),
            ("delta", self.delta),
            ("kappa", self.kappa),
            ("r0", self.r0),
            ("r1", self.r1),
            ("viscosity", self.viscosity),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(format!(
                    "{name} must be a finite non-negative number (got {v})"
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::validation("alpha must lie in (0,2)"));
        }
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(Error::validation("L must be positive"));
        }
        if !(self.m1.is_finite() && self.m1 > 0.0) {
            return Err(Error::validation("m1 must be positive"));
        }
        if !(self.mollifier_width.is_finite() && self.mollifier_width > 0.0) {
            return Err(Error::validation("mollifier_width must be positive"));
        }
        Ok(())
    }

    /// True when the density must stay strictly positive for the right-hand
    /// side to make sense.
    pub fn needs_positive_density(&self) -> bool {
        self.eta > 0.0 || self.kappa > 0.0 || self.delta > 0.0
    }
}

impl RegularizationParams {
    pub fn kernel_spec(&self) -> KernelSpec {
        let (attraction, repulsion) = match self.kernel {
            KernelMode::Full => (true, true),
            KernelMode::Attraction => (true, false),
            KernelMode::Repulsion => (false, true),
            KernelMode::None => (false, false),
        };
        KernelSpec {
            alpha: self.alpha,
            half_length: self.half_length,
            include_attraction: attraction,
            include_repulsion: repulsion,
        }
    }

    /// Truncated kernel table on `grid` (all zeros when the kernel is off).
    pub fn kernel_table(&self, grid: &TorusGrid) -> Result<KernelTable> {
        let spec = self.kernel_spec();
        if !spec.is_active() {
            return Ok(KernelTable::zero(grid));
        }
        build_kernel_table(grid, &spec, &build_cutoff(self.half_length)?)
    }
}
