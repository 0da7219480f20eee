//! Pseudo-spectral simulator for regularized pressureless Navier-Stokes with
//! a nonlocal attraction-repulsion force on a periodic torus, plus the
//! diagnostics that track every a-priori functional of the model.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`], [`spectral`]: torus discretization, Fourier collocation, convolution.
//! - [`kernel`]: the truncated kernel, its tables and certification checks.
//! - [`dynamics`]: parameters, initial data, right-hand side and time stepping.
//! - [`functionals`]: energy, entropy, dissipation and moment diagnostics.
//! - [`renormalization`]: scalar toolkit (F, F_n, cutoffs, Young, Gronwall).
//! - [`config`], [`snapshot`], [`cli`]: run files and outputs.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod renormalization;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, TorusGrid, VecField};
