//! The regularized system: parameters, initial data, right-hand side, time
//! stepping and the simulation driver.

pub mod initial;
pub mod params;
pub mod rhs;
pub mod rhs_oracle;
pub mod run;
pub mod step;

pub use initial::{initial_data, InitialReport};
pub use params::{KernelMode, RegularizationParams};
pub use rhs::{rhs, rhs_terms, Rhs, RhsTerms, State, Term};
pub use run::{run, RunOutput};
pub use step::{dt_bounds, step, step_report, suggest_dt, DtBounds, DtPolicy, Scheme, StepReport};
