//! Shock-capturing space-time discontinuous Galerkin solver for 1D systems
//! of conservation laws written in entropy variables.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::wrong_self_convention
)]

pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod entropy_flux;
pub mod error;
pub mod exact;
pub mod harness;
pub mod mesh_basis;
pub mod shock_capture;
pub mod slab_solver;
pub mod systems;

pub use config::RunConfig;
pub use error::{Result, ScdgError};
pub use slab_solver::{run_simulation, RunOutput};
