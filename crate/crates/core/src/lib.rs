//! Synthesis and certification of nonnegative internal controls for the
//! one-dimensional quasilinear heat equation
//!
//! ```text
//! y_t - (a(y) y_x)_x = v ρ_ω   in (0, L) × (0, T),   y = 0 on the boundary.
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! * [`grid`], [`law`], [`mask`], [`trajectory`]: discretization data.
//! * [`forward`], [`linear`], [`comparison`]: the implicit Kirchhoff-form
//!   solver, frozen-coefficient linear solvers and their exact discrete
//!   adjoints, and ordering checks.
//! * [`steady`]: steady states through the Kirchhoff transform and paths of
//!   steady states.
//! * [`local`]: penalized HUM null control, relinearization fixed point,
//!   Carleman weights and the observability probe.
//! * [`staircase`], [`tracking`]: global controls between steady states and
//!   towards moving targets, with literal positivity checks.
//! * [`mintime`]: lower certificates for the minimal constrained control time.
//!
//! File formats, configuration and the command line live in the `heatctl`
//! crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod comparison;
pub mod error;
pub mod forward;
pub mod grid;
pub mod law;
pub mod linear;
pub mod local;
pub mod mask;
pub mod mintime;
pub mod staircase;
pub mod steady;
pub mod tracking;
pub mod trajectory;
pub mod tridiag;

pub use comparison::{check_comparison, ComparisonReport, COMPARISON_TOL};
pub use error::{Error, Result};
pub use forward::{solve_forward, NEWTON_MAX_ITER, NEWTON_TOL};
pub use grid::Grid;
pub use law::{kirchhoff, kirchhoff_inverse, BuiltinLaw, CustomLaw, DiffusionLaw};
pub use mask::{smoothstep, ControlMask, Interval};
pub use trajectory::{ControlSchedule, Direction, TimeLadder, Trajectory};
