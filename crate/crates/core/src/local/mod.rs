//! Local exact control to trajectories.
//!
//! Deviations `z = y - ȳ` from a target solve a linear problem whose
//! coefficients depend on `z` itself. Freezing them at a guess `w` gives a
//! linear problem that is null-controlled by penalized HUM; the guess is then
//! replaced by the controlled solution until it stops moving.

mod carleman;
mod fixed_point;
mod hum;
mod linearization;
mod observability;

pub use carleman::{carleman_weights, CarlemanWeights};
pub use fixed_point::{exact_control_to_trajectory, FixedPointSeed, LocalControlOptions, LocalControlResult};
pub use hum::{gram_apply, hum_null_control, hum_objective, hum_with_steps, HumOptions, HumResult, CG_MAX_ITER, CG_TOL};
pub use linearization::{build_linearization, secant_coefficient, LinearForm, Linearization, ZERO_DEVIATION};
pub use observability::{empirical_observability, ObservabilityReport, ObservabilitySample};
