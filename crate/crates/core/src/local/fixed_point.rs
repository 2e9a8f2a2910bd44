use alloc::format;
use alloc::vec::Vec;

use crate::error::{dimension, Error, Result};
use crate::forward::solve_forward;
use crate::grid::{add, sub, sup_distance, Grid};
use crate::law::DiffusionLaw;
use crate::local::hum::{hum_null_control, HumOptions};
use crate::local::linearization::build_linearization;
use crate::mask::ControlMask;
use crate::trajectory::{ControlSchedule, Trajectory};

/// Initial guess for the relinearization iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FixedPointSeed {
    /// `w⁰ ≡ 0`.
    #[default]
    Zero,
    /// `w⁰(t) = z₀` for every level, which matches the initial deviation.
    ConstantExtension,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalControlOptions {
    pub hum: HumOptions,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub seed: FixedPointSeed,
    /// Reject the result when the nonlinear terminal error exceeds this.
    pub terminal_tol: Option<f64>,
}

impl Default for LocalControlOptions {
    fn default() -> Self {
        Self {
            hum: HumOptions::default(),
            fp_tol: 1e-8,
            max_iter: 30,
            seed: FixedPointSeed::Zero,
            terminal_tol: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalControlResult {
    /// `v = v̄ + u`.
    pub control: ControlSchedule,
    /// `u = v - v̄`.
    pub deviation: ControlSchedule,
    /// Nonlinear solution under `v`.
    pub trajectory: Trajectory,
    /// Controlled deviation of the last linear solve.
    pub linear_state: Trajectory,
    /// `‖y(t₁) - ȳ(t₁)‖_{L²}` of the nonlinear solve.
    pub terminal_error: f64,
    pub linear_terminal_norm: f64,
    pub iterations: usize,
    /// `sup |w^{j+1} - w^j|` per iteration.
    pub history: Vec<f64>,
    pub cg_iterations: usize,
    pub b_constant: f64,
}

/// Steers `y0` onto `target` over the target's ladder with a control close to
/// `target_control`.
pub fn exact_control_to_trajectory<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y0: &[f64],
    target: &Trajectory,
    target_control: &ControlSchedule,
    options: &LocalControlOptions,
) -> Result<LocalControlResult> {
    grid.check(y0)?;
    if !target.ladder().same_shape(target_control.ladder()) {
        return Err(dimension("target trajectory and control use different ladders"));
    }
    let z0 = sub(y0, target.initial());
    let ladder = *target.ladder();
    let mut guess = match options.seed {
        FixedPointSeed::Zero => Trajectory::constant(ladder, &grid.zeros()),
        FixedPointSeed::ConstantExtension => Trajectory::constant(ladder, &z0),
    };
    let mut history = Vec::new();
    let mut cg_iterations = 0;
    let mut converged = None;
    for iteration in 1..=options.max_iter {
        let lin = build_linearization(law, grid, target, &guess)?;
        let hum = hum_null_control(grid, &lin, mask, &z0, &options.hum).map_err(|e| match e {
            Error::IllConditioned { .. } => Error::LocalControlFailure {
                reason: format!("HUM solve failed at iteration {iteration}: {e}"),
                history: history.clone(),
            },
            other => other,
        })?;
        cg_iterations += hum.cg_iterations;
        let change = guess
            .states()
            .iter()
            .zip(hum.state.states())
            .map(|(w, z)| sup_distance(w, z))
            .fold(0.0, f64::max);
        history.push(change);
        guess = hum.state.clone();
        if !change.is_finite() {
            break;
        }
        if change <= options.fp_tol {
            converged = Some((iteration, hum, lin.b_constant));
            break;
        }
    }
    let Some((iterations, hum, b_constant)) = converged else {
        return Err(Error::LocalControlFailure {
            reason: format!(
                "relinearization did not settle within {} iterations (initial deviation too large?)",
                options.max_iter
            ),
            history,
        });
    };
    let values = target_control
        .values()
        .iter()
        .zip(hum.control.values())
        .map(|(vbar, u)| add(vbar, u))
        .collect();
    let control = ControlSchedule::new(ladder, values)?;
    let trajectory = solve_forward(law, grid, mask, y0, &control)?;
    let terminal_error = grid.l2_norm(&sub(trajectory.last(), target.last()));
    if let Some(tolerance) = options.terminal_tol {
        if !(terminal_error <= tolerance) {
            return Err(Error::TerminalMismatch {
                error: terminal_error,
                tolerance,
            });
        }
    }
    Ok(LocalControlResult {
        control,
        deviation: hum.control,
        trajectory,
        linear_terminal_norm: hum.terminal_norm,
        linear_state: hum.state,
        terminal_error,
        iterations,
        history,
        cg_iterations,
        b_constant,
    })
}
