//! Nonnegative tracking of a moving target: free stabilization under the
//! reference control, then a local control on the last window.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dimension, invalid, Error, Result};
use crate::forward::solve_forward;
use crate::grid::{sub, sup_norm, Grid};
use crate::law::DiffusionLaw;
use crate::local::{exact_control_to_trajectory, LocalControlOptions, LocalControlResult};
use crate::mask::ControlMask;
use crate::staircase::{GlobalControlResult, POSITIVITY_TOL};
use crate::trajectory::{ControlSchedule, TimeLadder, Trajectory};

/// Points used to sample `|a'|` over the range of a target.
pub const DERIVATIVE_SAMPLES: usize = 10_000;

/// Errors below this fraction of `e(0)` are treated as solver noise when the
/// decay rate is fitted.
pub const DECAY_NOISE_FLOOR: f64 = 1e-7;

/// A reference pair `(ȳ, v̄)` solving the controlled equation on a ladder.
#[derive(Debug, Clone)]
pub struct TargetTrajectory {
    pub state: Trajectory,
    pub control: ControlSchedule,
    /// `max_t ‖∂ₓȳ(t)‖_∞`, boundary stencils included.
    pub gradient_sup: f64,
    /// `min v̄` over `Ω × (0, T)`.
    pub eta: f64,
    /// `min v̄` over grid points of `ω`.
    pub eta_on_omega: f64,
}

impl TargetTrajectory {
    /// Wraps an already computed pair.
    pub fn new(grid: &Grid, mask: &ControlMask, state: Trajectory, control: ControlSchedule) -> Result<Self> {
        if !state.ladder().same_shape(control.ladder()) {
            return Err(dimension("target state and control use different ladders"));
        }
        grid.check(state.initial())?;
        let gradient_sup = state
            .states()
            .iter()
            .map(|s| sup_norm(&grid.gradient_with_boundary(s)))
            .fold(0.0, f64::max);
        let eta_on_omega = control
            .values()
            .iter()
            .flat_map(|v| v.iter().enumerate().filter(|(i, _)| mask.in_omega(*i)).map(|(_, &x)| x))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            eta: control.min_value(),
            eta_on_omega,
            gradient_sup,
            state,
            control,
        })
    }

    pub fn ladder(&self) -> &TimeLadder {
        self.state.ladder()
    }

    pub fn window(&self, grid: &Grid, mask: &ControlMask, from: usize, to: usize) -> Result<Self> {
        Self::new(grid, mask, self.state.window(from, to)?, self.control.window(from, to)?)
    }
}

/// Solves the controlled equation from `ybar0` under `v̄(t_k)` held on each step.
pub fn manufacture_target<L: DiffusionLaw + ?Sized, F: Fn(f64) -> Vec<f64>>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    ybar0: &[f64],
    reference: F,
    ladder: TimeLadder,
) -> Result<TargetTrajectory> {
    let values = (0..ladder.levels()).map(|k| reference(ladder.time(k))).collect();
    let control = ControlSchedule::new(ladder, values)?;
    let state = solve_forward(law, grid, mask, ybar0, &control)?;
    TargetTrajectory::new(grid, mask, state, control)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// Sampled `sup |a'|` over `[min ȳ, max ȳ]`.
    pub m_a: f64,
    pub gradient_sup: f64,
    /// Poincaré constant `L/π`.
    pub poincare: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `a₀ / (2 C²)`, the decay rate implied by the energy estimate.
    pub rate_bound: f64,
}

pub fn check_gradient_condition<L: DiffusionLaw + ?Sized>(law: &L, target: &TargetTrajectory, grid: &Grid) -> ConditionReport {
    let (lo, hi) = target
        .state
        .states()
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    // boundary values are zero and belong to the range as well
    let (lo, hi) = (lo.min(0.0), hi.max(0.0));
    let m_a = (0..DERIVATIVE_SAMPLES)
        .map(|j| {
            let r = lo + (hi - lo) * j as f64 / (DERIVATIVE_SAMPLES - 1) as f64;
            law.derivative(r).abs()
        })
        .fold(0.0, f64::max);
    let poincare = grid.length() / PI;
    let a0 = law.lower_bound();
    let lhs = m_a * target.gradient_sup;
    let rhs = a0 / (2.0 * poincare);
    ConditionReport {
        m_a,
        gradient_sup: target.gradient_sup,
        poincare,
        lhs,
        rhs,
        pass: lhs <= rhs,
        rate_bound: a0 / (2.0 * poincare * poincare),
    }
}

#[derive(Debug, Clone)]
pub struct StabilizationReport {
    pub trajectory: Trajectory,
    /// `(t, ‖y(t) - ȳ(t)‖_{L²})` on every level.
    pub errors: Vec<(f64, f64)>,
    /// Least-squares slope of `-ln e(t)`; `+∞` when `e` vanishes identically.
    pub decay_rate: f64,
    /// Number of points entering the fit.
    pub fit_points: usize,
}

impl StabilizationReport {
    pub fn final_error(&self) -> f64 {
        self.errors.last().map_or(0.0, |e| e.1)
    }
}

/// Runs `v = v̄` from `y0` over the whole ladder of `target` and fits the
/// decay of the distance to `ȳ` over the second half of the window.
pub fn stabilization_phase<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y0: &[f64],
    target: &TargetTrajectory,
) -> Result<StabilizationReport> {
    let trajectory = solve_forward(law, grid, mask, y0, &target.control)?;
    let ladder = *target.ladder();
    let errors: Vec<(f64, f64)> = (0..ladder.levels())
        .map(|k| (ladder.time(k), grid.l2_norm(&sub(trajectory.state(k), target.state.state(k)))))
        .collect();
    let (decay_rate, fit_points) = fit_decay(&errors);
    Ok(StabilizationReport {
        trajectory,
        errors,
        decay_rate,
        fit_points,
    })
}

/// Slope of `-ln e` over the second half, ignoring values under the noise floor.
pub fn fit_decay(errors: &[(f64, f64)]) -> (f64, usize) {
    let e0 = errors.first().map_or(0.0, |e| e.1);
    if e0 == 0.0 {
        return (f64::INFINITY, 0);
    }
    let floor = DECAY_NOISE_FLOOR * e0;
    let usable = |slice: &[(f64, f64)]| -> Vec<(f64, f64)> {
        slice.iter().filter(|e| e.1 > floor).map(|&(t, e)| (t, -e.ln())).collect()
    };
    let mut points = usable(&errors[errors.len() / 2..]);
    if points.len() < 3 {
        points = usable(&errors[1.min(errors.len())..]);
    }
    if points.len() < 2 {
        return (f64::INFINITY, points.len());
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxy / sxx, points.len())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingOptions {
    pub tau: f64,
    pub dt: f64,
    pub local: LocalControlOptions,
    pub terminal_tol: f64,
    /// Largest horizon tried by the doubling search.
    pub horizon_cap: f64,
}

impl Default for TrackingOptions {
    fn default() -> Self {
        Self {
            tau: 0.5,
            dt: 0.01,
            local: LocalControlOptions::default(),
            terminal_tol: 1e-6,
            horizon_cap: 64.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackingResult {
    pub global: GlobalControlResult,
    pub condition: ConditionReport,
    pub stabilization: StabilizationReport,
    /// Time at which the local control takes over.
    pub switch_time: f64,
    /// `‖ṽ - v̄‖_∞` on the terminal window.
    pub terminal_deviation: f64,
    pub local: LocalControlResult,
    pub warnings: Vec<String>,
}

/// Both phases on the ladder of `target` without any acceptance check; the
/// caller classifies the outcome.
pub fn tracking_run<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y0: &[f64],
    target: &TargetTrajectory,
    options: &TrackingOptions,
) -> Result<TrackingResult> {
    grid.check(y0)?;
    if !(options.tau > 0.0) {
        return Err(invalid("τ must be positive"));
    }
    let ladder = *target.ladder();
    let horizon = ladder.duration();
    if !(horizon > options.tau) {
        return Err(invalid("horizon must exceed τ"));
    }
    let mut warnings = Vec::new();
    let condition = check_gradient_condition(law, target, grid);
    if !condition.pass {
        warnings.push(format!(
            "gradient condition fails: {:e} > {:e}",
            condition.lhs, condition.rhs
        ));
    }
    let split = ladder.level_of(ladder.end() - options.tau);
    let head = target.window(grid, mask, 0, split)?;
    let stabilization = stabilization_phase(law, grid, mask, y0, &head)?;
    let tail_state = target.state.window(split, ladder.steps())?;
    let tail_control = target.control.window(split, ladder.steps())?;
    let local = exact_control_to_trajectory(
        law,
        grid,
        mask,
        stabilization.trajectory.last(),
        &tail_state,
        &tail_control,
        &LocalControlOptions {
            terminal_tol: None,
            ..options.local
        },
    )?;
    let terminal_deviation = local.deviation.sup_norm();
    let mut control = head.control.clone();
    control.extend_with(&local.control)?;
    let trajectory = solve_forward(law, grid, mask, y0, &control)?;
    let terminal_error = grid.l2_norm(&sub(trajectory.last(), target.state.last()));
    Ok(TrackingResult {
        global: GlobalControlResult {
            min_control: control.min_value(),
            horizon,
            control,
            trajectory,
            terminal_error,
            steps: Vec::new(),
        },
        condition,
        stabilization,
        switch_time: ladder.time(split),
        terminal_deviation,
        local,
        warnings,
    })
}

/// One tracking attempt on the ladder of `target` (no horizon search), with
/// the contraction, margin, terminal and positivity checks enforced.
pub fn attempt_tracking<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y0: &[f64],
    target: &TargetTrajectory,
    options: &TrackingOptions,
) -> Result<TrackingResult> {
    if !(target.eta > 0.0) {
        return Err(Error::HypothesisViolation(format!(
            "reference control must stay above a positive margin, found min {:e}",
            target.eta
        )));
    }
    let run = tracking_run(law, grid, mask, y0, target, options)?;
    let horizon = run.global.horizon;
    let e_switch = run.stabilization.final_error();
    let switch = alloc::vec![(run.switch_time, e_switch)];
    if run.condition.pass && e_switch > run.stabilization.errors[0].1 {
        return Err(Error::TrackingFailure {
            horizon,
            reason: format!("no contraction under the reference control: e grew to {e_switch:e}"),
            deviation_history: run.stabilization.errors.clone(),
        });
    }
    if run.terminal_deviation > target.eta {
        return Err(Error::TrackingFailure {
            horizon,
            reason: format!(
                "terminal correction {:e} exceeds the margin {:e} (e(T-τ) = {e_switch:e})",
                run.terminal_deviation, target.eta
            ),
            deviation_history: switch,
        });
    }
    if !(run.global.terminal_error <= options.terminal_tol) {
        return Err(Error::TerminalMismatch {
            error: run.global.terminal_error,
            tolerance: options.terminal_tol,
        });
    }
    if run.global.min_control < -POSITIVITY_TOL {
        return Err(Error::TrackingFailure {
            horizon,
            reason: format!("assembled control reaches {:e}", run.global.min_control),
            deviation_history: switch,
        });
    }
    Ok(run)
}

/// Doubles the horizon from `2τ` until an attempt succeeds or the cap is hit.
/// The target is regenerated from `ybar0` and `reference` for every horizon.
pub fn track_trajectory<L: DiffusionLaw + ?Sized, F: Fn(f64) -> Vec<f64>>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y0: &[f64],
    ybar0: &[f64],
    reference: F,
    options: &TrackingOptions,
) -> Result<TrackingResult> {
    let mut horizon = 2.0 * options.tau;
    let mut history = Vec::new();
    let mut last_reason = String::new();
    while horizon <= options.horizon_cap * (1.0 + 1e-12) {
        let ladder = TimeLadder::covering(0.0, horizon, options.dt)?;
        let target = manufacture_target(law, grid, mask, ybar0, &reference, ladder)?;
        match attempt_tracking(law, grid, mask, y0, &target, options) {
            Ok(result) => return Ok(result),
            Err(Error::TrackingFailure {
                reason,
                deviation_history,
                ..
            }) => {
                if let Some(&(_, e)) = deviation_history.last() {
                    history.push((horizon, e));
                }
                last_reason = reason;
            }
            Err(e @ (Error::LocalControlFailure { .. } | Error::TerminalMismatch { .. })) => {
                history.push((horizon, f64::NAN));
                last_reason = format!("{e}");
            }
            Err(e) => return Err(e),
        }
        horizon *= 2.0;
    }
    Err(Error::TrackingFailure {
        horizon: horizon / 2.0,
        reason: format!("horizon cap {} reached; last failure: {last_reason}", options.horizon_cap),
        deviation_history: history,
    })
}
