//! Global nonnegative control between two steady states by chaining local
//! controls along a path of steady states.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::forward::solve_forward;
use crate::grid::{sub, Grid};
use crate::law::DiffusionLaw;
use crate::local::{exact_control_to_trajectory, LocalControlOptions};
use crate::mask::ControlMask;
use crate::steady::{build_path_with, path_modulus, ControlPath, SteadyPath};
use crate::trajectory::{ControlSchedule, TimeLadder, Trajectory};

/// Positivity tolerance applied to every assembled schedule.
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StairCaseOptions {
    /// Duration of each local-control window.
    pub window: f64,
    pub dt: f64,
    pub local: LocalControlOptions,
    /// Fraction of `η / gain` accepted as a step increment.
    pub safety: f64,
    pub max_steps: usize,
    pub terminal_tol: f64,
}

impl Default for StairCaseOptions {
    fn default() -> Self {
        Self {
            window: 1.0,
            dt: 0.01,
            local: LocalControlOptions::default(),
            safety: 0.5,
            max_steps: 256,
            terminal_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StairCasePlan {
    /// Path sampled at exactly `steps` segments.
    pub path: SteadyPath,
    pub steps: usize,
    pub eta: f64,
    pub eta_on_omega: f64,
    /// `C²` proxy of `ȳ_k - ȳ_{k-1}`, `k = 1..=steps`.
    pub increments: Vec<f64>,
    pub radius: f64,
    /// Measured `‖u‖_∞ / increment` of a single local control.
    pub gain: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub increment: f64,
    /// `‖v_k - v̄_k‖_∞`.
    pub deviation: f64,
    pub min_control: f64,
    /// `‖y(t_k) - ȳ_k‖_{L²}` at the end of the window.
    pub terminal_error: f64,
    pub fixed_point_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct GlobalControlResult {
    pub control: ControlSchedule,
    pub trajectory: Trajectory,
    pub horizon: f64,
    pub min_control: f64,
    pub terminal_error: f64,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonnegReport {
    pub min_all: f64,
    pub min_omega: f64,
    /// `(level, point)` of `min_all`.
    pub argmin: (usize, usize),
}

impl NonnegReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_all >= -tol
    }
}

/// Samples the path at `steps` segments and tabulates margins and increments.
pub fn plan_at<L: DiffusionLaw + ?Sized, P: ControlPath + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    rule: &P,
    steps: usize,
) -> Result<StairCasePlan> {
    let path = build_path_with(law, grid, mask, rule, steps)?;
    let modulus = path_modulus(grid, mask, &path);
    if !(modulus.eta > 0.0) {
        return Err(Error::HypothesisViolation(format!(
            "steady controls along the path must stay above a positive margin, found min {:e}",
            modulus.eta
        )));
    }
    let increments = modulus.rows.iter().filter_map(|r| r.increment).collect();
    Ok(StairCasePlan {
        path,
        steps,
        eta: modulus.eta,
        eta_on_omega: modulus.eta_on_omega,
        increments,
        radius: modulus.radius,
        gain: f64::NAN,
        threshold: f64::NAN,
    })
}

/// Chooses the number of steps: one local control across the whole path
/// measures the gain, then the step count doubles until every increment is
/// below `safety · η / gain`.
pub fn plan_staircase<L: DiffusionLaw + ?Sized, P: ControlPath + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    rule: &P,
    options: &StairCaseOptions,
) -> Result<StairCasePlan> {
    validate(options)?;
    let coarse = plan_at(law, grid, mask, rule, 1)?;
    let jump = coarse.increments[0];
    if jump == 0.0 {
        return Ok(StairCasePlan {
            gain: 0.0,
            threshold: f64::INFINITY,
            ..coarse
        });
    }
    let start = coarse.path.first();
    let end = coarse.path.last();
    let ladder = TimeLadder::covering(0.0, options.window, options.dt)?;
    let probe = exact_control_to_trajectory(
        law,
        grid,
        mask,
        &start.state,
        &Trajectory::constant(ladder, &end.state),
        &ControlSchedule::constant(ladder, &end.control),
        &LocalControlOptions {
            terminal_tol: None,
            ..options.local
        },
    );
    // a failed probe says the single jump is too large; fall back to the
    // margin itself as gain seed and let the doubling decide
    let gain = match probe {
        Ok(r) => r.deviation.sup_norm() / jump,
        Err(Error::LocalControlFailure { .. }) => coarse.eta / jump * 2.0,
        Err(e) => return Err(e),
    };
    let threshold = options.safety * coarse.eta / gain;
    let mut steps = 1;
    loop {
        let plan = if steps == 1 {
            coarse.clone()
        } else {
            plan_at(law, grid, mask, rule, steps)?
        };
        let worst = plan.increments.iter().copied().fold(0.0, f64::max);
        if worst <= threshold {
            return Ok(StairCasePlan { gain, threshold, ..plan });
        }
        if steps >= options.max_steps {
            return Err(Error::PlanningFailure(format!(
                "increments still {worst:e} > threshold {threshold:e} at {steps} steps"
            )));
        }
        steps = (steps * 2).min(options.max_steps);
    }
}

/// Runs the local controller window by window from `ȳ_0`, checking
/// `‖v_k - v̄_k‖_∞ ≤ η` on every step.
pub fn run_staircase<L: DiffusionLaw + ?Sized>(
    plan: &StairCasePlan,
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    options: &StairCaseOptions,
) -> Result<GlobalControlResult> {
    validate(options)?;
    let y_start = plan.path.first().state.clone();
    let mut state = y_start.clone();
    let mut control: Option<ControlSchedule> = None;
    let mut trajectory: Option<Trajectory> = None;
    let mut records = Vec::with_capacity(plan.steps);
    let local = LocalControlOptions {
        terminal_tol: None,
        ..options.local
    };
    for k in 1..=plan.steps {
        let target = &plan.path.samples[k].steady;
        let t0 = (k - 1) as f64 * options.window;
        let ladder = TimeLadder::covering(0.0, options.window, options.dt)?.shifted(t0);
        let result = exact_control_to_trajectory(
            law,
            grid,
            mask,
            &state,
            &Trajectory::constant(ladder, &target.state),
            &ControlSchedule::constant(ladder, &target.control),
            &local,
        )?;
        let deviation = result.deviation.sup_norm();
        if deviation > plan.eta {
            return Err(Error::StepFailure {
                step: k,
                deviation,
                margin: plan.eta,
                suggested_steps: plan.steps * 2,
            });
        }
        records.push(StepRecord {
            step: k,
            increment: plan.increments[k - 1],
            deviation,
            min_control: result.control.min_value(),
            terminal_error: result.terminal_error,
            fixed_point_iterations: result.iterations,
        });
        state = result.trajectory.last().to_vec();
        match (&mut control, &mut trajectory) {
            (Some(c), Some(t)) => {
                c.extend_with(&result.control)?;
                t.extend_with(&result.trajectory)?;
            }
            _ => {
                control = Some(result.control);
                trajectory = Some(result.trajectory);
            }
        }
    }
    let (control, chained) = match (control, trajectory) {
        (Some(c), Some(t)) => (c, t),
        _ => return Err(invalid("a plan needs at least one step")),
    };
    let trajectory = solve_forward(law, grid, mask, &y_start, &control)?;
    debug_assert_eq!(trajectory.last(), chained.last());
    let terminal_error = grid.l2_norm(&sub(trajectory.last(), &plan.path.last().state));
    if !(terminal_error <= options.terminal_tol) {
        return Err(Error::TerminalMismatch {
            error: terminal_error,
            tolerance: options.terminal_tol,
        });
    }
    Ok(GlobalControlResult {
        min_control: control.min_value(),
        horizon: control.ladder().duration(),
        control,
        trajectory,
        terminal_error,
        steps: records,
    })
}

/// Plans, runs, and doubles the step count after every step failure.
pub fn run_staircase_adaptive<L: DiffusionLaw + ?Sized, P: ControlPath + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    rule: &P,
    options: &StairCaseOptions,
) -> Result<(StairCasePlan, GlobalControlResult)> {
    let mut plan = plan_staircase(law, grid, mask, rule, options)?;
    loop {
        match run_staircase(&plan, law, grid, mask, options) {
            Ok(result) => return Ok((plan, result)),
            Err(Error::StepFailure { suggested_steps, .. }) if suggested_steps <= options.max_steps => {
                let (gain, threshold) = (plan.gain, plan.threshold);
                plan = StairCasePlan {
                    gain,
                    threshold,
                    ..plan_at(law, grid, mask, rule, suggested_steps)?
                };
            }
            Err(e) => return Err(e),
        }
    }
}

/// Minima of the stored schedule over `Ω` and over grid points of `ω`.
pub fn verify_nonnegativity(control: &ControlSchedule, mask: &ControlMask) -> NonnegReport {
    let mut min_all = f64::INFINITY;
    let mut min_omega = f64::INFINITY;
    let mut argmin = (0, 0);
    for (k, level) in control.values().iter().enumerate() {
        for (i, &v) in level.iter().enumerate() {
            if v < min_all {
                min_all = v;
                argmin = (k, i);
            }
            if mask.in_omega(i) {
                min_omega = min_omega.min(v);
            }
        }
    }
    NonnegReport {
        min_all,
        min_omega,
        argmin,
    }
}

fn validate(options: &StairCaseOptions) -> Result<()> {
    if !(options.window > 0.0 && options.dt > 0.0 && options.safety > 0.0) {
        return Err(invalid("window, time step and safety factor must be positive"));
    }
    if options.max_steps == 0 {
        return Err(invalid("step cap must be at least one"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::BuiltinLaw;
    use crate::mask::Interval;
    use crate::steady::LinearPath;
    use alloc::vec;

    fn setup() -> (Grid, ControlMask) {
        let g = Grid::new(1.0, 30).unwrap();
        let m = ControlMask::new(&g, Interval::new(0.2, 0.8), Interval::new(0.4, 0.6)).unwrap();
        (g, m)
    }

    #[test]
    fn constant_path_is_one_trivial_step() {
        let (g, m) = setup();
        let v = vec![1.5; g.n()];
        let rule = LinearPath {
            start: v.clone(),
            end: v.clone(),
        };
        let opts = StairCaseOptions::default();
        let plan = plan_staircase(&BuiltinLaw::TwoPlusSine, &g, &m, &rule, &opts).unwrap();
        assert_eq!(plan.steps, 1);
        let result = run_staircase(&plan, &BuiltinLaw::TwoPlusSine, &g, &m, &opts).unwrap();
        assert_eq!(result.min_control, 1.5);
        assert!(result.terminal_error < 1e-12);
        let report = verify_nonnegativity(&result.control, &m);
        assert_eq!(report.min_all, 1.5);
    }

    #[test]
    fn zero_margin_is_rejected() {
        let (g, m) = setup();
        let mut start = vec![1.0; g.n()];
        start[0] = 0.0;
        let rule = LinearPath {
            start,
            end: vec![2.0; g.n()],
        };
        let err = plan_staircase(&BuiltinLaw::Constant(1.0), &g, &m, &rule, &StairCaseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(_)));
    }

    #[test]
    fn negated_schedule_is_detected() {
        let (g, m) = setup();
        let ladder = TimeLadder::new(0.0, 0.1, 4).unwrap();
        let mut c = ControlSchedule::constant(ladder, &vec![1.0; g.n()]);
        let mut level = vec![1.0; g.n()];
        level[2] = -0.25;
        c.set(2, level).unwrap();
        let report = verify_nonnegativity(&c, &m);
        assert_eq!(report.min_all, -0.25);
        assert_eq!(report.argmin, (2, 2));
        assert_eq!(report.min_omega, 1.0);
        assert!(!report.holds(POSITIVITY_TOL));
    }
}
