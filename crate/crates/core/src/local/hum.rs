//! Penalized HUM on the discrete linear problem.
//!
//! With `G p_T` the terminal state reached from rest under `u = ρ p`, where `p`
//! is the discrete adjoint from `p_T`, the control minimizing
//! `½ Σ Δt ‖u_k‖² + ‖z(T)‖² / (2ε)` is `u = ρ p` with
//! `(G + ε I) p_T = -z_free(T)`; the system is symmetric positive definite and
//! is solved by conjugate gradients.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dimension, invalid, Error, Result};
use crate::grid::Grid;
use crate::local::linearization::{LinearForm, Linearization};
use crate::linear::LinearSteps;
use crate::mask::ControlMask;
use crate::trajectory::{ControlSchedule, Trajectory};

pub const CG_TOL: f64 = 1e-10;
pub const CG_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumOptions {
    pub epsilon: f64,
    pub cg_tol: f64,
    pub max_iter: usize,
    pub form: LinearForm,
}

impl Default for HumOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            cg_tol: CG_TOL,
            max_iter: CG_MAX_ITER,
            form: LinearForm::Kirchhoff,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HumResult {
    /// `u = ρ p` on every level.
    pub control: ControlSchedule,
    pub adjoint: Trajectory,
    /// Controlled solution from the given initial datum.
    pub state: Trajectory,
    pub terminal_adjoint: Vec<f64>,
    pub free_terminal: Vec<f64>,
    pub terminal_norm: f64,
    pub free_terminal_norm: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub epsilon: f64,
    /// `‖u‖_{L²(Q)} / ‖z₀‖_{L²}`; zero when `z₀ = 0`.
    pub cost_ratio: f64,
}

pub fn hum_null_control(
    grid: &Grid,
    lin: &Linearization,
    mask: &ControlMask,
    z0: &[f64],
    options: &HumOptions,
) -> Result<HumResult> {
    let (steps, _) = lin.steps(grid, options.form)?;
    hum_with_steps(grid, &steps, mask, z0, options)
}

/// `G p_T`: terminal state from rest under the control `ρ p`.
pub fn gram_apply(grid: &Grid, steps: &LinearSteps, mask: &ControlMask, terminal: &[f64]) -> Result<Vec<f64>> {
    let control = adjoint_control(steps, mask, terminal)?.0;
    let traj = steps.propagate(mask, &grid.zeros(), &control)?;
    Ok(traj.last().to_vec())
}

fn adjoint_control(steps: &LinearSteps, mask: &ControlMask, terminal: &[f64]) -> Result<(ControlSchedule, Trajectory)> {
    let adjoint = steps.adjoint(terminal)?;
    let values = adjoint.states().iter().map(|p| mask.apply(p)).collect();
    Ok((ControlSchedule::new(*steps.ladder(), values)?, adjoint))
}

pub fn hum_with_steps(
    grid: &Grid,
    steps: &LinearSteps,
    mask: &ControlMask,
    z0: &[f64],
    options: &HumOptions,
) -> Result<HumResult> {
    grid.check(z0)?;
    if steps.n() != grid.n() {
        return Err(dimension("step matrices do not match grid"));
    }
    if !(options.epsilon > 0.0) {
        return Err(invalid("penalty must be positive"));
    }
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("initial deviation is not finite"));
    }
    let free = steps.propagate_free(z0)?;
    let free_terminal = free.last().to_vec();
    let rhs: Vec<f64> = free_terminal.iter().map(|v| -v).collect();
    let (terminal_adjoint, cg_iterations, cg_residual) = conjugate_gradient(grid, &rhs, options, |p| {
        let mut gp = gram_apply(grid, steps, mask, p)?;
        for (g, x) in gp.iter_mut().zip(p) {
            *g += options.epsilon * x;
        }
        Ok(gp)
    })?;
    let (control, adjoint) = adjoint_control(steps, mask, &terminal_adjoint)?;
    let state = steps.propagate(mask, z0, &control)?;
    let terminal_norm = grid.l2_norm(state.last());
    let dt = steps.ladder().dt();
    let control_norm = (0..steps.ladder().steps())
        .map(|k| dt * grid.inner(control.at(k), control.at(k)))
        .sum::<f64>()
        .sqrt();
    let z0_norm = grid.l2_norm(z0);
    Ok(HumResult {
        control,
        adjoint,
        state,
        free_terminal_norm: grid.l2_norm(&free_terminal),
        free_terminal,
        terminal_adjoint,
        terminal_norm,
        cg_iterations,
        cg_residual,
        epsilon: options.epsilon,
        cost_ratio: if z0_norm > 0.0 { control_norm / z0_norm } else { 0.0 },
    })
}

/// `½ Σ_{k<K} Δt ‖u_k‖² + ‖z_K‖² / (2ε)` for a control and its terminal state.
pub fn hum_objective(grid: &Grid, control: &ControlSchedule, terminal: &[f64], epsilon: f64) -> f64 {
    let dt = control.ladder().dt();
    let running: f64 = (0..control.ladder().steps())
        .map(|k| dt * grid.inner(control.at(k), control.at(k)))
        .sum();
    0.5 * running + grid.inner(terminal, terminal) / (2.0 * epsilon)
}

fn conjugate_gradient(
    grid: &Grid,
    rhs: &[f64],
    options: &HumOptions,
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = rhs.len();
    let mut x = alloc::vec![0.0; n];
    let rhs_norm = grid.inner(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = grid.inner(&r, &r);
    let mut trace = Vec::new();
    for it in 1..=options.max_iter {
        let ap = apply(&p)?;
        let curvature = grid.inner(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::IllConditioned {
                iterations: it,
                residual: rr.sqrt() / rhs_norm,
                trace,
            });
        }
        let alpha = rr / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = grid.inner(&r, &r);
        let rel = rr_next.sqrt() / rhs_norm;
        trace.push(rel);
        if rel <= options.cg_tol {
            return Ok((x, it, rel));
        }
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }
    Err(Error::IllConditioned {
        iterations: options.max_iter,
        residual: trace.last().copied().unwrap_or(1.0),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::Interval;
    use crate::trajectory::TimeLadder;

    fn setup() -> (Grid, ControlMask, LinearSteps) {
        let g = Grid::new(1.0, 24).unwrap();
        let m = ControlMask::new(&g, Interval::new(0.2, 0.8), Interval::new(0.4, 0.6)).unwrap();
        let ladder = TimeLadder::new(0.0, 0.02, 25).unwrap();
        let coefficient: Vec<Vec<f64>> = (0..ladder.levels())
            .map(|k| g.sample(|x| 1.5 + 0.3 * (x * 7.0 + k as f64 * 0.1).sin()))
            .collect();
        let steps = LinearSteps::kirchhoff_form(&g, ladder, &coefficient).unwrap();
        (g, m, steps)
    }

    fn opts(epsilon: f64) -> HumOptions {
        HumOptions {
            epsilon,
            ..HumOptions::default()
        }
    }

    #[test]
    fn zero_datum_needs_no_control() {
        let (g, m, steps) = setup();
        let r = hum_with_steps(&g, &steps, &m, &g.zeros(), &opts(1e-6)).unwrap();
        assert_eq!(r.cg_iterations, 0);
        assert_eq!(r.control.sup_norm(), 0.0);
        assert_eq!(r.terminal_norm, 0.0);
    }

    #[test]
    fn smaller_penalty_reaches_closer() {
        let (g, m, steps) = setup();
        let z0 = g.sample(|x| (3.0 * x).sin() * x * (1.0 - x));
        let mut last_terminal = f64::INFINITY;
        let mut last_cost = 0.0;
        for eps in [1e-2, 1e-4, 1e-6] {
            let r = hum_with_steps(&g, &steps, &m, &z0, &opts(eps)).unwrap();
            assert!(r.terminal_norm < last_terminal);
            assert!(r.cost_ratio >= last_cost);
            last_terminal = r.terminal_norm;
            last_cost = r.cost_ratio;
        }
    }

    #[test]
    fn normal_equation_holds() {
        let (g, m, steps) = setup();
        let z0 = g.sample(|x| x * (1.0 - x));
        let eps = 1e-5;
        let r = hum_with_steps(&g, &steps, &m, &z0, &opts(eps)).unwrap();
        let p = &r.terminal_adjoint;
        let gp = gram_apply(&g, &steps, &m, p).unwrap();
        let residual = g.inner(&gp, p) + eps * g.inner(p, p) + g.inner(&r.free_terminal, p);
        let scale = g.inner(&gp, p) + g.inner(&r.free_terminal, p).abs();
        assert!(residual.abs() <= 1e-8 * scale);
        // terminal state is -ε p_T
        for (z, q) in r.state.last().iter().zip(p) {
            assert!((z + eps * q).abs() <= 1e-8 * r.free_terminal_norm);
        }
    }

    #[test]
    fn gram_is_symmetric() {
        let (g, m, steps) = setup();
        let a = g.sample(|x| (5.0 * x).cos());
        let b = g.sample(|x| x * x - 0.3);
        let ga = gram_apply(&g, &steps, &m, &a).unwrap();
        let gb = gram_apply(&g, &steps, &m, &b).unwrap();
        let (l, r) = (g.inner(&ga, &b), g.inner(&a, &gb));
        assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()));
        assert!(g.inner(&ga, &a) > 0.0);
    }

    #[test]
    fn perturbations_do_not_lower_the_objective() {
        let (g, m, steps) = setup();
        let z0 = g.sample(|x| x * (1.0 - x));
        let eps = 1e-4;
        let r = hum_with_steps(&g, &steps, &m, &z0, &opts(eps)).unwrap();
        let best = hum_objective(&g, &r.control, r.state.last(), eps);
        for (j, size) in [1e-3, -1e-3, 1e-2].into_iter().enumerate() {
            let values = r
                .control
                .values()
                .iter()
                .enumerate()
                .map(|(k, level)| {
                    level
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v + size * ((i + 3 * k + j) as f64).sin())
                        .collect()
                })
                .collect();
            let perturbed = ControlSchedule::new(*steps.ladder(), values).unwrap();
            let state = steps.propagate(&m, &z0, &perturbed).unwrap();
            assert!(hum_objective(&g, &perturbed, state.last(), eps) >= best * (1.0 - 1e-10));
        }
    }
}
