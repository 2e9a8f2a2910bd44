//! Implicit Euler for the Kirchhoff form `y_t = Δ_h Φ(y) + v ρ`.
//!
//! Each step solves
//! `Y - Δt Δ_h Φ(Y) = y_k + Δt ρ v_k`
//! by Newton with the tridiagonal Jacobian `I - Δt Δ_h diag(a(Y))`. The
//! Jacobian is a column diagonally dominant M-matrix, so the scheme is
//! monotone: ordered data and sources give ordered solutions.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{sup_norm, Grid};
use crate::law::DiffusionLaw;
use crate::mask::ControlMask;
use crate::trajectory::{ControlSchedule, Direction, Trajectory};
use crate::tridiag::Tridiagonal;

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

/// Runs the nonlinear solver over the ladder of `control`.
pub fn solve_forward<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y0: &[f64],
    control: &ControlSchedule,
) -> Result<Trajectory> {
    grid.check(y0)?;
    grid.check(control.at(0))?;
    if mask.len() != grid.n() {
        return Err(crate::error::dimension("mask does not match grid"));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(crate::error::invalid("initial datum is not finite"));
    }
    let ladder = *control.ladder();
    let mut states = Vec::with_capacity(ladder.levels());
    states.push(y0.to_vec());
    for k in 0..ladder.steps() {
        let next = implicit_step(law, grid, mask, &states[k], control.at(k), ladder.dt())
            .map_err(|e| match e {
                Error::SolverDivergence { residual, .. } => Error::SolverDivergence { step: k, residual },
                other => other,
            })?;
        states.push(next);
    }
    Trajectory::new(ladder, states, Direction::Forward)
}

/// One implicit Euler step from `y` with the control field `v`.
pub fn implicit_step<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    y: &[f64],
    v: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let n = grid.n();
    let h2 = grid.spacing() * grid.spacing();
    let rhs: Vec<f64> = y
        .iter()
        .zip(mask.weights())
        .zip(v)
        .map(|((y, r), v)| y + dt * r * v)
        .collect();
    let mut next = y.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..=NEWTON_MAX_ITER {
        let phi: Vec<f64> = next.iter().map(|&r| law.primitive(r)).collect();
        let lap = grid.laplacian(&phi);
        let res: Vec<f64> = (0..n).map(|i| next[i] - dt * lap[i] - rhs[i]).collect();
        residual = sup_norm(&res);
        if residual <= NEWTON_TOL {
            return Ok(next);
        }
        if !residual.is_finite() {
            break;
        }
        let mut jac = Tridiagonal::zeros(n);
        let c = dt / h2;
        for i in 0..n {
            jac.diag[i] = 1.0 + 2.0 * c * law.diffusivity(next[i]);
            if i > 0 {
                jac.lower[i] = -c * law.diffusivity(next[i - 1]);
            }
            if i + 1 < n {
                jac.upper[i] = -c * law.diffusivity(next[i + 1]);
            }
        }
        let delta = jac.solve(&res)?;
        for (y, d) in next.iter_mut().zip(&delta) {
            *y -= d;
        }
    }
    Err(Error::SolverDivergence { step: 0, residual })
}
