//! Frozen-coefficient linear solvers and their exact discrete adjoints.
//!
//! A linear problem is stored as its implicit Euler step matrices:
//! `M_k z_{k+1} = z_k + Δt ρ u_k`, `k = 0..steps`. Two spatial forms are
//! provided:
//!
//! * flux form, `z_t - (α z_x)_x + (b z)_x = ρ u`, with face-averaged `α` and
//!   the drift flux `(b_i z_i + b_{i+1} z_{i+1}) / 2` on each face;
//! * Kirchhoff form, `z_t - Δ_h (c z) = ρ u`, which is the exact difference of
//!   two solutions of the nonlinear scheme when `c` is the secant of `Φ`.
//!
//! The adjoint is the transpose of the forward steps, `M_kᵀ p_k = p_{k+1}`,
//! so that `⟨z_K, p_K⟩ - ⟨z_0, p_0⟩ = Σ_k Δt ⟨ρ u_k, p_k⟩` holds to round-off.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{dimension, Result};
use crate::grid::Grid;
use crate::mask::ControlMask;
use crate::trajectory::{ControlSchedule, Direction, TimeLadder, Trajectory};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSteps {
    ladder: TimeLadder,
    matrices: Vec<Tridiagonal>,
}

/// Raised, not returned as an error, when a flux-form step matrix loses the
/// M-matrix property (cell Péclet number `h |b| / α` above 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftWarning {
    pub step: usize,
    pub peclet: f64,
}

impl LinearSteps {
    pub fn new(ladder: TimeLadder, matrices: Vec<Tridiagonal>) -> Result<Self> {
        if matrices.len() != ladder.steps() {
            return Err(dimension(format!(
                "{} step matrices for {} steps",
                matrices.len(),
                ladder.steps()
            )));
        }
        Ok(Self { ladder, matrices })
    }

    pub fn ladder(&self) -> &TimeLadder {
        &self.ladder
    }

    pub fn matrices(&self) -> &[Tridiagonal] {
        &self.matrices
    }

    pub fn n(&self) -> usize {
        self.matrices[0].len()
    }

    /// Flux-form step matrices from coefficient fields given on every level;
    /// step `k` uses level `k + 1`.
    pub fn flux_form(
        grid: &Grid,
        ladder: TimeLadder,
        diffusivity: &[Vec<f64>],
        drift: &[Vec<f64>],
    ) -> Result<(Self, Vec<DriftWarning>)> {
        check_levels(grid, &ladder, diffusivity, "diffusivity")?;
        check_levels(grid, &ladder, drift, "drift")?;
        let n = grid.n();
        let h = grid.spacing();
        let dt = ladder.dt();
        let mut warnings = Vec::new();
        let mut matrices = Vec::with_capacity(ladder.steps());
        for k in 0..ladder.steps() {
            let alpha = &diffusivity[k + 1];
            let b = &drift[k + 1];
            // Boundary faces take the adjacent interior diffusivity.
            let face = |i: usize| -> f64 {
                // face between interior points i-1 and i (i = 0..=n)
                if i == 0 {
                    alpha[0]
                } else if i == n {
                    alpha[n - 1]
                } else {
                    0.5 * (alpha[i - 1] + alpha[i])
                }
            };
            let mut m = Tridiagonal::identity(n);
            let mut peclet: f64 = 0.0;
            for i in 0..n {
                let (west, east) = (face(i), face(i + 1));
                m.diag[i] += dt * (west + east) / (h * h);
                if i > 0 {
                    m.lower[i] = -dt * west / (h * h) - dt * b[i - 1] / (2.0 * h);
                }
                if i + 1 < n {
                    m.upper[i] = -dt * east / (h * h) + dt * b[i + 1] / (2.0 * h);
                }
                peclet = peclet.max(h * b[i].abs() / west.min(east));
            }
            if peclet > 2.0 {
                warnings.push(DriftWarning { step: k, peclet });
            }
            matrices.push(m);
        }
        Ok((Self { ladder, matrices }, warnings))
    }

    /// Kirchhoff-form step matrices `I - Δt Δ_h diag(c_{k+1})`.
    pub fn kirchhoff_form(grid: &Grid, ladder: TimeLadder, coefficient: &[Vec<f64>]) -> Result<Self> {
        check_levels(grid, &ladder, coefficient, "coefficient")?;
        let n = grid.n();
        let r = ladder.dt() / (grid.spacing() * grid.spacing());
        let matrices = (0..ladder.steps())
            .map(|k| {
                let c = &coefficient[k + 1];
                let mut m = Tridiagonal::identity(n);
                for i in 0..n {
                    m.diag[i] += 2.0 * r * c[i];
                    if i > 0 {
                        m.lower[i] = -r * c[i - 1];
                    }
                    if i + 1 < n {
                        m.upper[i] = -r * c[i + 1];
                    }
                }
                m
            })
            .collect();
        Ok(Self { ladder, matrices })
    }

    /// Forward propagation from `z0` under the source `ρ u`.
    pub fn propagate(&self, mask: &ControlMask, z0: &[f64], control: &ControlSchedule) -> Result<Trajectory> {
        let n = self.n();
        if z0.len() != n || mask.len() != n || control.n() != n {
            return Err(dimension("field lengths do not match the step matrices"));
        }
        if !control.ladder().same_shape(&self.ladder) {
            return Err(dimension("control ladder does not match the step matrices"));
        }
        let dt = self.ladder.dt();
        let mut states = Vec::with_capacity(self.ladder.levels());
        states.push(z0.to_vec());
        for (k, m) in self.matrices.iter().enumerate() {
            let rhs: Vec<f64> = states[k]
                .iter()
                .zip(mask.weights())
                .zip(control.at(k))
                .map(|((z, r), u)| z + dt * r * u)
                .collect();
            states.push(m.solve(&rhs)?);
        }
        Trajectory::new(self.ladder, states, Direction::Forward)
    }

    /// Unforced propagation from `z0`.
    pub fn propagate_free(&self, z0: &[f64]) -> Result<Trajectory> {
        if z0.len() != self.n() {
            return Err(dimension("initial datum does not match the step matrices"));
        }
        let mut states = Vec::with_capacity(self.ladder.levels());
        states.push(z0.to_vec());
        for (k, m) in self.matrices.iter().enumerate() {
            let next = m.solve(&states[k])?;
            states.push(next);
        }
        Trajectory::new(self.ladder, states, Direction::Forward)
    }

    /// Exact discrete adjoint: `p_K = p_T`, `M_kᵀ p_k = p_{k+1}`.
    pub fn adjoint(&self, terminal: &[f64]) -> Result<Trajectory> {
        if terminal.len() != self.n() {
            return Err(dimension("terminal datum does not match the step matrices"));
        }
        let levels = self.ladder.levels();
        let mut states = alloc::vec![Vec::new(); levels];
        states[levels - 1] = terminal.to_vec();
        for k in (0..self.ladder.steps()).rev() {
            states[k] = self.matrices[k].transpose().solve(&states[k + 1])?;
        }
        Trajectory::new(self.ladder, states, Direction::Backward)
    }
}

/// Result of [`solve_linearized`].
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub trajectory: Trajectory,
    pub steps: LinearSteps,
    pub warnings: Vec<DriftWarning>,
}

/// Flux-form solve of `z_t - (α z_x)_x + (b z)_x = ρ u` where `b` is the
/// drift field `β ∂ₓȳ`; the step matrices are returned for adjoint use.
pub fn solve_linearized(
    grid: &Grid,
    diffusivity: &[Vec<f64>],
    drift: &[Vec<f64>],
    z0: &[f64],
    control: &ControlSchedule,
    mask: &ControlMask,
) -> Result<LinearSolution> {
    let (steps, warnings) = LinearSteps::flux_form(grid, *control.ladder(), diffusivity, drift)?;
    let trajectory = steps.propagate(mask, z0, control)?;
    Ok(LinearSolution {
        trajectory,
        steps,
        warnings,
    })
}

/// Backward solve of the transposed steps from `p_T`.
pub fn solve_adjoint_discrete(steps: &LinearSteps, terminal: &[f64]) -> Result<Trajectory> {
    steps.adjoint(terminal)
}

/// `Σ_{k<K} Δt ⟨ρ u_k, p_k⟩`, the right-hand side of the discrete duality.
pub fn control_pairing(grid: &Grid, mask: &ControlMask, control: &ControlSchedule, adjoint: &Trajectory) -> f64 {
    let dt = control.ladder().dt();
    (0..control.ladder().steps())
        .map(|k| dt * grid.inner(&mask.apply(control.at(k)), adjoint.state(k)))
        .sum()
}

/// Cell Péclet bound `h max|b| ≤ 2 a₀` under which the flux form is an M-matrix
/// for every time step.
pub fn drift_is_monotone(grid: &Grid, lower_diffusivity: f64, drift: &[Vec<f64>]) -> bool {
    let bmax = drift.iter().flatten().fold(0.0f64, |m, b| m.max(b.abs()));
    grid.spacing() * bmax <= 2.0 * lower_diffusivity
}

fn check_levels(grid: &Grid, ladder: &TimeLadder, field: &[Vec<f64>], name: &str) -> Result<()> {
    if field.len() != ladder.levels() {
        return Err(dimension(format!(
            "{name} given on {} levels, ladder has {}",
            field.len(),
            ladder.levels()
        )));
    }
    for f in field {
        grid.check(f)?;
    }
    Ok(())
}
