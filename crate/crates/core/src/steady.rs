//! Steady states `-(a(ȳ) ȳ')' = v̄ ρ` and paths of steady states.
//!
//! In Kirchhoff variables the steady problem is the Poisson problem
//! `-Δ_h w = v̄ ρ`, after which `ȳ = Φ⁻¹(w)` pointwise; no nonlinear iteration
//! is needed and the result solves the nonlinear discrete equation exactly.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::grid::{min_value, sub, Grid};
use crate::law::DiffusionLaw;
use crate::mask::ControlMask;
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub state: Vec<f64>,
    pub control: Vec<f64>,
    /// `sup |Δ_h Φ(ȳ) + v̄ ρ|`.
    pub residual: f64,
}

pub fn solve_steady<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    control: &[f64],
) -> Result<SteadyState> {
    grid.check(control)?;
    if control.iter().any(|v| !v.is_finite()) {
        return Err(invalid("steady control is not finite"));
    }
    let w = poisson(grid, &mask.apply(control))?;
    let state: Vec<f64> = w.iter().map(|&w| law.primitive_inverse(w)).collect();
    let residual = steady_residual(law, grid, mask, &state, control);
    Ok(SteadyState {
        state,
        control: control.to_vec(),
        residual,
    })
}

/// `sup_i |Δ_h Φ(ȳ)_i + (v̄ ρ)_i|`.
pub fn steady_residual<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    state: &[f64],
    control: &[f64],
) -> f64 {
    let phi: Vec<f64> = state.iter().map(|&r| law.primitive(r)).collect();
    let lap = grid.laplacian(&phi);
    lap.iter()
        .zip(mask.apply(control))
        .fold(0.0, |m, (l, f)| m.max((l + f).abs()))
}

/// Solves `-Δ_h w = f` with zero boundary values.
pub fn poisson(grid: &Grid, f: &[f64]) -> Result<Vec<f64>> {
    let n = grid.n();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let mut m = Tridiagonal::zeros(n);
    for i in 0..n {
        m.diag[i] = 2.0 * inv;
        if i > 0 {
            m.lower[i] = -inv;
        }
        if i + 1 < n {
            m.upper[i] = -inv;
        }
    }
    m.solve(f)
}

/// Rule `s ↦ λ(s)` producing steady controls along a path.
pub trait ControlPath {
    fn control(&self, s: f64) -> Vec<f64>;
}

/// `λ(s) = (1 - s) v̄⁰ + s v̄¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPath {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl ControlPath for LinearPath {
    fn control(&self, s: f64) -> Vec<f64> {
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect()
    }
}

impl<F: Fn(f64) -> Vec<f64>> ControlPath for F {
    fn control(&self, s: f64) -> Vec<f64> {
        self(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub steady: SteadyState,
}

/// Samples `γ(j/m)`, `j = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyPath {
    pub samples: Vec<PathSample>,
}

impl SteadyPath {
    pub fn segments(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn first(&self) -> &SteadyState {
        &self.samples[0].steady
    }

    pub fn last(&self) -> &SteadyState {
        &self.samples[self.samples.len() - 1].steady
    }
}

pub fn build_path<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    start: &[f64],
    end: &[f64],
    m: usize,
) -> Result<SteadyPath> {
    let rule = LinearPath {
        start: start.to_vec(),
        end: end.to_vec(),
    };
    build_path_with(law, grid, mask, &rule, m)
}

pub fn build_path_with<L: DiffusionLaw + ?Sized, P: ControlPath + ?Sized>(
    law: &L,
    grid: &Grid,
    mask: &ControlMask,
    rule: &P,
    m: usize,
) -> Result<SteadyPath> {
    if m == 0 {
        return Err(invalid("a path needs at least one segment"));
    }
    let samples = (0..=m)
        .map(|j| {
            // exact endpoints, independent of rounding in j / m
            let s = if j == m { 1.0 } else { j as f64 / m as f64 };
            solve_steady(law, grid, mask, &rule.control(s)).map(|steady| PathSample { s, steady })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SteadyPath { samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusRow {
    pub index: usize,
    pub s: f64,
    /// `C²`-proxy norm of `γ(s_{j+1}) - γ(s_j)`; `None` on the last sample.
    pub increment: Option<f64>,
    pub min_control: f64,
    pub min_control_on_omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathModulus {
    pub rows: Vec<ModulusRow>,
    /// Empirical positivity margin: the smallest steady control value on `Ω`.
    pub eta: f64,
    /// Same, restricted to grid points in `ω`.
    pub eta_on_omega: f64,
    pub max_increment: f64,
    /// Largest `C²` proxy of the sampled states.
    pub radius: f64,
}

pub fn path_modulus(grid: &Grid, mask: &ControlMask, path: &SteadyPath) -> PathModulus {
    let m = path.samples.len();
    let rows: Vec<ModulusRow> = (0..m)
        .map(|j| {
            let sample = &path.samples[j];
            let increment = (j + 1 < m).then(|| grid.c2_proxy(&sub(&path.samples[j + 1].steady.state, &sample.steady.state)));
            let control = &sample.steady.control;
            let on_omega = (0..control.len())
                .filter(|&i| mask.in_omega(i))
                .map(|i| control[i])
                .fold(f64::INFINITY, f64::min);
            ModulusRow {
                index: j,
                s: sample.s,
                increment,
                min_control: min_value(control),
                min_control_on_omega: on_omega,
            }
        })
        .collect();
    let eta = rows.iter().map(|r| r.min_control).fold(f64::INFINITY, f64::min);
    let eta_on_omega = rows.iter().map(|r| r.min_control_on_omega).fold(f64::INFINITY, f64::min);
    let max_increment = rows.iter().filter_map(|r| r.increment).fold(0.0, f64::max);
    let radius = path
        .samples
        .iter()
        .map(|s| grid.c2_proxy(&s.steady.state))
        .fold(0.0, f64::max);
    PathModulus {
        rows,
        eta,
        eta_on_omega,
        max_increment,
        radius,
    }
}
