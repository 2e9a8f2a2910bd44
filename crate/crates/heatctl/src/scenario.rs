//! Standard data built from a configuration.

use std::f64::consts::PI;

use heatctl_core::steady::{solve_steady, SteadyState};
use heatctl_core::{BuiltinLaw, ControlMask, Grid};

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, Clone)]
pub struct Setup {
    pub law: BuiltinLaw,
    pub grid: Grid,
    pub mask: ControlMask,
}

impl Setup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, ConfigError> {
        let law = cfg.law_spec()?.0;
        let grid = cfg.grid()?;
        let mask = cfg.mask(&grid)?;
        Ok(Self { law, grid, mask })
    }

    pub fn constant(&self, level: f64) -> Vec<f64> {
        vec![level; self.grid.n()]
    }

    /// `Λ(v̄ ≡ level)`.
    pub fn steady(&self, level: f64) -> heatctl_core::Result<SteadyState> {
        solve_steady(&self.law, &self.grid, &self.mask, &self.constant(level))
    }

    /// `base + amp · sin(πx/L)`.
    pub fn sine_perturbation(&self, base: &[f64], amp: f64) -> Vec<f64> {
        let l = self.grid.length();
        add_profile(&self.grid, base, |x| amp * (PI * x / l).sin())
    }

    /// `base + amp · bump`, the bump centred halfway between `0` and `ω`.
    pub fn excess_datum(&self, base: &[f64], amp: f64) -> Vec<f64> {
        let centre = 0.5 * self.mask.omega().start;
        let radius = 0.8 * centre;
        add_profile(&self.grid, base, |x| amp * bump(x, centre, radius))
    }

    /// `base - amp · x(L - x)/L²`.
    pub fn deficit_datum(&self, base: &[f64], amp: f64) -> Vec<f64> {
        let l = self.grid.length();
        add_profile(&self.grid, base, |x| -amp * x * (l - x) / (l * l))
    }
}

/// `(1 - ((x - c)/r)²)³₊`.
pub fn bump(x: f64, centre: f64, radius: f64) -> f64 {
    let u = (x - centre) / radius;
    if u.abs() < 1.0 {
        (1.0 - u * u).powi(3)
    } else {
        0.0
    }
}

fn add_profile(grid: &Grid, base: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    base.iter().zip(grid.coordinates()).map(|(b, x)| b + f(x)).collect()
}

/// `v̄(t) = level + amplitude · sin(2π f t)`, uniform in space.
pub fn moving_reference(n: usize, level: f64, amplitude: f64, frequency: f64) -> impl Fn(f64) -> Vec<f64> + Clone {
    move |t| vec![level + amplitude * (2.0 * PI * frequency * t).sin(); n]
}
