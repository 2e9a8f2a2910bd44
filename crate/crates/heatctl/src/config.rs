//! Flat TOML experiment configuration.
//!
//! Every key has a default, so a partial file is accepted; unknown keys are
//! rejected. [`ExperimentConfig::to_toml`] writes the canonical form, which
//! lists every key in declaration order and parses back to the same text.

use std::fmt;
use std::path::Path;

use heatctl_core::{BuiltinLaw, ControlMask, Grid, Interval};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: &'static str, message: String },
}

fn bad(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key,
        message: message.into(),
    }
}

/// A diffusion law named as in the builtin registry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawSpec(pub BuiltinLaw);

impl LawSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        match t {
            "two-plus-sine" => Ok(Self(BuiltinLaw::TwoPlusSine)),
            "rational-bump" => Ok(Self(BuiltinLaw::RationalBump)),
            _ => {
                let inner = t
                    .strip_prefix("constant(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown law `{t}`; expected constant(c), two-plus-sine or rational-bump"))?;
                let c: f64 = inner.trim().parse().map_err(|_| format!("`{inner}` is not a number"))?;
                BuiltinLaw::constant(c).map(Self).map_err(|e| e.to_string())
            }
        }
    }
}

impl fmt::Display for LawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Free-form label copied into every report.
    pub scenario: String,
    pub law: String,
    pub length: f64,
    /// Interior grid points.
    pub n: usize,
    /// Control region `ω`.
    pub omega: [f64; 2],
    /// Plateau `ω₁ ⋐ ω` where `ρ = 1`; also the observation region.
    pub omega1: [f64; 2],
    /// Region excluded from the Carleman gradient condition.
    pub omega0: [f64; 2],
    pub dt: f64,
    /// Window length for `steady`-based runs and the observability probe.
    pub horizon: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub fp_tol: f64,
    pub terminal_tol: f64,
    pub seed: u64,
    pub samples: usize,
    /// Constant steady control at the start of a path; also the base level
    /// of the tracking reference.
    pub control_start: f64,
    pub control_end: f64,
    pub segments: usize,
    /// Tracking reference `v̄(t) = control_start + amplitude · sin(2π f t)`.
    pub reference_amplitude: f64,
    pub reference_frequency: f64,
    /// Amplitude of the `sin(πx/L)` perturbation in `track`.
    pub perturbation: f64,
    /// Amplitudes of the excess and deficit data in `mintime`.
    pub excess_amplitude: f64,
    pub deficit_amplitude: f64,
    pub carleman_s: f64,
    pub carleman_lambda: f64,
    pub t_max: f64,
    pub levels: usize,
    pub horizon_cap: f64,
    pub search_horizons: Vec<f64>,
    /// Output directory; empty means `out/<command>`.
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "standard".into(),
            law: "two-plus-sine".into(),
            length: 1.0,
            n: 100,
            omega: [0.2, 0.8],
            omega1: [0.4, 0.6],
            omega0: [0.3, 0.7],
            dt: 0.01,
            horizon: 1.0,
            tau: 0.5,
            epsilon: 1e-8,
            fp_tol: 1e-8,
            terminal_tol: 1e-6,
            seed: 20240611,
            samples: 50,
            control_start: 1.0,
            control_end: 3.0,
            segments: 8,
            reference_amplitude: 0.5,
            reference_frequency: 1.0,
            perturbation: 0.3,
            excess_amplitude: 0.1,
            deficit_amplitude: 0.3,
            carleman_s: 2.0,
            carleman_lambda: 2.0,
            t_max: 1.0,
            levels: 30,
            horizon_cap: 64.0,
            search_horizons: (0..10).map(|j| 2f64.powi(j - 8)).collect(),
            out_dir: String::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn law_spec(&self) -> Result<LawSpec, ConfigError> {
        LawSpec::parse(&self.law).map_err(|m| bad("law", m))
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.length, self.n).map_err(|e| bad("n", e.to_string()))
    }

    pub fn mask(&self, grid: &Grid) -> Result<ControlMask, ConfigError> {
        ControlMask::new(
            grid,
            Interval::new(self.omega[0], self.omega[1]),
            Interval::new(self.omega1[0], self.omega1[1]),
        )
        .map_err(|e| bad("omega", e.to_string()))
    }

    pub fn omega0(&self) -> Interval {
        Interval::new(self.omega0[0], self.omega0[1])
    }

    /// Checks ranges that the solvers would otherwise reject later.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.law_spec()?;
        let positive = [
            ("length", self.length),
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("tau", self.tau),
            ("epsilon", self.epsilon),
            ("fp_tol", self.fp_tol),
            ("terminal_tol", self.terminal_tol),
            ("reference_frequency", self.reference_frequency),
            ("carleman_s", self.carleman_s),
            ("carleman_lambda", self.carleman_lambda),
            ("t_max", self.t_max),
            ("horizon_cap", self.horizon_cap),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(bad(key, format!("must be positive and finite, got {value}")));
            }
        }
        if self.n < 3 {
            return Err(bad("n", "need at least 3 interior points"));
        }
        for (key, count) in [("samples", self.samples), ("segments", self.segments), ("levels", self.levels)] {
            if count == 0 {
                return Err(bad(key, "must be at least 1"));
            }
        }
        if self.search_horizons.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan()) || self.search_horizons.iter().any(|&t| t.is_nan() || t <= 0.0) {
            return Err(bad("search_horizons", "must be positive and strictly ascending"));
        }
        let grid = self.grid()?;
        self.mask(&grid)?;
        let o0 = self.omega0();
        if !(0.0 <= o0.start && o0.start < o0.end && o0.end <= self.length) {
            return Err(bad("omega0", "must be an interval inside (0, length)"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(bad("seed", "must fit in a signed 64-bit integer"));
        }
        Ok(())
    }
}
