//! Falsification probe for the weighted observability inequality
//! `‖p(0)‖² ≤ C ∬_{ω₁×(0,T)} e^{2sα} φ³ |p|²`.
//!
//! The weights are astronomically small for moderate `(s, λ)`, so everything
//! is evaluated in the log domain; a finite log-ratio over all samples is the
//! outcome consistent with the inequality.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{dimension, invalid, Result};
use crate::grid::Grid;
use crate::local::carleman::CarlemanWeights;
use crate::local::linearization::{LinearForm, Linearization};
use crate::mask::ControlMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilitySample {
    pub index: usize,
    /// `ln ‖p(0)‖²`.
    pub log_numerator: f64,
    /// `ln` of the weighted observation; `-∞` when it underflows completely.
    pub log_denominator: f64,
    pub log_ratio: f64,
}

impl ObservabilitySample {
    pub fn log10_ratio(&self) -> f64 {
        self.log_ratio / core::f64::consts::LN_10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityReport {
    pub s: f64,
    pub lambda: f64,
    pub samples: Vec<ObservabilitySample>,
    pub max_log_ratio: f64,
    /// Samples whose denominator vanished (reported as `+∞` ratios).
    pub underflows: usize,
    pub b_constant: f64,
}

impl ObservabilityReport {
    pub fn max_log10_ratio(&self) -> f64 {
        self.max_log_ratio / core::f64::consts::LN_10
    }

    pub fn is_finite(&self) -> bool {
        self.max_log_ratio.is_finite()
    }
}

/// Ratios for `n_samples` unit-norm Gaussian terminal data; the observation
/// region is `ω₁` of `mask`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_observability<R: Rng + ?Sized>(
    grid: &Grid,
    lin: &Linearization,
    form: LinearForm,
    weights: &CarlemanWeights,
    mask: &ControlMask,
    s: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<ObservabilityReport> {
    if !(s > 0.0) {
        return Err(invalid("s must be positive"));
    }
    if n_samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let (steps, _) = lin.steps(grid, form)?;
    if !steps.ladder().same_shape(&weights.ladder) {
        return Err(dimension("weights and linearization use different ladders"));
    }
    let data: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| {
            let raw: Vec<f64> = (0..grid.n()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = grid.l2_norm(&raw);
            raw.iter().map(|v| v / norm).collect()
        })
        .collect();
    observability_for_data(grid, &steps, weights, mask, s, &data, lin.b_constant)
}

pub(crate) fn observability_for_data(
    grid: &Grid,
    steps: &crate::linear::LinearSteps,
    weights: &CarlemanWeights,
    mask: &ControlMask,
    s: f64,
    data: &[Vec<f64>],
    b_constant: f64,
) -> Result<ObservabilityReport> {
    let dt = steps.ladder().dt();
    let log_cell = (dt * grid.spacing()).ln();
    let observed: Vec<usize> = (0..grid.n()).filter(|&i| mask.in_inner(i)).collect();
    let mut samples = Vec::with_capacity(data.len());
    let mut underflows = 0;
    for (index, terminal) in data.iter().enumerate() {
        let p = steps.adjoint(terminal)?;
        let log_numerator = grid.inner(p.initial(), p.initial()).ln();
        let mut terms = Vec::new();
        for k in 1..steps.ladder().steps() {
            let level = p.state(k);
            for &i in &observed {
                if level[i] != 0.0 {
                    terms.push(log_cell + weights.log_weight(s, k, i) + 2.0 * level[i].abs().ln());
                }
            }
        }
        let log_denominator = log_sum_exp(&terms);
        if log_denominator == f64::NEG_INFINITY {
            underflows += 1;
        }
        samples.push(ObservabilitySample {
            index,
            log_numerator,
            log_denominator,
            log_ratio: log_numerator - log_denominator,
        });
    }
    let max_log_ratio = samples.iter().map(|s| s.log_ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(ObservabilityReport {
        s,
        lambda: weights.lambda,
        samples,
        max_log_ratio,
        underflows,
        b_constant,
    })
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}
