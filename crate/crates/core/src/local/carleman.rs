use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::mask::Interval;
use crate::trajectory::TimeLadder;

/// Singular Carleman weights built from `α₀(x) = sin(πx/L)`:
/// `φ = e^{λα₀} / (t(T - t))` and
/// `α = (e^{λα₀} - e^{2λ‖α₀‖_∞}) / (t(T - t))`.
///
/// Both blow up at `t = 0` and `t = T`; the end levels hold `±∞` and all
/// consumers skip them.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanWeights {
    pub alpha0: Vec<f64>,
    pub ladder: TimeLadder,
    pub phi: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub lambda: f64,
    pub omega0: Interval,
    /// Whether `|α₀'| > 0` at every grid point outside `ω₀`.
    pub gradient_nondegenerate: bool,
}

impl CarlemanWeights {
    /// `ln(e^{2sα} φ³)` at level `k`, point `i`; `-∞` at the end levels.
    pub fn log_weight(&self, s: f64, k: usize, i: usize) -> f64 {
        if k == 0 || k == self.ladder.steps() {
            return f64::NEG_INFINITY;
        }
        2.0 * s * self.alpha[k][i] + 3.0 * self.phi[k][i].ln()
    }
}

pub fn carleman_weights(grid: &Grid, omega0: Interval, lambda: f64, horizon: f64, dt: f64) -> Result<CarlemanWeights> {
    if !(lambda > 0.0) {
        return Err(invalid("λ must be positive"));
    }
    let l = grid.length();
    if !omega0.contains(0.5 * l) {
        return Err(Error::Geometry(format!(
            "ω₀ = ({}, {}) must contain the midpoint {} where α₀' vanishes",
            omega0.start,
            omega0.end,
            0.5 * l
        )));
    }
    let ladder = TimeLadder::covering(0.0, horizon, dt)?;
    let alpha0 = grid.sample(|x| (PI * x / l).sin());
    let gradient_nondegenerate = grid
        .coordinates()
        .iter()
        .filter(|&&x| !omega0.contains(x))
        .all(|&x| (PI / l * (PI * x / l).cos()).abs() > 0.0);
    // ‖α₀‖_∞ = 1 for the sine profile
    let ceiling = (2.0 * lambda).exp();
    let t_end = ladder.end();
    let mut phi = Vec::with_capacity(ladder.levels());
    let mut alpha = Vec::with_capacity(ladder.levels());
    for k in 0..ladder.levels() {
        if k == 0 || k == ladder.steps() {
            phi.push(alloc::vec![f64::INFINITY; grid.n()]);
            alpha.push(alloc::vec![f64::NEG_INFINITY; grid.n()]);
            continue;
        }
        let t = ladder.time(k);
        let denom = t * (t_end - t);
        phi.push(alpha0.iter().map(|a| (lambda * a).exp() / denom).collect());
        alpha.push(alpha0.iter().map(|a| ((lambda * a).exp() - ceiling) / denom).collect());
    }
    Ok(CarlemanWeights {
        alpha0,
        ladder,
        phi,
        alpha,
        lambda,
        omega0,
        gradient_nondegenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_values() {
        let g = Grid::new(1.0, 99).unwrap();
        let w = carleman_weights(&g, Interval::new(0.3, 0.7), 1.0, 1.0, 0.01).unwrap();
        let i = 49; // x = 0.5
        let k = 50; // t = 0.5
        assert!((g.x(i) - 0.5).abs() < 1e-14);
        assert!((w.alpha0[i] - 1.0).abs() < 1e-15);
        let e = core::f64::consts::E;
        assert!((w.phi[k][i] - e / 0.25).abs() < 1e-10);
        assert!((w.phi[k][i] - 10.873).abs() < 1e-3);
        assert!((w.alpha[k][i] - (e - e * e) / 0.25).abs() < 1e-10);
        assert!((w.alpha[k][i] + 18.683).abs() < 1e-3);
        assert!(w.gradient_nondegenerate);
    }

    #[test]
    fn near_boundary_phi_is_time_factor() {
        let g = Grid::new(1.0, 999).unwrap();
        let w = carleman_weights(&g, Interval::new(0.3, 0.7), 1.0, 1.0, 0.01).unwrap();
        let t: f64 = 0.5;
        let k = 50;
        assert!((w.phi[k][0] * t * (1.0 - t) - 1.0).abs() < 1e-2);
        assert!(w.alpha[1..100].iter().flatten().all(|&a| a < 0.0));
        assert!(w.phi[1..100].iter().flatten().all(|&p| p > 0.0));
    }

    #[test]
    fn midpoint_must_be_observed() {
        let g = Grid::new(1.0, 99).unwrap();
        assert!(matches!(
            carleman_weights(&g, Interval::new(0.6, 0.8), 1.0, 1.0, 0.01),
            Err(Error::Geometry(_))
        ));
    }
}
