use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dimension, Result};
use crate::grid::{sup_norm, Grid};
use crate::law::DiffusionLaw;
use crate::linear::{DriftWarning, LinearSteps};
use crate::trajectory::Trajectory;

/// Below this magnitude a deviation is treated as zero and the difference
/// quotients fall back to their derivative limits.
pub const ZERO_DEVIATION: f64 = 1e-12;

/// Which spatial form of the frozen linear problem to discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearForm {
    /// `z_t - Δ_h(c_w z)` with `c_w = (Φ(ȳ + w) - Φ(ȳ)) / w`; at `w = z` this is
    /// the exact difference of two nonlinear discrete solutions.
    #[default]
    Kirchhoff,
    /// `z_t - (α_w z_x)_x + (β_w ȳ_x z)_x` with face averages.
    Flux,
}

/// Coefficients of the problem linearized around the pair `(w, ȳ)`.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// `α_w = a(w + ȳ)`.
    pub diffusivity: Vec<Vec<f64>>,
    /// `β_w = -(a(w + ȳ) - a(ȳ)) / w`, or `-a'(ȳ)` when `w ≈ 0`.
    pub beta: Vec<Vec<f64>>,
    /// `β_w ∂ₓȳ`.
    pub drift: Vec<Vec<f64>>,
    /// `(Φ(ȳ + w) - Φ(ȳ)) / w`, or `a(ȳ)` when `w ≈ 0`.
    pub secant: Vec<Vec<f64>>,
    pub target: Trajectory,
    pub guess: Trajectory,
    /// `1 + ‖w‖² + ‖∂ₓȳ‖²_∞`, with `‖w‖` the largest sup norm of `w`, `w_x`, `w_t`.
    pub b_constant: f64,
}

impl Linearization {
    pub fn steps(&self, grid: &Grid, form: LinearForm) -> Result<(LinearSteps, Vec<DriftWarning>)> {
        let ladder = *self.target.ladder();
        match form {
            LinearForm::Kirchhoff => Ok((LinearSteps::kirchhoff_form(grid, ladder, &self.secant)?, Vec::new())),
            LinearForm::Flux => LinearSteps::flux_form(grid, ladder, &self.diffusivity, &self.drift),
        }
    }
}

/// Secant of the primitive: `(Φ(base + dev) - Φ(base)) / dev`.
pub fn secant_coefficient<L: DiffusionLaw + ?Sized>(law: &L, base: f64, dev: f64) -> f64 {
    if dev.abs() < ZERO_DEVIATION {
        law.diffusivity(base)
    } else {
        (law.primitive(base + dev) - law.primitive(base)) / dev
    }
}

pub fn build_linearization<L: DiffusionLaw + ?Sized>(
    law: &L,
    grid: &Grid,
    target: &Trajectory,
    guess: &Trajectory,
) -> Result<Linearization> {
    if !target.same_shape(guess) {
        return Err(dimension("target and guess trajectories do not share grid and ladder"));
    }
    grid.check(target.initial())?;
    let levels = target.ladder().levels();
    let mut diffusivity = Vec::with_capacity(levels);
    let mut beta = Vec::with_capacity(levels);
    let mut drift = Vec::with_capacity(levels);
    let mut secant = Vec::with_capacity(levels);
    let mut grad_sup: f64 = 0.0;
    for k in 0..levels {
        let ybar = target.state(k);
        let w = guess.state(k);
        let grad = centered_gradient(grid, ybar);
        grad_sup = grad_sup.max(sup_norm(&grad));
        let a_level: Vec<f64> = ybar.iter().zip(w).map(|(&y, &w)| law.diffusivity(w + y)).collect();
        let b_level: Vec<f64> = ybar
            .iter()
            .zip(w)
            .map(|(&y, &w)| {
                if w.abs() < ZERO_DEVIATION {
                    -law.derivative(y)
                } else {
                    -(law.diffusivity(w + y) - law.diffusivity(y)) / w
                }
            })
            .collect();
        drift.push(b_level.iter().zip(&grad).map(|(b, g)| b * g).collect());
        secant.push(ybar.iter().zip(w).map(|(&y, &w)| secant_coefficient(law, y, w)).collect());
        diffusivity.push(a_level);
        beta.push(b_level);
    }
    let b_constant = 1.0 + guess_norm(grid, guess).powi(2) + grad_sup * grad_sup;
    Ok(Linearization {
        diffusivity,
        beta,
        drift,
        secant,
        target: target.clone(),
        guess: guess.clone(),
        b_constant,
    })
}

fn centered_gradient(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let g = grid.gradient_with_boundary(f);
    g[1..g.len() - 1].to_vec()
}

fn guess_norm(grid: &Grid, w: &Trajectory) -> f64 {
    let dt = w.ladder().dt();
    let mut m: f64 = 0.0;
    for (k, s) in w.states().iter().enumerate() {
        m = m.max(sup_norm(s)).max(sup_norm(&grid.first_differences(s)));
        if k > 0 {
            let prev = w.state(k - 1);
            m = m.max(s.iter().zip(prev).fold(0.0, |a, (x, y)| a.max((x - y).abs() / dt)));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::BuiltinLaw;
    use crate::trajectory::TimeLadder;

    fn setup(ybar: f64, w: f64) -> (Grid, Trajectory, Trajectory) {
        let g = Grid::new(1.0, 10).unwrap();
        let ladder = TimeLadder::new(0.0, 0.1, 3).unwrap();
        (
            g,
            Trajectory::constant(ladder, &alloc::vec![ybar; g.n()]),
            Trajectory::constant(ladder, &alloc::vec![w; g.n()]),
        )
    }

    #[test]
    fn zero_guess_takes_derivative_limit() {
        let (g, ybar, w) = setup(0.3, 0.0);
        let lin = build_linearization(&BuiltinLaw::TwoPlusSine, &g, &ybar, &w).unwrap();
        for (a, b) in lin.diffusivity.iter().flatten().zip(lin.beta.iter().flatten()) {
            assert_eq!(*a, 2.0 + 0.3f64.sin());
            assert_eq!(*b, -(0.3f64.cos()));
        }
    }

    #[test]
    fn constant_law_has_no_drift() {
        let (g, ybar, w) = setup(0.3, 0.7);
        let lin = build_linearization(&BuiltinLaw::Constant(2.5), &g, &ybar, &w).unwrap();
        assert!(lin.diffusivity.iter().flatten().all(|&a| a == 2.5));
        assert!(lin.beta.iter().flatten().all(|&b| b == 0.0));
        assert!(lin.secant.iter().flatten().all(|&c| (c - 2.5).abs() < 1e-14));
    }

    #[test]
    fn ratio_at_half() {
        let (g, ybar, w) = setup(0.0, 0.5);
        let lin = build_linearization(&BuiltinLaw::TwoPlusSine, &g, &ybar, &w).unwrap();
        let expected = -(0.5f64.sin()) / 0.5;
        assert!((lin.beta[0][0] - expected).abs() < 1e-15);
        assert!((expected + 0.9589).abs() < 1e-4);
    }

    #[test]
    fn ratio_and_limit_agree_near_zero() {
        let law = BuiltinLaw::TwoPlusSine;
        for &y in &[-1.0, 0.0, 0.4, 2.0] {
            let ratio = -(law.diffusivity(1e-6 + y) - law.diffusivity(y)) / 1e-6;
            assert!((ratio + law.derivative(y)).abs() < 1e-6);
            let sec = secant_coefficient(&law, y, 1e-6);
            assert!((sec - law.diffusivity(y)).abs() < 1e-6);
        }
    }

    #[test]
    fn ladder_mismatch() {
        let (g, ybar, _) = setup(0.0, 0.0);
        let other = Trajectory::constant(TimeLadder::new(0.0, 0.1, 4).unwrap(), &g.zeros());
        assert!(build_linearization(&BuiltinLaw::TwoPlusSine, &g, &ybar, &other).is_err());
    }
}
