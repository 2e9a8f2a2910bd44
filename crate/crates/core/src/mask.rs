//! Control profile `ρ_ω`: exactly one on `ω₁`, zero outside `ω`, quintic
//! smoothstep transitions on `ω ∖ ω₁`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Open interval `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.start && x < self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Distance from `x` to the nearest endpoint.
    pub fn boundary_distance(&self, x: f64) -> f64 {
        (x - self.start).abs().min((x - self.end).abs())
    }
}

/// `6t⁵ - 15t⁴ + 10t³`, clamped to `[0, 1]` outside the unit interval.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMask {
    weights: Vec<f64>,
    omega: Interval,
    inner: Interval,
    coordinates: Vec<f64>,
}

impl ControlMask {
    /// Builds `ρ` for `ω₁ ⋐ ω ⊂ (0, L)`. Each transition band must contain at
    /// least two grid points.
    pub fn new(grid: &Grid, omega: Interval, inner: Interval) -> Result<Self> {
        let l = grid.length();
        if !(0.0 <= omega.start && omega.start < inner.start && inner.start < inner.end && inner.end < omega.end && omega.end <= l) {
            return Err(Error::Geometry(format!(
                "need 0 ≤ {} < {} < {} < {} ≤ {}",
                omega.start, inner.start, inner.end, omega.end, l
            )));
        }
        let coords = grid.coordinates();
        let left_band = coords.iter().filter(|&&x| x > omega.start && x < inner.start).count();
        let right_band = coords.iter().filter(|&&x| x > inner.end && x < omega.end).count();
        if left_band < 2 || right_band < 2 {
            return Err(Error::Resolution(format!(
                "transition bands hold {left_band} and {right_band} grid points, need at least 2 each"
            )));
        }
        let weights = coords
            .iter()
            .map(|&x| {
                if x <= omega.start || x >= omega.end {
                    0.0
                } else if x >= inner.start && x <= inner.end {
                    1.0
                } else if x < inner.start {
                    smoothstep((x - omega.start) / (inner.start - omega.start))
                } else {
                    smoothstep((omega.end - x) / (omega.end - inner.end))
                }
            })
            .collect();
        Ok(Self {
            weights,
            omega,
            inner,
            coordinates: coords,
        })
    }

    /// `ρ ≡ 1` on the whole domain; a debugging and verification mask.
    pub fn full(grid: &Grid) -> Self {
        let whole = Interval::new(0.0, grid.length());
        Self {
            weights: alloc::vec![1.0; grid.n()],
            omega: whole,
            inner: whole,
            coordinates: grid.coordinates(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega(&self) -> Interval {
        self.omega
    }

    pub fn inner(&self) -> Interval {
        self.inner
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Whether interior point `i` lies in `ω`.
    pub fn in_omega(&self, i: usize) -> bool {
        self.omega.contains(self.coordinates[i])
    }

    /// Whether interior point `i` lies in `ω₁`.
    pub fn in_inner(&self, i: usize) -> bool {
        self.inner.contains(self.coordinates[i])
    }

    /// Pointwise product `ρ v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(v).map(|(r, x)| r * x).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> (Grid, ControlMask) {
        let g = Grid::new(1.0, 99).unwrap();
        let m = ControlMask::new(&g, Interval::new(0.2, 0.8), Interval::new(0.4, 0.6)).unwrap();
        (g, m)
    }

    fn at(g: &Grid, m: &ControlMask, x: f64) -> f64 {
        let i = g.coordinates().iter().position(|&c| (c - x).abs() < 1e-12).unwrap();
        m.weights()[i]
    }

    #[test]
    fn plateau_and_exterior() {
        let (g, m) = standard();
        assert_eq!(at(&g, &m, 0.5), 1.0);
        assert_eq!(at(&g, &m, 0.1), 0.0);
    }

    #[test]
    fn band_midpoint_is_one_half() {
        let (g, m) = standard();
        assert!((at(&g, &m, 0.3) - 0.5).abs() < 1e-12);
        assert!((at(&g, &m, 0.7) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_bounded_and_smooth() {
        let (g, m) = standard();
        let w = m.weights();
        assert!(w.iter().all(|&r| (0.0..=1.0).contains(&r)));
        // Second differences are bounded by the quintic's curvature over the band width.
        let band = 0.2;
        let bound = 10.0 / (band * band) * g.spacing() * g.spacing() * 1.01;
        for i in 1..w.len() - 1 {
            assert!((w[i + 1] - 2.0 * w[i] + w[i - 1]).abs() <= bound);
        }
    }

    #[test]
    fn nesting_and_resolution_errors() {
        let g = Grid::new(1.0, 99).unwrap();
        assert!(matches!(
            ControlMask::new(&g, Interval::new(0.4, 0.6), Interval::new(0.2, 0.8)),
            Err(Error::Geometry(_))
        ));
        let coarse = Grid::new(1.0, 9).unwrap();
        assert!(matches!(
            ControlMask::new(&coarse, Interval::new(0.2, 0.8), Interval::new(0.25, 0.75)),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
    }
}
