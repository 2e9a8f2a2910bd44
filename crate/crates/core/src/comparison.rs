use crate::error::{dimension, Result};
use crate::trajectory::Trajectory;

pub const COMPARISON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub holds: bool,
    /// Largest `y_lo - y_hi` over all points and levels, clipped at zero.
    pub worst_violation: f64,
    /// `(level, point)` of the worst violation, if any.
    pub location: Option<(usize, usize)>,
}

/// Checks `y_hi ≥ y_lo - 1e-9` everywhere on a shared grid and ladder.
pub fn check_comparison(hi: &Trajectory, lo: &Trajectory) -> Result<ComparisonReport> {
    if !hi.same_shape(lo) {
        return Err(dimension("trajectories do not share grid and ladder"));
    }
    let mut worst = 0.0;
    let mut location = None;
    for (k, (a, b)) in hi.states().iter().zip(lo.states()).enumerate() {
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let gap = y - x;
            if gap > worst {
                worst = gap;
                location = Some((k, i));
            }
        }
    }
    Ok(ComparisonReport {
        holds: worst <= COMPARISON_TOL,
        worst_violation: worst,
        location,
    })
}
