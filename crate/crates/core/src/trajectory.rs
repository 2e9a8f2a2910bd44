//! Time ladders, state trajectories and control schedules.
//!
//! All time-dependent data in the crate live on a uniform ladder
//! `t_k = start + k Δt`, `k = 0..=steps`. In a time step `t_k → t_{k+1}` the
//! control value stored at level `k` is the one applied; the value at the last
//! level is kept for bookkeeping only.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dimension, invalid, Result};
use crate::grid::min_value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeLadder {
    start: f64,
    dt: f64,
    steps: usize,
}

impl TimeLadder {
    pub fn new(start: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !start.is_finite() {
            return Err(invalid("time step must be positive and finite"));
        }
        if steps == 0 {
            return Err(invalid("a time ladder needs at least one step"));
        }
        Ok(Self { start, dt, steps })
    }

    /// Ladder covering `[start, end]` with a step as close as possible to
    /// `dt_hint` that divides the window exactly.
    pub fn covering(start: f64, end: f64, dt_hint: f64) -> Result<Self> {
        if !(end > start) {
            return Err(invalid("window end must exceed its start"));
        }
        if !(dt_hint > 0.0) {
            return Err(invalid("time step must be positive"));
        }
        let steps = ((end - start) / dt_hint).round().max(1.0) as usize;
        Self::new(start, (end - start) / steps as f64, steps)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Sub-ladder between levels `from` and `to` (inclusive).
    pub fn window(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.steps {
            return Err(dimension(format!("window [{from}, {to}] outside ladder with {} steps", self.steps)));
        }
        Self::new(self.time(from), self.dt, to - from)
    }

    /// Same step and shape, start moved.
    pub fn shifted(&self, start: f64) -> Self {
        Self { start, ..*self }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.steps == other.steps && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }

    /// Level index closest to time `t`.
    pub fn level_of(&self, t: f64) -> usize {
        let k = ((t - self.start) / self.dt).round();
        (k.max(0.0) as usize).min(self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Fields `y(·, t_k)` on the ladder, stored in increasing time order whatever
/// the direction in which they were computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    ladder: TimeLadder,
    states: Vec<Vec<f64>>,
    direction: Direction,
}

impl Trajectory {
    pub fn new(ladder: TimeLadder, states: Vec<Vec<f64>>, direction: Direction) -> Result<Self> {
        if states.len() != ladder.levels() {
            return Err(dimension(format!(
                "{} states for a ladder with {} levels",
                states.len(),
                ladder.levels()
            )));
        }
        let n = states[0].len();
        if states.iter().any(|s| s.len() != n) {
            return Err(dimension("trajectory fields have different lengths"));
        }
        Ok(Self {
            ladder,
            states,
            direction,
        })
    }

    /// The field held constant over the ladder.
    pub fn constant(ladder: TimeLadder, field: &[f64]) -> Self {
        Self {
            ladder,
            states: alloc::vec![field.to_vec(); ladder.levels()],
            direction: Direction::Forward,
        }
    }

    pub fn ladder(&self) -> &TimeLadder {
        &self.ladder
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn initial(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn last(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    pub fn n(&self) -> usize {
        self.states[0].len()
    }

    pub fn window(&self, from: usize, to: usize) -> Result<Self> {
        Ok(Self {
            ladder: self.ladder.window(from, to)?,
            states: self.states[from..=to].to_vec(),
            direction: self.direction,
        })
    }

    pub fn into_states(self) -> Vec<Vec<f64>> {
        self.states
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.ladder.same_shape(&other.ladder) && self.n() == other.n()
    }

    /// Appends `next`, whose first level must coincide with this trajectory's last.
    pub fn extend_with(&mut self, next: &Trajectory) -> Result<()> {
        if (next.ladder.dt - self.ladder.dt).abs() > 1e-12 * self.ladder.dt {
            return Err(dimension("cannot join trajectories with different time steps"));
        }
        self.states.extend(next.states[1..].iter().cloned());
        self.ladder = TimeLadder::new(self.ladder.start, self.ladder.dt, self.ladder.steps + next.ladder.steps)?;
        Ok(())
    }
}

/// Control fields `v(·, t_k)` with their extremal values kept up to date.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    ladder: TimeLadder,
    values: Vec<Vec<f64>>,
    min_value: f64,
    sup_norm: f64,
}

impl ControlSchedule {
    pub fn new(ladder: TimeLadder, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != ladder.levels() {
            return Err(dimension(format!(
                "{} control fields for a ladder with {} levels",
                values.len(),
                ladder.levels()
            )));
        }
        let n = values[0].len();
        if values.iter().any(|v| v.len() != n) {
            return Err(dimension("control fields have different lengths"));
        }
        let mut s = Self {
            ladder,
            values,
            min_value: 0.0,
            sup_norm: 0.0,
        };
        s.refresh();
        Ok(s)
    }

    pub fn constant(ladder: TimeLadder, field: &[f64]) -> Self {
        let mut s = Self {
            ladder,
            values: alloc::vec![field.to_vec(); ladder.levels()],
            min_value: 0.0,
            sup_norm: 0.0,
        };
        s.refresh();
        s
    }

    pub fn zeros(ladder: TimeLadder, n: usize) -> Self {
        Self::constant(ladder, &alloc::vec![0.0; n])
    }

    fn refresh(&mut self) {
        self.min_value = self.values.iter().map(|v| min_value(v)).fold(f64::INFINITY, f64::min);
        self.sup_norm = self.values.iter().map(|v| crate::grid::sup_norm(v)).fold(0.0, f64::max);
    }

    pub fn ladder(&self) -> &TimeLadder {
        &self.ladder
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn set(&mut self, k: usize, field: Vec<f64>) -> Result<()> {
        if field.len() != self.n() {
            return Err(dimension("control field length mismatch"));
        }
        self.values[k] = field;
        self.refresh();
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(|&x| f(x)).collect()).collect();
        let mut s = Self {
            ladder: self.ladder,
            values,
            min_value: 0.0,
            sup_norm: 0.0,
        };
        s.refresh();
        s
    }

    /// Pointwise `self - other` on a shared ladder shape.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if !self.ladder.same_shape(&other.ladder) || self.n() != other.n() {
            return Err(dimension("schedules do not share a ladder"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| crate::grid::sub(a, b))
            .collect();
        Self::new(self.ladder, values)
    }

    pub fn window(&self, from: usize, to: usize) -> Result<Self> {
        Self::new(self.ladder.window(from, to)?, self.values[from..=to].to_vec())
    }

    /// Appends `next`; its first level replaces this schedule's last level,
    /// since that is the value applied on the following step.
    pub fn extend_with(&mut self, next: &ControlSchedule) -> Result<()> {
        if (next.ladder.dt - self.ladder.dt).abs() > 1e-12 * self.ladder.dt {
            return Err(dimension("cannot join schedules with different time steps"));
        }
        self.values.pop();
        self.values.extend(next.values.iter().cloned());
        self.ladder = TimeLadder::new(self.ladder.start, self.ladder.dt, self.ladder.steps + next.ladder.steps)?;
        self.refresh();
        Ok(())
    }
}
