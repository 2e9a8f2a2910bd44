//! Uniform interior mesh on `(0, L)` with homogeneous Dirichlet boundary, plus
//! the discrete norms used throughout the crate.
//!
//! Fields are plain `[f64]` slices holding the `n` interior values; the two
//! boundary values are implicitly zero.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{dimension, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(invalid("domain length must be positive and finite"));
        }
        if n < 3 {
            return Err(invalid("at least 3 interior points are required"));
        }
        Ok(Self {
            length,
            n,
            h: length / (n as f64 + 1.0),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior points.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior point `i` (zero based), i.e. `(i + 1) h`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn zeros(&self) -> Vec<f64> {
        alloc::vec![0.0; self.n]
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    pub fn check(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.n {
            return Err(dimension(alloc::format!(
                "field has {} values, grid has {} interior points",
                field.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `h`-weighted inner product (trapezoidal rule with zero boundary values).
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h * dot(a, b)
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub fn l1_norm(&self, f: &[f64]) -> f64 {
        self.h * f.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `(Δ_h w)_i = (w_{i+1} - 2 w_i + w_{i-1}) / h²` with zero ghost values.
    pub fn laplacian(&self, w: &[f64]) -> Vec<f64> {
        let inv = 1.0 / (self.h * self.h);
        (0..self.n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { w[i - 1] };
                let right = if i + 1 == self.n { 0.0 } else { w[i + 1] };
                (right - 2.0 * w[i] + left) * inv
            })
            .collect()
    }

    /// Forward divided differences on the `n + 1` cell faces, boundary zeros included.
    pub fn first_differences(&self, f: &[f64]) -> Vec<f64> {
        let ext = self.extend(f);
        ext.windows(2).map(|w| (w[1] - w[0]) / self.h).collect()
    }

    /// Second divided differences at the interior points.
    pub fn second_differences(&self, f: &[f64]) -> Vec<f64> {
        self.laplacian(f)
    }

    /// Centered gradient at the interior points and one-sided second order
    /// stencils at the two boundary points; returns `n + 2` values.
    pub fn gradient_with_boundary(&self, f: &[f64]) -> Vec<f64> {
        let ext = self.extend(f);
        let m = ext.len();
        let h = self.h;
        let mut g = Vec::with_capacity(m);
        g.push((-3.0 * ext[0] + 4.0 * ext[1] - ext[2]) / (2.0 * h));
        for i in 1..m - 1 {
            g.push((ext[i + 1] - ext[i - 1]) / (2.0 * h));
        }
        g.push((3.0 * ext[m - 1] - 4.0 * ext[m - 2] + ext[m - 3]) / (2.0 * h));
        g
    }

    /// Discrete stand-in for a `C²`-type norm: the largest of the sup norms of
    /// the field and of its first and second divided differences.
    pub fn c2_proxy(&self, f: &[f64]) -> f64 {
        let d1 = sup_norm(&self.first_differences(f));
        let d2 = sup_norm(&self.second_differences(f));
        sup_norm(f).max(d1).max(d2)
    }

    fn extend(&self, f: &[f64]) -> Vec<f64> {
        let mut ext = Vec::with_capacity(f.len() + 2);
        ext.push(0.0);
        ext.extend_from_slice(f);
        ext.push(0.0);
        ext
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn min_value(f: &[f64]) -> f64 {
    f.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}
