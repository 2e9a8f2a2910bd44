#![allow(dead_code)]

use heatctl_core::{ControlMask, Grid, Interval};

pub fn unit_grid(n: usize) -> Grid {
    Grid::new(1.0, n).unwrap()
}

pub fn standard_mask(grid: &Grid) -> ControlMask {
    ControlMask::new(grid, Interval::new(0.2, 0.8), Interval::new(0.4, 0.6)).unwrap()
}

/// Thomas algorithm, written independently of the crate's tridiagonal solver.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn bump(x: f64, centre: f64, radius: f64) -> f64 {
    let u = (x - centre) / radius;
    if u.abs() < 1.0 {
        (1.0 - u * u).powi(3)
    } else {
        0.0
    }
}
