use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square tridiagonal matrix. Row `i` reads
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`; `lower[0]` and
/// `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn transpose(&self) -> Self {
        let n = self.len();
        let mut t = Self::zeros(n);
        t.diag.copy_from_slice(&self.diag);
        for i in 1..n {
            t.lower[i] = self.upper[i - 1];
            t.upper[i - 1] = self.lower[i];
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm (no pivoting; intended for diagonally dominant or
    /// M-matrix systems).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        check_pivot(0, pivot)?;
        c[0] = self.upper[0] / pivot;
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            check_pivot(i, pivot)?;
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Z-matrix with nonnegative column sums excess (column diagonal dominance),
    /// which makes it a nonsingular M-matrix when strict.
    pub fn is_m_matrix(&self) -> bool {
        let n = self.len();
        (0..n).all(|j| {
            let below = if j + 1 < n { self.lower[j + 1] } else { 0.0 };
            let above = if j > 0 { self.upper[j - 1] } else { 0.0 };
            self.diag[j] > 0.0 && below <= 0.0 && above <= 0.0 && self.diag[j] + below + above > 0.0
        })
    }
}

fn check_pivot(row: usize, pivot: f64) -> Result<()> {
    if pivot.abs() < 1e-300 || !pivot.is_finite() {
        return Err(Error::SingularSystem { row, pivot });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tridiagonal {
        Tridiagonal {
            lower: vec![0.0, -1.0, -0.5, -2.0],
            diag: vec![4.0, 5.0, 3.0, 6.0],
            upper: vec![-1.5, -1.0, -0.25, 0.0],
        }
    }

    #[test]
    fn solve_inverts_multiplication() {
        let m = sample();
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let b = m.mul_vec(&x);
        let back = m.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn transpose_pairs_correctly() {
        let m = sample();
        let t = m.transpose();
        let a = vec![0.3, -1.0, 2.0, 0.7];
        let b = vec![1.1, 0.4, -0.2, 0.9];
        let lhs: f64 = m.mul_vec(&a).iter().zip(&b).map(|(x, y)| x * y).sum();
        let rhs: f64 = a.iter().zip(t.mul_vec(&b)).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = Tridiagonal::zeros(3);
        assert!(matches!(m.solve(&[1.0, 1.0, 1.0]), Err(Error::SingularSystem { row: 0, .. })));
    }
}
