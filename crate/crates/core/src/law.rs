//! Diffusion laws `a(·)` and their Kirchhoff primitive `Φ(r) = ∫₀ʳ a(s) ds`.
//!
//! Every law must satisfy `a(r) ≥ a₀ > 0` and `|a'(r)| ≤ M`; the primitive is
//! then strictly increasing with `Φ' ≥ a₀`, which makes the inverse well
//! defined and cheap to bracket.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};

pub trait DiffusionLaw {
    fn diffusivity(&self, r: f64) -> f64;

    fn derivative(&self, r: f64) -> f64;

    /// `a₀`, a positive lower bound of the diffusivity.
    fn lower_bound(&self) -> f64;

    /// `M`, a bound for `|a'|`.
    fn derivative_bound(&self) -> f64;

    /// Kirchhoff primitive. The default integrates the diffusivity by
    /// adaptive Simpson quadrature to `1e-12`.
    fn primitive(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        adaptive_simpson(&|s| self.diffusivity(s), 0.0, r, 1e-12)
    }

    /// Inverse of the primitive by safeguarded Newton.
    fn primitive_inverse(&self, w: f64) -> f64 {
        newton_inverse(self, w)
    }
}

impl<L: DiffusionLaw + ?Sized> DiffusionLaw for &L {
    fn diffusivity(&self, r: f64) -> f64 {
        (**self).diffusivity(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (**self).derivative(r)
    }
    fn lower_bound(&self) -> f64 {
        (**self).lower_bound()
    }
    fn derivative_bound(&self) -> f64 {
        (**self).derivative_bound()
    }
    fn primitive(&self, r: f64) -> f64 {
        (**self).primitive(r)
    }
    fn primitive_inverse(&self, w: f64) -> f64 {
        (**self).primitive_inverse(w)
    }
}

/// Checked evaluation of `Φ(r)`.
pub fn kirchhoff<L: DiffusionLaw + ?Sized>(law: &L, r: f64) -> Result<f64> {
    if r.is_nan() {
        return Err(invalid("kirchhoff: NaN argument"));
    }
    Ok(law.primitive(r))
}

/// Checked evaluation of `Φ⁻¹(w)`.
pub fn kirchhoff_inverse<L: DiffusionLaw + ?Sized>(law: &L, w: f64) -> Result<f64> {
    if w.is_nan() {
        return Err(invalid("kirchhoff_inverse: NaN argument"));
    }
    Ok(law.primitive_inverse(w))
}

/// The builtin registry: `constant(c)`, `two-plus-sine`, `rational-bump`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinLaw {
    /// `a ≡ c`.
    Constant(f64),
    /// `a(r) = 2 + sin r`, `a₀ = 1`, `M = 1`.
    TwoPlusSine,
    /// `a(r) = 1 + 1/(1 + r²)`, `a₀ = 1`, `M = 2`.
    RationalBump,
}

impl BuiltinLaw {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("constant diffusivity must be positive"));
        }
        Ok(Self::Constant(c))
    }

    pub fn name(&self) -> alloc::string::String {
        match self {
            Self::Constant(c) => alloc::format!("constant({c})"),
            Self::TwoPlusSine => "two-plus-sine".into(),
            Self::RationalBump => "rational-bump".into(),
        }
    }
}

impl DiffusionLaw for BuiltinLaw {
    fn diffusivity(&self, r: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::TwoPlusSine => 2.0 + r.sin(),
            Self::RationalBump => 1.0 + 1.0 / (1.0 + r * r),
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::TwoPlusSine => r.cos(),
            Self::RationalBump => {
                let q = 1.0 + r * r;
                -2.0 * r / (q * q)
            }
        }
    }

    fn lower_bound(&self) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::TwoPlusSine | Self::RationalBump => 1.0,
        }
    }

    fn derivative_bound(&self) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::TwoPlusSine => 1.0,
            Self::RationalBump => 2.0,
        }
    }

    fn primitive(&self, r: f64) -> f64 {
        match *self {
            Self::Constant(c) => c * r,
            // 2r + 1 - cos r, written to avoid cancellation near zero
            Self::TwoPlusSine => {
                let s = (0.5 * r).sin();
                2.0 * r + 2.0 * s * s
            }
            Self::RationalBump => r + r.atan(),
        }
    }

    fn primitive_inverse(&self, w: f64) -> f64 {
        match *self {
            Self::Constant(c) => w / c,
            _ => newton_inverse(self, w),
        }
    }
}

/// A law given by closures; the primitive falls back to quadrature.
pub struct CustomLaw<A, D> {
    pub diffusivity: A,
    pub derivative: D,
    pub lower_bound: f64,
    pub derivative_bound: f64,
}

impl<A, D> DiffusionLaw for CustomLaw<A, D>
where
    A: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    fn diffusivity(&self, r: f64) -> f64 {
        (self.diffusivity)(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (self.derivative)(r)
    }
    fn lower_bound(&self) -> f64 {
        self.lower_bound
    }
    fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }
}

fn newton_inverse<L: DiffusionLaw + ?Sized>(law: &L, w: f64) -> f64 {
    if w == 0.0 || !w.is_finite() {
        return if w == 0.0 { 0.0 } else { w };
    }
    // Φ(0) = 0 and Φ' ≥ a₀ put the root between 0 and w / a₀.
    let bound = w / law.lower_bound();
    let (mut lo, mut hi) = if w > 0.0 { (0.0, bound) } else { (bound, 0.0) };
    let mut r = w / law.diffusivity(0.0);
    if !(r > lo && r < hi) {
        r = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = law.primitive(r) - w;
        if f == 0.0 {
            return r;
        }
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let mut next = r - f / law.diffusivity(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 4.0 * f64::EPSILON * (1.0 + r.abs()) || hi - lo <= f64::EPSILON * (1.0 + r.abs()) {
            return next;
        }
        r = next;
    }
    r
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_vanishes_at_zero() {
        for law in [BuiltinLaw::Constant(3.0), BuiltinLaw::TwoPlusSine, BuiltinLaw::RationalBump] {
            assert_eq!(kirchhoff(&law, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_plus_sine_closed_form_at_one() {
        let expected = 2.0 + 1.0 - 1.0f64.cos();
        let got = kirchhoff(&BuiltinLaw::TwoPlusSine, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 2.4597).abs() < 1e-4);
    }

    #[test]
    fn identity_law_inverse() {
        assert_eq!(kirchhoff_inverse(&BuiltinLaw::Constant(1.0), 0.7).unwrap(), 0.7);
    }

    #[test]
    fn nan_is_rejected() {
        assert!(kirchhoff(&BuiltinLaw::TwoPlusSine, f64::NAN).is_err());
        assert!(kirchhoff_inverse(&BuiltinLaw::TwoPlusSine, f64::NAN).is_err());
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let custom = CustomLaw {
            diffusivity: |r: f64| 2.0 + r.sin(),
            derivative: |r: f64| r.cos(),
            lower_bound: 1.0,
            derivative_bound: 1.0,
        };
        let bump = CustomLaw {
            diffusivity: |r: f64| 1.0 + 1.0 / (1.0 + r * r),
            derivative: |r: f64| -2.0 * r / ((1.0 + r * r) * (1.0 + r * r)),
            lower_bound: 1.0,
            derivative_bound: 2.0,
        };
        for k in -20..=20 {
            let r = 0.5 * k as f64;
            let exact = BuiltinLaw::TwoPlusSine.primitive(r);
            assert!((custom.primitive(r) - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
            let exact = BuiltinLaw::RationalBump.primitive(r);
            assert!((bump.primitive(r) - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
            let back = custom.primitive_inverse(custom.primitive(r));
            assert!((back - r).abs() <= 1e-10 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn derivative_bounds_hold_on_samples() {
        for law in [BuiltinLaw::TwoPlusSine, BuiltinLaw::RationalBump, BuiltinLaw::Constant(0.5)] {
            for k in -1000..=1000 {
                let r = 0.01 * k as f64;
                assert!(law.diffusivity(r) >= law.lower_bound() - 1e-15);
                assert!(law.derivative(r).abs() <= law.derivative_bound() + 1e-15);
            }
        }
    }
}
