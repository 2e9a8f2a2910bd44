mod common;

use common::{standard_mask, sup_diff, thomas, unit_grid};
use heatctl_core::steady::{build_path, path_modulus, solve_steady, steady_residual};
use heatctl_core::{BuiltinLaw, ControlMask, DiffusionLaw, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Damped Picard on the discrete steady equation `-Δ_h(c(ȳ) ȳ) = f`, with the
/// chord coefficient `c(r) = Φ(r)/r`; never inverts `Φ`.
fn picard_steady<L: DiffusionLaw>(law: &L, grid: &Grid, source: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let chord = |r: f64| if r.abs() < 1e-14 { law.diffusivity(0.0) } else { law.primitive(r) / r };
    let mut y = vec![0.0; n];
    let damping = 0.7;
    for _ in 0..2000 {
        let c: Vec<f64> = y.iter().map(|&r| chord(r)).collect();
        let lower: Vec<f64> = (0..n).map(|i| if i > 0 { -inv * c[i - 1] } else { 0.0 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 < n { -inv * c[i + 1] } else { 0.0 }).collect();
        let diag: Vec<f64> = c.iter().map(|c| 2.0 * inv * c).collect();
        let next = thomas(&lower, &diag, &upper, source);
        let updated: Vec<f64> = y.iter().zip(&next).map(|(a, b)| (1.0 - damping) * a + damping * b).collect();
        let change = sup_diff(&updated, &y);
        y = updated;
        if change < 1e-14 {
            break;
        }
    }
    y
}

#[test]
fn kirchhoff_solve_matches_picard_oracle() {
    let g = unit_grid(100);
    let mask = standard_mask(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for law in [BuiltinLaw::TwoPlusSine, BuiltinLaw::RationalBump] {
        for _ in 0..5 {
            let level = rng.random_range(0.5..4.0);
            let wiggle = rng.random_range(0.0..0.4);
            let phase = rng.random_range(0.0..6.0);
            let v = g.sample(|x| level * (1.0 + wiggle * (5.0 * x + phase).sin()));
            let steady = solve_steady(&law, &g, &mask, &v).unwrap();
            let oracle = picard_steady(&law, &g, &mask.apply(&v));
            assert!(sup_diff(&steady.state, &oracle) <= 1e-8, "{}", sup_diff(&steady.state, &oracle));
            assert!(steady.residual <= 1e-10);
        }
    }
}

#[test]
fn residual_examples() {
    let g = unit_grid(20);
    let full = ControlMask::full(&g);
    assert_eq!(steady_residual(&BuiltinLaw::TwoPlusSine, &g, &full, &g.zeros(), &g.zeros()), 0.0);
    let quad = g.sample(|x| x * (1.0 - x));
    let r = steady_residual(&BuiltinLaw::Constant(1.0), &g, &full, &quad, &g.zeros());
    assert!((r - 2.0).abs() < 1e-9);
}

#[test]
fn linear_case_path_is_affine() {
    let g = unit_grid(39);
    let full = ControlMask::full(&g);
    let law = BuiltinLaw::Constant(1.0);
    let path = build_path(&law, &g, &full, &g.zeros(), &vec![2.0; g.n()], 2).unwrap();
    let half = g.sample(|x| x * (1.0 - x) / 2.0);
    assert!(sup_diff(&path.samples[1].steady.state, &half) <= 1e-12);
    let path4 = build_path(&law, &g, &full, &g.zeros(), &vec![2.0; g.n()], 4).unwrap();
    let incs: Vec<f64> = path_modulus(&g, &full, &path4).rows.iter().filter_map(|r| r.increment).collect();
    assert_eq!(incs.len(), 4);
    for inc in &incs {
        assert!((inc - incs[0]).abs() <= 1e-10 * incs[0]);
    }
}

#[test]
fn constant_path_has_zero_increments_and_unit_margin() {
    let g = unit_grid(50);
    let mask = standard_mask(&g);
    let one = vec![1.0; g.n()];
    let path = build_path(&BuiltinLaw::TwoPlusSine, &g, &mask, &one, &one, 5).unwrap();
    let modulus = path_modulus(&g, &mask, &path);
    assert_eq!(modulus.max_increment, 0.0);
    assert_eq!(modulus.eta, 1.0);
    assert_eq!(modulus.eta_on_omega, 1.0);
}

#[test]
fn path_increments_halve_when_segments_double() {
    let g = unit_grid(100);
    let mask = standard_mask(&g);
    let law = BuiltinLaw::TwoPlusSine;
    let (a, b) = (vec![1.0; g.n()], vec![3.0; g.n()]);
    let inc = |m| path_modulus(&g, &mask, &build_path(&law, &g, &mask, &a, &b, m).unwrap()).max_increment;
    let (i8, i16, i32) = (inc(8), inc(16), inc(32));
    assert!(i16 <= i8 && i32 <= i16);
    assert!((i8 / i16 - 2.0).abs() < 0.1, "ratio {}", i8 / i16);
    assert!((i16 / i32 - 2.0).abs() < 0.1);
    let path = build_path(&law, &g, &mask, &a, &b, 8).unwrap();
    assert!(sup_diff(&path.first().state, &solve_steady(&law, &g, &mask, &a).unwrap().state) <= 1e-12);
    assert!(sup_diff(&path.last().state, &solve_steady(&law, &g, &mask, &b).unwrap().state) <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steady_map_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = unit_grid(60);
        let mask = standard_mask(&g);
        let lo: Vec<f64> = (0..g.n()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + rng.random_range(0.0..2.0)).collect();
        for law in [BuiltinLaw::TwoPlusSine, BuiltinLaw::RationalBump] {
            let y_lo = solve_steady(&law, &g, &mask, &lo).unwrap();
            let y_hi = solve_steady(&law, &g, &mask, &hi).unwrap();
            prop_assert!(y_hi.state.iter().zip(&y_lo.state).all(|(h, l)| h >= l));
            prop_assert!(y_lo.residual <= 1e-10 && y_hi.residual <= 1e-10);
        }
    }

    #[test]
    fn refining_a_path_never_increases_the_increment(m in 1usize..12, top in 1.5f64..5.0) {
        let g = unit_grid(40);
        let mask = standard_mask(&g);
        let law = BuiltinLaw::RationalBump;
        let (a, b) = (vec![1.0; g.n()], vec![top; g.n()]);
        let coarse = path_modulus(&g, &mask, &build_path(&law, &g, &mask, &a, &b, m).unwrap()).max_increment;
        let fine = path_modulus(&g, &mask, &build_path(&law, &g, &mask, &a, &b, 2 * m).unwrap()).max_increment;
        prop_assert!(fine <= coarse * (1.0 + 1e-12));
    }
}
