mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use common::{sup_diff, unit_grid};
use heatctl_core::{solve_forward, BuiltinLaw, ControlMask, ControlSchedule, Grid, TimeLadder};
use proptest::prelude::*;

fn free_run(law: &BuiltinLaw, grid: &Grid, y0: &[f64], horizon: f64, dt: f64) -> Vec<f64> {
    let ladder = TimeLadder::covering(0.0, horizon, dt).unwrap();
    let control = ControlSchedule::zeros(ladder, grid.n());
    let mask = ControlMask::full(grid);
    solve_forward(law, grid, &mask, y0, &control).unwrap().last().to_vec()
}

/// Values of a run on `(m - 1)` interior points at the points of a grid `ratio` times coarser.
fn restrict(fine: &[f64], ratio: usize, coarse_n: usize) -> Vec<f64> {
    (0..coarse_n).map(|i| fine[(i + 1) * ratio - 1]).collect()
}

#[test]
fn unit_diffusivity_decays_like_first_eigenmode() {
    let g = unit_grid(49);
    let y0 = g.sample(|x| (PI * x).sin());
    let y = free_run(&BuiltinLaw::Constant(1.0), &g, &y0, 0.1, 1e-4);
    let exact = g.sample(|x| (-PI * PI * 0.1).exp() * (PI * x).sin());
    let h = g.spacing();
    assert!(sup_diff(&y, &exact) <= 5.0 * h * h, "error {}", sup_diff(&y, &exact));
}

#[test]
fn zero_is_a_fixed_point_for_every_law() {
    let g = unit_grid(30);
    for law in [BuiltinLaw::Constant(0.7), BuiltinLaw::TwoPlusSine, BuiltinLaw::RationalBump] {
        let y = free_run(&law, &g, &g.zeros(), 0.3, 0.01);
        assert!(y.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn nonlinear_run_matches_four_times_finer_run() {
    let law = BuiltinLaw::TwoPlusSine;
    let coarse = unit_grid(19);
    let fine = unit_grid(79);
    let y_c = free_run(&law, &coarse, &coarse.sample(|x| x * (1.0 - x)), 0.5, 0.01);
    let y_f = free_run(&law, &fine, &fine.sample(|x| x * (1.0 - x)), 0.5, 0.0025);
    assert!(sup_diff(&y_c, &restrict(&y_f, 4, 19)) <= 1e-3);
}

#[test]
fn halving_both_steps_cuts_the_error_by_three() {
    let law = BuiltinLaw::TwoPlusSine;
    let run = |cells: usize, dt: f64| {
        let g = unit_grid(cells - 1);
        free_run(&law, &g, &g.sample(|x| x * (1.0 - x)), 0.5, dt)
    };
    let reference = run(160, 1e-4 / 16.0);
    let coarse = sup_diff(&run(10, 1e-4), &restrict(&reference, 16, 9));
    let halved = sup_diff(&run(20, 5e-5), &restrict(&reference, 8, 19));
    assert!(coarse / halved >= 3.0, "factor {}", coarse / halved);
}

#[test]
fn time_ladder_of_control_sets_the_output() {
    let g = unit_grid(10);
    let ladder = TimeLadder::new(0.25, 0.05, 7).unwrap();
    let control = ControlSchedule::constant(ladder, &vec![1.0; g.n()]);
    let traj = solve_forward(&BuiltinLaw::TwoPlusSine, &g, &ControlMask::full(&g), &g.zeros(), &control).unwrap();
    assert_eq!(traj.states().len(), 8);
    assert_abs_diff_eq!(traj.ladder().end(), 0.6, epsilon = 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// With a constant law, each step is a single linear solve; an independent
    /// Thomas solve of `(I - Δt c Δ_h) y⁺ = y` must agree.
    #[test]
    fn constant_law_matches_linear_steps(c in 0.2f64..3.0, amp in -2.0f64..2.0, dt in 1e-3f64..5e-2) {
        let g = unit_grid(17);
        let y0 = g.sample(|x| amp * x * (1.0 - x) * (3.0 * x).cos());
        let steps = 5;
        let got = free_run(&BuiltinLaw::Constant(c), &g, &y0, steps as f64 * dt, dt);
        let r = c * dt / (g.spacing() * g.spacing());
        let n = g.n();
        let mut y = y0.clone();
        for _ in 0..steps {
            y = common::thomas(&vec![-r; n], &vec![1.0 + 2.0 * r; n], &vec![-r; n], &y);
        }
        prop_assert!(sup_diff(&got, &y) <= 1e-11 * (1.0 + amp.abs()));
    }
}
