mod common;

use common::{bump, standard_mask, unit_grid};
use heatctl_core::mintime::{
    build_terminal_datum, certify_mintime_lower, duality_gap, search_constrained_time, CertifyOptions, MinTimeMode, SearchOptions, Verdict,
};
use heatctl_core::steady::solve_steady;
use heatctl_core::{solve_forward, BuiltinLaw, ControlMask, ControlSchedule, Error, Grid, Interval, TimeLadder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Scenario {
    grid: Grid,
    mask: ControlMask,
    ybar0: Vec<f64>,
}

fn scenario() -> Scenario {
    let grid = unit_grid(100);
    let mask = standard_mask(&grid);
    let ybar0 = solve_steady(&BuiltinLaw::TwoPlusSine, &grid, &mask, &vec![1.0; grid.n()]).unwrap().state;
    Scenario { grid, mask, ybar0 }
}

fn horizons() -> Vec<f64> {
    (0..10).map(|j| 2f64.powi(j - 8)).collect()
}

fn check_bracket(s: &Scenario, y0: &[f64], mode: MinTimeMode) {
    let law = BuiltinLaw::TwoPlusSine;
    let n = s.grid.n();
    let cert = certify_mintime_lower(&law, &s.grid, &s.mask, y0, &s.ybar0, |_| vec![1.0; n], &CertifyOptions::default()).unwrap();
    assert_eq!(cert.mode, mode);
    assert!(cert.t0 > 0.0);
    match mode {
        MinTimeMode::Comparison => assert!(cert.initial_functional > 0.0),
        MinTimeMode::Duality => {
            let theta = cert.datum.as_ref().unwrap().theta;
            assert!(cert.initial_functional <= -theta / 3.0);
        }
    }
    let table = search_constrained_time(&law, &s.grid, &s.mask, y0, &s.ybar0, |_| vec![1.0; n], &horizons(), &SearchOptions::default()).unwrap();
    let smallest = table.smallest_achieved.expect("some horizon should be reached");
    assert!(cert.t0 <= smallest);
    assert!(table.consistent_with(&cert));
    assert!(table.comparisons_hold());
    for row in table.rows.iter().filter(|r| r.horizon < cert.t0) {
        assert_ne!(row.verdict, Verdict::AchievedNonneg);
    }
}

#[test]
fn excess_outside_control_region_is_certified() {
    let s = scenario();
    let y0: Vec<f64> = s.ybar0.iter().zip(s.grid.coordinates()).map(|(y, x)| y + 0.1 * bump(x, 0.1, 0.08)).collect();
    check_bracket(&s, &y0, MinTimeMode::Comparison);
}

#[test]
fn deficit_is_certified_by_duality() {
    let s = scenario();
    let y0: Vec<f64> = s.ybar0.iter().zip(s.grid.coordinates()).map(|(y, x)| y - 0.3 * x * (1.0 - x)).collect();
    check_bracket(&s, &y0, MinTimeMode::Duality);
    let datum = build_terminal_datum(&s.grid, &s.mask, &y0, &s.ybar0).unwrap();
    assert!(datum.bounds_hold());
    assert!(datum.total <= -datum.theta / 3.0);
}

#[test]
fn terminal_datum_plateau_on_omega() {
    let g = unit_grid(100);
    let mask = ControlMask::new(&g, Interval::new(0.3, 0.7), Interval::new(0.4, 0.6)).unwrap();
    let ybar0 = g.zeros();
    let y0 = g.sample(|x| -0.5 * x * (1.0 - x));
    let datum = build_terminal_datum(&g, &mask, &y0, &ybar0).unwrap();
    for i in (0..g.n()).filter(|&i| mask.in_omega(i)) {
        assert!((datum.phi_t[i] - datum.c_theta * datum.phi1[i]).abs() <= 1e-14);
        assert!(datum.phi_t[i] >= datum.theta_tilde * (1.0 - 1e-12));
    }
    assert!(datum.theta_tilde > 0.0);
}

#[test]
fn equal_data_is_a_precondition_error() {
    let s = scenario();
    let n = s.grid.n();
    assert!(matches!(
        certify_mintime_lower(&BuiltinLaw::TwoPlusSine, &s.grid, &s.mask, &s.ybar0, &s.ybar0, |_| vec![1.0; n], &CertifyOptions::default()),
        Err(Error::HypothesisViolation(_))
    ));
}

#[test]
fn on_target_start_is_reached_with_reference() {
    let s = scenario();
    let n = s.grid.n();
    let table = search_constrained_time(&BuiltinLaw::TwoPlusSine, &s.grid, &s.mask, &s.ybar0, &s.ybar0, |_| vec![1.0; n], &[8.0], &SearchOptions::default()).unwrap();
    assert_eq!(table.rows[0].verdict, Verdict::AchievedNonneg);
    assert!((table.rows[0].min_control - 1.0).abs() < 1e-9);
}

#[test]
fn duality_gap_is_round_off() {
    let s = scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ladder = TimeLadder::covering(0.0, 0.2, 0.01).unwrap();
    for law in [BuiltinLaw::Constant(1.0), BuiltinLaw::TwoPlusSine] {
        let n = s.grid.n();
        let free = solve_forward(&law, &s.grid, &s.mask, &s.ybar0, &ControlSchedule::zeros(ladder, n)).unwrap();
        let v = ControlSchedule::new(ladder, (0..ladder.levels()).map(|_| (0..n).map(|_| rng.random_range(0.0..2.0)).collect()).collect()).unwrap();
        let pt: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gap = duality_gap(&law, &s.grid, &s.mask, &free, &v, &pt).unwrap();
        assert!(gap.gap <= 1e-10 * (1.0 + gap.lhs.abs()));
        assert!(gap.linearization_residual <= 1e-8);
    }
}
