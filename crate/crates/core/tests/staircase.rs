mod common;

use common::{standard_mask, sup_diff, unit_grid};
use heatctl_core::staircase::{plan_at, plan_staircase, run_staircase, run_staircase_adaptive, verify_nonnegativity, StairCaseOptions};
use heatctl_core::steady::LinearPath;
use heatctl_core::{BuiltinLaw, Error};

fn endpoints(n: usize) -> LinearPath {
    LinearPath { start: vec![1.0; n], end: vec![3.0; n] }
}

#[test]
fn two_plus_sine_between_steady_states() {
    let g = unit_grid(100);
    let mask = standard_mask(&g);
    let law = BuiltinLaw::TwoPlusSine;
    let options = StairCaseOptions::default();
    let (plan, result) = run_staircase_adaptive(&law, &g, &mask, &endpoints(g.n()), &options).unwrap();
    assert!(result.terminal_error <= 1e-6);
    assert!(result.min_control >= -1e-9);
    assert_eq!(result.steps.len(), plan.steps);
    for record in &result.steps {
        assert!(record.deviation <= plan.eta);
        assert!(record.min_control >= plan.eta - record.deviation - 1e-12);
    }
    assert!((result.horizon - plan.steps as f64 * options.window).abs() < 1e-9);
    assert_eq!(result.control.ladder().steps(), plan.steps * 100);
    let report = verify_nonnegativity(&result.control, &mask);
    assert!(report.holds(1e-9));
}

#[test]
fn unit_diffusivity_plan_is_small() {
    let g = unit_grid(100);
    let mask = standard_mask(&g);
    let law = BuiltinLaw::Constant(1.0);
    let options = StairCaseOptions::default();
    let plan = plan_staircase(&law, &g, &mask, &endpoints(g.n()), &options).unwrap();
    assert!(plan.steps <= 32);
    let result = run_staircase(&plan, &law, &g, &mask, &options).unwrap();
    assert!(result.terminal_error <= 1e-6 && result.min_control >= 0.0);
}

#[test]
fn doubling_the_steps_still_succeeds() {
    let g = unit_grid(60);
    let mask = standard_mask(&g);
    let law = BuiltinLaw::TwoPlusSine;
    let options = StairCaseOptions::default();
    let rule = endpoints(g.n());
    let plan = plan_staircase(&law, &g, &mask, &rule, &options).unwrap();
    let first = run_staircase(&plan, &law, &g, &mask, &options).unwrap();
    let finer = heatctl_core::staircase::StairCasePlan {
        gain: plan.gain,
        threshold: plan.threshold,
        ..plan_at(&law, &g, &mask, &rule, 2 * plan.steps).unwrap()
    };
    let second = run_staircase(&finer, &law, &g, &mask, &options).unwrap();
    assert!(second.terminal_error <= 1e-6 && second.min_control >= -1e-9);
    assert!(sup_diff(first.trajectory.last(), second.trajectory.last()) <= 1e-6);
}

#[test]
fn vanishing_endpoint_control_is_rejected() {
    let g = unit_grid(40);
    let mask = standard_mask(&g);
    let mut start = vec![1.0; g.n()];
    start[5] = 0.0;
    let rule = LinearPath { start, end: vec![3.0; g.n()] };
    assert!(matches!(
        plan_staircase(&BuiltinLaw::TwoPlusSine, &g, &mask, &rule, &StairCaseOptions::default()),
        Err(Error::HypothesisViolation(_))
    ));
}
