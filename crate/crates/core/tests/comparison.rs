mod common;

use common::{standard_mask, unit_grid};
use heatctl_core::{check_comparison, solve_forward, BuiltinLaw, ControlSchedule, TimeLadder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_schedule(rng: &mut ChaCha8Rng, ladder: TimeLadder, n: usize, lo: f64, hi: f64) -> ControlSchedule {
    ControlSchedule::new(ladder, (0..ladder.levels()).map(|_| (0..n).map(|_| rng.random_range(lo..hi)).collect()).collect()).unwrap()
}

#[test]
fn nonnegative_control_dominates_free_run() {
    let g = unit_grid(50);
    let mask = standard_mask(&g);
    let ladder = TimeLadder::covering(0.0, 0.5, 0.01).unwrap();
    let y0 = g.sample(|x| (3.0 * x).sin() * x * (1.0 - x));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_schedule(&mut rng, ladder, g.n(), 0.0, 2.0);
    let y = solve_forward(&BuiltinLaw::TwoPlusSine, &g, &mask, &y0, &v).unwrap();
    let z = solve_forward(&BuiltinLaw::TwoPlusSine, &g, &mask, &y0, &ControlSchedule::zeros(ladder, g.n())).unwrap();
    assert!(check_comparison(&y, &z).unwrap().holds);
}

#[test]
fn strictly_positive_source_breaks_reversed_order() {
    let g = unit_grid(50);
    let mask = standard_mask(&g);
    let ladder = TimeLadder::covering(0.0, 0.2, 0.01).unwrap();
    let y0 = g.zeros();
    let y = solve_forward(&BuiltinLaw::RationalBump, &g, &mask, &y0, &ControlSchedule::constant(ladder, &vec![0.5; g.n()])).unwrap();
    let z = solve_forward(&BuiltinLaw::RationalBump, &g, &mask, &y0, &ControlSchedule::zeros(ladder, g.n())).unwrap();
    let report = check_comparison(&z, &y).unwrap();
    assert!(!report.holds);
    assert!(report.worst_violation > 1e-3);
    assert!(report.location.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ordered_controls_give_ordered_states(seed in any::<u64>(), amp in -2.0f64..2.0, rational in any::<bool>()) {
        let law = if rational { BuiltinLaw::RationalBump } else { BuiltinLaw::TwoPlusSine };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = unit_grid(40);
        let mask = standard_mask(&g);
        let ladder = TimeLadder::covering(0.0, 0.3, 0.01).unwrap();
        let y0 = g.sample(|x| amp * (std::f64::consts::PI * x).sin());
        let lo = random_schedule(&mut rng, ladder, g.n(), -5.0, 5.0);
        let gap = random_schedule(&mut rng, ladder, g.n(), 0.0, 3.0);
        let hi = ControlSchedule::new(
            ladder,
            lo.values().iter().zip(gap.values()).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
        ).unwrap();
        let y_hi = solve_forward(&law, &g, &mask, &y0, &hi).unwrap();
        let y_lo = solve_forward(&law, &g, &mask, &y0, &lo).unwrap();
        let report = check_comparison(&y_hi, &y_lo).unwrap();
        prop_assert!(report.holds, "violation {}", report.worst_violation);
    }
}
