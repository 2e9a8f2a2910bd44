//! The invariant suite run by `heatctl validate`.

use std::f64::consts::PI;

use heatctl_core::grid::{sup_distance, sup_norm};
use heatctl_core::linear::{control_pairing, LinearSteps};
use heatctl_core::local::{build_linearization, carleman_weights, gram_apply, hum_null_control, secant_coefficient, HumOptions};
use heatctl_core::steady::{build_path, path_modulus, solve_steady};
use heatctl_core::tracking::fit_decay;
use heatctl_core::{
    check_comparison, kirchhoff, kirchhoff_inverse, solve_forward, BuiltinLaw, ControlMask, ControlSchedule, DiffusionLaw, Grid, TimeLadder,
    Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::report::{Check, Report};
use crate::scenario::Setup;

type Outcome = heatctl_core::Result<Check>;

pub(crate) fn validate(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let suite: Vec<(&str, Outcome)> = vec![
        ("kirchhoff round trip", Ok(round_trip(&setup.law))),
        ("mask profile", Ok(mask_profile(setup))),
        ("steady residual and Picard agreement", steady_oracle(setup, &mut rng)),
        ("steady monotonicity", steady_monotone(setup, &mut rng)),
        ("path refinement", path_refinement(cfg, setup)),
        ("transpose duality", duality(setup, &mut rng)),
        ("comparison principle", comparison(setup, &mut rng)),
        ("zero solution", zero_solution(setup)),
        ("linear decay anchor", linear_decay()),
        ("self-convergence", self_convergence(&setup.law)),
        ("Gram symmetry", gram_symmetry(setup, &mut rng)),
        ("HUM epsilon monotonicity", hum_monotone(setup)),
        ("Carleman weight signs", carleman_signs(cfg, setup)),
    ];
    for (name, outcome) in suite {
        report.check(outcome.unwrap_or_else(|e| Check::error(name, e.to_string())));
    }
    report.kv("seed", cfg.seed);
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn random_schedule(rng: &mut ChaCha8Rng, ladder: TimeLadder, n: usize, lo: f64, hi: f64) -> ControlSchedule {
    let values = (0..ladder.levels()).map(|_| random_vec(rng, n, lo, hi)).collect();
    ControlSchedule::new(ladder, values).expect("schedule shape")
}

fn round_trip<L: DiffusionLaw>(law: &L) -> Check {
    let worst = (0..1000)
        .map(|j| -10.0 + 20.0 * j as f64 / 999.0)
        .map(|r| {
            let back = kirchhoff(law, r).and_then(|w| kirchhoff_inverse(law, w)).unwrap_or(f64::NAN);
            (back - r).abs() / (1.0 + r.abs())
        })
        .fold(0.0, f64::max);
    Check::at_most("kirchhoff round trip", worst, 1e-10)
}

fn mask_profile(setup: &Setup) -> Check {
    let ok = setup.grid.coordinates().iter().zip(setup.mask.weights()).all(|(&x, &r)| {
        let inside = setup.mask.inner().contains(x);
        let outside = !setup.mask.omega().contains(x);
        (0.0..=1.0).contains(&r) && (!inside || r == 1.0) && (!outside || r == 0.0)
    });
    Check::holds("mask profile", ok)
}

/// Damped Picard on `-Δ_h(c(y) y) = ρ v̄` with `c(r) = Φ(r)/r`.
pub fn picard_steady<L: DiffusionLaw + ?Sized>(law: &L, grid: &Grid, source: &[f64]) -> heatctl_core::Result<Vec<f64>> {
    let n = grid.n();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let mut y = vec![0.0f64; n];
    for _ in 0..5000 {
        let c: Vec<f64> = y
            .iter()
            .map(|&r| if r.abs() < 1e-14 { law.diffusivity(0.0) } else { law.primitive(r) / r })
            .collect();
        let mut m = heatctl_core::tridiag::Tridiagonal::zeros(n);
        for i in 0..n {
            m.diag[i] = 2.0 * inv * c[i];
            if i > 0 {
                m.lower[i] = -inv * c[i - 1];
            }
            if i + 1 < n {
                m.upper[i] = -inv * c[i + 1];
            }
        }
        let next = m.solve(source)?;
        let updated: Vec<f64> = y.iter().zip(&next).map(|(a, b)| 0.3 * a + 0.7 * b).collect();
        let change = sup_distance(&updated, &y);
        y = updated;
        if change < 1e-14 {
            break;
        }
    }
    Ok(y)
}

fn steady_oracle(setup: &Setup, rng: &mut ChaCha8Rng) -> Outcome {
    let (mut worst_gap, mut worst_residual) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let level = rng.random_range(0.5..4.0);
        let wiggle = rng.random_range(0.0..0.5);
        let phase = rng.random_range(0.0..2.0 * PI);
        let v = setup.grid.sample(|x| level * (1.0 + wiggle * (7.0 * x + phase).sin()));
        let steady = solve_steady(&setup.law, &setup.grid, &setup.mask, &v)?;
        let oracle = picard_steady(&setup.law, &setup.grid, &setup.mask.apply(&v))?;
        worst_gap = worst_gap.max(sup_distance(&steady.state, &oracle));
        worst_residual = worst_residual.max(steady.residual);
    }
    let pass = worst_gap <= 1e-8 && worst_residual <= 1e-10;
    Ok(Check {
        passed: pass,
        ..Check::at_most("steady residual and Picard agreement", worst_gap, 1e-8)
    }
    .with_detail(format!("max residual {worst_residual:e}")))
}

fn steady_monotone(setup: &Setup, rng: &mut ChaCha8Rng) -> Outcome {
    let n = setup.grid.n();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let lo = random_vec(rng, n, -3.0, 3.0);
        let hi: Vec<f64> = lo.iter().map(|v| v + rng.random_range(0.0..2.0)).collect();
        let a = solve_steady(&setup.law, &setup.grid, &setup.mask, &lo)?.state;
        let b = solve_steady(&setup.law, &setup.grid, &setup.mask, &hi)?.state;
        worst = worst.max(a.iter().zip(&b).map(|(x, y)| x - y).fold(0.0, f64::max));
    }
    Ok(Check::at_most("steady monotonicity", worst, 0.0))
}

fn path_refinement(cfg: &ExperimentConfig, setup: &Setup) -> Outcome {
    let (a, b) = (setup.constant(cfg.control_start), setup.constant(cfg.control_end));
    let inc = |m| -> heatctl_core::Result<f64> {
        Ok(path_modulus(&setup.grid, &setup.mask, &build_path(&setup.law, &setup.grid, &setup.mask, &a, &b, m)?).max_increment)
    };
    let (coarse, fine) = (inc(cfg.segments)?, inc(2 * cfg.segments)?);
    Ok(Check::holds("path refinement", fine <= coarse * (1.0 + 1e-12)).with_detail(format!("{coarse:e} -> {fine:e}")))
}

fn relative_duality_gap(grid: &Grid, mask: &ControlMask, steps: &LinearSteps, rng: &mut ChaCha8Rng) -> heatctl_core::Result<f64> {
    let n = grid.n();
    let z0 = random_vec(rng, n, -1.0, 1.0);
    let u = random_schedule(rng, *steps.ladder(), n, -3.0, 3.0);
    let pt = random_vec(rng, n, -1.0, 1.0);
    let z = steps.propagate(mask, &z0, &u)?;
    let p = steps.adjoint(&pt)?;
    let (a, b) = (grid.inner(z.last(), &pt), grid.inner(&z0, p.initial()));
    let rhs = control_pairing(grid, mask, &u, &p);
    Ok(((a - b) - rhs).abs() / (a.abs() + b.abs() + rhs.abs()))
}

fn duality(setup: &Setup, rng: &mut ChaCha8Rng) -> Outcome {
    let (grid, n) = (&setup.grid, setup.grid.n());
    let ladder = TimeLadder::new(0.0, 0.01, 20)?;
    let mut worst = 0.0f64;
    for instance in 0..100 {
        let steps = if instance % 2 == 0 {
            let alpha: Vec<Vec<f64>> = (0..ladder.levels()).map(|_| random_vec(rng, n, 1.0, 3.0)).collect();
            let drift: Vec<Vec<f64>> = (0..ladder.levels()).map(|_| random_vec(rng, n, -1.0, 1.0)).collect();
            LinearSteps::flux_form(grid, ladder, &alpha, &drift)?.0
        } else {
            let c: Vec<Vec<f64>> = (0..ladder.levels())
                .map(|_| {
                    (0..n)
                        .map(|_| secant_coefficient(&setup.law, rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)))
                        .collect()
                })
                .collect();
            LinearSteps::kirchhoff_form(grid, ladder, &c)?
        };
        worst = worst.max(relative_duality_gap(grid, &setup.mask, &steps, rng)?);
    }
    Ok(Check::at_most("transpose duality", worst, 1e-11))
}

fn comparison(setup: &Setup, rng: &mut ChaCha8Rng) -> Outcome {
    let n = setup.grid.n();
    let ladder = TimeLadder::covering(0.0, 0.2, 0.01)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let amp = rng.random_range(-2.0..2.0);
        let y0 = setup.grid.sample(|x| amp * (PI * x / setup.grid.length()).sin());
        let lo = random_schedule(rng, ladder, n, -5.0, 5.0);
        let gap = random_schedule(rng, ladder, n, 0.0, 3.0);
        let hi = ControlSchedule::new(
            ladder,
            lo.values().iter().zip(gap.values()).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect(),
        )?;
        let y_hi = solve_forward(&setup.law, &setup.grid, &setup.mask, &y0, &hi)?;
        let y_lo = solve_forward(&setup.law, &setup.grid, &setup.mask, &y0, &lo)?;
        worst = worst.max(check_comparison(&y_hi, &y_lo)?.worst_violation);
    }
    Ok(Check::at_most("comparison principle", worst, 1e-9))
}

fn zero_solution(setup: &Setup) -> Outcome {
    let ladder = TimeLadder::covering(0.0, 0.5, 0.01)?;
    let traj = solve_forward(&setup.law, &setup.grid, &setup.mask, &setup.grid.zeros(), &ControlSchedule::zeros(ladder, setup.grid.n()))?;
    let worst = traj.states().iter().map(|s| sup_norm(s)).fold(0.0, f64::max);
    Ok(Check::at_most("zero solution", worst, 0.0))
}

/// `a ≡ 1`, `y0 = sin(πx)`: `‖y(t)‖` decays at rate `π²`.
fn linear_decay() -> Outcome {
    let grid = Grid::new(1.0, 200)?;
    let mask = ControlMask::full(&grid);
    let ladder = TimeLadder::covering(0.0, 0.1, 1e-4)?;
    let traj = solve_forward(&BuiltinLaw::Constant(1.0), &grid, &mask, &grid.sample(|x| (PI * x).sin()), &ControlSchedule::zeros(ladder, grid.n()))?;
    let errors: Vec<(f64, f64)> = (0..ladder.levels()).map(|k| (ladder.time(k), grid.l2_norm(traj.state(k)))).collect();
    let rate = fit_decay(&errors).0;
    Ok(Check::at_most("linear decay anchor", (rate / (PI * PI) - 1.0).abs(), 0.05).with_detail(format!("rate {rate:.6}")))
}

fn self_convergence<L: DiffusionLaw>(law: &L) -> Outcome {
    let run = |cells: usize, dt: f64| -> heatctl_core::Result<Vec<f64>> {
        let g = Grid::new(1.0, cells - 1)?;
        let ladder = TimeLadder::covering(0.0, 0.5, dt)?;
        let t = solve_forward(law, &g, &ControlMask::full(&g), &g.sample(|x| x * (1.0 - x)), &ControlSchedule::zeros(ladder, g.n()))?;
        Ok(t.last().to_vec())
    };
    let reference = run(160, 1e-4 / 16.0)?;
    let error = |cells: usize, dt: f64| -> heatctl_core::Result<f64> {
        let y = run(cells, dt)?;
        let ratio = 160 / cells;
        Ok(y.iter().enumerate().map(|(i, v)| (v - reference[(i + 1) * ratio - 1]).abs()).fold(0.0, f64::max))
    };
    let (coarse, halved) = (error(10, 1e-4)?, error(20, 5e-5)?);
    Ok(Check::at_least("self-convergence", coarse / halved, 3.0).with_detail(format!("errors {coarse:e} -> {halved:e}")))
}

fn gram_symmetry(setup: &Setup, rng: &mut ChaCha8Rng) -> Outcome {
    let ladder = TimeLadder::covering(0.0, 0.5, 0.01)?;
    let target = Trajectory::constant(ladder, &setup.steady(1.0)?.state);
    let zero = Trajectory::constant(ladder, &setup.grid.zeros());
    let lin = build_linearization(&setup.law, &setup.grid, &target, &zero)?;
    let (steps, _) = lin.steps(&setup.grid, Default::default())?;
    let n = setup.grid.n();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let (a, b) = (random_vec(rng, n, -1.0, 1.0), random_vec(rng, n, -1.0, 1.0));
        let ga = gram_apply(&setup.grid, &steps, &setup.mask, &a)?;
        let gb = gram_apply(&setup.grid, &steps, &setup.mask, &b)?;
        let (x, y) = (setup.grid.inner(&ga, &b), setup.grid.inner(&a, &gb));
        worst = worst.max((x - y).abs() / x.abs().max(y.abs()));
    }
    Ok(Check::at_most("Gram symmetry", worst, 1e-11))
}

fn hum_monotone(setup: &Setup) -> Outcome {
    let ladder = TimeLadder::covering(0.0, 0.5, 0.01)?;
    let zero = Trajectory::constant(ladder, &setup.grid.zeros());
    let lin = build_linearization(&BuiltinLaw::Constant(1.0), &setup.grid, &zero, &zero)?;
    let z0 = setup.grid.sample(|x| (PI * x / setup.grid.length()).sin());
    let mut norms = Vec::new();
    for epsilon in [1e-2, 1e-4, 1e-6] {
        let hum = hum_null_control(&setup.grid, &lin, &setup.mask, &z0, &HumOptions { epsilon, ..HumOptions::default() })?;
        norms.push(setup.grid.l2_norm(hum.state.last()));
    }
    Ok(Check::holds("HUM epsilon monotonicity", norms.windows(2).all(|w| w[1] <= w[0]))
        .with_detail(format!("{:e} {:e} {:e}", norms[0], norms[1], norms[2])))
}

fn carleman_signs(cfg: &ExperimentConfig, setup: &Setup) -> Outcome {
    let w = carleman_weights(&setup.grid, cfg.omega0(), cfg.carleman_lambda, cfg.horizon, cfg.dt)?;
    let interior = 1..w.ladder.steps();
    let ok = w.phi[interior.clone()].iter().flatten().all(|&p| p > 0.0)
        && w.alpha[interior].iter().flatten().all(|&a| a < 0.0)
        && w.alpha0.iter().all(|&a| a > 0.0)
        && w.gradient_nondegenerate;
    Ok(Check::holds("Carleman weight signs", ok))
}
