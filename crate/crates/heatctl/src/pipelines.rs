//! One function per subcommand, each turning a configuration into a
//! [`Report`]. Solver errors become failed checks rather than early exits so
//! that the failure table is always written.

use heatctl_core::local::{build_linearization, carleman_weights, empirical_observability, HumOptions, LinearForm, LocalControlOptions};
use heatctl_core::mintime::{certify_mintime_lower, search_constrained_time, CertifyOptions, MinTimeMode, SearchOptions};
use heatctl_core::staircase::{run_staircase_adaptive, verify_nonnegativity, StairCaseOptions, POSITIVITY_TOL};
use heatctl_core::steady::{build_path, path_modulus, LinearPath};
use heatctl_core::tracking::{track_trajectory, TrackingOptions};
use heatctl_core::{ControlMask, ControlSchedule, Grid, TimeLadder, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{Cell, Check, Report, Table};
use crate::scenario::{moving_reference, Setup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Path,
    Staircase,
    Track,
    Mintime,
    Observability,
    Validate,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Steady,
        Command::Path,
        Command::Staircase,
        Command::Track,
        Command::Mintime,
        Command::Observability,
        Command::Validate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Path => "path",
            Command::Staircase => "staircase",
            Command::Track => "track",
            Command::Mintime => "mintime",
            Command::Observability => "observability",
            Command::Validate => "validate",
        }
    }
}

pub const NORM_PROXY_NOTE: &str = "Hölder norms replaced by max(sup |f|, sup |D f|, sup |D² f|) on the grid";

/// Dispatches to the pipeline of `command`.
pub fn run_experiment(command: Command, cfg: &ExperimentConfig) -> Result<Report, ConfigError> {
    cfg.validate()?;
    let setup = Setup::from_config(cfg)?;
    let mut report = Report::new(command.as_str());
    report.kv("scenario", &cfg.scenario);
    report.kv("law", setup.law.name());
    report.kv("grid.length", cfg.length);
    report.kv("grid.n", cfg.n);
    report.kv("norm_proxy", NORM_PROXY_NOTE);
    match command {
        Command::Steady => steady(cfg, &setup, &mut report),
        Command::Path => path(cfg, &setup, &mut report),
        Command::Staircase => staircase(cfg, &setup, &mut report),
        Command::Track => track(cfg, &setup, &mut report),
        Command::Mintime => mintime(cfg, &setup, &mut report),
        Command::Observability => observability(cfg, &setup, &mut report),
        Command::Validate => crate::validate::validate(cfg, &setup, &mut report),
    }
    Ok(report)
}

pub(crate) fn grid_table(name: &str, columns: &[&str], setup: &Setup) -> Table {
    Table::new(name, columns)
        .meta("law", setup.law.name())
        .meta("grid.length", setup.grid.length())
        .meta("grid.n", setup.grid.n())
        .meta("grid.h", crate::report::format_float(setup.grid.spacing()))
        .meta("omega", format!("({}, {})", setup.mask.omega().start, setup.mask.omega().end))
        .meta("omega1", format!("({}, {})", setup.mask.inner().start, setup.mask.inner().end))
}

/// A field on every level as rows `t, x_1, ..., x_n`.
pub fn field_table(name: &str, setup: &Setup, ladder: &TimeLadder, values: &[Vec<f64>]) -> Table {
    let labels: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=setup.grid.n()).map(|i| format!("x_{i}")))
        .collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut t = grid_table(name, &refs, setup);
    for (k, level) in values.iter().enumerate() {
        let mut row: Vec<Cell> = Vec::with_capacity(level.len() + 1);
        row.push(ladder.time(k).into());
        row.extend(level.iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    t
}

fn trajectory_table(name: &str, setup: &Setup, traj: &Trajectory) -> Table {
    field_table(name, setup, traj.ladder(), traj.states())
}

fn control_table(name: &str, setup: &Setup, control: &ControlSchedule) -> Table {
    field_table(name, setup, control.ladder(), control.values())
}

/// Per-level minimum and maximum of a schedule, overall and on `ω`.
fn control_profile(setup: &Setup, control: &ControlSchedule) -> Table {
    let mut t = grid_table("control_profile", &["t", "min", "max", "min_omega"], setup);
    for (k, v) in control.values().iter().enumerate() {
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_omega = (0..v.len())
            .filter(|&i| setup.mask.in_omega(i))
            .map(|i| v[i])
            .fold(f64::INFINITY, f64::min);
        t.push(vec![control.ladder().time(k).into(), min.into(), max.into(), min_omega.into()]);
    }
    t
}

pub(crate) fn local_options(cfg: &ExperimentConfig) -> LocalControlOptions {
    LocalControlOptions {
        hum: HumOptions {
            epsilon: cfg.epsilon,
            ..HumOptions::default()
        },
        fp_tol: cfg.fp_tol,
        ..LocalControlOptions::default()
    }
}

pub(crate) fn tracking_options(cfg: &ExperimentConfig) -> TrackingOptions {
    TrackingOptions {
        tau: cfg.tau,
        dt: cfg.dt,
        local: local_options(cfg),
        terminal_tol: cfg.terminal_tol,
        horizon_cap: cfg.horizon_cap,
    }
}

fn steady(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    let steady = match setup.steady(cfg.control_start) {
        Ok(s) => s,
        Err(e) => return report.check(Check::error("steady", e.to_string())),
    };
    let mut t = grid_table("steady", &["x", "state", "control", "rho"], setup).meta("control_level", cfg.control_start);
    for (i, x) in setup.grid.coordinates().into_iter().enumerate() {
        t.push(vec![x.into(), steady.state[i].into(), steady.control[i].into(), setup.mask.weights()[i].into()]);
    }
    report.tables.push(t);
    report.num("residual", steady.residual);
    report.num("state_max", steady.state.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    report.num("state_min", steady.state.iter().cloned().fold(f64::INFINITY, f64::min));
    report.check(Check::at_most("steady residual", steady.residual, 1e-10));
}

fn path(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    let (a, b) = (setup.constant(cfg.control_start), setup.constant(cfg.control_end));
    let build = |m| build_path(&setup.law, &setup.grid, &setup.mask, &a, &b, m);
    let (path, finer) = match (build(cfg.segments), build(2 * cfg.segments)) {
        (Ok(p), Ok(f)) => (p, f),
        (Err(e), _) | (_, Err(e)) => return report.check(Check::error("path", e.to_string())),
    };
    let modulus = path_modulus(&setup.grid, &setup.mask, &path);
    let mut t = grid_table("path", &["j", "s", "increment", "min_control", "min_control_omega", "residual"], setup);
    for (row, sample) in modulus.rows.iter().zip(&path.samples) {
        t.push(vec![
            row.index.into(),
            row.s.into(),
            row.increment.unwrap_or(f64::NAN).into(),
            row.min_control.into(),
            row.min_control_on_omega.into(),
            sample.steady.residual.into(),
        ]);
    }
    report.tables.push(t);
    let mut states = grid_table(
        "path_states",
        &std::iter::once("x".to_string())
            .chain(path.samples.iter().map(|s| format!("s={}", s.s)))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
        setup,
    );
    for (i, x) in setup.grid.coordinates().into_iter().enumerate() {
        let mut row = vec![Cell::Num(x)];
        row.extend(path.samples.iter().map(|s| Cell::Num(s.steady.state[i])));
        states.push(row);
    }
    report.tables.push(states);
    report.kv("segments", cfg.segments);
    report.num("eta", modulus.eta);
    report.num("eta_on_omega", modulus.eta_on_omega);
    report.num("max_increment", modulus.max_increment);
    report.num("radius", modulus.radius);
    let worst_residual = path.samples.iter().map(|s| s.steady.residual).fold(0.0, f64::max);
    report.check(Check::at_most("path residuals", worst_residual, 1e-10));
    let finer_increment = path_modulus(&setup.grid, &setup.mask, &finer).max_increment;
    report.check(
        Check::holds("refinement does not increase the increment", finer_increment <= modulus.max_increment * (1.0 + 1e-12))
            .with_detail(format!("{:e} at {} segments vs {:e}", finer_increment, 2 * cfg.segments, modulus.max_increment)),
    );
    let ends = match (setup.steady(cfg.control_start), setup.steady(cfg.control_end)) {
        (Ok(s0), Ok(s1)) => heatctl_core::grid::sup_distance(&s0.state, &path.first().state)
            .max(heatctl_core::grid::sup_distance(&s1.state, &path.last().state)),
        _ => f64::NAN,
    };
    report.check(Check::at_most("path endpoints match direct solves", ends, 1e-12));
}

fn staircase(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    let rule = LinearPath {
        start: setup.constant(cfg.control_start),
        end: setup.constant(cfg.control_end),
    };
    let options = StairCaseOptions {
        window: cfg.horizon,
        dt: cfg.dt,
        local: local_options(cfg),
        terminal_tol: cfg.terminal_tol,
        ..StairCaseOptions::default()
    };
    let (plan, result) = match run_staircase_adaptive(&setup.law, &setup.grid, &setup.mask, &rule, &options) {
        Ok(r) => r,
        Err(e) => return report.check(Check::error("staircase", e.to_string())),
    };
    let mut steps = grid_table(
        "steps",
        &["step", "increment", "deviation", "margin", "min_control", "terminal_error", "fixed_point_iterations"],
        setup,
    );
    for s in &result.steps {
        steps.push(vec![
            s.step.into(),
            s.increment.into(),
            s.deviation.into(),
            plan.eta.into(),
            s.min_control.into(),
            s.terminal_error.into(),
            s.fixed_point_iterations.into(),
        ]);
    }
    report.tables.push(steps);
    report.tables.push(control_profile(setup, &result.control));
    report.tables.push(trajectory_table("trajectory", setup, &result.trajectory));
    report.tables.push(control_table("control", setup, &result.control));
    report.kv("steps", plan.steps);
    report.num("eta", plan.eta);
    report.num("eta_on_omega", plan.eta_on_omega);
    report.num("gain", plan.gain);
    report.num("threshold", plan.threshold);
    report.num("horizon", result.horizon);
    report.num("terminal_error", result.terminal_error);
    report.num("min_control", result.min_control);
    let nonneg = verify_nonnegativity(&result.control, &setup.mask);
    report.kv("argmin", format!("level {} point {}", nonneg.argmin.0, nonneg.argmin.1));
    report.check(Check::at_most("terminal L2 error", result.terminal_error, cfg.terminal_tol));
    report.check(Check::at_least("min control", result.min_control, -POSITIVITY_TOL));
    let worst = result.steps.iter().map(|s| s.deviation).fold(0.0, f64::max);
    report.check(Check::at_most("max per-step deviation", worst, plan.eta));
    report.check(Check::holds(
        "step count matches horizon",
        (result.horizon - plan.steps as f64 * options.window).abs() <= 1e-9 * result.horizon.max(1.0),
    ));
}

fn track(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    let ybar0 = match setup.steady(cfg.control_start) {
        Ok(s) => s.state,
        Err(e) => return report.check(Check::error("track", e.to_string())),
    };
    let y0 = setup.sine_perturbation(&ybar0, cfg.perturbation);
    let reference = moving_reference(setup.grid.n(), cfg.control_start, cfg.reference_amplitude, cfg.reference_frequency);
    let r = match track_trajectory(&setup.law, &setup.grid, &setup.mask, &y0, &ybar0, reference, &tracking_options(cfg)) {
        Ok(r) => r,
        Err(e) => return report.check(Check::error("track", e.to_string())),
    };
    let mut decay = grid_table("decay", &["t", "error"], setup).meta("fitted_rate", crate::report::format_float(r.stabilization.decay_rate));
    for &(t, e) in &r.stabilization.errors {
        decay.push(vec![t.into(), e.into()]);
    }
    report.tables.push(decay);
    report.tables.push(control_profile(setup, &r.global.control));
    report.tables.push(trajectory_table("trajectory", setup, &r.global.trajectory));
    report.tables.push(control_table("control", setup, &r.global.control));
    report.num("horizon", r.global.horizon);
    report.num("switch_time", r.switch_time);
    report.num("decay_rate", r.stabilization.decay_rate);
    report.kv("decay_fit_points", r.stabilization.fit_points);
    report.num("rate_bound", r.condition.rate_bound);
    report.num("condition.m_a", r.condition.m_a);
    report.num("condition.gradient_sup", r.condition.gradient_sup);
    report.num("condition.lhs", r.condition.lhs);
    report.num("condition.rhs", r.condition.rhs);
    report.kv("condition.pass", r.condition.pass);
    report.num("terminal_error", r.global.terminal_error);
    report.num("terminal_deviation", r.terminal_deviation);
    report.num("min_control", r.global.min_control);
    report.kv("warnings", r.warnings.join("; "));
    report.check(Check::at_most("terminal L2 error", r.global.terminal_error, cfg.terminal_tol));
    report.check(Check::at_least("min control", r.global.min_control, -POSITIVITY_TOL));
    if r.condition.pass {
        report.check(Check::at_least("decay rate", r.stabilization.decay_rate, 0.9 * r.condition.rate_bound));
    }
}

fn mintime(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    let ybar0 = match setup.steady(cfg.control_start) {
        Ok(s) => s.state,
        Err(e) => return report.check(Check::error("mintime", e.to_string())),
    };
    let mut cases = Vec::new();
    if cfg.excess_amplitude != 0.0 {
        cases.push(("excess", setup.excess_datum(&ybar0, cfg.excess_amplitude)));
    }
    if cfg.deficit_amplitude != 0.0 {
        cases.push(("deficit", setup.deficit_datum(&ybar0, cfg.deficit_amplitude)));
    }
    let certify = CertifyOptions {
        t_max: cfg.t_max,
        levels: cfg.levels,
        ..CertifyOptions::default()
    };
    let search = SearchOptions {
        tracking: tracking_options(cfg),
        ..SearchOptions::default()
    };
    let n = setup.grid.n();
    let level = cfg.control_start;
    for (case, y0) in cases {
        let cert = match certify_mintime_lower(&setup.law, &setup.grid, &setup.mask, &y0, &ybar0, |_| vec![level; n], &certify) {
            Ok(c) => c,
            Err(e) => {
                report.check(Check::error(&format!("{case}: certificate"), e.to_string()));
                continue;
            }
        };
        let mode = match cert.mode {
            MinTimeMode::Comparison => "comparison",
            MinTimeMode::Duality => "duality",
        };
        let mut t = grid_table(
            &format!("certificate_{case}"),
            &["horizon", "steps", "functional", "worst_functional", "adjoint_min_omega", "passed"],
            setup,
        )
        .meta("mode", mode)
        .meta("t0", crate::report::format_float(cert.t0));
        for e in &cert.entries {
            t.push(vec![
                e.horizon.into(),
                e.steps.into(),
                e.functional.into(),
                e.worst_functional.into(),
                e.adjoint_min_omega.unwrap_or(f64::NAN).into(),
                e.passed.into(),
            ]);
        }
        report.tables.push(t);
        report.kv(&format!("{case}.mode"), mode);
        report.num(&format!("{case}.t0"), cert.t0);
        report.num(&format!("{case}.initial_functional"), cert.initial_functional);
        if let Some(d) = &cert.datum {
            report.num(&format!("{case}.delta"), d.delta);
            report.num(&format!("{case}.theta"), d.theta);
            report.num(&format!("{case}.c_theta"), d.c_theta);
            report.num(&format!("{case}.theta_tilde"), d.theta_tilde);
            report.kv(
                &format!("{case}.split"),
                d.split.iter().map(|v| crate::report::format_float(*v)).collect::<Vec<_>>().join(" "),
            );
            report.check(Check::holds(&format!("{case}: terminal datum bounds"), d.bounds_hold()));
        }
        report.check(Check::positive(&format!("{case}: certified T0"), cert.t0));
        let table = match search_constrained_time(&setup.law, &setup.grid, &setup.mask, &y0, &ybar0, |_| vec![level; n], &cfg.search_horizons, &search) {
            Ok(t) => t,
            Err(e) => {
                report.check(Check::error(&format!("{case}: search"), e.to_string()));
                continue;
            }
        };
        let mut s = grid_table(
            &format!("search_{case}"),
            &["horizon", "verdict", "terminal_error", "min_control", "comparison_violation", "note"],
            setup,
        );
        for r in &table.rows {
            s.push(vec![
                r.horizon.into(),
                r.verdict.as_str().into(),
                r.terminal_error.into(),
                r.min_control.into(),
                r.comparison.map_or(f64::NAN, |c| c.worst_violation).into(),
                r.note.as_str().into(),
            ]);
        }
        report.tables.push(s);
        report.num(&format!("{case}.smallest_achieved"), table.smallest_achieved.unwrap_or(f64::NAN));
        report.check(
            Check::holds(&format!("{case}: bracket T0 <= smallest achieved"), table.consistent_with(&cert))
                .with_detail(format!("T0 = {:e}, smallest = {:?}", cert.t0, table.smallest_achieved)),
        );
        report.check(Check::holds(&format!("{case}: comparison on nonnegative runs"), table.comparisons_hold()));
    }
}

fn observability(cfg: &ExperimentConfig, setup: &Setup, report: &mut Report) {
    match observability_probe(cfg, &setup.grid, &setup.mask, setup, report) {
        Ok(()) => {}
        Err(e) => report.check(Check::error("observability", e.to_string())),
    }
}

fn observability_probe(cfg: &ExperimentConfig, grid: &Grid, mask: &ControlMask, setup: &Setup, report: &mut Report) -> heatctl_core::Result<()> {
    let ladder = TimeLadder::covering(0.0, cfg.horizon, cfg.dt)?;
    let zero = Trajectory::constant(ladder, &grid.zeros());
    let lin = build_linearization(&setup.law, grid, &zero, &zero)?;
    let weights = carleman_weights(grid, cfg.omega0(), cfg.carleman_lambda, cfg.horizon, cfg.dt)?;
    let s_values = [0.5 * cfg.carleman_s, cfg.carleman_s, 2.0 * cfg.carleman_s];
    let reports = s_values
        .iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            empirical_observability(grid, &lin, LinearForm::Kirchhoff, &weights, mask, s, cfg.samples, &mut rng)
        })
        .collect::<heatctl_core::Result<Vec<_>>>()?;
    let labels: Vec<String> = s_values.iter().map(|s| format!("log10_ratio_s={s}")).collect();
    let mut columns = vec!["index", "log10_numerator", "log10_denominator"];
    columns.extend(labels.iter().map(String::as_str));
    let mut t = grid_table("observability", &columns, setup)
        .meta("lambda", cfg.carleman_lambda)
        .meta("s", cfg.carleman_s)
        .meta("seed", cfg.seed);
    let ln10 = std::f64::consts::LN_10;
    let mut monotone = true;
    for j in 0..cfg.samples {
        let main = &reports[1].samples[j];
        let mut row: Vec<Cell> = vec![j.into(), (main.log_numerator / ln10).into(), (main.log_denominator / ln10).into()];
        row.extend(reports.iter().map(|r| Cell::Num(r.samples[j].log10_ratio())));
        monotone &= reports.windows(2).all(|w| w[0].samples[j].log_ratio < w[1].samples[j].log_ratio);
        t.push(row);
    }
    report.tables.push(t);
    let main = &reports[1];
    report.num("max_log10_ratio", main.max_log10_ratio());
    report.kv("underflows", main.underflows);
    report.num("b_constant", main.b_constant);
    report.kv("gradient_nondegenerate", weights.gradient_nondegenerate);
    report.check(Check::holds("max ratio finite", main.is_finite() && main.underflows == 0).with_detail(format!(
        "max log10 ratio {:.3}",
        main.max_log10_ratio()
    )));
    report.check(Check::holds("ratio increases with s for every sample", monotone));
    report.check(Check::holds("alpha0 gradient nonzero outside omega0", weights.gradient_nondegenerate));
    Ok(())
}
