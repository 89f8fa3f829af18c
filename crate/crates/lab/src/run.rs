//! Dispatch of experiment configs to the estimators and report assembly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use superdiff_core::cumulant::{
    extinction_probability, picard_solve, solve_cumulant, sup_difference, write_csv, write_dump, PicardOptions,
    SolveOptions,
};
use superdiff_core::fk::{
    classify_criticality, estimate_gauge, estimate_lambda2, estimate_lambda_inf, estimate_semigroup, green_potential,
    kato_profile, trace_rows, CriticalityBudget, DivergenceVerdict, FkConfig, SupTracePoint,
};
use superdiff_core::model::{InitialMeasure, ModelSpec};
use superdiff_core::particle::{
    extinction_stats, laplace_functional, martingale_series, run_replicas, Observable, TrajectoryRecord,
};
use superdiff_core::stats::{proportion, MCEstimate};

use crate::config::{Experiment, ExperimentConfig, Overrides};
use crate::defaults::Defaults;
use crate::error::Result;
use crate::report::{CheckOutcome, CheckSpec, Quantity, Report, RngProvenance, Table, Verdict};
use crate::reproduce::reproduce_bundle;

/// What an experiment produced, before checks are applied.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub quantities: Vec<Quantity>,
    pub tables: Vec<Table>,
    /// Extra files written verbatim under the output directory.
    pub files: Vec<(PathBuf, Vec<u8>)>,
    /// Checks built in by the experiment itself (reproduce bundles).
    pub checks: Vec<CheckSpec>,
}

impl Outcome {
    pub fn push(&mut self, q: Quantity) {
        self.quantities.push(q);
    }

    pub fn extend(&mut self, other: Outcome) {
        self.quantities.extend(other.quantities);
        self.tables.extend(other.tables);
        self.files.extend(other.files);
        self.checks.extend(other.checks);
    }
}

/// Process exit code for a finished run.
pub fn exit_code(result: &Result<Report>) -> i32 {
    match result {
        Ok(r) if r.passed => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}

/// Loads, overrides, runs and writes `report.json` plus tables.
pub fn run_config_file(path: &Path, overrides: &Overrides) -> Result<Report> {
    let mut config = ExperimentConfig::load(path)?;
    config.apply(overrides)?;
    run_and_write(&config)
}

pub fn run_and_write(config: &ExperimentConfig) -> Result<Report> {
    let (report, outcome) = run_experiment(config)?;
    let dir = config.output_dir();
    std::fs::create_dir_all(&dir)?;
    for (name, bytes) in &outcome.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
    }
    report.write(&dir, &outcome.tables)?;
    Ok(report)
}

/// Runs a config and evaluates its checks; nothing is written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Report, Outcome)> {
    let defaults = Defaults::load();
    let start = Instant::now();
    let mut outcome = match &config.experiment {
        Experiment::Reproduce { example } => reproduce_bundle(example, config.seed, &defaults)?,
        _ => dispatch(config, &config.resolve_model()?, &defaults)?,
    };
    let mut specs = std::mem::take(&mut outcome.checks);
    specs.extend(config.checks.iter().cloned());
    let checks: Vec<CheckOutcome> = specs
        .iter()
        .enumerate()
        .map(|(i, c)| c.evaluate(&outcome.quantities, &defaults, i))
        .collect::<Result<_>>()?;
    outcome.tables.push(Table::summary(&outcome.quantities));
    outcome.tables.push(Table::checks(&checks));
    let report = Report {
        tool: format!("superdiff {}", env!("CARGO_PKG_VERSION")),
        defaults,
        experiment: serde_json::to_value(config)?,
        kind: config.experiment.kind().to_string(),
        passed: checks.iter().all(|c| c.verdict == Verdict::Pass),
        quantities: outcome.quantities.clone(),
        checks,
        tables: outcome.tables.iter().map(|t| format!("tables/{}.csv", t.name)).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        rng: RngProvenance {
            generator: "ChaCha8".into(),
            seed: config.seed,
            streams: "one stream per replica index".into(),
            threads: rayon::current_num_threads(),
        },
    };
    Ok((report, outcome))
}

fn fk_config(dt: Option<f64>, seed: u64) -> FkConfig {
    FkConfig {
        dt: dt.unwrap_or(FkConfig::default().dt),
        ..FkConfig::with_seed(seed)
    }
}

fn origin(d: usize) -> Vec<f64> {
    vec![0.0; d]
}

fn unit_mass_at_origin(model: &ModelSpec) -> InitialMeasure {
    InitialMeasure::dirac(origin(model.dim()), 1.0).expect("unit Dirac mass is valid")
}

fn solve_options(dt_pde: Option<f64>, stride: Option<usize>) -> SolveOptions {
    SolveOptions {
        dt_pde: dt_pde.unwrap_or(SolveOptions::default().dt_pde),
        stride,
        ..Default::default()
    }
}

fn verdict_name(v: &DivergenceVerdict) -> String {
    serde_json::to_value(v.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Last horizon of a divergence trace, flagged with the verdict.
pub fn divergence_quantity(name: &str, v: &DivergenceVerdict) -> Quantity {
    let (_, last) = v.trace.last().expect("traces have at least three horizons");
    Quantity::estimate(name, last).flagged(&verdict_name(v))
}

fn sup_trace_table(name: &str, rows: &[(f64, &SupTracePoint)]) -> Table {
    let mut t = Table::new(
        name,
        &["radius", "t", "log_sup", "argmax", "mean", "std_error", "samples", "survivors"],
    );
    for (radius, p) in rows {
        t.push(vec![
            radius.to_string(),
            p.t.to_string(),
            p.log_sup.to_string(),
            p.argmax.to_string(),
            p.estimate.mean.to_string(),
            p.estimate.std_error.to_string(),
            p.estimate.samples.to_string(),
            p.survivors.to_string(),
        ]);
    }
    t
}

fn trajectory_table(records: &[TrajectoryRecord]) -> Table {
    let mut t = Table::new(
        "trajectories",
        &["replica", "t", "total_mass", "particle_count", "obs_name", "obs_value"],
    );
    for r in records {
        for (i, time) in r.times.iter().enumerate() {
            let head = [
                r.replica.to_string(),
                time.to_string(),
                r.total_mass[i].to_string(),
                r.particle_count[i].to_string(),
            ];
            if r.observables.is_empty() {
                t.push(head.iter().cloned().chain([String::new(), String::new()]).collect());
            }
            for o in &r.observables {
                t.push(head.iter().cloned().chain([o.name.clone(), o.values[i].to_string()]).collect());
            }
        }
    }
    t
}

/// Time after which a series stays at zero: the sample following the last
/// nonzero one, or `None` if it is still nonzero at the end.
pub fn settles_to_zero(times: &[f64], values: &[f64]) -> Option<f64> {
    match values.iter().rposition(|v| *v != 0.0) {
        None => Some(times[0]),
        Some(i) if i + 1 < values.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

/// Quantities summarising a batch of trajectories.
pub fn trajectory_quantities(
    records: &[TrajectoryRecord],
    observables: &[Observable],
    initial_mass: f64,
    defaults: &Defaults,
) -> Result<Vec<Quantity>> {
    let mut qs = Vec::new();
    let finals: Vec<f64> = records.iter().map(|r| r.final_mass()).collect();
    let truncated = records.iter().filter(|r| r.truncated).count();
    qs.push(
        Quantity::estimate("final_mass", &MCEstimate::from_samples(&finals))
            .flagged(if truncated > 0 { "truncated" } else { "" }),
    );
    let extinct = records.iter().filter(|r| !r.truncated && r.final_count() == 0).count();
    let (p, se) = proportion(extinct, records.len());
    qs.push(Quantity::frequency("extinction_freq", p, se, records.len()).with_ci(defaults.ci_z()));
    if records.len() >= 100 {
        let stats = extinction_stats(records, defaults.eta_fraction * initial_mass, true)?;
        qs.push(
            Quantity::frequency(
                "weak_extinction_freq",
                stats.weak_extinction_freq,
                stats.weak_extinction_se,
                stats.trajectories,
            )
            .with_ci(defaults.ci_z()),
        );
        qs.push(
            Quantity::frequency("survival_freq", stats.survival_freq(), stats.extinction_se, stats.trajectories)
                .with_ci(defaults.ci_z()),
        );
        if let Some((rate, se)) = stats.mean_survivor_rate() {
            qs.push(Quantity {
                std_error: se,
                samples: stats.survivor_growth_rates.len(),
                ..Quantity::scalar("survivor_growth_rate", rate)
            });
        }
    }
    for o in observables {
        let name = o.name();
        let series: Vec<&[f64]> = records.iter().filter_map(|r| r.series(name)).collect();
        let last: Vec<f64> = series.iter().map(|s| *s.last().expect("non-empty series")).collect();
        qs.push(Quantity::estimate(format!("final_{name}"), &MCEstimate::from_samples(&last)));
        if matches!(o, Observable::Ball { .. }) {
            let settled = records
                .iter()
                .filter(|r| !r.truncated)
                .filter(|r| r.series(name).is_some_and(|s| settles_to_zero(&r.times, s).is_some()))
                .count();
            let (p, se) = proportion(settled, records.len());
            qs.push(
                Quantity::frequency(format!("{name}_settled_zero_freq"), p, se, records.len())
                    .with_ci(defaults.ci_z()),
            );
        }
    }
    Ok(qs)
}

pub(crate) fn dispatch(config: &ExperimentConfig, model: &ModelSpec, defaults: &Defaults) -> Result<Outcome> {
    let replicas = config.replicas;
    let seed = config.seed;
    let mut out = Outcome::default();
    let here = |x: &Option<Vec<f64>>| x.clone().unwrap_or_else(|| origin(model.dim()));
    let measure = |mu: &Option<InitialMeasure>| mu.clone().unwrap_or_else(|| unit_mass_at_origin(model));
    match &config.experiment {
        Experiment::Semigroup { f, x, t, dt } => {
            let est = estimate_semigroup(model, f, &here(x), *t, replicas, &fk_config(*dt, seed))?;
            out.tables.push(Table::estimator("semigroup", &trace_rows("semigroup", &[(*t, est.clone())])));
            out.push(Quantity::estimate("semigroup", &est));
        }
        Experiment::Lambda2 {
            radii,
            t_grid,
            dt,
            ball_grid_points,
        } => {
            let mut cfg = fk_config(*dt, seed);
            if let Some(p) = ball_grid_points {
                cfg.ball_grid_points = *p;
            }
            let est = estimate_lambda2(model, radii, t_grid, replicas, &cfg)?;
            let mut fits = Table::new(
                "lambda2_fits",
                &["radius", "rate", "half_width", "r_squared", "survivors_at_max_t"],
            );
            let mut trace = Vec::new();
            for r in &est.per_radius {
                let (rate, hw, r2) = r
                    .fit
                    .as_ref()
                    .map_or((f64::NAN, f64::NAN, f64::NAN), |g| (g.rate, g.half_width, g.r_squared));
                fits.push(vec![
                    r.radius.to_string(),
                    rate.to_string(),
                    hw.to_string(),
                    r2.to_string(),
                    r.survivors_at_max_t.to_string(),
                ]);
                trace.extend(r.trace.iter().map(|p| (r.radius, p)));
                let name = format!("lambda2_r{}", r.radius);
                out.push(match &r.fit {
                    Some(g) => Quantity::growth(name, g),
                    None => Quantity::scalar(name, f64::NAN).flagged("inconclusive"),
                });
            }
            out.tables.push(fits);
            out.tables.push(sup_trace_table("lambda2_trace", &trace));
            let flag = if est.inconclusive { "inconclusive" } else { "" };
            out.push(match &est.fit {
                Some(g) => Quantity::growth("lambda2", g).flagged(flag),
                None => Quantity::scalar("lambda2", f64::NAN).flagged("inconclusive"),
            });
        }
        Experiment::LambdaInf { x_grid, t_grid, dt } => {
            let est = estimate_lambda_inf(model, x_grid, t_grid, replicas, &fk_config(*dt, seed))?;
            let rows: Vec<(f64, &SupTracePoint)> = est.trace.iter().map(|p| (f64::INFINITY, p)).collect();
            out.tables.push(sup_trace_table("lambda_inf_trace", &rows));
            out.push(Quantity::growth("lambda_inf", &est.fit).flagged(if est.non_exponential {
                "non_exponential"
            } else {
                ""
            }));
        }
        Experiment::Gauge { x, horizons, dt } => {
            let v = estimate_gauge(model, &here(x), horizons, replicas, &fk_config(*dt, seed))?;
            out.tables.push(Table::estimator("gauge", &trace_rows("gauge", &v.trace)));
            out.push(divergence_quantity("gauge", &v));
        }
        Experiment::Green { g, x, horizons, dt } => {
            let v = green_potential(model, g, &here(x), horizons, replicas, &fk_config(*dt, seed))?;
            out.tables.push(Table::estimator("green", &trace_rows("green", &v.trace)));
            out.push(divergence_quantity("green", &v));
        }
        Experiment::Kato { small_ts, x_grid, dt } => {
            let profile = kato_profile(model, small_ts, x_grid, replicas, &fk_config(*dt, seed))?;
            out.tables.push(Table::estimator("kato", &trace_rows("kato", &profile)));
            let smallest = profile
                .iter()
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("small_ts is non-empty");
            out.push(Quantity::estimate("kato", &smallest.1));
        }
        Experiment::Criticality {
            epsilon,
            x_grid,
            t_grid,
            gauge_horizons,
            dt,
        } => {
            let budget = CriticalityBudget {
                x_grid: x_grid.clone(),
                t_grid: t_grid.clone(),
                gauge_horizons: gauge_horizons.clone(),
                replicas,
            };
            let r = classify_criticality(model, *epsilon, &budget, &fk_config(*dt, seed))?;
            let class = serde_json::to_value(r.class)?.as_str().unwrap_or_default().to_string();
            out.push(Quantity::scalar("criticality", 0.0).flagged(&class));
            if let Some(g) = &r.lambda_inf {
                out.push(Quantity::growth("lambda_inf", g));
            }
            if let Some(g) = &r.lambda_inf_scaled {
                out.push(Quantity::growth("lambda_inf_scaled", g));
            }
            if let Some(v) = &r.gauge {
                out.tables.push(Table::estimator("gauge", &trace_rows("gauge", &v.trace)));
                out.push(divergence_quantity("gauge", v));
            }
        }
        Experiment::Cumulant {
            f,
            horizon,
            grid,
            dt_pde,
            stride,
            picard,
        } => {
            let grid = grid.build(model, *horizon, 0.0)?;
            let s = solve_cumulant(model, f, *horizon, &grid, &solve_options(*dt_pde, *stride))?;
            let mut csv = Vec::new();
            write_csv(&s, &mut csv)?;
            out.files.push((PathBuf::from("tables/cumulant.csv"), csv));
            let mut dump = Vec::new();
            write_dump(&s, &mut dump)?;
            out.files.push((PathBuf::from("cumulant.cum1"), dump));
            out.push(Quantity::scalar("u_at_origin", s.value_at(&origin(model.dim()))));
            let sup = s.final_values().iter().cloned().fold(0.0, f64::max);
            out.push(Quantity::scalar("u_sup", sup));
            out.push(Quantity::scalar("clipped_updates", s.clipped as f64));
            if *picard {
                let p = picard_solve(model, f, *horizon, &grid, &PicardOptions::default())?;
                let gap = sup_difference(&s, &p.solution, grid.half_width);
                out.push(Quantity::scalar("picard_sup_difference", gap));
                out.push(Quantity::scalar("picard_relative_difference", gap / sup.max(f64::MIN_POSITIVE)));
                out.push(Quantity::scalar("picard_residual", p.residual));
            }
        }
        Experiment::ExtinctionProb {
            mu,
            t,
            thetas,
            grid,
            dt_pde,
        } => {
            let mu = measure(mu);
            let grid = grid.build(model, *t, mu.support_radius())?;
            let e = extinction_probability(model, &mu, *t, thetas, &grid, &solve_options(*dt_pde, None))?;
            let mut table = Table::new("extinction_masses", &["theta", "mass"]);
            for (theta, m) in &e.masses {
                table.push(vec![theta.to_string(), m.to_string()]);
            }
            out.tables.push(table);
            out.push(
                Quantity::scalar("extinction_probability", e.probability).flagged(if e.monotone {
                    "monotone"
                } else {
                    "not_monotone"
                }),
            );
            out.push(Quantity::scalar("extinction_extrapolated", e.extrapolated));
        }
        Experiment::Trajectory {
            mu,
            horizon,
            sim,
            observables,
        } => {
            let mu = measure(mu);
            let cfg = sim.build(*horizon, seed)?;
            let records = run_replicas(model, &mu, &cfg, observables, replicas)?;
            out.tables.push(trajectory_table(&records));
            out.quantities
                .extend(trajectory_quantities(&records, observables, mu.total_mass(), defaults)?);
        }
        Experiment::LaplaceCross {
            mu,
            f,
            t,
            sim,
            grid,
            dt_pde,
        } => {
            let mu = measure(mu);
            let cfg = sim.build(*t, seed)?;
            let particle = laplace_functional(model, &mu, f, *t, replicas, &cfg)?;
            let grid = grid.build(model, *t, mu.support_radius())?;
            let u = solve_cumulant(model, f, *t, &grid, &solve_options(*dt_pde, None))?;
            let pde = (-mu.integrate(|x| u.value_at(x))).exp();
            out.push(Quantity::estimate("laplace_particle", &particle));
            out.push(Quantity::scalar("laplace_pde", pde));
            out.push(Quantity::scalar("laplace_gap", (particle.mean - pde).abs()));
        }
        Experiment::Martingale {
            mu,
            h,
            lambda,
            t_grid,
            sim,
        } => {
            let mu = measure(mu);
            let cfg = sim.build(*t_grid.last().expect("validated"), seed)?;
            let series = martingale_series(model, &mu, h, *lambda, t_grid, replicas, &cfg)?;
            let mut table = Table::new("martingale", &["t", "mean", "std_error", "variance", "variance_se"]);
            for p in &series {
                table.push(vec![
                    p.t.to_string(),
                    p.estimate.mean.to_string(),
                    p.estimate.std_error.to_string(),
                    p.variance.to_string(),
                    p.variance_se.to_string(),
                ]);
                out.push(Quantity::estimate(format!("M_t{}", p.t), &p.estimate));
                out.push(Quantity {
                    std_error: p.variance_se,
                    samples: p.estimate.samples,
                    ..Quantity::scalar(format!("var_M_t{}", p.t), p.variance)
                });
            }
            out.tables.push(table);
            out.push(Quantity::scalar("initial_mass_h", mu.integrate(|x| h.eval(x))));
        }
        Experiment::Reproduce { .. } => unreachable!("reproduce runs are dispatched separately"),
    }
    Ok(out)
}
