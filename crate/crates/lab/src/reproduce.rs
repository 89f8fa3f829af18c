//! Pinned check bundles, one per catalog entry.
//!
//! Each bundle runs ordinary experiments with fixed budgets, prefixes their
//! quantities with the part name and attaches the checks with the claim each
//! one exercises.

use std::collections::BTreeMap;

use superdiff_core::cumulant::{domain_monotone_check, Boundary, Geometry, SolveOptions, SpaceGrid};
use superdiff_core::model::{catalog_build, h_transform, InitialMeasure, ModelSpec, ScalarField, CATALOG};
use superdiff_core::particle::Observable;

use crate::config::{CatalogRef, Experiment, ExperimentConfig, GridParams, SimParams};
use crate::defaults::Defaults;
use crate::error::{LabError, Result};
use crate::report::{CheckRule, CheckSpec, Quantity, Table};
use crate::run::{dispatch, Outcome};

/// One-line description per catalog entry, for `list-examples`.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "drift_bm" => "Brownian motion with constant drift: growth bounds and the weak-extinction dichotomy",
        "ou_outward" => "outward Ornstein-Uhlenbeck motion: negative lambda_2 and local extinction",
        "bm_plain" => "plain Brownian motion with constant coefficients: Riccati and moment oracles",
        "planar_annihilation" => "planar annihilation on the unit disk: gauge decay like 1/log t",
        "compact_annihilation_1d" => "compactly supported annihilation on the line: monotone construction",
        "htransform_survival" => "exponential intensity with survival invariant under an h-transform",
        _ => return None,
    })
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn catalog(name: &str, pairs: &[(&str, f64)]) -> Option<CatalogRef> {
    Some(CatalogRef {
        name: name.into(),
        params: params(pairs),
    })
}

/// A bundle under construction.
struct Bundle<'a> {
    seed: u64,
    /// Parts run so far; each part draws from its own seed.
    parts: u64,
    defaults: &'a Defaults,
    outcome: Outcome,
}

impl Bundle<'_> {
    /// Runs one experiment and files its results under `prefix`.
    fn part(
        &mut self,
        prefix: &str,
        model: Option<ModelSpec>,
        catalog: Option<CatalogRef>,
        experiment: Experiment,
        replicas: usize,
    ) -> Result<()> {
        let mut config = ExperimentConfig {
            name: Some(prefix.into()),
            model,
            catalog,
            experiment,
            replicas,
            seed: self.seed.wrapping_add(self.parts),
            output_dir: None,
            checks: Vec::new(),
        };
        config.validate()?;
        let mut part = dispatch(&config, &config.resolve_model()?, self.defaults)?;
        for q in &mut part.quantities {
            q.name = format!("{prefix}.{}", q.name);
        }
        for t in &mut part.tables {
            t.name = format!("{prefix}_{}", t.name);
        }
        for (path, _) in &mut part.files {
            let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            *path = path.with_file_name(format!("{prefix}_{file}"));
        }
        self.parts += 1;
        self.outcome.extend(part);
        Ok(())
    }

    fn check(&mut self, spec: CheckSpec) {
        self.outcome.checks.push(spec);
    }

    fn push(&mut self, q: Quantity) {
        self.outcome.push(q);
    }

}

/// Runs the bundle for a catalog entry with pinned budgets.
pub fn reproduce_bundle(example: &str, seed: u64, defaults: &Defaults) -> Result<Outcome> {
    if !CATALOG.contains(&example) {
        return Err(LabError::UnknownExample(example.into()));
    }
    let mut b = Bundle {
        seed,
        parts: 0,
        defaults,
        outcome: Outcome::default(),
    };
    match example {
        "drift_bm" => drift_bm(&mut b)?,
        "ou_outward" => ou_outward(&mut b)?,
        "bm_plain" => bm_plain(&mut b)?,
        "planar_annihilation" => planar_annihilation(&mut b)?,
        "compact_annihilation_1d" => compact_annihilation(&mut b)?,
        "htransform_survival" => htransform_survival(&mut b)?,
        _ => unreachable!("catalog membership checked above"),
    }
    Ok(b.outcome)
}

fn sim(n: u32, dt: f64, samples: usize) -> SimParams {
    SimParams {
        n,
        dt,
        samples,
        max_particles: superdiff_core::particle::DEFAULT_MAX_PARTICLES,
        far_field_radius: None,
        accept_rounding: false,
    }
}

fn drift_bm(b: &mut Bundle) -> Result<()> {
    let growth = || catalog("drift_bm", &[("b0", 1.0), ("beta", 1.0), ("k", 1.0)]);
    b.part(
        "lambda2",
        None,
        growth(),
        Experiment::Lambda2 {
            radii: vec![2.5, 5.0, 10.0],
            t_grid: vec![4.0, 8.0, 12.0, 16.0, 20.0],
            dt: None,
            ball_grid_points: None,
        },
        2000,
    )?;
    let half_width = b
        .outcome
        .quantities
        .iter()
        .find(|q| q.name == "lambda2.lambda2")
        .and_then(|q| q.ci)
        .map_or(f64::NAN, |(lo, hi)| 0.5 * (hi - lo));
    b.push(Quantity::scalar("lambda2.half_width", half_width));
    b.check(CheckSpec::new(
        "lambda2.lambda2",
        0.5,
        CheckRule::CiContains,
        "lambda_2 = beta - b0^2/2 for constant drift b0 and constant beta",
    ));
    b.check(CheckSpec::new(
        "lambda2.half_width",
        0.15,
        CheckRule::AtMost,
        "the lambda_2 interval is informative at radius 10",
    ));
    b.part(
        "lambda_inf",
        None,
        growth(),
        Experiment::LambdaInf {
            x_grid: vec![vec![0.0], vec![2.0]],
            t_grid: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            dt: None,
        },
        500,
    )?;
    b.check(CheckSpec::new(
        "lambda_inf.lambda_inf",
        1.0,
        CheckRule::CiContains,
        "lambda_inf = beta for constant beta",
    ));
    let weak = sim(20, 0.05, 50);
    b.part(
        "k_const",
        None,
        catalog("drift_bm", &[("b0", 1.0), ("beta", 0.0), ("k", 1.0)]),
        Experiment::Trajectory {
            mu: None,
            horizon: 50.0,
            sim: weak.clone(),
            observables: Vec::new(),
        },
        400,
    )?;
    b.check(CheckSpec::new(
        "k_const.weak_extinction_freq",
        b.defaults.frequency_threshold,
        CheckRule::AtLeast,
        "with beta = 0 and constant k the mass tends to zero",
    ));
    let decaying = || catalog("drift_bm", &[("b0", 1.0), ("beta", 0.0), ("k_decay", 2.0)]);
    b.part(
        "k_decay",
        None,
        decaying(),
        Experiment::Trajectory {
            mu: None,
            horizon: 50.0,
            sim: weak,
            observables: Vec::new(),
        },
        400,
    )?;
    b.check(CheckSpec::new(
        "k_decay.survival_freq",
        0.0,
        CheckRule::CiExcludes,
        "with k = exp(-2|x|) the process survives with positive probability",
    ));
    b.part(
        "green",
        None,
        decaying(),
        Experiment::Green {
            g: ScalarField::TwoSidedExp { rate: 2.0 },
            x: None,
            horizons: vec![5.0, 10.0, 30.0],
            dt: Some(2e-3),
        },
        2000,
    )?;
    b.check(CheckSpec::new(
        "green.green",
        0.0,
        CheckRule::Flag { flag: "finite".into() },
        "G k(0) is finite when k decays exponentially against the drift",
    ));
    b.check(CheckSpec::new(
        "green.green",
        0.75,
        CheckRule::WithinSeAndRelative { z: None, rel: 0.02 },
        "G k(0) = 1/2 + 1/4 from the Green kernel exp(-2 b0 y^+) / b0",
    ));
    Ok(())
}

fn ou_outward(b: &mut Bundle) -> Result<()> {
    let model = || catalog("ou_outward", &[("gamma", 1.0), ("d", 2.0), ("beta", 1.0), ("k", 1.0)]);
    b.part(
        "lambda2",
        None,
        model(),
        Experiment::Lambda2 {
            radii: vec![1.5, 3.0],
            t_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            dt: None,
            ball_grid_points: Some(5),
        },
        20_000,
    )?;
    b.check(CheckSpec::new(
        "lambda2.lambda2",
        -1.0,
        CheckRule::CiContains,
        "lambda_2 = beta - gamma d for outward Ornstein-Uhlenbeck motion",
    ));
    b.part(
        "lambda_inf",
        None,
        model(),
        Experiment::LambdaInf {
            x_grid: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            t_grid: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            dt: None,
        },
        500,
    )?;
    b.check(CheckSpec::new(
        "lambda_inf.lambda_inf",
        1.0,
        CheckRule::CiContains,
        "lambda_inf = beta for constant beta",
    ));
    b.part(
        "local",
        None,
        model(),
        Experiment::Trajectory {
            mu: Some(InitialMeasure::dirac(vec![0.0, 0.0], 1.0)?),
            horizon: 20.0,
            sim: SimParams {
                far_field_radius: Some(6.0),
                ..sim(10, 0.01, 200)
            },
            observables: vec![Observable::Ball {
                name: "ball".into(),
                center: vec![0.0, 0.0],
                radius: 1.0,
            }],
        },
        200,
    )?;
    b.check(CheckSpec::new(
        "local.ball_settled_zero_freq",
        b.defaults.frequency_threshold,
        CheckRule::AtLeast,
        "local extinction holds when 0 <= beta <= gamma d",
    ));
    Ok(())
}

fn bm_plain(b: &mut Bundle) -> Result<()> {
    b.part(
        "semigroup",
        None,
        catalog("bm_plain", &[("beta", 0.0), ("k", 0.0)]),
        Experiment::Semigroup {
            f: ScalarField::one(),
            x: None,
            t: 1.0,
            dt: None,
        },
        100,
    )?;
    b.check(CheckSpec::new(
        "semigroup.semigroup",
        1.0,
        CheckRule::Absolute { tol: 0.0 },
        "with beta = 0 every Feynman-Kac weight equals one",
    ));
    let critical = || catalog("bm_plain", &[("beta", 0.0), ("k", 1.0)]);
    b.part(
        "pde",
        None,
        critical(),
        Experiment::ExtinctionProb {
            mu: None,
            t: 1.0,
            thetas: vec![10.0, 100.0, 1e3, 1e4],
            grid: GridParams {
                half_width: Some(4.0),
                spacing: 0.05,
                boundary: Boundary::NeumannZero,
            },
            dt_pde: None,
        },
        1,
    )?;
    let riccati = (-1.0f64).exp();
    b.check(CheckSpec::new(
        "pde.extinction_probability",
        riccati,
        CheckRule::Absolute { tol: 1e-2 },
        "P(extinct by t) = exp(-|mu| / (k t)) for beta = 0 and constant k",
    ));
    b.part(
        "particles",
        None,
        critical(),
        Experiment::Trajectory {
            mu: None,
            horizon: 1.0,
            sim: sim(200, 0.05, 10),
            observables: Vec::new(),
        },
        2000,
    )?;
    b.check(CheckSpec::new(
        "particles.extinction_freq",
        riccati,
        CheckRule::WithinSe { z: None },
        "P(extinct by t) = exp(-|mu| / (k t)) for beta = 0 and constant k",
    ));
    b.part(
        "moments",
        None,
        catalog("bm_plain", &[("beta", 0.5), ("k", 1.0)]),
        Experiment::Trajectory {
            mu: None,
            horizon: 1.0,
            sim: sim(100, 0.05, 10),
            observables: Vec::new(),
        },
        2000,
    )?;
    b.check(CheckSpec::new(
        "moments.final_mass",
        0.5f64.exp(),
        CheckRule::WithinSe { z: None },
        "E|X_t| = exp(beta t)|mu| for constant beta",
    ));
    Ok(())
}

fn planar_annihilation(b: &mut Bundle) -> Result<()> {
    let model = || catalog("planar_annihilation", &[("alpha", 1.0), ("radius", 1.0), ("k", 1.0)]);
    let horizons = [10.0, 100.0, 1000.0];
    b.part(
        "gauge",
        None,
        model(),
        Experiment::Gauge {
            x: None,
            horizons: horizons.to_vec(),
            dt: Some(0.02),
        },
        20_000,
    )?;
    let scaled: Vec<f64> = b
        .outcome
        .tables
        .iter()
        .find(|t| t.name == "gauge_gauge")
        .map(|t| {
            t.rows
                .iter()
                .map(|r| r[2].parse::<f64>().unwrap_or(f64::NAN) * r[1].parse::<f64>().unwrap_or(f64::NAN).ln())
                .collect()
        })
        .unwrap_or_default();
    for (t, v) in horizons.iter().zip(&scaled) {
        b.push(Quantity::scalar(format!("gauge.log_scaled_t{t}"), *v));
    }
    let ratio = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
    b.push(Quantity::scalar("gauge.log_scaled_ratio", ratio));
    b.check(CheckSpec::new(
        "gauge.log_scaled_ratio",
        b.defaults.band_factor,
        CheckRule::AtMost,
        "in the plane the gauge of a compact annihilation decays like c / log t",
    ));
    b.part(
        "criticality",
        None,
        model(),
        Experiment::Criticality {
            epsilon: 0.5,
            x_grid: vec![vec![0.0, 0.0], vec![3.0, 0.0]],
            t_grid: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            gauge_horizons: vec![10.0, 30.0, 100.0],
            dt: Some(0.02),
        },
        2000,
    )?;
    b.check(CheckSpec::new(
        "criticality.criticality",
        0.0,
        CheckRule::Flag {
            flag: "subcritical".into(),
        },
        "a non-positive compactly supported potential in the plane is subcritical",
    ));
    Ok(())
}

fn compact_annihilation(b: &mut Bundle) -> Result<()> {
    let pairs = [("alpha", 1.0), ("radius", 1.0), ("k", 1.0)];
    let model = catalog_build("compact_annihilation_1d", &params(&pairs))?;
    let base = SpaceGrid::with_spacing(
        Geometry::Line,
        8.0,
        0.02,
        Boundary::DirichletZero,
    )?;
    let opts = SolveOptions {
        dt_pde: 2e-3,
        ..Default::default()
    };
    let report = domain_monotone_check(&model, &ScalarField::one(), 2.0, &[2.0, 4.0, 8.0], &base, &opts)?;
    b.push(Quantity::scalar("domains.min_increment", report.min_increment));
    b.push(Quantity::scalar("domains.relative_sup_difference", report.relative_sup_difference));
    let mut table = Table::new("domains_pairs", &["radius", "next_radius", "min_increment"]);
    for (w, inc) in report.radii.windows(2).zip(&report.pair_min_increments) {
        table.push(vec![w[0].to_string(), w[1].to_string(), inc.to_string()]);
    }
    b.outcome.tables.push(table);
    b.check(CheckSpec::new(
        "domains.min_increment",
        -1e-8,
        CheckRule::AtLeast,
        "solutions with zero boundary values increase with the domain",
    ));
    b.part(
        "theta",
        None,
        catalog("compact_annihilation_1d", &pairs),
        Experiment::ExtinctionProb {
            mu: None,
            t: 1.0,
            thetas: vec![1.0, 10.0, 100.0, 1e3],
            grid: GridParams::default(),
            dt_pde: Some(2e-3),
        },
        1,
    )?;
    b.check(CheckSpec::new(
        "theta.extinction_probability",
        0.0,
        CheckRule::Flag {
            flag: "monotone".into(),
        },
        "u_theta increases with theta",
    ));
    b.part(
        "kato",
        None,
        catalog("compact_annihilation_1d", &pairs),
        Experiment::Kato {
            small_ts: vec![0.5, 0.1, 0.02],
            x_grid: vec![vec![0.0], vec![0.5], vec![1.5]],
            dt: Some(1e-3),
        },
        500,
    )?;
    b.check(CheckSpec::new(
        "kato.kato",
        0.02,
        CheckRule::AtMost,
        "a bounded potential is in the Kato class: the profile is at most alpha t",
    ));
    b.part(
        "gauge",
        None,
        catalog("compact_annihilation_1d", &pairs),
        Experiment::Gauge {
            x: None,
            horizons: vec![5.0, 20.0, 80.0],
            dt: Some(0.02),
        },
        2000,
    )?;
    b.check(CheckSpec::new(
        "gauge.gauge",
        0.0,
        CheckRule::Flag { flag: "finite".into() },
        "the gauge of a non-positive potential stays bounded",
    ));
    Ok(())
}

fn htransform_survival(b: &mut Bundle) -> Result<()> {
    let (big_b, eps) = (0.1, 0.1);
    let pairs = [("B", big_b), ("eps", eps)];
    let original = catalog_build("htransform_survival", &params(&pairs))?;
    let c = (2.0 * (big_b + eps)).sqrt();
    let h = ScalarField::Exponential { rate: c };
    let transformed = h_transform(&original, &h, Some(eps))?;
    // h(0) = 1, so the Dirac mass at the origin is its own transform.
    let horizon = 10.0;
    let trajectory = || Experiment::Trajectory {
        mu: None,
        horizon,
        sim: sim(20, 0.02, 50),
        observables: Vec::new(),
    };
    b.part("original", None, catalog("htransform_survival", &pairs), trajectory(), 400)?;
    b.part("transformed", Some(transformed.clone()), None, trajectory(), 400)?;
    b.check(CheckSpec::new(
        "original.survival_freq",
        0.0,
        CheckRule::CiExcludes,
        "the process survives with positive probability",
    ));
    b.check(CheckSpec::new(
        "original.survivor_growth_rate",
        0.0,
        CheckRule::AtMost,
        "surviving mass decays: weak extinction on survival",
    ));
    b.check(CheckSpec::against(
        "original.survival_freq",
        "transformed.survival_freq",
        CheckRule::WithinSe { z: None },
        "survival is invariant under h-transforms",
    ));
    let probes = [-2.0, -0.5, 0.0, 1.0, 3.0];
    let deviation = probes
        .iter()
        .map(|&x| {
            let mut drift = [0.0];
            transformed.diffusion.drift_at(&[x], &mut drift);
            let beta = transformed.beta().eval(&[x]);
            let k = transformed.k().eval(&[x]);
            (drift[0] - c).abs().max((beta - eps).abs()).max((k - 1.0).abs())
        })
        .fold(0.0, f64::max);
    b.push(Quantity::scalar("symbolic.coefficient_deviation", deviation));
    b.check(CheckSpec::new(
        "symbolic.coefficient_deviation",
        1e-12,
        CheckRule::AtMost,
        "A^h has drift sqrt(2(B+eps)), potential eps and intensity 1",
    ));
    Ok(())
}
