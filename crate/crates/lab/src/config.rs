//! Experiment configs: parsing, defaults and semantic validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superdiff_core::cumulant::{Boundary, SpaceGrid};
use superdiff_core::model::{catalog_build, InitialMeasure, ModelSpec, ScalarField, CATALOG};
use superdiff_core::particle::{Observable, SimConfig, DEFAULT_MAX_PARTICLES};

use crate::error::{config_error, LabError, Result};
use crate::report::CheckSpec;

/// A catalog entry with parameter overrides, as an alternative to a full model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRef {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogRef>,
    pub experiment: Experiment,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
}

fn one() -> ScalarField {
    ScalarField::one()
}

fn default_spacing() -> f64 {
    0.02
}

/// Space grid for the cumulant solvers; the box defaults to one covering the
/// data's reach over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "dirichlet")]
    pub boundary: Boundary,
}

fn dirichlet() -> Boundary {
    Boundary::DirichletZero
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            half_width: None,
            spacing: default_spacing(),
            boundary: dirichlet(),
        }
    }
}

impl GridParams {
    pub fn build(&self, model: &ModelSpec, horizon: f64, support_radius: f64) -> Result<SpaceGrid> {
        let base = SpaceGrid::default_for(model, horizon, support_radius, self.spacing)?;
        let half_width = self.half_width.unwrap_or(base.half_width);
        Ok(SpaceGrid::with_spacing(base.geometry, half_width, self.spacing, self.boundary)?)
    }
}

fn default_samples() -> usize {
    50
}

fn default_max_particles() -> usize {
    DEFAULT_MAX_PARTICLES
}

/// Particle settings; horizon and seed come from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub dt: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_particles")]
    pub max_particles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_field_radius: Option<f64>,
    #[serde(default)]
    pub accept_rounding: bool,
}

impl SimParams {
    pub fn build(&self, horizon: f64, seed: u64) -> Result<SimConfig> {
        let c = SimConfig {
            n: self.n,
            dt: self.dt,
            horizon,
            seed,
            max_particles: self.max_particles,
            samples: self.samples,
            far_field_radius: self.far_field_radius,
            accept_rounding: self.accept_rounding,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Semigroup {
        #[serde(default = "one")]
        f: ScalarField,
        #[serde(default)]
        x: Option<Vec<f64>>,
        t: f64,
        #[serde(default)]
        dt: Option<f64>,
    },
    Lambda2 {
        radii: Vec<f64>,
        t_grid: Vec<f64>,
        #[serde(default)]
        dt: Option<f64>,
        #[serde(default)]
        ball_grid_points: Option<usize>,
    },
    LambdaInf {
        x_grid: Vec<Vec<f64>>,
        t_grid: Vec<f64>,
        #[serde(default)]
        dt: Option<f64>,
    },
    Gauge {
        #[serde(default)]
        x: Option<Vec<f64>>,
        horizons: Vec<f64>,
        #[serde(default)]
        dt: Option<f64>,
    },
    Green {
        g: ScalarField,
        #[serde(default)]
        x: Option<Vec<f64>>,
        horizons: Vec<f64>,
        #[serde(default)]
        dt: Option<f64>,
    },
    Kato {
        small_ts: Vec<f64>,
        x_grid: Vec<Vec<f64>>,
        #[serde(default)]
        dt: Option<f64>,
    },
    Criticality {
        epsilon: f64,
        x_grid: Vec<Vec<f64>>,
        t_grid: Vec<f64>,
        gauge_horizons: Vec<f64>,
        #[serde(default)]
        dt: Option<f64>,
    },
    Cumulant {
        #[serde(default = "one")]
        f: ScalarField,
        #[serde(rename = "T")]
        horizon: f64,
        #[serde(default)]
        grid: GridParams,
        #[serde(default)]
        dt_pde: Option<f64>,
        #[serde(default)]
        stride: Option<usize>,
        /// Also run the fixed-point oracle and report the sup-difference.
        #[serde(default)]
        picard: bool,
    },
    ExtinctionProb {
        #[serde(default)]
        mu: Option<InitialMeasure>,
        t: f64,
        thetas: Vec<f64>,
        #[serde(default)]
        grid: GridParams,
        #[serde(default)]
        dt_pde: Option<f64>,
    },
    Trajectory {
        #[serde(default)]
        mu: Option<InitialMeasure>,
        #[serde(rename = "T")]
        horizon: f64,
        sim: SimParams,
        #[serde(default)]
        observables: Vec<Observable>,
    },
    LaplaceCross {
        #[serde(default)]
        mu: Option<InitialMeasure>,
        #[serde(default = "one")]
        f: ScalarField,
        t: f64,
        sim: SimParams,
        #[serde(default)]
        grid: GridParams,
        #[serde(default)]
        dt_pde: Option<f64>,
    },
    Martingale {
        #[serde(default)]
        mu: Option<InitialMeasure>,
        #[serde(default = "one")]
        h: ScalarField,
        lambda: f64,
        t_grid: Vec<f64>,
        sim: SimParams,
    },
    Reproduce {
        example: String,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Semigroup { .. } => "semigroup",
            Experiment::Lambda2 { .. } => "lambda2",
            Experiment::LambdaInf { .. } => "lambda_inf",
            Experiment::Gauge { .. } => "gauge",
            Experiment::Green { .. } => "green",
            Experiment::Kato { .. } => "kato",
            Experiment::Criticality { .. } => "criticality",
            Experiment::Cumulant { .. } => "cumulant",
            Experiment::ExtinctionProb { .. } => "extinction_prob",
            Experiment::Trajectory { .. } => "trajectory",
            Experiment::LaplaceCross { .. } => "laplace_cross",
            Experiment::Martingale { .. } => "martingale",
            Experiment::Reproduce { .. } => "reproduce",
        }
    }
}

pub const KINDS: [&str; 13] = [
    "semigroup",
    "lambda2",
    "lambda_inf",
    "gauge",
    "green",
    "kato",
    "criticality",
    "cumulant",
    "extinction_prob",
    "trajectory",
    "laplace_cross",
    "martingale",
    "reproduce",
];

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses JSON; schema errors name the offending field path.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| config_error("$", format!("not valid JSON: {e}")))?;
        let mut config: ExperimentConfig = serde_path_to_error::deserialize(value)
            .map_err(|e| config_error(field_path(&e), e.inner().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        ExperimentConfig::from_json(&text)
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(replicas) = overrides.replicas {
            self.replicas = replicas;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = Some(dir.clone());
        }
        self.validate()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Resolves `model` or `catalog` into a validated model.
    pub fn resolve_model(&self) -> Result<ModelSpec> {
        match (&self.model, &self.catalog) {
            (Some(m), None) => {
                let mut m = m.clone();
                m.validate().map_err(|e| config_error("model", e.to_string()))?;
                Ok(m)
            }
            (None, Some(c)) => catalog_build(&c.name, &c.params).map_err(|e| config_error("catalog", e.to_string())),
            (Some(_), Some(_)) => Err(config_error("model", "give either `model` or `catalog`, not both")),
            (None, None) => Err(config_error("model", "a `model` or `catalog` entry is required")),
        }
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&mut self) -> Result<()> {
        if self.replicas == 0 {
            return Err(config_error("replicas", "must be positive"));
        }
        if let Experiment::Reproduce { example } = &self.experiment {
            if self.model.is_some() || self.catalog.is_some() {
                return Err(config_error("model", "reproduce runs take no model"));
            }
            if !CATALOG.contains(&example.as_str()) {
                return Err(config_error("experiment.example", format!("`{example}` is not a catalog entry")));
            }
            return Ok(());
        }
        let model = self.resolve_model()?;
        let d = model.dim();
        let point = |field: &str, x: &Option<Vec<f64>>| match x {
            Some(x) if x.len() != d => Err(config_error(field, format!("expected {d} coordinates"))),
            _ => Ok(()),
        };
        let grid_points = |field: &str, xs: &[Vec<f64>]| {
            if xs.is_empty() || xs.iter().any(|x| x.len() != d) {
                return Err(config_error(field, format!("needs at least one point with {d} coordinates")));
            }
            Ok(())
        };
        let increasing = |field: &str, ts: &[f64], min: usize| {
            if ts.len() < min || ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|t| !(*t > 0.0)) {
                return Err(config_error(
                    field,
                    format!("needs at least {min} positive, strictly increasing values"),
                ));
            }
            Ok(())
        };
        let positive = |field: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(field, "must be positive and finite"));
            }
            Ok(())
        };
        let measure = |mu: &Option<InitialMeasure>| match mu {
            Some(mu) => {
                mu.validate().map_err(|e| config_error("experiment.mu", e.to_string()))?;
                if mu.atoms.iter().any(|a| a.position.len() != d) {
                    return Err(config_error("experiment.mu", format!("atoms need {d} coordinates")));
                }
                Ok(())
            }
            None => Ok(()),
        };
        let sim = |s: &SimParams, horizon: f64, seed: u64| {
            s.build(horizon, seed)
                .map(|_| ())
                .map_err(|e| config_error("experiment.sim", e.to_string()))
        };
        match &self.experiment {
            Experiment::Semigroup { x, t, f, .. } => {
                point("experiment.x", x)?;
                positive("experiment.t", *t)?;
                f.check().map_err(|e| config_error("experiment.f", e.to_string()))?;
            }
            Experiment::Lambda2 { radii, t_grid, .. } => {
                increasing("experiment.radii", radii, 1)?;
                increasing("experiment.t_grid", t_grid, 4)?;
            }
            Experiment::LambdaInf { x_grid, t_grid, .. } => {
                grid_points("experiment.x_grid", x_grid)?;
                increasing("experiment.t_grid", t_grid, 4)?;
            }
            Experiment::Gauge { x, horizons, .. } => {
                point("experiment.x", x)?;
                increasing("experiment.horizons", horizons, 3)?;
            }
            Experiment::Green { g, x, horizons, .. } => {
                point("experiment.x", x)?;
                increasing("experiment.horizons", horizons, 3)?;
                if !g.is_nonnegative() {
                    return Err(config_error("experiment.g", "must be non-negative"));
                }
            }
            Experiment::Kato { small_ts, x_grid, .. } => {
                grid_points("experiment.x_grid", x_grid)?;
                if small_ts.is_empty() || small_ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
                    return Err(config_error("experiment.small_ts", "values must lie in (0, 1]"));
                }
            }
            Experiment::Criticality {
                epsilon,
                x_grid,
                t_grid,
                gauge_horizons,
                ..
            } => {
                if !(*epsilon > 0.0 && *epsilon <= 1.0) {
                    return Err(config_error("experiment.epsilon", "must lie in (0, 1]"));
                }
                grid_points("experiment.x_grid", x_grid)?;
                increasing("experiment.t_grid", t_grid, 4)?;
                increasing("experiment.gauge_horizons", gauge_horizons, 3)?;
            }
            Experiment::Cumulant { horizon, f, .. } => {
                positive("experiment.T", *horizon)?;
                f.check().map_err(|e| config_error("experiment.f", e.to_string()))?;
            }
            Experiment::ExtinctionProb { mu, t, thetas, .. } => {
                measure(mu)?;
                positive("experiment.t", *t)?;
                increasing("experiment.thetas", thetas, 3)?;
            }
            Experiment::Trajectory {
                mu,
                horizon,
                sim: s,
                observables,
            } => {
                measure(mu)?;
                positive("experiment.T", *horizon)?;
                sim(s, *horizon, self.seed)?;
                let mut names: Vec<&str> = observables.iter().map(|o| o.name()).collect();
                names.sort_unstable();
                if names.windows(2).any(|w| w[0] == w[1]) {
                    return Err(config_error("experiment.observables", "names must be unique"));
                }
            }
            Experiment::LaplaceCross { mu, t, sim: s, f, .. } => {
                measure(mu)?;
                positive("experiment.t", *t)?;
                sim(s, *t, self.seed)?;
                if !f.is_nonnegative() {
                    return Err(config_error("experiment.f", "must be non-negative"));
                }
            }
            Experiment::Martingale {
                mu,
                t_grid,
                sim: s,
                h,
                ..
            } => {
                measure(mu)?;
                increasing("experiment.t_grid", t_grid, 1)?;
                sim(s, *t_grid.last().unwrap(), self.seed)?;
                if !h.is_positive() {
                    return Err(config_error("experiment.h", "must be positive"));
                }
            }
            Experiment::Reproduce { .. } => unreachable!("handled above"),
        }
        Ok(())
    }
}

/// JSON path of the field a deserialization error is about.
fn field_path(error: &serde_path_to_error::Error<serde_json::Error>) -> String {
    let path = error.path().to_string();
    let message = error.inner().to_string();
    let quoted = message.split('`').nth(1).unwrap_or("");
    let named = message.starts_with("missing field") || message.starts_with("unknown field");
    match (path.as_str(), named && !quoted.is_empty()) {
        (".", true) => quoted.to_string(),
        (_, true) if !path.ends_with(quoted) => format!("{path}.{quoted}"),
        (".", false) => "$".to_string(),
        _ => path,
    }
}
