//! Euler-Maruyama paths of the `L`-diffusion with Feynman-Kac weights,
//! additive functionals and killing on leaving a ball.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{DiffusionSpec, ScalarField};

pub const DEFAULT_DT: f64 = 1e-2;

/// Time discretization of a path. The step is shrunk so that it divides
/// the horizon exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl PathConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Result<Self> {
        let c = PathConfig { dt, horizon, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.horizon.is_finite() && self.dt <= self.horizon * (1.0 + 1e-12)) {
            return Err(invalid("horizon", "must be finite and at least dt"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }
}

/// One sampled trajectory on the grid `t_i = i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major, `dim` coordinates per grid time.
    pub positions: Vec<f64>,
    /// `int_0^{t_i} beta(xi_s) ds` by left-endpoint sums.
    pub log_weight: Vec<f64>,
    /// `int_0^{t_i} g(xi_s) e_beta(s) ds` per registered name.
    pub aux_integrals: BTreeMap<String, Vec<f64>>,
    pub exit_time: Option<f64>,
    pub exit_index: Option<usize>,
}

impl Path {
    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.log_weight[i].exp()
    }

    /// `t_i < tau`.
    pub fn alive_at(&self, i: usize) -> bool {
        self.exit_index.is_none_or(|e| i < e)
    }

    fn last_active(&self) -> usize {
        self.exit_index.unwrap_or(self.times.len() - 1)
    }

    /// Writes `replica, t, x1..xd, log_weight` rows without a header.
    pub fn write_csv_rows<W: Write>(&self, replica: usize, out: &mut W) -> Result<()> {
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{replica},{t}")?;
            for v in self.position(i) {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{}", self.log_weight[i])?;
        }
        Ok(())
    }
}

/// Advances single positions by one Euler-Maruyama step, reusing buffers.
pub struct Stepper<'a> {
    spec: &'a DiffusionSpec,
    dt: f64,
    sqrt_dt: f64,
    drift: Vec<f64>,
    noise: Vec<f64>,
    kick: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a DiffusionSpec, dt: f64) -> Self {
        let d = spec.d;
        Stepper {
            spec,
            dt,
            sqrt_dt: dt.sqrt(),
            drift: vec![0.0; d],
            noise: vec![0.0; d],
            kick: vec![0.0; d],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
        self.sqrt_dt = dt.sqrt();
    }

    /// `x <- x + b(x) dt + sigma(x) sqrt(dt) Z`; returns `false` if `x` became non-finite.
    pub fn step<R: Rng + ?Sized>(&mut self, x: &mut [f64], rng: &mut R) -> bool {
        self.spec.sde_drift_at(x, &mut self.drift);
        for z in self.noise.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        self.spec.apply_sigma(x, &self.noise, &mut self.kick);
        let mut finite = true;
        for i in 0..x.len() {
            x[i] += self.drift[i] * self.dt + self.kick[i] * self.sqrt_dt;
            finite &= x[i].is_finite();
        }
        finite
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_start(spec: &DiffusionSpec, x0: &[f64]) -> Result<()> {
    if x0.len() != spec.d {
        return Err(invalid("x0", format!("expected {} coordinates", spec.d)));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x0", "must be finite"));
    }
    Ok(())
}

fn simulate<R: Rng + ?Sized>(
    spec: &DiffusionSpec,
    x0: &[f64],
    radius: Option<f64>,
    config: &PathConfig,
    rng: &mut R,
) -> Result<Path> {
    config.validate()?;
    check_start(spec, x0)?;
    let steps = config.steps();
    let dt = config.step_size();
    let d = spec.d;
    let mut positions = Vec::with_capacity((steps + 1) * d);
    positions.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut stepper = Stepper::new(spec, dt);
    let mut exit_index = None;
    for i in 1..=steps {
        if exit_index.is_none() {
            if !stepper.step(&mut x, rng) {
                return Err(Error::NonFinitePosition { step: i });
            }
            if radius.is_some_and(|n| norm(&x) >= n) {
                exit_index = Some(i);
            }
        }
        positions.extend_from_slice(&x);
    }
    Ok(Path {
        dim: d,
        times: (0..=steps).map(|i| i as f64 * dt).collect(),
        positions,
        log_weight: vec![0.0; steps + 1],
        aux_integrals: BTreeMap::new(),
        exit_time: exit_index.map(|i| i as f64 * dt),
        exit_index,
    })
}

/// Free path of the diffusion started at `x0`.
pub fn simulate_path<R: Rng + ?Sized>(
    spec: &DiffusionSpec,
    x0: &[f64],
    config: &PathConfig,
    rng: &mut R,
) -> Result<Path> {
    simulate(spec, x0, None, config, rng)
}

/// Path killed at the first grid time with `|xi| >= radius`; positions are
/// frozen from then on.
pub fn simulate_killed<R: Rng + ?Sized>(
    spec: &DiffusionSpec,
    x0: &[f64],
    radius: f64,
    config: &PathConfig,
    rng: &mut R,
) -> Result<Path> {
    if !(radius > 0.0) {
        return Err(invalid("radius", "must be positive"));
    }
    if norm(x0) >= radius {
        return Err(invalid("x0", "must lie inside the killing ball"));
    }
    simulate(spec, x0, Some(radius), config, rng)
}

/// Fills `log_weight` with left-endpoint sums of `beta`; constant after exit.
pub fn accumulate_fk(mut path: Path, beta: &ScalarField) -> Path {
    let last = path.last_active();
    let mut acc = 0.0;
    path.log_weight[0] = 0.0;
    for i in 1..path.times.len() {
        if i <= last {
            acc += beta.eval(path.position(i - 1)) * (path.times[i] - path.times[i - 1]);
        }
        path.log_weight[i] = acc;
    }
    path
}

/// Records `int_0^t g(xi_s) e_beta(s) ds` under `name` using the current weights.
pub fn accumulate_aux(mut path: Path, name: &str, g: &ScalarField) -> Path {
    let last = path.last_active();
    let mut acc = 0.0;
    let mut series = vec![0.0; path.times.len()];
    for i in 1..path.times.len() {
        if i <= last {
            let j = i - 1;
            acc += g.eval(path.position(j)) * path.weight(j) * (path.times[i] - path.times[j]);
        }
        series[i] = acc;
    }
    path.aux_integrals.insert(name.to_string(), series);
    path
}
