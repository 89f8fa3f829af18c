//! Branching-particle approximation of the superprocess.
//!
//! Atoms of mass `1/N` follow the diffusion and branch at rate
//! `q = 2Nk + beta^+ + beta^-`, leaving two offspring with probability
//! `(Nk + beta^+) / q` and none otherwise. The mass drift is then exactly
//! `beta` and the fluctuation coefficient is `2k + |beta| / N`.
//!
//! Each step of length `dt` is split, per particle, into `m` substeps with
//! `(dt / m) q(x) <= EVENT_BOUND` at the particle's position, so unbounded
//! intensities only cost time where particles actually are.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::diffusion::{norm, Stepper};
use crate::error::{invalid, Error, Result};
use crate::model::{InitialMeasure, ModelSpec, ScalarField};
use crate::rng::{par_replicas, replica_rng};
use crate::stats::{burn_in_window, growth_fit, mean_and_se, proportion, variance_and_se, GrowthEstimate, MCEstimate};

/// Largest branching probability allowed in one substep.
pub const EVENT_BOUND: f64 = 0.1;
pub const DEFAULT_MAX_PARTICLES: usize = 1_000_000;
/// Count-only runs store no positions; this cap keeps counts exact in `f64`.
pub const COUNT_ONLY_CAP: u64 = 1 << 53;
const MAX_SUBSTEPS: usize = 1 << 20;

fn default_max_particles() -> usize {
    DEFAULT_MAX_PARTICLES
}

fn default_samples() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Particles per unit mass.
    #[serde(rename = "N")]
    pub n: u32,
    /// Motion step; branching substeps are refined below it as needed.
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_max_particles")]
    pub max_particles: usize,
    /// Number of uniform sampling intervals on `[0, T]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Particles beyond this radius are discarded; only sound for local observables.
    #[serde(default)]
    pub far_field_radius: Option<f64>,
    /// Allow atom masses that are not multiples of `1/N`.
    #[serde(default)]
    pub accept_rounding: bool,
}

impl SimConfig {
    pub fn new(n: u32, dt: f64, horizon: f64, seed: u64) -> Result<Self> {
        let c = SimConfig {
            n,
            dt,
            horizon,
            seed,
            max_particles: DEFAULT_MAX_PARTICLES,
            samples: default_samples(),
            far_field_radius: None,
            accept_rounding: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(invalid("N", "at least 10 particles per unit mass"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("T", "must be positive and finite"));
        }
        if self.samples == 0 {
            return Err(invalid("samples", "must be positive"));
        }
        if self.max_particles == 0 {
            return Err(invalid("max_particles", "must be positive"));
        }
        if let Some(r) = self.far_field_radius {
            if !(r > 0.0) {
                return Err(invalid("far_field_radius", "must be positive"));
            }
        }
        Ok(())
    }

    /// Uniform sample times `i T / samples`.
    pub fn schedule(&self) -> Vec<f64> {
        (0..=self.samples)
            .map(|i| self.horizon * i as f64 / self.samples as f64)
            .collect()
    }

    /// `dt (2N sup k + |B| + sup beta^-)` over the given points.
    pub fn event_load(&self, model: &ModelSpec, points: &[Vec<f64>]) -> f64 {
        let n = self.n as f64;
        let b = model.branching.beta_upper_bound.abs();
        let (k_max, beta_minus) = points.iter().fold((0.0f64, 0.0f64), |(k, m), x| {
            (k.max(model.k().eval(x)), m.max((-model.beta().eval(x)).max(0.0)))
        });
        self.dt * (2.0 * n * k_max + b + beta_minus)
    }

    fn with_horizon(&self, horizon: f64) -> SimConfig {
        SimConfig {
            horizon,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    pub time: f64,
    /// Particles per unit mass; every particle has mass `1/n`.
    pub n: u32,
    pub dim: usize,
    positions: Vec<f64>,
    /// Some atom mass was rounded to a multiple of `1/n`.
    pub rounded: bool,
    /// Particles discarded beyond the far-field radius so far.
    pub pruned: u64,
}

impl ParticleCloud {
    pub fn count(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn total_mass(&self) -> f64 {
        self.count() as f64 / self.n as f64
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    /// `<f, X>`.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        self.positions().map(|x| f.eval(x)).sum::<f64>() / self.n as f64
    }

    /// `X(B(center, radius))`.
    pub fn mass_in_ball(&self, center: &[f64], radius: f64) -> f64 {
        let inside = self
            .positions()
            .filter(|x| {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 <= radius * radius
            })
            .count();
        inside as f64 / self.n as f64
    }
}

/// Places `round(m N)` particles at each atom.
pub fn init_cloud(mu: &InitialMeasure, n: u32) -> Result<ParticleCloud> {
    mu.validate()?;
    if n == 0 {
        return Err(invalid("N", "must be positive"));
    }
    let dim = mu.atoms[0].position.len();
    let mut positions = Vec::new();
    let mut rounded = false;
    for atom in &mu.atoms {
        let exact = atom.mass * n as f64;
        let copies = exact.round();
        rounded |= (exact - copies).abs() > 1e-9 * exact.max(1.0);
        for _ in 0..copies as usize {
            positions.extend_from_slice(&atom.position);
        }
    }
    if positions.is_empty() {
        return Err(invalid("mu", "no particles remain after rounding to multiples of 1/N"));
    }
    Ok(ParticleCloud {
        time: 0.0,
        n,
        dim,
        positions,
        rounded,
        pruned: 0,
    })
}

/// Per-particle birth and death rates `(Nk + beta^+, Nk + beta^-)`.
fn rates(model: &ModelSpec, n: f64, x: &[f64]) -> (f64, f64) {
    let nk = n * model.k().eval(x);
    let beta = model.beta().eval(x);
    (nk + beta.max(0.0), nk + (-beta).max(0.0))
}

fn substeps(load: f64) -> Result<usize> {
    let m = (load / EVENT_BOUND).ceil().max(1.0);
    if !m.is_finite() || m > MAX_SUBSTEPS as f64 {
        return Err(Error::EventBound(load));
    }
    Ok(m as usize)
}

/// Population controls applied by [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_particles: usize,
    pub far_field_radius: Option<f64>,
}

impl From<&SimConfig> for Limits {
    fn from(c: &SimConfig) -> Self {
        Limits {
            max_particles: c.max_particles,
            far_field_radius: c.far_field_radius,
        }
    }
}

/// Advances the cloud by `dt`: each particle moves by Euler-Maruyama substeps
/// and after each substep of length `h` branches with probability `q(x) h`.
/// Offspring continue from the parent's position for the remaining substeps.
pub fn evolve<R: Rng + ?Sized>(
    cloud: ParticleCloud,
    model: &ModelSpec,
    dt: f64,
    rng: &mut R,
    limits: &Limits,
) -> Result<ParticleCloud> {
    let d = cloud.dim;
    let n = cloud.n as f64;
    let mut stepper = Stepper::new(&model.diffusion, dt);
    let mut out = Vec::with_capacity(cloud.positions.len());
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_left: Vec<usize> = Vec::new();
    let mut x = vec![0.0; d];
    let mut pruned = cloud.pruned;
    for start in cloud.positions.chunks_exact(d) {
        let (b, m) = rates(model, n, start);
        let steps = substeps(dt * (b + m))?;
        let h = dt / steps as f64;
        stepper.set_dt(h);
        pending.extend_from_slice(start);
        pending_left.push(steps);
        while let Some(left) = pending_left.pop() {
            let base = pending.len() - d;
            x.copy_from_slice(&pending[base..]);
            pending.truncate(base);
            let mut alive = true;
            for r in 0..left {
                if !stepper.step(&mut x, rng) {
                    return Err(Error::NonFinitePosition { step: r });
                }
                let (birth, death) = rates(model, n, &x);
                if birth + death == 0.0 {
                    continue;
                }
                let u: f64 = rng.random();
                if u < birth * h {
                    pending.extend_from_slice(&x);
                    pending_left.push(left - r - 1);
                } else if u < (birth + death) * h {
                    alive = false;
                    break;
                }
            }
            if alive {
                match limits.far_field_radius {
                    Some(radius) if norm(&x) > radius => pruned += 1,
                    _ => out.extend_from_slice(&x),
                }
            }
            let count = out.len() / d + pending_left.len();
            if count > limits.max_particles {
                return Err(Error::ParticleOverflow {
                    count,
                    cap: limits.max_particles,
                });
            }
        }
    }
    Ok(ParticleCloud {
        time: cloud.time + dt,
        positions: out,
        pruned,
        ..cloud
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `X_t(B(center, radius))`.
    Ball {
        name: String,
        center: Vec<f64>,
        radius: f64,
    },
    /// `<h, X_t>`.
    Field { name: String, field: ScalarField },
}

impl Observable {
    pub fn name(&self) -> &str {
        match self {
            Observable::Ball { name, .. } | Observable::Field { name, .. } => name,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.name().is_empty() || self.name().contains([',', '"', '\n', '\r']) {
            return Err(invalid("observable", "names must be non-empty and CSV-safe"));
        }
        match self {
            Observable::Ball { center, radius, .. } => {
                if center.len() != dim || !(*radius > 0.0) {
                    return Err(invalid("observable", "ball needs a centre in R^d and a positive radius"));
                }
                Ok(())
            }
            Observable::Field { field, .. } => field.check(),
        }
    }

    fn measure(&self, cloud: &ParticleCloud) -> f64 {
        match self {
            Observable::Ball { center, radius, .. } => cloud.mass_in_ball(center, *radius),
            Observable::Field { field, .. } => cloud.integrate(field),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub name: String,
    pub values: Vec<f64>,
}

/// One replica's sampled trajectory; `total_mass[i] = particle_count[i] / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub replica: usize,
    pub n: u32,
    pub times: Vec<f64>,
    pub total_mass: Vec<f64>,
    pub particle_count: Vec<u64>,
    pub observables: Vec<ObservableSeries>,
    /// The population cap was hit; samples stop at the last complete time.
    pub truncated: bool,
    pub rounded: bool,
    pub pruned: u64,
    /// `false` when only counts were simulated (constant `beta` and `k`).
    pub positions_tracked: bool,
}

impl TrajectoryRecord {
    pub fn final_mass(&self) -> f64 {
        *self.total_mass.last().expect("records hold the initial sample")
    }

    pub fn final_count(&self) -> u64 {
        *self.particle_count.last().expect("records hold the initial sample")
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.values.as_slice())
    }

    /// Rows `replica,t,total_mass,particle_count,obs_name,obs_value`, one per
    /// observable and time (empty observable fields when none are registered).
    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> Result<()> {
        for (i, t) in self.times.iter().enumerate() {
            let head = format!("{},{},{},{}", self.replica, t, self.total_mass[i], self.particle_count[i]);
            if self.observables.is_empty() {
                writeln!(out, "{head},,")?;
            }
            for o in &self.observables {
                writeln!(out, "{head},{},{}", o.name, o.values[i])?;
            }
        }
        Ok(())
    }
}

pub const TRAJECTORY_CSV_HEADER: &str = "replica,t,total_mass,particle_count,obs_name,obs_value";

pub fn write_trajectories_csv<W: Write>(records: &[TrajectoryRecord], out: &mut W) -> Result<()> {
    writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
    records.iter().try_for_each(|r| r.write_csv_rows(out))
}

/// Total mass and constant-field observables need no positions when
/// `beta` and `k` are constant: the count is then a birth-death chain.
fn count_only(model: &ModelSpec, observables: &[Observable], config: &SimConfig) -> bool {
    config.far_field_radius.is_none()
        && model.beta().as_constant().is_some()
        && model.k().as_constant().is_some()
        && observables
            .iter()
            .all(|o| matches!(o, Observable::Field { field, .. } if field.as_constant().is_some()))
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() || schedule[0] < 0.0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "sample times must be non-negative and increasing"));
    }
    Ok(())
}

struct Recorder<'a> {
    record: TrajectoryRecord,
    observables: &'a [Observable],
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, count: u64, measure: impl Fn(usize, &Observable) -> f64) {
        let r = &mut self.record;
        r.times.push(t);
        r.particle_count.push(count);
        r.total_mass.push(count as f64 / r.n as f64);
        for (i, (series, o)) in r.observables.iter_mut().zip(self.observables).enumerate() {
            series.values.push(measure(i, o));
        }
    }
}

/// Simulates one replica, sampling at `schedule`.
fn simulate<R: Rng + ?Sized>(
    model: &ModelSpec,
    mu: &InitialMeasure,
    config: &SimConfig,
    schedule: &[f64],
    observables: &[Observable],
    replica: usize,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    check_schedule(schedule)?;
    let dim = model.dim();
    if mu.atoms.iter().any(|a| a.position.len() != dim) {
        return Err(invalid("mu", "atom positions must lie in R^d"));
    }
    observables.iter().try_for_each(|o| o.check(dim))?;
    let mut cloud = init_cloud(mu, config.n)?;
    if cloud.rounded && !config.accept_rounding {
        return Err(invalid("mu", "atom masses are not multiples of 1/N; set accept_rounding"));
    }
    let positions_tracked = !count_only(model, observables, config);
    let mut rec = Recorder {
        record: TrajectoryRecord {
            replica,
            n: config.n,
            times: Vec::with_capacity(schedule.len()),
            total_mass: Vec::with_capacity(schedule.len()),
            particle_count: Vec::with_capacity(schedule.len()),
            observables: observables
                .iter()
                .map(|o| ObservableSeries {
                    name: o.name().to_string(),
                    values: Vec::with_capacity(schedule.len()),
                })
                .collect(),
            truncated: false,
            rounded: cloud.rounded,
            pruned: 0,
            positions_tracked,
        },
        observables,
    };
    let n = config.n as f64;
    let mut t = 0.0;
    if positions_tracked {
        let limits = Limits::from(config);
        for &target in schedule {
            let span = target - t;
            if span > 0.0 {
                let steps = (span / config.dt - 1e-9).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    if cloud.count() == 0 {
                        break;
                    }
                    match evolve(cloud.clone(), model, h, rng, &limits) {
                        Ok(next) => cloud = next,
                        Err(Error::ParticleOverflow { .. }) => {
                            rec.record.truncated = true;
                            rec.record.pruned = cloud.pruned;
                            return Ok(rec.record);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            t = target;
            cloud.time = t;
            rec.push(t, cloud.count() as u64, |_, o| o.measure(&cloud));
        }
        rec.record.pruned = cloud.pruned;
    } else {
        let (birth, death) = rates(model, n, &vec![0.0; dim]);
        let q = birth + death;
        let mut count = cloud.count() as u64;
        let constants: Vec<f64> = observables
            .iter()
            .map(|o| match o {
                Observable::Field { field, .. } => field.as_constant().unwrap_or(0.0),
                Observable::Ball { .. } => unreachable!("balls need positions"),
            })
            .collect();
        for &target in schedule {
            let span = target - t;
            if span > 0.0 && count > 0 && q > 0.0 {
                let steps = (span / config.dt - 1e-9).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                let sub = substeps(h * q)?;
                let p_event = h / sub as f64 * q;
                let p_birth = birth / q;
                for _ in 0..steps * sub {
                    if count == 0 {
                        break;
                    }
                    let events = Binomial::new(count, p_event).expect("valid probability").sample(rng);
                    let births = Binomial::new(events, p_birth).expect("valid probability").sample(rng);
                    count = count + births - (events - births);
                    if count > COUNT_ONLY_CAP {
                        rec.record.truncated = true;
                        return Ok(rec.record);
                    }
                }
            }
            t = target;
            let mass = count as f64 / n;
            rec.push(t, count, |i, _| constants[i] * mass);
        }
    }
    Ok(rec.record)
}

/// One replica on the uniform schedule of `config`, seeded by `(seed, replica)`.
pub fn run_trajectory(
    model: &ModelSpec,
    mu: &InitialMeasure,
    config: &SimConfig,
    observables: &[Observable],
    replica: usize,
) -> Result<TrajectoryRecord> {
    let mut rng = replica_rng(config.seed, replica as u64);
    simulate(model, mu, config, &config.schedule(), observables, replica, &mut rng)
}

/// Replicas `0..replicas` in parallel, returned in replica order.
pub fn run_replicas(
    model: &ModelSpec,
    mu: &InitialMeasure,
    config: &SimConfig,
    observables: &[Observable],
    replicas: usize,
) -> Result<Vec<TrajectoryRecord>> {
    run_on_schedule(model, mu, config, &config.schedule(), observables, replicas)
}

fn run_on_schedule(
    model: &ModelSpec,
    mu: &InitialMeasure,
    config: &SimConfig,
    schedule: &[f64],
    observables: &[Observable],
    replicas: usize,
) -> Result<Vec<TrajectoryRecord>> {
    if replicas == 0 {
        return Err(invalid("replicas", "must be positive"));
    }
    par_replicas(config.seed, replicas, |i, rng| {
        simulate(model, mu, config, schedule, observables, i, rng)
    })
    .into_iter()
    .collect()
}

/// `E exp(-<f, X_t>)` over replicas.
pub fn laplace_functional(
    model: &ModelSpec,
    mu: &InitialMeasure,
    f: &ScalarField,
    t: f64,
    replicas: usize,
    config: &SimConfig,
) -> Result<MCEstimate> {
    f.check()?;
    if !f.is_nonnegative() || !f.upper_bound().is_some_and(f64::is_finite) {
        return Err(invalid("f", "must be non-negative and bounded"));
    }
    if f.is_identically_zero() {
        return Ok(MCEstimate::from_samples(&vec![1.0; replicas.max(1)]));
    }
    let obs = [Observable::Field {
        name: "f".into(),
        field: f.clone(),
    }];
    let records = run_on_schedule(model, mu, &config.with_horizon(t), &[0.0, t], &obs, replicas)?;
    let mut truncated = false;
    let samples: Vec<f64> = records
        .iter()
        .map(|r| {
            truncated |= r.truncated;
            (-r.observables[0].values.last().copied().unwrap_or(0.0)).exp()
        })
        .collect();
    let mut est = MCEstimate::from_samples(&samples);
    est.truncated = truncated;
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingalePoint {
    pub t: f64,
    /// Replica mean of `M_t = exp(-lambda t) <h, X_t>`.
    pub estimate: MCEstimate,
    pub variance: f64,
    pub variance_se: f64,
}

/// `M_t = exp(-lambda t) <h, X_t>` on `t_grid`, for a declared
/// `(L + beta - lambda) h = 0`.
pub fn martingale_series(
    model: &ModelSpec,
    mu: &InitialMeasure,
    h: &ScalarField,
    lambda: f64,
    t_grid: &[f64],
    replicas: usize,
    config: &SimConfig,
) -> Result<Vec<MartingalePoint>> {
    check_schedule(t_grid)?;
    if !h.is_positive() {
        return Err(invalid("h", "must be positive"));
    }
    let obs = [Observable::Field {
        name: "h".into(),
        field: h.clone(),
    }];
    let horizon = *t_grid.last().unwrap();
    let records = run_on_schedule(model, mu, &config.with_horizon(horizon.max(f64::MIN_POSITIVE)), t_grid, &obs, replicas)?;
    if records.iter().any(|r| r.truncated) {
        return Err(Error::ParticleOverflow {
            count: config.max_particles + 1,
            cap: config.max_particles,
        });
    }
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let scale = (-lambda * t).exp();
            let samples: Vec<f64> = records.iter().map(|r| scale * r.observables[0].values[i]).collect();
            let (variance, variance_se) = variance_and_se(&samples);
            MartingalePoint {
                t,
                estimate: MCEstimate::from_samples(&samples),
                variance,
                variance_se,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionStats {
    pub trajectories: usize,
    /// Fraction with final total mass below the threshold.
    pub weak_extinction_freq: f64,
    pub weak_extinction_se: f64,
    /// Fraction with no particles left at the final time.
    pub extinction_freq: f64,
    pub extinction_se: f64,
    /// Exponential growth fits of surviving, untruncated trajectories.
    pub survivor_growth_rates: Vec<GrowthEstimate>,
    pub truncated: usize,
}

impl ExtinctionStats {
    pub fn survival_freq(&self) -> f64 {
        1.0 - self.extinction_freq
    }

    /// Mean survivor growth rate and its standard error.
    pub fn mean_survivor_rate(&self) -> Option<(f64, f64)> {
        let rates: Vec<f64> = self.survivor_growth_rates.iter().map(|g| g.rate).collect();
        (!rates.is_empty()).then(|| mean_and_se(&rates))
    }
}

/// Frequencies of extinction and weak extinction at the final time.
/// Truncated trajectories count as surviving with large mass. When
/// `extinct_counts_as_weak` is false, weak extinction is only counted
/// among trajectories that still have particles.
pub fn extinction_stats(
    trajectories: &[TrajectoryRecord],
    mass_threshold: f64,
    extinct_counts_as_weak: bool,
) -> Result<ExtinctionStats> {
    if trajectories.len() < 100 {
        return Err(invalid("trajectories", "at least 100 trajectories are required"));
    }
    if !(mass_threshold > 0.0) {
        return Err(invalid("eta", "must be positive"));
    }
    let total = trajectories.len();
    let extinct = trajectories
        .iter()
        .filter(|r| !r.truncated && r.final_count() == 0)
        .count();
    let weak = trajectories
        .iter()
        .filter(|r| !r.truncated && r.final_mass() < mass_threshold)
        .filter(|r| extinct_counts_as_weak || r.final_count() > 0)
        .count();
    let weak_base = if extinct_counts_as_weak { total } else { total - extinct };
    let (weak_p, weak_se) = if weak_base > 0 { proportion(weak, weak_base) } else { (0.0, 0.0) };
    let (ext_p, ext_se) = proportion(extinct, total);
    let survivor_growth_rates = trajectories
        .iter()
        .filter(|r| !r.truncated && r.final_count() > 0)
        .filter_map(|r| {
            let series: Vec<(f64, f64)> = r.times.iter().copied().zip(r.total_mass.iter().copied()).collect();
            growth_fit(&series, Some(burn_in_window(&r.times))).ok()
        })
        .collect();
    Ok(ExtinctionStats {
        trajectories: total,
        weak_extinction_freq: weak_p,
        weak_extinction_se: weak_se,
        extinction_freq: ext_p,
        extinction_se: ext_se,
        survivor_growth_rates,
        truncated: trajectories.iter().filter(|r| r.truncated).count(),
    })
}
