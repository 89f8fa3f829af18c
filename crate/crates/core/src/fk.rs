//! Monte Carlo Feynman-Kac estimators: the semigroup `P^beta_t f`, the growth
//! bounds `lambda_2` and `lambda_inf`, the gauge, the potential operator, a
//! Kato-class profile and the criticality classifier.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{norm, Stepper, DEFAULT_DT};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelSpec, ScalarField};
use crate::rng::replica_rng;
use crate::stats::{burn_in_window, log_growth_fit, GrowthEstimate, MCEstimate};

/// Fewest surviving paths accepted at the last time of a `lambda_2` trace.
pub const MIN_SURVIVORS: usize = 50;

/// Thresholds turning a horizon trace into a finite/divergent verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRule {
    /// Finite when the last two horizons differ by less than this fraction.
    pub stable_rel_change: f64,
    /// Divergent when a non-decreasing trace grows by more than this factor.
    pub divergent_factor: f64,
    /// Standard errors of slack when judging monotonicity.
    pub noise_z: f64,
}

impl Default for DivergenceRule {
    fn default() -> Self {
        DivergenceRule {
            stable_rel_change: 0.05,
            divergent_factor: 2.0,
            noise_z: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkConfig {
    pub dt: f64,
    pub seed: u64,
    pub rule: DivergenceRule,
    /// Points per killing ball used for the sup in `lambda_2`.
    pub ball_grid_points: usize,
    /// `|rate| <= half_width + zero_rate_tol` counts as a zero growth rate.
    pub zero_rate_tol: f64,
}

impl Default for FkConfig {
    fn default() -> Self {
        FkConfig {
            dt: DEFAULT_DT,
            seed: 0,
            rule: DivergenceRule::default(),
            ball_grid_points: 9,
            zero_rate_tol: 0.02,
        }
    }
}

impl FkConfig {
    pub fn with_seed(seed: u64) -> Self {
        FkConfig {
            seed,
            ..FkConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if self.ball_grid_points == 0 {
            return Err(invalid("ball_grid_points", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub verdict: Verdict,
    /// `(horizon, estimate)` with strictly increasing horizons.
    pub trace: Vec<(f64, MCEstimate)>,
}

impl DivergenceVerdict {
    /// Applies `rule` to a trace. A trace that never increases beyond noise
    /// is also finite, since a non-increasing non-negative trace converges.
    pub fn classify(trace: Vec<(f64, MCEstimate)>, rule: &DivergenceRule) -> DivergenceVerdict {
        let n = trace.len();
        let means: Vec<f64> = trace.iter().map(|(_, e)| e.mean).collect();
        let slack = |i: usize, j: usize| rule.noise_z * (trace[i].1.std_error + trace[j].1.std_error);
        let non_decreasing = (1..n).all(|i| means[i] >= means[i - 1] - slack(i, i - 1));
        let non_increasing = (1..n).all(|i| means[i] <= means[i - 1] + slack(i, i - 1));
        let (last, prev) = (means[n - 1], means[n - 2]);
        let stable = if prev == 0.0 {
            last == 0.0
        } else {
            ((last - prev) / prev).abs() < rule.stable_rel_change
        };
        let verdict = if non_decreasing && !stable && means[n - 1] > rule.divergent_factor * means[0] {
            Verdict::Divergent
        } else if stable || non_increasing {
            Verdict::Finite
        } else {
            Verdict::Inconclusive
        };
        DivergenceVerdict { verdict, trace }
    }
}

/// One CSV row of an estimator trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub quantity: String,
    pub t_or_horizon: f64,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub flags: String,
}

pub fn trace_rows(quantity: &str, trace: &[(f64, MCEstimate)]) -> Vec<EstimateRow> {
    trace
        .iter()
        .map(|(t, e)| {
            let mut flags = Vec::new();
            if e.truncated {
                flags.push("truncated");
            }
            if e.underflow {
                flags.push("underflow");
            }
            EstimateRow {
                quantity: quantity.to_string(),
                t_or_horizon: *t,
                mean: e.mean,
                std_error: e.std_error,
                samples: e.samples,
                flags: flags.join("|"),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Default)]
struct WalkOptions<'a> {
    radius: Option<f64>,
    f: Option<&'a ScalarField>,
    aux: Option<&'a ScalarField>,
}

/// Per-checkpoint record of one path.
#[derive(Debug, Clone, Default)]
struct Walk {
    log_weight: Vec<f64>,
    value: Vec<f64>,
    alive: Vec<bool>,
    aux: Vec<f64>,
    abs_beta: Vec<f64>,
}

fn checkpoint_steps(times: &[f64], dt: f64) -> Result<Vec<usize>> {
    if times.is_empty() {
        return Err(invalid("times", "need at least one time"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(invalid("times", "must be non-negative and strictly increasing"));
    }
    Ok(times.iter().map(|t| (t / dt).round() as usize).collect())
}

fn walk<R: Rng + ?Sized>(
    model: &ModelSpec,
    x0: &[f64],
    steps: &[usize],
    dt: f64,
    opts: WalkOptions,
    rng: &mut R,
) -> Result<Walk> {
    let beta = model.beta();
    let mut stepper = Stepper::new(&model.diffusion, dt);
    let mut x = x0.to_vec();
    let (mut lw, mut aux, mut abs) = (0.0, 0.0, 0.0);
    let mut out = Walk::default();
    let mut next = 0;
    let mut s = 0;
    let mut alive = opts.radius.is_none_or(|n| norm(&x) < n);
    loop {
        while next < steps.len() && steps[next] == s {
            out.log_weight.push(lw);
            out.alive.push(alive);
            out.value.push(match (alive, opts.f) {
                (false, _) => 0.0,
                (true, Some(f)) => f.eval(&x),
                (true, None) => 1.0,
            });
            out.aux.push(aux);
            out.abs_beta.push(abs);
            next += 1;
        }
        if next == steps.len() {
            return Ok(out);
        }
        if alive {
            let b = beta.eval(&x);
            if let Some(g) = opts.aux {
                aux += g.eval(&x) * lw.exp() * dt;
            }
            lw += b * dt;
            abs += b.abs() * dt;
            if !stepper.step(&mut x, rng) {
                return Err(Error::NonFinitePosition { step: s + 1 });
            }
            alive = opts.radius.is_none_or(|n| norm(&x) < n);
        }
        s += 1;
    }
}

/// Runs `replicas` walks from `x0` on random streams `offset + i`.
fn walks(
    model: &ModelSpec,
    x0: &[f64],
    times: &[f64],
    replicas: usize,
    config: &FkConfig,
    stream_offset: u64,
    opts: WalkOptions,
) -> Result<Vec<Walk>> {
    config.validate()?;
    if x0.len() != model.dim() {
        return Err(invalid("x", format!("expected {} coordinates", model.dim())));
    }
    let steps = checkpoint_steps(times, config.dt)?;
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(config.seed, stream_offset + i as u64);
            walk(model, x0, &steps, config.dt, opts, &mut rng)
        })
        .collect()
}

fn weighted_estimates(walks: &[Walk], k: usize) -> MCEstimate {
    let pairs: Vec<(f64, f64)> = walks.iter().map(|w| (w.log_weight[k], w.value[k])).collect();
    MCEstimate::from_log_weighted(&pairs)
}

fn check_replicas(replicas: usize) -> Result<()> {
    if replicas < 100 {
        return Err(invalid("replicas", "at least 100 replicas are required"));
    }
    Ok(())
}

/// `P^beta_t f(x) = E_x[e_beta(t) f(xi_t)]`.
pub fn estimate_semigroup(
    model: &ModelSpec,
    f: &ScalarField,
    x: &[f64],
    t: f64,
    replicas: usize,
    config: &FkConfig,
) -> Result<MCEstimate> {
    check_replicas(replicas)?;
    let opts = WalkOptions {
        f: Some(f),
        ..Default::default()
    };
    let w = walks(model, x, &[t], replicas, config, 0, opts)?;
    Ok(weighted_estimates(&w, 0))
}

/// `P^beta_t f(x)` for several `t` on shared paths.
pub fn semigroup_trace(
    model: &ModelSpec,
    f: &ScalarField,
    x: &[f64],
    times: &[f64],
    replicas: usize,
    config: &FkConfig,
) -> Result<Vec<(f64, MCEstimate)>> {
    check_replicas(replicas)?;
    let opts = WalkOptions {
        f: Some(f),
        ..Default::default()
    };
    let w = walks(model, x, times, replicas, config, 0, opts)?;
    Ok(times.iter().enumerate().map(|(k, t)| (*t, weighted_estimates(&w, k))).collect())
}

/// `E_x[e_beta(t) f(xi_t); t < tau_n]` for several `t`, on the same random
/// streams as [`semigroup_trace`].
pub fn killed_semigroup_trace(
    model: &ModelSpec,
    f: &ScalarField,
    x: &[f64],
    radius: f64,
    times: &[f64],
    replicas: usize,
    config: &FkConfig,
) -> Result<Vec<(f64, MCEstimate, usize)>> {
    check_replicas(replicas)?;
    let opts = WalkOptions {
        f: Some(f),
        radius: Some(radius),
        ..Default::default()
    };
    let w = walks(model, x, times, replicas, config, 0, opts)?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let survivors = w.iter().filter(|p| p.alive[k]).count();
            (*t, weighted_estimates(&w, k), survivors)
        })
        .collect())
}

/// Sup over a point grid of `log E_x[e_beta(t)]` per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupTracePoint {
    pub t: f64,
    pub log_sup: f64,
    /// Index into the point grid attaining the sup.
    pub argmax: usize,
    pub estimate: MCEstimate,
    /// Surviving paths at the maximizing point (killed traces only).
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaInfEstimate {
    pub fit: GrowthEstimate,
    pub trace: Vec<SupTracePoint>,
    /// `r_squared < 0.8`: the trace does not look exponential.
    pub non_exponential: bool,
}

fn check_time_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 4 {
        return Err(invalid("t_grid", "at least 4 times are required"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(invalid("t_grid", "must be positive and strictly increasing"));
    }
    Ok(())
}

fn sup_trace(
    model: &ModelSpec,
    points: &[Vec<f64>],
    t_grid: &[f64],
    replicas: usize,
    config: &FkConfig,
    radius: Option<f64>,
) -> Result<Vec<SupTracePoint>> {
    let per_point = points
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let opts = WalkOptions {
                radius,
                ..Default::default()
            };
            walks(model, x, t_grid, replicas, config, (j as u64) << 32, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut best: Option<SupTracePoint> = None;
            for (j, w) in per_point.iter().enumerate() {
                let estimate = weighted_estimates(w, k);
                if best.as_ref().is_none_or(|b| estimate.log_mean > b.log_sup) {
                    best = Some(SupTracePoint {
                        t,
                        log_sup: estimate.log_mean,
                        argmax: j,
                        survivors: w.iter().filter(|p| p.alive[k]).count(),
                        estimate,
                    });
                }
            }
            best.expect("non-empty point grid")
        })
        .collect())
}

fn fit_trace(trace: &[SupTracePoint], t_grid: &[f64]) -> Result<GrowthEstimate> {
    let series: Vec<(f64, f64)> = trace
        .iter()
        .filter(|p| p.log_sup.is_finite())
        .map(|p| (p.t, p.log_sup))
        .collect();
    log_growth_fit(&series, Some(burn_in_window(t_grid)))
}

/// `lambda_inf = lim (1/t) log sup_x E_x e_beta(t)` with the sup over `x_grid`.
pub fn estimate_lambda_inf(
    model: &ModelSpec,
    x_grid: &[Vec<f64>],
    t_grid: &[f64],
    replicas: usize,
    config: &FkConfig,
) -> Result<LambdaInfEstimate> {
    check_replicas(replicas)?;
    check_time_grid(t_grid)?;
    if x_grid.is_empty() {
        return Err(invalid("x_grid", "at least one point is required"));
    }
    let trace = sup_trace(model, x_grid, t_grid, replicas, config, None)?;
    let fit = fit_trace(&trace, t_grid)?;
    Ok(LambdaInfEstimate {
        non_exponential: !fit.is_exponential(),
        fit,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusFit {
    pub radius: f64,
    pub fit: Option<GrowthEstimate>,
    pub survivors_at_max_t: usize,
    pub trace: Vec<SupTracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda2Estimate {
    /// Fit at the largest radius.
    pub fit: Option<GrowthEstimate>,
    pub per_radius: Vec<RadiusFit>,
    /// Too few survivors at the last time, or no usable fit.
    pub inconclusive: bool,
}

/// Points `fraction * radius * e_1` for fractions evenly spaced in `[-0.8, 0.8]`.
pub fn ball_grid(dim: usize, radius: f64, points: usize) -> Vec<Vec<f64>> {
    (0..points)
        .map(|i| {
            let frac = if points == 1 {
                0.0
            } else {
                -0.8 + 1.6 * i as f64 / (points - 1) as f64
            };
            let mut x = vec![0.0; dim];
            x[0] = frac * radius;
            x
        })
        .collect()
}

/// `lambda_2 = sup_n lim (1/t) log sup_{x in D_n} E_x[e_beta(t); t < tau_n]`.
pub fn estimate_lambda2(
    model: &ModelSpec,
    radii: &[f64],
    t_grid: &[f64],
    replicas: usize,
    config: &FkConfig,
) -> Result<Lambda2Estimate> {
    check_replicas(replicas)?;
    check_time_grid(t_grid)?;
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(invalid("radii", "must be positive and strictly increasing"));
    }
    let per_radius = radii
        .iter()
        .map(|&n| {
            let points = ball_grid(model.dim(), n, config.ball_grid_points);
            let trace = sup_trace(model, &points, t_grid, replicas, config, Some(n))?;
            let survivors_at_max_t = trace.last().map_or(0, |p| p.survivors);
            Ok(RadiusFit {
                radius: n,
                fit: fit_trace(&trace, t_grid).ok(),
                survivors_at_max_t,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = per_radius.last().expect("non-empty radii");
    Ok(Lambda2Estimate {
        fit: last.fit.clone(),
        inconclusive: last.fit.is_none() || last.survivors_at_max_t < MIN_SURVIVORS,
        per_radius,
    })
}

fn check_horizons(horizons: &[f64]) -> Result<()> {
    if horizons.len() < 3 {
        return Err(invalid("horizons", "at least 3 horizons are required"));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(invalid("horizons", "must be positive and strictly increasing"));
    }
    Ok(())
}

/// Gauge trace `E_x e_beta(t)` over increasing horizons with its verdict.
pub fn estimate_gauge(
    model: &ModelSpec,
    x: &[f64],
    horizons: &[f64],
    replicas: usize,
    config: &FkConfig,
) -> Result<DivergenceVerdict> {
    check_horizons(horizons)?;
    let trace = semigroup_trace(model, &ScalarField::one(), x, horizons, replicas, config)?;
    Ok(DivergenceVerdict::classify(trace, &config.rule))
}

/// Truncated potential `E_x int_0^T e_beta(s) g(xi_s) ds` over increasing horizons.
pub fn green_potential(
    model: &ModelSpec,
    g: &ScalarField,
    x: &[f64],
    horizons: &[f64],
    replicas: usize,
    config: &FkConfig,
) -> Result<DivergenceVerdict> {
    check_replicas(replicas)?;
    check_horizons(horizons)?;
    if !g.is_nonnegative() {
        return Err(invalid("g", "must be non-negative"));
    }
    let opts = WalkOptions {
        aux: Some(g),
        ..Default::default()
    };
    let w = walks(model, x, horizons, replicas, config, 0, opts)?;
    let trace = horizons
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let v: Vec<f64> = w.iter().map(|p| p.aux[k]).collect();
            (*t, MCEstimate::from_samples(&v))
        })
        .collect();
    Ok(DivergenceVerdict::classify(trace, &config.rule))
}

/// `sup_x E_x int_0^t |beta(xi_s)| ds` for each small `t`, in the given order.
/// The step is reduced to at most a tenth of the smallest `t`.
pub fn kato_profile(
    model: &ModelSpec,
    small_ts: &[f64],
    x_grid: &[Vec<f64>],
    replicas: usize,
    config: &FkConfig,
) -> Result<Vec<(f64, MCEstimate)>> {
    check_replicas(replicas)?;
    if small_ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(invalid("small_ts", "times must lie in (0, 1]"));
    }
    if x_grid.is_empty() {
        return Err(invalid("x_grid", "at least one point is required"));
    }
    let mut ascending = small_ts.to_vec();
    ascending.sort_by(|a, b| a.total_cmp(b));
    ascending.dedup();
    let t_min = ascending[0];
    let steps_per_min = (t_min / config.dt).ceil().max(10.0);
    let cfg = FkConfig {
        dt: t_min / steps_per_min,
        ..*config
    };
    let per_point = x_grid
        .iter()
        .enumerate()
        .map(|(j, x)| walks(model, x, &ascending, replicas, &cfg, (j as u64) << 32, WalkOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    Ok(small_ts
        .iter()
        .map(|t| {
            let k = ascending.iter().position(|s| s == t).expect("time present");
            let best = per_point
                .iter()
                .map(|w| MCEstimate::from_samples(&w.iter().map(|p| p.abs_beta[k]).collect::<Vec<_>>()))
                .max_by(|a, b| a.mean.total_cmp(&b.mean))
                .expect("non-empty grid");
            (*t, best)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Supercritical,
    Subcritical,
    Critical,
    Inconclusive,
}

/// Estimation budget for [`classify_criticality`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityBudget {
    pub x_grid: Vec<Vec<f64>>,
    pub t_grid: Vec<f64>,
    pub gauge_horizons: Vec<f64>,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub class: Criticality,
    pub lambda_inf: Option<GrowthEstimate>,
    pub lambda_inf_scaled: Option<GrowthEstimate>,
    pub gauge: Option<DivergenceVerdict>,
}

/// Supercritical iff `lambda_inf(beta) > 0`; subcritical when
/// `lambda_inf(beta) = lambda_inf((1+eps) beta) = 0` and the gauge is finite;
/// critical when `lambda_inf(beta) = 0 < lambda_inf((1+eps) beta)`.
/// `beta = 0` is inconclusive because scaling leaves it unchanged.
pub fn classify_criticality(
    model: &ModelSpec,
    epsilon: f64,
    budget: &CriticalityBudget,
    config: &FkConfig,
) -> Result<CriticalityReport> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon", "must lie in (0, 1]"));
    }
    let mut report = CriticalityReport {
        class: Criticality::Inconclusive,
        lambda_inf: None,
        lambda_inf_scaled: None,
        gauge: None,
    };
    if model.beta().is_identically_zero() {
        return Ok(report);
    }
    let zero = |g: &GrowthEstimate| g.rate.abs() <= g.half_width + config.zero_rate_tol;
    let base = estimate_lambda_inf(model, &budget.x_grid, &budget.t_grid, budget.replicas, config)?.fit;
    report.lambda_inf = Some(base.clone());
    if base.rate > base.half_width + config.zero_rate_tol {
        report.class = Criticality::Supercritical;
        return Ok(report);
    }
    if !zero(&base) {
        return Ok(report);
    }
    let scaled_model = model.scaled_beta(1.0 + epsilon)?;
    let scaled = estimate_lambda_inf(&scaled_model, &budget.x_grid, &budget.t_grid, budget.replicas, config)?.fit;
    report.lambda_inf_scaled = Some(scaled.clone());
    if scaled.rate > scaled.half_width + config.zero_rate_tol {
        report.class = Criticality::Critical;
        return Ok(report);
    }
    if zero(&scaled) {
        let origin = vec![0.0; model.dim()];
        let gauge = estimate_gauge(model, &origin, &budget.gauge_horizons, budget.replicas, config)?;
        if gauge.verdict == Verdict::Finite {
            report.class = Criticality::Subcritical;
        }
        report.gauge = Some(gauge);
    }
    Ok(report)
}

/// Growth profile of `sup_x E_x e_beta(t)` for a critical potential under
/// Brownian motion in `d >= 3`: `t`, `t / ln t` or `sqrt t` for `d >= 5`,
/// `d = 4` and `d = 3`.
pub fn critical_profile(d: usize, t: f64) -> Option<f64> {
    match d {
        0..=2 => None,
        3 => Some(t.sqrt()),
        4 => Some(t / t.ln()),
        _ => Some(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog_build, Params};

    fn bm(beta: f64) -> ModelSpec {
        catalog_build("bm_plain", &Params::from([("beta".to_string(), beta)])).unwrap()
    }

    fn est(mean: f64, se: f64) -> MCEstimate {
        let mut e = MCEstimate::from_samples(&[mean]);
        e.std_error = se;
        e
    }

    #[test]
    fn zero_potential_gives_exact_ones() {
        let e = estimate_semigroup(&bm(0.0), &ScalarField::one(), &[0.0], 1.0, 200, &FkConfig::default())
            .unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn replicas_floor() {
        assert!(estimate_semigroup(&bm(0.0), &ScalarField::one(), &[0.0], 1.0, 99, &FkConfig::default()).is_err());
    }

    #[test]
    fn verdict_rules() {
        let rule = DivergenceRule::default();
        let flat = vec![(1.0, est(1.0, 0.0)), (2.0, est(1.0, 0.0)), (4.0, est(1.0, 0.0))];
        assert_eq!(DivergenceVerdict::classify(flat, &rule).verdict, Verdict::Finite);
        let grow = vec![(1.0, est(1.0, 0.0)), (2.0, est(2.0, 0.0)), (4.0, est(4.0, 0.0))];
        assert_eq!(DivergenceVerdict::classify(grow, &rule).verdict, Verdict::Divergent);
        let decay = vec![(1.0, est(1.0, 0.0)), (2.0, est(0.5, 0.0)), (4.0, est(0.3, 0.0))];
        assert_eq!(DivergenceVerdict::classify(decay, &rule).verdict, Verdict::Finite);
        let zig = vec![(1.0, est(1.0, 0.0)), (2.0, est(0.5, 0.0)), (4.0, est(1.5, 0.0))];
        assert_eq!(DivergenceVerdict::classify(zig, &rule).verdict, Verdict::Inconclusive);
        let zeros = vec![(1.0, est(0.0, 0.0)), (2.0, est(0.0, 0.0)), (4.0, est(0.0, 0.0))];
        assert_eq!(DivergenceVerdict::classify(zeros, &rule).verdict, Verdict::Finite);
    }

    #[test]
    fn ball_grid_is_inside() {
        let g = ball_grid(2, 5.0, 9);
        assert_eq!(g.len(), 9);
        assert!(g.iter().all(|x| norm(x) <= 4.0 + 1e-12));
        assert_eq!(g[4], vec![0.0, 0.0]);
    }

    #[test]
    fn zero_beta_is_inconclusive() {
        let budget = CriticalityBudget {
            x_grid: vec![vec![0.0]],
            t_grid: vec![1.0, 2.0, 3.0, 4.0],
            gauge_horizons: vec![1.0, 2.0, 3.0],
            replicas: 100,
        };
        let r = classify_criticality(&bm(0.0), 0.5, &budget, &FkConfig::default()).unwrap();
        assert_eq!(r.class, Criticality::Inconclusive);
    }

    #[test]
    fn kato_constant_potential_is_linear() {
        let prof = kato_profile(&bm(-0.7), &[0.5, 0.1, 0.05], &[vec![0.0]], 100, &FkConfig::default()).unwrap();
        for (t, e) in prof {
            assert!((e.mean - 0.7 * t).abs() < 1e-12, "{t} {}", e.mean);
        }
    }

    #[test]
    fn profile_orders() {
        assert_eq!(critical_profile(5, 10.0), Some(10.0));
        assert_eq!(critical_profile(3, 4.0), Some(2.0));
        assert!(critical_profile(2, 4.0).is_none());
    }
}
