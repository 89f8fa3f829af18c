//! Monte Carlo summaries and exponential growth fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Largest exponent whose `exp` is still a normal `f64`.
const LOG_UNDERFLOW: f64 = -708.0;

/// A Monte Carlo estimate of an expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub std_error: f64,
    pub samples: usize,
    /// A horizon cut or population cap was applied to some sample.
    pub truncated: bool,
    /// The mean is below the representable range; `log_mean` is still valid.
    pub underflow: bool,
    /// `ln(mean)` computed with a max-shift, `-inf` when the mean is not positive.
    pub log_mean: f64,
    /// `std_error / mean`, kept separately because both may underflow.
    pub relative_error: f64,
}

impl MCEstimate {
    pub fn from_samples(samples: &[f64]) -> MCEstimate {
        let (mean, se) = mean_and_se(samples);
        MCEstimate {
            mean,
            std_error: se,
            samples: samples.len(),
            truncated: false,
            underflow: false,
            log_mean: if mean > 0.0 { mean.ln() } else { f64::NEG_INFINITY },
            relative_error: se / mean.abs(),
        }
    }

    /// Estimate of `E[exp(l) * v]` from pairs `(l, v)`, computed with the
    /// largest `l` factored out.
    pub fn from_log_weighted(pairs: &[(f64, f64)]) -> MCEstimate {
        let shift = pairs
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            let mut e = MCEstimate::from_samples(&vec![0.0; pairs.len()]);
            e.underflow = pairs.iter().any(|(l, _)| *l == f64::NEG_INFINITY);
            return e;
        }
        let scaled: Vec<f64> = pairs.iter().map(|(l, v)| (l - shift).exp() * v).collect();
        let (m, se) = mean_and_se(&scaled);
        let factor = shift.exp();
        MCEstimate {
            mean: m * factor,
            std_error: se * factor,
            samples: pairs.len(),
            truncated: false,
            underflow: shift < LOG_UNDERFLOW,
            log_mean: if m > 0.0 { shift + m.ln() } else { f64::NEG_INFINITY },
            relative_error: se / m.abs(),
        }
    }

    /// `|mean - target| <= z * std_error`, with a float slack.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_error + 1e-12 * target.abs().max(1.0)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance and its standard error under finite fourth moments.
pub fn variance_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let se = ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    (var, se)
}

/// Linear-interpolated empirical quantile, `q` in `[0, 1]`.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Binomial proportion with its standard error.
pub fn proportion(successes: usize, trials: usize) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// An exponential-rate fit of a positive series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub rate: f64,
    /// Half-width of the 95% confidence interval for the rate.
    pub half_width: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub intercept: f64,
    pub points: usize,
}

impl GrowthEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (self.rate - value).abs() <= self.half_width + 1e-9 * value.abs().max(1.0)
    }

    /// Fits with `r_squared < 0.8` are not trusted as exponential.
    pub fn is_exponential(&self) -> bool {
        self.r_squared >= 0.8
    }
}

/// OLS fit of `ln(value)` against `t` over the points with `t` in `window`.
pub fn growth_fit(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<GrowthEstimate> {
    let mut logs = Vec::with_capacity(series.len());
    for &(t, v) in series.iter().filter(|(t, _)| in_window(*t, window)) {
        if !(v > 0.0) {
            return Err(Error::NonPositiveValue { time: t, value: v });
        }
        logs.push((t, v.ln()));
    }
    log_growth_fit(&logs, None)
}

/// OLS fit of an already log-transformed series.
pub fn log_growth_fit(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<GrowthEstimate> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| in_window(*t, window))
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    if let Some(&(t, l)) = pts.iter().find(|(_, l)| !l.is_finite()) {
        return Err(Error::NonPositiveValue { time: t, value: l.exp() });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    // Residuals at rounding level count as an exact fit.
    let exact = sse <= 1e-24 * (syy + ym * ym).max(1.0) * n;
    let r_squared = if exact || syy == 0.0 { 1.0 } else { (1.0 - sse / syy).max(0.0) };
    let half_width = if exact {
        0.0
    } else {
        let se = (sse / (n - 2.0) / sxx).sqrt();
        let tq = StudentsT::new(0.0, 1.0, n - 2.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        tq * se
    };
    Ok(GrowthEstimate {
        rate: slope,
        half_width,
        window: (pts[0].0, pts[pts.len() - 1].0),
        r_squared,
        intercept,
        points: pts.len(),
    })
}

/// Drops the first 20% of a time grid.
pub fn burn_in_window(t_grid: &[f64]) -> (f64, f64) {
    let skip = t_grid.len() / 5;
    (t_grid[skip], t_grid[t_grid.len() - 1])
}

fn in_window(t: f64, window: Option<(f64, f64)>) -> bool {
    window.is_none_or(|(lo, hi)| t >= lo && t <= hi)
}
