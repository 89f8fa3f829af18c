use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// The versioned statistical thresholds; echoed into every report.
pub const DEFAULTS_JSON: &str = include_str!("../defaults.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub version: String,
    /// Standard errors allowed between an estimate and its target.
    pub se_multiplier: f64,
    pub ci_level: f64,
    /// Weak-extinction threshold as a fraction of the initial mass.
    pub eta_fraction: f64,
    pub pde_relative_tolerance: f64,
    pub min_survivors: usize,
    /// Required frequency for "in at least this share of replicas" checks.
    pub frequency_threshold: f64,
    /// Multiplicative band for qualitative asymptotics.
    pub band_factor: f64,
}

impl Defaults {
    pub fn load() -> Defaults {
        serde_json::from_str(DEFAULTS_JSON).expect("bundled defaults parse")
    }

    /// Two-sided normal quantile for `ci_level`.
    pub fn ci_z(&self) -> f64 {
        Normal::standard().inverse_cdf(0.5 + 0.5 * self.ci_level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults_load() {
        let d = Defaults::load();
        assert_eq!(d.se_multiplier, 3.0);
        assert!((d.ci_z() - 1.959964).abs() < 1e-5);
    }
}
