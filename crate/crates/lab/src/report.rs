//! Reports, tolerance checks and CSV tables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superdiff_core::fk::EstimateRow;
use superdiff_core::stats::{GrowthEstimate, MCEstimate};

use crate::defaults::Defaults;
use crate::error::{config_error, Result};

/// A named scalar result; every quantity is also a row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    #[serde(default)]
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    #[serde(default)]
    pub samples: usize,
    /// Verdicts and warnings, `;`-separated.
    #[serde(default)]
    pub flags: String,
}

impl Quantity {
    pub fn scalar(name: impl Into<String>, value: f64) -> Quantity {
        Quantity {
            name: name.into(),
            value,
            std_error: 0.0,
            ci: None,
            samples: 0,
            flags: String::new(),
        }
    }

    pub fn estimate(name: impl Into<String>, e: &MCEstimate) -> Quantity {
        let mut flags = Vec::new();
        if e.truncated {
            flags.push("truncated");
        }
        if e.underflow {
            flags.push("underflow");
        }
        Quantity {
            name: name.into(),
            value: e.mean,
            std_error: e.std_error,
            ci: None,
            samples: e.samples,
            flags: flags.join(";"),
        }
    }

    pub fn growth(name: impl Into<String>, g: &GrowthEstimate) -> Quantity {
        Quantity {
            name: name.into(),
            value: g.rate,
            std_error: 0.0,
            ci: Some((g.rate - g.half_width, g.rate + g.half_width)),
            samples: g.points,
            flags: if g.is_exponential() {
                String::new()
            } else {
                "non_exponential".into()
            },
        }
    }

    /// A frequency with its binomial standard error.
    pub fn frequency(name: impl Into<String>, p: f64, se: f64, trials: usize) -> Quantity {
        Quantity {
            name: name.into(),
            value: p,
            std_error: se,
            ci: None,
            samples: trials,
            flags: String::new(),
        }
    }

    /// Attaches the symmetric interval `value +- z std_error`.
    pub fn with_ci(mut self, z: f64) -> Quantity {
        self.ci = Some((self.value - z * self.std_error, self.value + z * self.std_error));
        self
    }

    pub fn flagged(mut self, flag: &str) -> Quantity {
        if !flag.is_empty() {
            if !self.flags.is_empty() {
                self.flags.push(';');
            }
            self.flags.push_str(flag);
        }
        self
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.split(';').any(|f| f == flag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckRule {
    /// `|value - target| <= z SE`, `z` defaulting to the configured multiplier.
    WithinSe {
        #[serde(default)]
        z: Option<f64>,
    },
    /// `|value - target| <= z SE + rel |target|`.
    WithinSeAndRelative {
        #[serde(default)]
        z: Option<f64>,
        rel: f64,
    },
    Absolute { tol: f64 },
    Relative { tol: f64 },
    /// The quantity's confidence interval contains the target.
    CiContains,
    CiExcludes,
    AtLeast,
    AtMost,
    /// The quantity carries the flag named by `flag`.
    Flag { flag: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub quantity: String,
    #[serde(default)]
    pub target: f64,
    /// Another quantity whose value replaces `target`; standard errors then combine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub rule: CheckRule,
    /// The mathematical statement this check exercises.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub quantity: String,
    pub target: f64,
    pub obtained: f64,
    pub std_error: f64,
    pub rule: CheckRule,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
}

impl CheckSpec {
    pub fn new(quantity: &str, target: f64, rule: CheckRule, claim: &str) -> CheckSpec {
        CheckSpec {
            name: None,
            quantity: quantity.into(),
            target,
            reference: None,
            rule,
            claim: Some(claim.into()),
        }
    }

    /// Compares against another quantity instead of a constant.
    pub fn against(quantity: &str, reference: &str, rule: CheckRule, claim: &str) -> CheckSpec {
        CheckSpec {
            reference: Some(reference.into()),
            ..CheckSpec::new(quantity, 0.0, rule, claim)
        }
    }

    pub fn named(mut self, name: &str) -> CheckSpec {
        self.name = Some(name.into());
        self
    }

    pub fn evaluate(&self, quantities: &[Quantity], defaults: &Defaults, index: usize) -> Result<CheckOutcome> {
        let lookup = |name: &str, field: &str| {
            quantities.iter().find(|q| q.name == name).ok_or_else(|| {
                let known: Vec<&str> = quantities.iter().map(|q| q.name.as_str()).collect();
                config_error(
                    format!("checks[{index}].{field}"),
                    format!("`{name}` is not produced; available: {}", known.join(", ")),
                )
            })
        };
        let q = lookup(&self.quantity, "quantity")?;
        let (target, std_error) = match &self.reference {
            Some(name) => {
                let r = lookup(name, "reference")?;
                (r.value, q.std_error.hypot(r.std_error))
            }
            None => (self.target, q.std_error),
        };
        let gap = (q.value - target).abs();
        let slack = 1e-12 * target.abs().max(1.0);
        let pass = match &self.rule {
            CheckRule::WithinSe { z } => gap <= z.unwrap_or(defaults.se_multiplier) * std_error + slack,
            CheckRule::WithinSeAndRelative { z, rel } => {
                gap <= z.unwrap_or(defaults.se_multiplier) * std_error + rel * target.abs() + slack
            }
            CheckRule::Absolute { tol } => gap <= *tol,
            CheckRule::Relative { tol } => gap <= tol * target.abs(),
            CheckRule::CiContains => q.ci.is_some_and(|(lo, hi)| lo - slack <= target && target <= hi + slack),
            CheckRule::CiExcludes => q.ci.is_some_and(|(lo, hi)| target < lo - slack || hi + slack < target),
            CheckRule::AtLeast => q.value >= target,
            CheckRule::AtMost => q.value <= target,
            CheckRule::Flag { flag } => q.has_flag(flag),
        };
        Ok(CheckOutcome {
            name: self.name.clone().unwrap_or_else(|| self.quantity.clone()),
            quantity: self.quantity.clone(),
            target,
            obtained: q.value,
            std_error,
            rule: self.rule.clone(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            claim: self.claim.clone(),
        })
    }
}

/// A CSV table written to `tables/<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn estimator(name: &str, rows: &[EstimateRow]) -> Table {
        let mut t = Table::new(name, &["quantity", "t_or_horizon", "mean", "std_error", "samples", "flags"]);
        for r in rows {
            t.push(vec![
                r.quantity.clone(),
                r.t_or_horizon.to_string(),
                r.mean.to_string(),
                r.std_error.to_string(),
                r.samples.to_string(),
                r.flags.clone(),
            ]);
        }
        t
    }

    pub fn summary(quantities: &[Quantity]) -> Table {
        let mut t = Table::new(
            "summary",
            &["quantity", "value", "std_error", "ci_low", "ci_high", "samples", "flags"],
        );
        for q in quantities {
            let (lo, hi) = q.ci.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
            t.push(vec![
                q.name.clone(),
                q.value.to_string(),
                q.std_error.to_string(),
                lo,
                hi,
                q.samples.to_string(),
                q.flags.clone(),
            ]);
        }
        t
    }

    pub fn checks(outcomes: &[CheckOutcome]) -> Table {
        let mut t = Table::new("checks", &["check", "quantity", "target", "obtained", "std_error", "verdict"]);
        for c in outcomes {
            t.push(vec![
                c.name.clone(),
                c.quantity.clone(),
                c.target.to_string(),
                c.obtained.to_string(),
                c.std_error.to_string(),
                match c.verdict {
                    Verdict::Pass => "pass".into(),
                    Verdict::Fail => "fail".into(),
                },
            ]);
        }
        t
    }

    /// RFC 4180 with LF line endings.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngProvenance {
    pub generator: String,
    pub seed: u64,
    pub streams: String,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub defaults: Defaults,
    /// The config as run, after command-line overrides.
    pub experiment: serde_json::Value,
    pub kind: String,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<CheckOutcome>,
    pub tables: Vec<String>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
    pub rng: RngProvenance,
}

impl Report {
    /// Writes `report.json` and `tables/*.csv` under `dir`.
    pub fn write(&self, dir: &Path, tables: &[Table]) -> Result<()> {
        let table_dir = dir.join("tables");
        std::fs::create_dir_all(&table_dir)?;
        for t in tables {
            t.write(&table_dir)?;
        }
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        Ok(())
    }
}
