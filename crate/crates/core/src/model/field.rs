//! Closed-form scalar fields used for potentials, branching rates, test
//! functions and harmonic weights.
//!
//! Every family has an analytic gradient, a family-level sign analysis and an
//! upper bound when one exists, so the h-transform and the particle rate
//! bounds can be computed without sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar function on R^d drawn from a fixed set of analytic families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    /// `value` everywhere.
    Constant { value: f64 },
    /// `level` on the closed ball `|x| <= radius`, zero outside.
    BallIndicator { radius: f64, level: f64 },
    /// `exp(rate * x_1)`.
    Exponential { rate: f64 },
    /// `exp(-rate * |x|)`.
    TwoSidedExp { rate: f64 },
    /// `exp(-rate * |x|^2)`.
    Gaussian { rate: f64 },
    /// `|x|^(-rho)` for `|x| >= 1`, one inside the unit ball.
    Power { rho: f64 },
    /// Piecewise-linear function of `|x|`, constant beyond the table ends.
    RadialTable { radii: Vec<f64>, values: Vec<f64> },
    Sum { terms: Vec<ScalarField> },
    Product { factors: Vec<ScalarField> },
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn zero() -> Self {
        ScalarField::Constant { value: 0.0 }
    }

    pub fn one() -> Self {
        ScalarField::Constant { value: 1.0 }
    }

    /// Checks structural parameter constraints of the family.
    pub fn check(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::FieldCheck(format!("{}: {reason}", self.kind_name())));
        match self {
            ScalarField::Constant { value } if !value.is_finite() => bad("value must be finite"),
            ScalarField::BallIndicator { radius, level } => {
                if !(radius.is_finite() && *radius > 0.0) || !level.is_finite() {
                    return bad("radius must be positive and level finite");
                }
                Ok(())
            }
            ScalarField::Exponential { rate }
            | ScalarField::TwoSidedExp { rate }
            | ScalarField::Gaussian { rate }
                if !rate.is_finite() =>
            {
                bad("rate must be finite")
            }
            ScalarField::Power { rho } if !(rho.is_finite() && *rho >= 0.0) => {
                bad("rho must be finite and non-negative")
            }
            ScalarField::RadialTable { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return bad("radii and values must be non-empty and of equal length");
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
                    return bad("radii must be non-negative and strictly increasing");
                }
                if values.iter().chain(radii.iter()).any(|v| !v.is_finite()) {
                    return bad("table entries must be finite");
                }
                Ok(())
            }
            ScalarField::Sum { terms } => terms.iter().try_for_each(|t| t.check()),
            ScalarField::Product { factors } => factors.iter().try_for_each(|f| f.check()),
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ScalarField::Constant { .. } => "constant",
            ScalarField::BallIndicator { .. } => "ball_indicator",
            ScalarField::Exponential { .. } => "exponential",
            ScalarField::TwoSidedExp { .. } => "two_sided_exp",
            ScalarField::Gaussian { .. } => "gaussian",
            ScalarField::Power { .. } => "power",
            ScalarField::RadialTable { .. } => "radial_table",
            ScalarField::Sum { .. } => "sum",
            ScalarField::Product { .. } => "product",
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::BallIndicator { radius, level } => {
                if norm(x) <= *radius {
                    *level
                } else {
                    0.0
                }
            }
            ScalarField::Exponential { rate } => (rate * x[0]).exp(),
            ScalarField::TwoSidedExp { rate } => (-rate * norm(x)).exp(),
            ScalarField::Gaussian { rate } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-rate * r2).exp()
            }
            ScalarField::Power { rho } => {
                let r = norm(x);
                if r >= 1.0 {
                    r.powf(-rho)
                } else {
                    1.0
                }
            }
            ScalarField::RadialTable { radii, values } => table_eval(radii, values, norm(x)).0,
            ScalarField::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
            ScalarField::Product { factors } => factors.iter().map(|f| f.eval(x)).product(),
        }
    }

    /// Writes the gradient at `x` into `out` (which must have length `x.len()`).
    /// Indicator jumps and kinks at the origin contribute zero.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self {
            ScalarField::Constant { .. } | ScalarField::BallIndicator { .. } => {}
            ScalarField::Exponential { rate } => out[0] = rate * (rate * x[0]).exp(),
            ScalarField::TwoSidedExp { rate } => {
                let r = norm(x);
                if r > 0.0 {
                    let s = -rate * (-rate * r).exp() / r;
                    out.iter_mut().zip(x).for_each(|(o, xi)| *o = s * xi);
                }
            }
            ScalarField::Gaussian { rate } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let s = -2.0 * rate * (-rate * r2).exp();
                out.iter_mut().zip(x).for_each(|(o, xi)| *o = s * xi);
            }
            ScalarField::Power { rho } => {
                let r = norm(x);
                if r > 1.0 {
                    let s = -rho * r.powf(-rho - 2.0);
                    out.iter_mut().zip(x).for_each(|(o, xi)| *o = s * xi);
                }
            }
            ScalarField::RadialTable { radii, values } => {
                let r = norm(x);
                if r > 0.0 {
                    let slope = table_eval(radii, values, r).1;
                    out.iter_mut().zip(x).for_each(|(o, xi)| *o = slope * xi / r);
                }
            }
            ScalarField::Sum { terms } => {
                let mut tmp = vec![0.0; x.len()];
                for t in terms {
                    t.gradient(x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, g)| *o += g);
                }
            }
            ScalarField::Product { factors } => {
                let vals: Vec<f64> = factors.iter().map(|f| f.eval(x)).collect();
                let mut tmp = vec![0.0; x.len()];
                for (i, f) in factors.iter().enumerate() {
                    let others: f64 = vals
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| v)
                        .product();
                    f.gradient(x, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, g)| *o += others * g);
                }
            }
        }
    }

    /// Family-level sign analysis: `true` when the field is provably `>= 0`.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            ScalarField::Constant { value } => *value >= 0.0,
            ScalarField::BallIndicator { level, .. } => *level >= 0.0,
            ScalarField::Exponential { .. }
            | ScalarField::TwoSidedExp { .. }
            | ScalarField::Gaussian { .. }
            | ScalarField::Power { .. } => true,
            ScalarField::RadialTable { values, .. } => values.iter().all(|v| *v >= 0.0),
            ScalarField::Sum { terms } => terms.iter().all(|t| t.is_nonnegative()),
            ScalarField::Product { factors } => factors.iter().all(|f| f.is_nonnegative()),
        }
    }

    /// Family-level strict positivity (needed for h-transform weights).
    pub fn is_positive(&self) -> bool {
        match self {
            ScalarField::Constant { value } => *value > 0.0,
            ScalarField::BallIndicator { .. } => false,
            ScalarField::Exponential { .. } | ScalarField::Power { .. } => true,
            ScalarField::TwoSidedExp { .. } | ScalarField::Gaussian { .. } => true,
            ScalarField::RadialTable { values, .. } => values.iter().all(|v| *v > 0.0),
            ScalarField::Sum { terms } => {
                terms.iter().all(|t| t.is_nonnegative()) && terms.iter().any(|t| t.is_positive())
            }
            ScalarField::Product { factors } => factors.iter().all(|f| f.is_positive()),
        }
    }

    /// Family-level supremum bound, `None` when the family is unbounded above.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            ScalarField::Constant { value } => Some(*value),
            ScalarField::BallIndicator { level, .. } => Some(level.max(0.0)),
            ScalarField::Exponential { rate } => (*rate == 0.0).then_some(1.0),
            ScalarField::TwoSidedExp { rate } | ScalarField::Gaussian { rate } => {
                (*rate >= 0.0).then_some(1.0)
            }
            ScalarField::Power { .. } => Some(1.0),
            ScalarField::RadialTable { values, .. } => {
                values.iter().copied().reduce(f64::max)
            }
            ScalarField::Sum { terms } => terms.iter().map(|t| t.upper_bound()).sum(),
            ScalarField::Product { factors } => {
                if factors.iter().all(|f| f.is_nonnegative()) {
                    factors.iter().map(|f| f.upper_bound()).product()
                } else {
                    None
                }
            }
        }
    }

    /// Returns the value when the field is constant at family level.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant { value } => Some(*value),
            ScalarField::Exponential { rate } if *rate == 0.0 => Some(1.0),
            ScalarField::TwoSidedExp { rate } | ScalarField::Gaussian { rate } if *rate == 0.0 => {
                Some(1.0)
            }
            ScalarField::Power { rho } if *rho == 0.0 => Some(1.0),
            ScalarField::RadialTable { values, .. } if values.iter().all(|v| *v == values[0]) => {
                Some(values[0])
            }
            ScalarField::Sum { terms } => terms.iter().map(|t| t.as_constant()).sum(),
            ScalarField::Product { factors } => factors.iter().map(|f| f.as_constant()).product(),
            _ => None,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// `true` when the field depends on `x` only through `|x|`.
    pub fn is_radial(&self) -> bool {
        match self {
            ScalarField::Exponential { rate } => *rate == 0.0,
            ScalarField::Sum { terms } => terms.iter().all(|t| t.is_radial()),
            ScalarField::Product { factors } => factors.iter().all(|f| f.is_radial()),
            _ => true,
        }
    }

    /// If `grad log(self)` is affine, `gamma * x + offset`, returns `(gamma, offset)`.
    pub fn log_gradient_affine(&self, dim: usize) -> Option<(f64, Vec<f64>)> {
        match self {
            ScalarField::Constant { value } if *value > 0.0 => Some((0.0, vec![0.0; dim])),
            ScalarField::Exponential { rate } => {
                let mut o = vec![0.0; dim];
                o[0] = *rate;
                Some((0.0, o))
            }
            ScalarField::Gaussian { rate } => Some((-2.0 * rate, vec![0.0; dim])),
            ScalarField::Product { factors } => {
                let mut gamma = 0.0;
                let mut offset = vec![0.0; dim];
                for f in factors {
                    let (g, o) = f.log_gradient_affine(dim)?;
                    gamma += g;
                    offset.iter_mut().zip(&o).for_each(|(a, b)| *a += b);
                }
                Some((gamma, offset))
            }
            _ => None,
        }
    }

    /// Product with algebraic simplification: constants are folded and
    /// exponentials in `x_1` merge their rates.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let mut coeff = 1.0;
        let mut rate = 0.0;
        let mut has_exp = false;
        let mut rest = Vec::new();
        let mut push = |f: &ScalarField, rest: &mut Vec<ScalarField>| match f {
            ScalarField::Constant { value } => coeff *= value,
            ScalarField::Exponential { rate: r } => {
                rate += r;
                has_exp = true;
            }
            other => rest.push(other.clone()),
        };
        for f in [self, other] {
            match f {
                ScalarField::Product { factors } => {
                    for g in factors {
                        push(g, &mut rest);
                    }
                }
                g => push(g, &mut rest),
            }
        }
        if coeff == 0.0 {
            return ScalarField::zero();
        }
        let mut factors = Vec::new();
        if coeff != 1.0 || (rest.is_empty() && (!has_exp || rate == 0.0)) {
            factors.push(ScalarField::Constant { value: coeff });
        }
        if has_exp && rate != 0.0 {
            factors.push(ScalarField::Exponential { rate });
        }
        factors.extend(rest);
        if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            ScalarField::Product { factors }
        }
    }

    /// Sum with constant folding.
    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let mut constant = 0.0;
        let mut rest = Vec::new();
        for f in [self, other] {
            let items: Vec<&ScalarField> = match f {
                ScalarField::Sum { terms } => terms.iter().collect(),
                g => vec![g],
            };
            for g in items {
                match g {
                    ScalarField::Constant { value } => constant += value,
                    other => rest.push(other.clone()),
                }
            }
        }
        if rest.is_empty() {
            return ScalarField::Constant { value: constant };
        }
        if constant != 0.0 {
            rest.insert(0, ScalarField::Constant { value: constant });
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            ScalarField::Sum { terms: rest }
        }
    }

    /// `c` times the field, folded into the family where it has a level so
    /// that sign information and bounds survive.
    pub fn scale(&self, c: f64) -> ScalarField {
        match self {
            ScalarField::BallIndicator { radius, level } if c != 0.0 => ScalarField::BallIndicator {
                radius: *radius,
                level: c * level,
            },
            ScalarField::RadialTable { radii, values } => ScalarField::RadialTable {
                radii: radii.clone(),
                values: values.iter().map(|v| c * v).collect(),
            },
            ScalarField::Sum { terms } if c != 0.0 => ScalarField::Sum {
                terms: terms.iter().map(|t| t.scale(c)).collect(),
            },
            _ => ScalarField::Constant { value: c }.mul(self),
        }
    }
}

/// Linear interpolation in a radial table; returns `(value, slope)`.
fn table_eval(radii: &[f64], values: &[f64], r: f64) -> (f64, f64) {
    let n = radii.len();
    if r <= radii[0] {
        return (values[0], 0.0);
    }
    if r >= radii[n - 1] {
        return (values[n - 1], 0.0);
    }
    let i = radii.partition_point(|&ri| ri <= r) - 1;
    let w = (r - radii[i]) / (radii[i + 1] - radii[i]);
    let slope = (values[i + 1] - values[i]) / (radii[i + 1] - radii[i]);
    (values[i] + w * (values[i + 1] - values[i]), slope)
}

/// Uniform probe grid on `[-half_width, half_width]^d` with at most
/// `max_points` points.
pub fn probe_grid(dim: usize, half_width: f64, max_points: usize) -> Vec<Vec<f64>> {
    let per_axis = ((max_points as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64)
        .collect();
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let v = axis[idx % per_axis];
                    idx /= per_axis;
                    v
                })
                .collect()
        })
        .collect()
}
