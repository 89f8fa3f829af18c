use std::collections::BTreeMap;

use super::field::ScalarField;
use super::spec::{BranchingSpec, DiffusionMatrix, DiffusionSpec, DriftField, ModelSpec, Reference};
use crate::error::{invalid, Error, Result};

pub type Params = BTreeMap<String, f64>;

pub const CATALOG: [&str; 6] = [
    "drift_bm",
    "ou_outward",
    "bm_plain",
    "planar_annihilation",
    "compact_annihilation_1d",
    "htransform_survival",
];

fn param(params: &Params, name: &str, default: Option<f64>) -> Result<f64> {
    match params.get(name).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => Err(invalid(name, "must be finite")),
        None => Err(invalid(name, "required parameter missing")),
    }
}

fn check_known(params: &Params, known: &[&str]) -> Result<()> {
    match params.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(invalid(k, format!("not a parameter of this entry (expected one of {known:?})"))),
        None => Ok(()),
    }
}

/// Branching intensity from either `k` (constant) or `k_decay` (`exp(-c|x|)`).
fn intensity(params: &Params) -> Result<ScalarField> {
    match (params.get("k"), params.get("k_decay")) {
        (Some(_), Some(_)) => Err(invalid("k_decay", "give either k or k_decay, not both")),
        (_, Some(&c)) if c > 0.0 => Ok(ScalarField::TwoSidedExp { rate: c }),
        (_, Some(_)) => Err(invalid("k_decay", "must be positive")),
        (k, None) => {
            let k = k.copied().unwrap_or(1.0);
            if k < 0.0 {
                return Err(invalid("k", "must be non-negative"));
            }
            Ok(ScalarField::constant(k))
        }
    }
}

fn reference(lambda2: f64, lambda_inf: f64, notes: &str) -> Option<Reference> {
    Some(Reference {
        lambda2,
        lambda_inf,
        notes: notes.to_string(),
    })
}

fn dimension(params: &Params, default: f64) -> Result<usize> {
    let d = param(params, "d", Some(default))?;
    if d < 1.0 || d.fract() != 0.0 {
        return Err(invalid("d", "must be a positive integer"));
    }
    Ok(d as usize)
}

/// Builds a named example model.
///
/// | name | generator | beta | k |
/// |---|---|---|---|
/// | `drift_bm` | `1/2 u'' - b0 u'` | `beta >= 0` | `k` or `exp(-k_decay |x|)` |
/// | `ou_outward` | `1/2 Laplacian + gamma x . grad` | `beta >= 0` | `k` |
/// | `bm_plain` | `1/2 Laplacian` | `beta` | `k` |
/// | `planar_annihilation` | planar `1/2 Laplacian` | `-alpha 1_{|x| <= radius}` | `k` |
/// | `compact_annihilation_1d` | `1/2 u''` | tent, `-alpha` at 0, zero beyond `radius` | `k` |
/// | `htransform_survival` | `1/2 u''` | `-B` | `exp(-sqrt(2(B+eps)) x)` |
pub fn catalog_build(name: &str, params: &Params) -> Result<ModelSpec> {
    match name {
        "drift_bm" => {
            check_known(params, &["b0", "beta", "k", "k_decay"])?;
            let b0 = param(params, "b0", Some(1.0))?;
            let beta = param(params, "beta", Some(0.0))?;
            if b0 <= 0.0 {
                return Err(invalid("b0", "must be positive"));
            }
            if beta < 0.0 {
                return Err(invalid("beta", "must be non-negative"));
            }
            let diffusion = DiffusionSpec::new(
                1,
                DriftField::Constant { vector: vec![-b0] },
                DiffusionMatrix::Identity,
                None,
            )?;
            ModelSpec::new(
                diffusion,
                BranchingSpec::new(ScalarField::constant(beta), intensity(params)?)?,
                reference(
                    beta - b0 * b0 / 2.0,
                    beta,
                    "Green function G(x,y) = exp(-2 b0 (y-x)^+) / b0; harmonic h = 1",
                ),
            )
        }
        "ou_outward" => {
            check_known(params, &["gamma", "d", "beta", "k"])?;
            let gamma = param(params, "gamma", Some(1.0))?;
            let d = dimension(params, 1.0)?;
            let beta = param(params, "beta", Some(0.0))?;
            if gamma <= 0.0 {
                return Err(invalid("gamma", "must be positive"));
            }
            if beta < 0.0 {
                return Err(invalid("beta", "must be non-negative"));
            }
            let diffusion = DiffusionSpec::new(
                d,
                DriftField::Linear { gamma },
                DiffusionMatrix::Identity,
                None,
            )?;
            ModelSpec::new(
                diffusion,
                BranchingSpec::new(ScalarField::constant(beta), intensity(params)?)?,
                reference(beta - gamma * d as f64, beta, "local extinction iff beta in [0, gamma d]"),
            )
        }
        "bm_plain" => {
            check_known(params, &["d", "beta", "k", "k_decay"])?;
            let d = dimension(params, 1.0)?;
            let beta = param(params, "beta", Some(0.0))?;
            ModelSpec::new(
                DiffusionSpec::brownian(d),
                BranchingSpec::new(ScalarField::constant(beta), intensity(params)?)?,
                reference(beta, beta, "constant potential"),
            )
        }
        "planar_annihilation" => {
            check_known(params, &["alpha", "radius", "k"])?;
            let alpha = param(params, "alpha", Some(1.0))?;
            let radius = param(params, "radius", Some(1.0))?;
            if alpha <= 0.0 {
                return Err(invalid("alpha", "must be positive"));
            }
            if radius <= 0.0 {
                return Err(invalid("radius", "must be positive"));
            }
            ModelSpec::new(
                DiffusionSpec::brownian(2),
                BranchingSpec::new(
                    ScalarField::BallIndicator { radius, level: -alpha },
                    intensity(params)?,
                )?,
                reference(0.0, 0.0, "subcritical; gauge decays like c / log t"),
            )
        }
        "compact_annihilation_1d" => {
            check_known(params, &["alpha", "radius", "k"])?;
            let alpha = param(params, "alpha", Some(1.0))?;
            let radius = param(params, "radius", Some(1.0))?;
            if alpha <= 0.0 {
                return Err(invalid("alpha", "must be positive"));
            }
            if radius <= 0.0 {
                return Err(invalid("radius", "must be positive"));
            }
            let beta = ScalarField::RadialTable {
                radii: vec![0.0, radius],
                values: vec![-alpha, 0.0],
            };
            ModelSpec::new(
                DiffusionSpec::brownian(1),
                BranchingSpec::new(beta, intensity(params)?)?,
                reference(0.0, 0.0, "subcritical; weak extinction"),
            )
        }
        "htransform_survival" => {
            check_known(params, &["B", "eps"])?;
            let b = param(params, "B", Some(0.1))?;
            let eps = param(params, "eps", Some(0.1))?;
            if b <= 0.0 {
                return Err(invalid("B", "must be positive"));
            }
            if eps <= 0.0 {
                return Err(invalid("eps", "must be positive"));
            }
            let c = (2.0 * (b + eps)).sqrt();
            ModelSpec::new(
                DiffusionSpec::brownian(1),
                BranchingSpec::new(ScalarField::constant(-b), ScalarField::Exponential { rate: -c })?,
                reference(-b, -b, "weak and local extinction with positive survival probability"),
            )
        }
        other => Err(Error::UnknownCatalogEntry(other.to_string())),
    }
}

/// A positive `h` with `(L + beta - lambda) h = 0` for the entry, as `(h, lambda)`.
pub fn catalog_harmonic(name: &str, params: &Params) -> Option<(ScalarField, f64)> {
    match name {
        "drift_bm" | "ou_outward" | "bm_plain" => {
            Some((ScalarField::one(), params.get("beta").copied().unwrap_or(0.0)))
        }
        "htransform_survival" => {
            let b = params.get("B").copied().unwrap_or(0.1);
            let eps = params.get("eps").copied().unwrap_or(0.1);
            Some((ScalarField::Exponential { rate: (2.0 * (b + eps)).sqrt() }, eps))
        }
        _ => None,
    }
}
