use super::field::ScalarField;
use super::spec::{BranchingSpec, DiffusionMatrix, DiffusionSpec, DriftField, ModelSpec};
use crate::error::{Error, Result};

/// Rewrites `A(u) = Lu + beta u - k u^2` as `A^h(u) = A(hu) / h`.
///
/// The drift gains `a grad log h`, the intensity becomes `k h` and the
/// potential becomes `beta + Lh / h`. The potential is computed symbolically
/// when `a` is constant, `grad log h` is constant and the drift is constant;
/// otherwise `lambda` is used as the declared value of `beta + Lh / h`.
pub fn h_transform(model: &ModelSpec, h: &ScalarField, lambda: Option<f64>) -> Result<ModelSpec> {
    h.check()?;
    if !h.is_positive() {
        return Err(Error::UnsupportedTransform(format!(
            "h of kind `{}` is not positive at family level",
            h.kind_name()
        )));
    }
    if h.as_constant() == Some(1.0) {
        return Ok(model.clone());
    }
    let diff = &model.diffusion;
    let d = diff.d;
    let a = match &diff.a {
        DiffusionMatrix::Identity => identity(d),
        DiffusionMatrix::Constant { matrix } => matrix.clone(),
        DiffusionMatrix::RadialScalar { .. } => {
            return Err(Error::UnsupportedTransform(
                "radial-scalar diffusion matrix".into(),
            ))
        }
    };
    let (gamma, offset) = h.log_gradient_affine(d).ok_or_else(|| {
        Error::UnsupportedTransform(format!("grad log h is not affine for `{}`", h.kind_name()))
    })?;
    let shift = mat_vec(&a, &offset);
    let drift = shifted_drift(&diff.drift, gamma, &shift)?;

    let symbolic = if gamma == 0.0 {
        match &diff.drift {
            DriftField::Zero => Some(0.5 * dot(&offset, &shift)),
            DriftField::Constant { vector } => Some(0.5 * dot(&offset, &shift) + dot(vector, &offset)),
            _ => None,
        }
    } else {
        None
    };
    let beta = match (symbolic, lambda) {
        (Some(lh), _) if lh == 0.0 => model.branching.beta.clone(),
        (Some(lh), _) => model.branching.beta.add(&ScalarField::constant(lh)),
        (None, Some(l)) => ScalarField::constant(l),
        (None, None) => {
            return Err(Error::UnsupportedTransform(
                "Lh/h is not a closed-form constant and no harmonic value was declared".into(),
            ))
        }
    };
    let k = model.branching.k.mul(h);
    let diffusion = DiffusionSpec::new(d, drift, diff.a.clone(), diff.q.clone())?;
    ModelSpec::new(diffusion, BranchingSpec::new(beta, k)?, None)
}

fn shifted_drift(drift: &DriftField, gamma: f64, shift: &[f64]) -> Result<DriftField> {
    let nonzero_shift = shift.iter().any(|v| *v != 0.0);
    Ok(match drift {
        _ if gamma == 0.0 && !nonzero_shift => drift.clone(),
        DriftField::Zero if gamma == 0.0 => DriftField::Constant {
            vector: shift.to_vec(),
        },
        DriftField::Zero if !nonzero_shift => DriftField::Linear { gamma },
        DriftField::Zero => DriftField::Affine {
            gamma,
            offset: shift.to_vec(),
        },
        DriftField::Constant { vector } => {
            let v: Vec<f64> = vector.iter().zip(shift).map(|(a, b)| a + b).collect();
            if gamma == 0.0 {
                DriftField::Constant { vector: v }
            } else {
                DriftField::Affine { gamma, offset: v }
            }
        }
        DriftField::Linear { gamma: g } if !nonzero_shift => DriftField::Linear { gamma: g + gamma },
        DriftField::Linear { gamma: g } => DriftField::Affine {
            gamma: g + gamma,
            offset: shift.to_vec(),
        },
        DriftField::Affine { gamma: g, offset } => DriftField::Affine {
            gamma: g + gamma,
            offset: offset.iter().zip(shift).map(|(a, b)| a + b).collect(),
        },
        DriftField::Gradient => {
            return Err(Error::UnsupportedTransform(
                "gradient drift cannot absorb a log-gradient shift".into(),
            ))
        }
    })
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
