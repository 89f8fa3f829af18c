use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::field::{probe_grid, ScalarField};
use crate::error::{invalid, Error, Result};

const PROBE_HALF_WIDTH: f64 = 20.0;
const PROBE_MAX_POINTS: usize = 10_000;
/// Largest `|b(x)| / (1 + |x|)` accepted on the probe grid.
const DRIFT_GROWTH_LIMIT: f64 = 1e6;

/// Drift vector field `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftField {
    Zero,
    Constant { vector: Vec<f64> },
    /// `gamma * x`.
    Linear { gamma: f64 },
    /// `gamma * x + offset`.
    Affine { gamma: f64, offset: Vec<f64> },
    /// `a(x) grad Q(x)` for the diffusion's `q` field.
    Gradient,
}

/// Diffusion matrix `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionMatrix {
    Identity,
    Constant { matrix: Vec<Vec<f64>> },
    /// `s(|x|) * I` for a positive radial field `s`.
    RadialScalar { s: ScalarField },
}

/// The generator `L = 1/2 div(a grad) + b . grad` on R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSpec {
    pub d: usize,
    pub drift: DriftField,
    pub a: DiffusionMatrix,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ScalarField>,
    #[serde(skip)]
    cache: SigmaCache,
}

#[derive(Debug, Clone, Default)]
struct SigmaCache {
    sigma: Option<Vec<f64>>,
    a_flat: Option<Vec<f64>>,
}

impl PartialEq for SigmaCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl DiffusionSpec {
    pub fn new(d: usize, drift: DriftField, a: DiffusionMatrix, q: Option<ScalarField>) -> Result<Self> {
        let mut spec = DiffusionSpec {
            d,
            drift,
            a,
            q,
            cache: SigmaCache::default(),
        };
        spec.prepare()?;
        Ok(spec)
    }

    /// Standard Brownian motion generator `1/2 Laplacian`.
    pub fn brownian(d: usize) -> Self {
        DiffusionSpec::new(d, DriftField::Zero, DiffusionMatrix::Identity, None)
            .expect("brownian spec is valid")
    }

    /// Validates the coefficients and caches the constant square root of `a`.
    pub fn prepare(&mut self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "dimension must be positive"));
        }
        match &self.drift {
            DriftField::Constant { vector } if vector.len() != self.d => {
                return Err(invalid("drift.vector", "length must equal d"))
            }
            DriftField::Affine { offset, .. } if offset.len() != self.d => {
                return Err(invalid("drift.offset", "length must equal d"))
            }
            DriftField::Gradient if self.q.is_none() => {
                return Err(invalid("Q", "gradient drift requires Q"))
            }
            _ => {}
        }
        if let Some(q) = &self.q {
            q.check()?;
        }
        self.cache = SigmaCache::default();
        match &self.a {
            DiffusionMatrix::Identity => {}
            DiffusionMatrix::Constant { matrix } => {
                let d = self.d;
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                    return Err(invalid("a.matrix", "must be d x d"));
                }
                let m = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
                if (0..d).any(|i| (0..d).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12)) {
                    return Err(invalid("a.matrix", "must be symmetric"));
                }
                let eig = SymmetricEigen::new(m.clone());
                if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
                    return Err(invalid("a.matrix", "must be positive definite"));
                }
                let sqrt_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
                let sigma = &eig.eigenvectors * sqrt_vals * eig.eigenvectors.transpose();
                self.cache.sigma = Some((0..d * d).map(|k| sigma[(k / d, k % d)]).collect());
                self.cache.a_flat = Some((0..d * d).map(|k| m[(k / d, k % d)]).collect());
            }
            DiffusionMatrix::RadialScalar { s } => {
                s.check()?;
                if !s.is_radial() {
                    return Err(invalid("a.s", "radial scalar must be a radial field"));
                }
            }
        }
        self.validate_probe()
    }

    fn validate_probe(&self) -> Result<()> {
        let mut b = vec![0.0; self.d];
        let mut growth: f64 = 0.0;
        for x in probe_grid(self.d, PROBE_HALF_WIDTH, PROBE_MAX_POINTS) {
            if let DiffusionMatrix::RadialScalar { s } = &self.a {
                let v = s.eval(&x);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::FieldCheck(format!(
                        "diffusion scalar not uniformly elliptic at {x:?}: {v}"
                    )));
                }
            }
            self.drift_at(&x, &mut b);
            let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !nb.is_finite() {
                return Err(Error::FieldCheck(format!("drift not finite at {x:?}")));
            }
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            growth = growth.max(nb / (1.0 + nx));
        }
        if growth > DRIFT_GROWTH_LIMIT {
            return Err(Error::FieldCheck(format!(
                "drift grows faster than linearly on the probe grid (ratio {growth:e})"
            )));
        }
        Ok(())
    }

    /// Scalar value of `a(x)` when `a` is a multiple of the identity.
    pub fn isotropic_scale(&self, x: &[f64]) -> Option<f64> {
        match &self.a {
            DiffusionMatrix::Identity => Some(1.0),
            DiffusionMatrix::RadialScalar { s } => Some(s.eval(x)),
            DiffusionMatrix::Constant { matrix } => {
                let c = matrix[0][0];
                let iso = matrix.iter().enumerate().all(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .all(|(j, v)| if i == j { *v == c } else { *v == 0.0 })
                });
                iso.then_some(c)
            }
        }
    }

    /// `a(x)` as a flat row-major d x d matrix.
    pub fn a_at(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        match &self.a {
            DiffusionMatrix::Identity => {
                out.iter_mut().for_each(|v| *v = 0.0);
                (0..d).for_each(|i| out[i * d + i] = 1.0);
            }
            DiffusionMatrix::Constant { .. } => {
                out.copy_from_slice(self.cache.a_flat.as_ref().expect("prepared spec"))
            }
            DiffusionMatrix::RadialScalar { s } => {
                let v = s.eval(x);
                out.iter_mut().for_each(|o| *o = 0.0);
                (0..d).for_each(|i| out[i * d + i] = v);
            }
        }
    }

    /// The drift coefficient `b(x)` of the generator.
    pub fn drift_at(&self, x: &[f64], out: &mut [f64]) {
        match &self.drift {
            DriftField::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            DriftField::Constant { vector } => out.copy_from_slice(vector),
            DriftField::Linear { gamma } => {
                out.iter_mut().zip(x).for_each(|(o, xi)| *o = gamma * xi)
            }
            DriftField::Affine { gamma, offset } => out
                .iter_mut()
                .zip(x.iter().zip(offset))
                .for_each(|(o, (xi, oi))| *o = gamma * xi + oi),
            DriftField::Gradient => {
                let q = self.q.as_ref().expect("gradient drift requires Q");
                let mut g = vec![0.0; self.d];
                q.gradient(x, &mut g);
                self.apply_a(x, &g, out);
            }
        }
    }

    /// Drift of the Ito SDE whose generator is `L`: `b + 1/2 div a`.
    pub fn sde_drift_at(&self, x: &[f64], out: &mut [f64]) {
        self.drift_at(x, out);
        if let DiffusionMatrix::RadialScalar { s } = &self.a {
            let mut g = vec![0.0; self.d];
            s.gradient(x, &mut g);
            out.iter_mut().zip(&g).for_each(|(o, gi)| *o += 0.5 * gi);
        }
    }

    fn apply_a(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let d = self.d;
        match &self.a {
            DiffusionMatrix::Identity => out.copy_from_slice(v),
            DiffusionMatrix::RadialScalar { s } => {
                let c = s.eval(x);
                out.iter_mut().zip(v).for_each(|(o, vi)| *o = c * vi);
            }
            DiffusionMatrix::Constant { .. } => {
                let a = self.cache.a_flat.as_ref().expect("prepared spec");
                for i in 0..d {
                    out[i] = (0..d).map(|j| a[i * d + j] * v[j]).sum();
                }
            }
        }
    }

    /// Applies the symmetric square root of `a(x)` to `z`.
    pub fn apply_sigma(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        let d = self.d;
        match &self.a {
            DiffusionMatrix::Identity => out.copy_from_slice(z),
            DiffusionMatrix::RadialScalar { s } => {
                let c = s.eval(x).sqrt();
                out.iter_mut().zip(z).for_each(|(o, zi)| *o = c * zi);
            }
            DiffusionMatrix::Constant { .. } => {
                let sigma = self.cache.sigma.as_ref().expect("prepared spec");
                for i in 0..d {
                    out[i] = (0..d).map(|j| sigma[i * d + j] * z[j]).sum();
                }
            }
        }
    }

    /// Radial component `b_r(r)` of the drift evaluated at `r e_1`, when the
    /// generator is rotation invariant.
    pub fn radial_drift(&self, r: f64) -> Option<f64> {
        let mut x = vec![0.0; self.d];
        x[0] = r;
        let radial_drift = match &self.drift {
            DriftField::Zero | DriftField::Linear { .. } | DriftField::Gradient => true,
            DriftField::Affine { offset, .. } => offset.iter().all(|v| *v == 0.0),
            DriftField::Constant { vector } => self.d == 1 || vector.iter().all(|v| *v == 0.0),
        };
        let q_radial = self.q.as_ref().map_or(true, |q| q.is_radial());
        let a_radial = match &self.a {
            DiffusionMatrix::Constant { .. } => self.isotropic_scale(&x).is_some(),
            _ => true,
        };
        if !(radial_drift && q_radial && a_radial) {
            return None;
        }
        let mut b = vec![0.0; self.d];
        self.drift_at(&x, &mut b);
        Some(b[0])
    }
}

/// Branching potentials `beta` (mass creation/annihilation) and `k` (intensity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingSpec {
    pub beta: ScalarField,
    pub k: ScalarField,
    /// Declared upper bound `B >= sup beta`.
    #[serde(rename = "B")]
    pub beta_upper_bound: f64,
}

impl BranchingSpec {
    /// Builds the spec with `B` taken from the family-level bound of `beta`.
    pub fn new(beta: ScalarField, k: ScalarField) -> Result<Self> {
        let b = beta
            .upper_bound()
            .ok_or_else(|| invalid("beta", "must be bounded above at family level"))?;
        let spec = BranchingSpec {
            beta,
            k,
            beta_upper_bound: b,
        };
        spec.validate(1)?;
        Ok(spec)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.beta.check()?;
        self.k.check()?;
        if !self.k.is_nonnegative() {
            return Err(invalid("k", "branching intensity must be non-negative"));
        }
        match self.beta.upper_bound() {
            Some(b) if b <= self.beta_upper_bound + 1e-12 => {}
            Some(b) => {
                return Err(invalid(
                    "B",
                    format!("declared bound {} is below the family bound {b}", self.beta_upper_bound),
                ))
            }
            None => return Err(invalid("beta", "must be bounded above at family level")),
        }
        for x in probe_grid(d, PROBE_HALF_WIDTH, PROBE_MAX_POINTS) {
            let kv = self.k.eval(&x);
            if !(kv >= 0.0) {
                return Err(Error::FieldCheck(format!("k = {kv} at {x:?}")));
            }
            let bv = self.beta.eval(&x);
            if !bv.is_finite() || bv > self.beta_upper_bound + 1e-12 {
                return Err(Error::FieldCheck(format!("beta = {bv} at {x:?} exceeds B")));
            }
        }
        Ok(())
    }
}

/// Closed-form growth bounds carried by catalog entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub lambda2: f64,
    pub lambda_inf: f64,
    #[serde(default)]
    pub notes: String,
}

/// One `(L, beta, k)` problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub diffusion: DiffusionSpec,
    pub branching: BranchingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

impl ModelSpec {
    pub fn new(diffusion: DiffusionSpec, branching: BranchingSpec, reference: Option<Reference>) -> Result<Self> {
        let mut m = ModelSpec {
            diffusion,
            branching,
            reference,
        };
        m.validate()?;
        Ok(m)
    }

    /// Runs every construction-time check; call after deserializing.
    pub fn validate(&mut self) -> Result<()> {
        self.diffusion.prepare()?;
        self.branching.validate(self.diffusion.d)?;
        if let Some(r) = &self.reference {
            if r.lambda_inf < r.lambda2 {
                return Err(invalid("reference", "lambda_inf must be >= lambda2"));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut m: ModelSpec = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.diffusion.d
    }

    pub fn beta(&self) -> &ScalarField {
        &self.branching.beta
    }

    pub fn k(&self) -> &ScalarField {
        &self.branching.k
    }

    /// Same model with `beta` replaced by `factor * beta`.
    pub fn scaled_beta(&self, factor: f64) -> Result<ModelSpec> {
        let beta = self.branching.beta.scale(factor);
        ModelSpec::new(
            self.diffusion.clone(),
            BranchingSpec::new(beta, self.branching.k.clone())?,
            None,
        )
    }

    /// Same model with a different `beta`.
    pub fn with_beta(&self, beta: ScalarField) -> Result<ModelSpec> {
        ModelSpec::new(
            self.diffusion.clone(),
            BranchingSpec::new(beta, self.branching.k.clone())?,
            None,
        )
    }

    /// Same model with a different `k`.
    pub fn with_k(&self, k: ScalarField) -> Result<ModelSpec> {
        ModelSpec::new(
            self.diffusion.clone(),
            BranchingSpec::new(self.branching.beta.clone(), k)?,
            None,
        )
    }
}

/// A finite atomic initial measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMeasure {
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub position: Vec<f64>,
    pub mass: f64,
}

impl InitialMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let m = InitialMeasure { atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn dirac(position: Vec<f64>, mass: f64) -> Result<Self> {
        InitialMeasure::new(vec![Atom { position, mass }])
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(invalid("atoms", "initial measure needs at least one atom"));
        }
        let d = self.atoms[0].position.len();
        for a in &self.atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(invalid("mass", "atom masses must be positive and finite"));
            }
            if a.position.len() != d || a.position.iter().any(|v| !v.is_finite()) {
                return Err(invalid("position", "atom positions must be finite with equal dimension"));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `<f, mu>`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.mass * f(&a.position)).sum()
    }

    pub fn support_radius(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.position.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}
