use serde::{Deserialize, Serialize};

use crate::diffusion::norm;
use crate::error::{invalid, Error, Result};
use crate::model::{ModelSpec, ScalarField};

pub const MIN_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `[-R, R]` in one dimension.
    Line,
    /// `[0, R]` in the radius of a rotation-invariant problem on `R^dim`.
    Radial { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletZero,
    NeumannZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub geometry: Geometry,
    pub half_width: f64,
    pub nodes: usize,
    pub boundary: Boundary,
}

impl SpaceGrid {
    pub fn new(geometry: Geometry, half_width: f64, nodes: usize, boundary: Boundary) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("half_width", "must be positive and finite"));
        }
        if nodes < MIN_NODES {
            return Err(invalid("nodes", format!("at least {MIN_NODES} nodes are required")));
        }
        if let Geometry::Radial { dim } = geometry {
            if dim < 2 {
                return Err(invalid("dim", "radial geometry needs dim >= 2; use the line"));
            }
        }
        Ok(SpaceGrid {
            geometry,
            half_width,
            nodes,
            boundary,
        })
    }

    /// Grid with spacing close to `spacing` on a box of half-width `half_width`.
    pub fn with_spacing(geometry: Geometry, half_width: f64, spacing: f64, boundary: Boundary) -> Result<Self> {
        let span = match geometry {
            Geometry::Line => 2.0 * half_width,
            Geometry::Radial { .. } => half_width,
        };
        let nodes = ((span / spacing).round() as usize + 1).max(MIN_NODES);
        SpaceGrid::new(geometry, half_width, nodes, boundary)
    }

    /// Geometry matching the model: the line for `d = 1`, radial otherwise.
    pub fn geometry_for(model: &ModelSpec) -> Result<Geometry> {
        let d = model.dim();
        if d == 1 {
            return Ok(Geometry::Line);
        }
        let radial = model.diffusion.radial_drift(1.0).is_some()
            && model.beta().is_radial()
            && model.k().is_radial();
        if !radial {
            return Err(invalid(
                "model",
                "the cumulant solver needs a one-dimensional or rotation-invariant model",
            ));
        }
        Ok(Geometry::Radial { dim: d })
    }

    /// Default truncation box: `max(4 s + |b| T + 6 sqrt(A T), 4)` where `s`
    /// is the radius of interest, `|b|` the largest drift within reach and
    /// `A` the largest diffusion scale there.
    pub fn default_for(model: &ModelSpec, horizon: f64, support_radius: f64, spacing: f64) -> Result<Self> {
        let geometry = SpaceGrid::geometry_for(model)?;
        let mut reach = 4.0 * support_radius + 1.0;
        let (mut b_max, mut a_max) = (0.0f64, 0.0f64);
        for _ in 0..2 {
            let (b, a) = coefficient_extent(model, reach + 6.0 * (a_max.max(1.0) * horizon).sqrt() + b_max * horizon);
            b_max = b;
            a_max = a;
            reach = 4.0 * support_radius + b_max * horizon + 6.0 * (a_max * horizon).sqrt();
        }
        SpaceGrid::with_spacing(geometry, reach.max(4.0), spacing, Boundary::DirichletZero)
    }

    pub fn spacing(&self) -> f64 {
        match self.geometry {
            Geometry::Line => 2.0 * self.half_width / (self.nodes - 1) as f64,
            Geometry::Radial { .. } => self.half_width / (self.nodes - 1) as f64,
        }
    }

    /// First coordinate (or radius) of node `j`.
    pub fn coordinate(&self, j: usize) -> f64 {
        let h = self.spacing();
        match self.geometry {
            Geometry::Line => -self.half_width + j as f64 * h,
            Geometry::Radial { .. } => j as f64 * h,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.coordinate(j)).collect()
    }

    pub fn dim(&self) -> usize {
        match self.geometry {
            Geometry::Line => 1,
            Geometry::Radial { dim } => dim,
        }
    }

    /// Node `j` as a point of `R^d`.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        x[0] = self.coordinate(j);
        x
    }

    /// Grid coordinate of a point of `R^d`.
    pub fn locate(&self, x: &[f64]) -> f64 {
        match self.geometry {
            Geometry::Line => x[0],
            Geometry::Radial { .. } => norm(x),
        }
    }

    /// Linear interpolation of nodal `values` at a point; zero outside the box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let c = self.locate(x);
        let h = self.spacing();
        let s = (c - self.coordinate(0)) / h;
        if s < 0.0 || s > (self.nodes - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.nodes - 2);
        let w = s - i as f64;
        values[i] * (1.0 - w) + values[i + 1] * w
    }

    pub fn sample(&self, field: &ScalarField) -> Vec<f64> {
        (0..self.nodes).map(|j| field.eval(&self.point(j))).collect()
    }

    /// `true` when `|coordinate| <= r` for node `j`.
    pub fn within(&self, j: usize, r: f64) -> bool {
        self.coordinate(j).abs() <= r + 1e-12
    }
}

fn coefficient_extent(model: &ModelSpec, radius: f64) -> (f64, f64) {
    let d = model.dim();
    let mut b = vec![0.0; d];
    let (mut b_max, mut a_max) = (0.0f64, 0.0f64);
    let mut a = vec![0.0; d * d];
    for i in 0..=64 {
        let mut x = vec![0.0; d];
        x[0] = -radius + 2.0 * radius * i as f64 / 64.0;
        model.diffusion.drift_at(&x, &mut b);
        b_max = b_max.max(norm(&b));
        model.diffusion.a_at(&x, &mut a);
        a_max = a_max.max((0..d).map(|k| a[k * d + k]).fold(0.0, f64::max));
    }
    (b_max, a_max)
}

/// Generator coefficients at grid nodes: `L u = diffusion u'' + advection u'`.
pub(crate) struct NodeCoefficients {
    pub diffusion: Vec<f64>,
    pub advection: Vec<f64>,
    pub beta: Vec<f64>,
    pub k: Vec<f64>,
}

pub(crate) fn node_coefficients(model: &ModelSpec, grid: &SpaceGrid) -> Result<NodeCoefficients> {
    if grid.dim() != model.dim() {
        return Err(invalid("grid", "grid dimension differs from the model"));
    }
    if let Geometry::Radial { .. } = grid.geometry {
        SpaceGrid::geometry_for(model)?;
    }
    let n = grid.nodes;
    let d = model.dim();
    let mut diffusion = Vec::with_capacity(n);
    let mut advection = Vec::with_capacity(n);
    let mut b = vec![0.0; d];
    let step = 1e-6;
    for j in 0..n {
        let x = grid.point(j);
        let scale = |y: &[f64]| -> Result<f64> {
            model.diffusion.isotropic_scale(y).ok_or_else(|| {
                Error::InvalidParameter {
                    name: "a".into(),
                    reason: "the cumulant solver needs a scalar diffusion matrix".into(),
                }
            })
        };
        let s = scale(&x)?;
        let mut xp = x.clone();
        xp[0] += step;
        let mut xm = x.clone();
        xm[0] -= step;
        let ds = (scale(&xp)? - scale(&xm)?) / (2.0 * step);
        model.diffusion.drift_at(&x, &mut b);
        let r = grid.coordinate(j);
        match grid.geometry {
            Geometry::Line => {
                diffusion.push(0.5 * s);
                advection.push(0.5 * ds + b[0]);
            }
            Geometry::Radial { dim } if j == 0 => {
                diffusion.push(0.5 * s * dim as f64);
                advection.push(0.0);
            }
            Geometry::Radial { dim } => {
                diffusion.push(0.5 * s);
                advection.push(0.5 * s * (dim - 1) as f64 / r + 0.5 * ds + b[0]);
            }
        }
    }
    Ok(NodeCoefficients {
        diffusion,
        advection,
        beta: grid.sample(model.beta()),
        k: grid.sample(model.k()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog_build, Params};

    #[test]
    fn node_layout() {
        let g = SpaceGrid::new(Geometry::Line, 2.0, 81, Boundary::DirichletZero).unwrap();
        assert_eq!(g.spacing(), 0.05);
        assert_eq!(g.coordinate(0), -2.0);
        assert!((g.coordinate(80) - 2.0).abs() < 1e-12);
        let r = SpaceGrid::new(Geometry::Radial { dim: 2 }, 2.0, 81, Boundary::DirichletZero).unwrap();
        assert_eq!(r.coordinate(0), 0.0);
        assert!(SpaceGrid::new(Geometry::Line, 2.0, 10, Boundary::DirichletZero).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let g = SpaceGrid::new(Geometry::Line, 1.0, 65, Boundary::NeumannZero).unwrap();
        let v: Vec<f64> = g.coordinates().iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((g.interpolate(&v, &[0.3333]) - 1.6666).abs() < 1e-12);
        assert_eq!(g.interpolate(&v, &[3.0]), 0.0);
    }

    #[test]
    fn default_box_covers_drift() {
        let m = catalog_build("drift_bm", &Params::from([("b0".to_string(), 1.0)])).unwrap();
        let g = SpaceGrid::default_for(&m, 2.0, 0.0, 0.05).unwrap();
        assert!(g.half_width >= 2.0 + 6.0 * 2f64.sqrt() - 1e-9);
    }

    #[test]
    fn non_radial_model_is_rejected() {
        let m = catalog_build("htransform_survival", &Params::new()).unwrap();
        assert!(SpaceGrid::geometry_for(&m).is_ok());
        let two_d = crate::model::ModelSpec::new(
            crate::model::DiffusionSpec::new(
                2,
                crate::model::DriftField::Constant { vector: vec![1.0, 0.0] },
                crate::model::DiffusionMatrix::Identity,
                None,
            )
            .unwrap(),
            crate::model::BranchingSpec::new(ScalarField::zero(), ScalarField::one()).unwrap(),
            None,
        )
        .unwrap();
        assert!(SpaceGrid::geometry_for(&two_d).is_err());
    }
}
