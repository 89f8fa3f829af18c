//! Problem instances: coefficient fields, generators, branching potentials,
//! initial measures, the example catalog and h-transforms.

pub mod catalog;
pub mod field;
pub mod htransform;
pub mod spec;

pub use catalog::{catalog_build, catalog_harmonic, Params, CATALOG};
pub use field::{probe_grid, ScalarField};
pub use htransform::h_transform;
pub use spec::{
    Atom, BranchingSpec, DiffusionMatrix, DiffusionSpec, DriftField, InitialMeasure, ModelSpec, Reference,
};

/// Evaluates `field` at `x`.
pub fn eval_field(field: &ScalarField, x: &[f64]) -> f64 {
    field.eval(x)
}
