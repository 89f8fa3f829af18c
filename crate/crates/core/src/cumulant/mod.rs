//! Deterministic solvers for the cumulant equation
//! `u_t = Lu + beta u - k u^2`, `u(0) = f`, on one-dimensional or radial grids.

pub mod export;
pub mod grid;
pub mod limits;
pub mod picard;
pub mod solver;

pub use export::{read_dump, write_csv, write_dump, GridDump};
pub use grid::{Boundary, Geometry, SpaceGrid};
pub use limits::{
    box_doubling_check, domain_monotone_check, extinction_probability, solve_uch, ExtinctionEstimate, LimitClass,
    LimitRule, MonotoneReport, UchResult,
};
pub use picard::{picard_solve, PicardOptions, PicardSolution};
pub use solver::{reaction_step_for, solve_cumulant, CumulantSolution, SolveOptions};

/// `sup |a - b|` at the final time over nodes of `a` with `|x| <= radius`,
/// interpolating `b`.
pub fn sup_difference(a: &CumulantSolution, b: &CumulantSolution, radius: f64) -> f64 {
    (0..a.grid.nodes)
        .filter(|&j| a.grid.within(j, radius))
        .map(|j| {
            let x = a.grid.point(j);
            (a.final_values()[j] - b.value_at(&x)).abs()
        })
        .fold(0.0, f64::max)
}
