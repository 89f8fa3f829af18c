use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Geometry, SpaceGrid};
use super::solver::{solve_cumulant, CumulantSolution, SolveOptions};
use crate::error::{invalid, Result};
use crate::model::{InitialMeasure, ModelSpec, ScalarField};

/// Extinction probability `lim_theta exp(-<u_theta(t), mu>)` with `u_theta(0) = theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionEstimate {
    /// `exp(-<u_theta_max(t), mu>)`.
    pub probability: f64,
    /// Extrapolation of the mass to `1/theta = 0` from the last two thetas.
    pub extrapolated: f64,
    /// `(theta, <u_theta(t), mu>)`.
    pub masses: Vec<(f64, f64)>,
    /// `u_theta` was pointwise non-decreasing in theta.
    pub monotone: bool,
}

pub fn extinction_probability(
    model: &ModelSpec,
    mu: &InitialMeasure,
    t: f64,
    thetas: &[f64],
    grid: &SpaceGrid,
    options: &SolveOptions,
) -> Result<ExtinctionEstimate> {
    mu.validate()?;
    if thetas.len() < 3 || thetas.windows(2).any(|w| w[1] <= w[0]) || thetas[0] <= 0.0 {
        return Err(invalid("theta_sequence", "need at least 3 positive increasing values"));
    }
    if *thetas.last().unwrap() < 1e3 {
        return Err(invalid("theta_sequence", "the last value must be at least 1000"));
    }
    if model.k().is_identically_zero() {
        // u_theta = theta * (linear mass), which diverges.
        return Ok(ExtinctionEstimate {
            probability: 0.0,
            extrapolated: 0.0,
            masses: thetas.iter().map(|th| (*th, f64::INFINITY)).collect(),
            monotone: true,
        });
    }
    // One reaction schedule for every theta keeps the comparison node by node.
    let opts = SolveOptions {
        reaction_sup: Some(options.reaction_sup.unwrap_or(*thetas.last().unwrap())),
        stride: Some(usize::MAX),
        ..*options
    };
    let mut masses = Vec::with_capacity(thetas.len());
    let mut previous: Option<Vec<f64>> = None;
    let mut monotone = true;
    for &theta in thetas {
        let s = solve_cumulant(model, &ScalarField::constant(theta), t, grid, &opts)?;
        let u = s.final_values().to_vec();
        if let Some(p) = &previous {
            monotone &= u.iter().zip(p).all(|(a, b)| *a >= b - 1e-9 * b.abs().max(1.0));
        }
        masses.push((theta, mu.integrate(|x| grid.interpolate(&u, x))));
        previous = Some(u);
    }
    let n = masses.len();
    let (t1, m1) = masses[n - 2];
    let (t2, m2) = masses[n - 1];
    let limit = (t2 * m2 - t1 * m1) / (t2 - t1);
    monotone &= masses.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    Ok(ExtinctionEstimate {
        probability: (-m2).exp(),
        extrapolated: (-limit.max(m2)).exp(),
        masses,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitClass {
    AllZero,
    AllPositive,
    Undetermined,
}

/// Thresholds on `u(T) / u(T/2)` near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRule {
    pub positive_ratio: f64,
    pub zero_ratio: f64,
    /// Values below this are treated as zero outright.
    pub zero_floor: f64,
    /// Half-width of the region sampled around the origin.
    pub probe_radius: f64,
}

impl Default for LimitRule {
    fn default() -> Self {
        LimitRule {
            positive_ratio: 0.9,
            zero_ratio: 0.75,
            zero_floor: 1e-8,
            probe_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UchResult {
    pub solution: CumulantSolution,
    /// Largest increase of `u` in time over stored frames (should be <= tolerance).
    pub max_increase: f64,
    /// Largest `u - c h` over the space-time grid.
    pub max_excess: f64,
    pub class: LimitClass,
    /// `(min, max)` of `u(T) / u(T/2)` around the origin.
    pub ratio_range: (f64, f64),
}

/// Solves with `u(0) = c h` for a declared harmonic `h` and classifies the
/// large-time limit as identically zero or everywhere positive.
pub fn solve_uch(
    model: &ModelSpec,
    h: &ScalarField,
    c: f64,
    horizon: f64,
    grid: &SpaceGrid,
    options: &SolveOptions,
    rule: &LimitRule,
) -> Result<UchResult> {
    if !(c > 0.0) {
        return Err(invalid("c", "must be positive"));
    }
    let hv = grid.sample(h);
    if hv.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("h", "must be positive and finite on the grid"));
    }
    let f = h.scale(c);
    let solution = solve_cumulant(model, &f, horizon, grid, options)?;
    let mut max_increase: f64 = 0.0;
    for w in solution.values.windows(2) {
        for (a, b) in w[1].iter().zip(&w[0]) {
            max_increase = max_increase.max(a - b);
        }
    }
    let max_excess = solution
        .values
        .iter()
        .flat_map(|frame| frame.iter().zip(&hv).map(|(u, hj)| u - c * hj))
        .fold(f64::NEG_INFINITY, f64::max);

    let half = solution
        .times
        .iter()
        .position(|t| *t >= 0.5 * horizon - 1e-12)
        .expect("frames span the horizon");
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut all_tiny = true;
    for j in (0..grid.nodes).filter(|&j| grid.within(j, rule.probe_radius)) {
        let (late, early) = (solution.final_values()[j], solution.values[half][j]);
        all_tiny &= late < rule.zero_floor;
        let ratio = if early > 0.0 { late / early } else { 0.0 };
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let class = if all_tiny || hi <= rule.zero_ratio {
        LimitClass::AllZero
    } else if lo >= rule.positive_ratio {
        LimitClass::AllPositive
    } else {
        LimitClass::Undetermined
    };
    Ok(UchResult {
        solution,
        max_increase,
        max_excess,
        class,
        ratio_range: (lo, hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub radii: Vec<f64>,
    pub solutions: Vec<CumulantSolution>,
    /// `min (u_{n+1} - u_n)` over shared nodes and stored times, per consecutive pair.
    pub pair_min_increments: Vec<f64>,
    pub min_increment: f64,
    /// `sup |u_last - u_prev|` at the final time over `|x| <= radii[0] / 2`.
    pub sup_difference: f64,
    /// The same, relative to `sup u_last` there.
    pub relative_sup_difference: f64,
}

/// Solves on the balls `D_n` with zero boundary values and compares
/// consecutive radii; the grid spacing of `base` is shared by all radii.
pub fn domain_monotone_check(
    model: &ModelSpec,
    f: &ScalarField,
    horizon: f64,
    radii: &[f64],
    base: &SpaceGrid,
    options: &SolveOptions,
) -> Result<MonotoneReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(invalid("radii", "need at least two positive increasing radii"));
    }
    if *radii.last().unwrap() > base.half_width + 1e-9 {
        return Err(invalid("radii", "radii must fit inside the grid box"));
    }
    let h = base.spacing();
    let sup_f = base.sample(f).into_iter().fold(0.0, f64::max);
    let opts = SolveOptions {
        reaction_sup: Some(options.reaction_sup.unwrap_or(sup_f)),
        ..*options
    };
    let mut solutions = Vec::with_capacity(radii.len());
    for &n in radii {
        let cells = (n / h).round().max(1.0);
        let nodes = match base.geometry {
            Geometry::Line => 2 * cells as usize + 1,
            Geometry::Radial { .. } => cells as usize + 1,
        };
        let grid = SpaceGrid::new(base.geometry, cells * h, nodes, Boundary::DirichletZero)?;
        solutions.push(solve_cumulant(model, f, horizon, &grid, &opts)?);
    }
    let mut pair_min_increments = Vec::new();
    for w in solutions.windows(2) {
        let (small, large) = (&w[0], &w[1]);
        let offset = match base.geometry {
            Geometry::Line => (large.grid.nodes - small.grid.nodes) / 2,
            Geometry::Radial { .. } => 0,
        };
        let mut min_inc = f64::INFINITY;
        for (fs, fl) in small.values.iter().zip(&large.values) {
            for (j, us) in fs.iter().enumerate() {
                min_inc = min_inc.min(fl[j + offset] - us);
            }
        }
        pair_min_increments.push(min_inc);
    }
    let n = solutions.len();
    let (prev, last) = (&solutions[n - 2], &solutions[n - 1]);
    let probe = radii[0] / 2.0;
    let mut sup_diff: f64 = 0.0;
    let mut sup_u: f64 = 0.0;
    for j in (0..last.grid.nodes).filter(|&j| last.grid.within(j, probe)) {
        let x = last.grid.point(j);
        let ul = last.final_values()[j];
        sup_diff = sup_diff.max((ul - prev.value_at(&x)).abs());
        sup_u = sup_u.max(ul.abs());
    }
    Ok(MonotoneReport {
        radii: radii.to_vec(),
        min_increment: pair_min_increments.iter().copied().fold(f64::INFINITY, f64::min),
        pair_min_increments,
        sup_difference: sup_diff,
        relative_sup_difference: if sup_u > 0.0 { sup_diff / sup_u } else { 0.0 },
        solutions,
    })
}

/// Re-solves on a box of twice the half-width and reports
/// `sup |u_R - u_2R|` at the final time over `|x| <= R / 2`.
pub fn box_doubling_check(
    model: &ModelSpec,
    f: &ScalarField,
    horizon: f64,
    grid: &SpaceGrid,
    options: &SolveOptions,
) -> Result<f64> {
    let small = solve_cumulant(model, f, horizon, grid, options)?;
    let wide = SpaceGrid::with_spacing(grid.geometry, 2.0 * grid.half_width, grid.spacing(), grid.boundary)?;
    let large = solve_cumulant(model, f, horizon, &wide, options)?;
    Ok((0..large.grid.nodes)
        .filter(|&j| large.grid.within(j, grid.half_width / 2.0))
        .map(|j| {
            let x = large.grid.point(j);
            (large.final_values()[j] - small.value_at(&x)).abs()
        })
        .fold(0.0, f64::max))
}
