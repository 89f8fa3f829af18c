use serde::{Deserialize, Serialize};

use super::grid::{node_coefficients, Boundary, Geometry, NodeCoefficients, SpaceGrid};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelSpec, ScalarField};

/// Largest fraction of clipped node updates tolerated.
pub const MAX_CLIP_FRACTION: f64 = 1e-3;
/// Abort when `u` exceeds the a-priori bound by this factor.
pub const INSTABILITY_FACTOR: f64 = 10.0;
/// Target number of stored frames when no stride is given.
const DEFAULT_FRAMES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub dt_pde: f64,
    /// Uniform reaction sub-step. When unset, node `j` uses
    /// `min(dt_pde, 0.1 / (2 k_j U + |beta_j|))` with `U = exp(B^+ T) sup f`.
    pub reaction_step: Option<f64>,
    /// `sup f` entering `U`; defaults to the sup of the initial data. Solves
    /// that are compared node by node should share it.
    pub reaction_sup: Option<f64>,
    /// Store every `stride`-th step; defaults to about 200 frames.
    pub stride: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            dt_pde: 1e-3,
            reaction_step: None,
            reaction_sup: None,
            stride: None,
        }
    }
}

/// Minimal non-negative solution of `u_t = Lu + beta u - k u^2` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantSolution {
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    /// `values[i][j] = u(times[i], node j)`.
    pub values: Vec<Vec<f64>>,
    pub dt_pde: f64,
    pub reaction_step: f64,
    pub clipped: usize,
    pub updates: usize,
}

impl CumulantSolution {
    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("at least the initial frame")
    }

    /// `u(T, x)` by linear interpolation.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.grid.interpolate(self.final_values(), x)
    }

    pub fn frame_at(&self, i: usize, x: &[f64]) -> f64 {
        self.grid.interpolate(&self.values[i], x)
    }
}

pub(crate) struct Stepper {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    beta: Vec<f64>,
    k: Vec<f64>,
    fixed_zero: Vec<bool>,
    scratch_c: Vec<f64>,
    scratch_d: Vec<f64>,
    /// Per-node Heun sub-step count and length.
    substeps: Vec<usize>,
    taus: Vec<f64>,
}

/// How the reaction sub-steps are chosen.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ReactionSchedule {
    Uniform(f64),
    /// Node-local a-priori rule with the solution bound `U`.
    Local { bound: f64 },
}

impl Stepper {
    /// Assembles `I - dt L_h`, with centered differences where the cell
    /// Peclet number is at most one and upwinding elsewhere.
    pub(crate) fn new(grid: &SpaceGrid, coeffs: NodeCoefficients, dt: f64, schedule: ReactionSchedule) -> Stepper {
        let n = grid.nodes;
        let h = grid.spacing();
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut fixed_zero = vec![false; n];
        for j in 0..n {
            let a = coeffs.diffusion[j];
            let c = coeffs.advection[j];
            let first = j == 0;
            let last = j == n - 1;
            let dirichlet_edge = grid.boundary == Boundary::DirichletZero
                && (last || (first && grid.geometry == Geometry::Line));
            if dirichlet_edge {
                fixed_zero[j] = true;
                continue;
            }
            // Reflecting ghost nodes: u_{-1} = u_1 and u_n = u_{n-2}.
            let (lo, up) = if first {
                (0.0, 2.0 * a / (h * h))
            } else if last {
                (2.0 * a / (h * h), 0.0)
            } else if c.abs() * h <= 2.0 * a {
                (a / (h * h) - c / (2.0 * h), a / (h * h) + c / (2.0 * h))
            } else if c > 0.0 {
                (a / (h * h), a / (h * h) + c / h)
            } else {
                (a / (h * h) - c / h, a / (h * h))
            };
            lower[j] = -dt * lo;
            upper[j] = -dt * up;
            diag[j] = 1.0 + dt * (lo + up);
        }
        let substeps: Vec<usize> = (0..n)
            .map(|j| {
                let tau = match schedule {
                    ReactionSchedule::Uniform(tau) => tau,
                    ReactionSchedule::Local { bound } => local_reaction_step(coeffs.beta[j], coeffs.k[j], bound),
                };
                (dt / tau.min(dt)).ceil().max(1.0) as usize
            })
            .collect();
        let taus = substeps.iter().map(|&m| dt / m as f64).collect();
        Stepper {
            lower,
            diag,
            upper,
            beta: coeffs.beta,
            k: coeffs.k,
            fixed_zero,
            scratch_c: vec![0.0; n],
            scratch_d: vec![0.0; n],
            substeps,
            taus,
        }
    }

    /// Implicit diffusion step by the Thomas algorithm.
    fn diffuse(&mut self, u: &mut [f64]) {
        let n = u.len();
        let (c, d) = (&mut self.scratch_c, &mut self.scratch_d);
        for j in 0..n {
            if self.fixed_zero[j] {
                u[j] = 0.0;
            }
        }
        c[0] = self.upper[0] / self.diag[0];
        d[0] = u[0] / self.diag[0];
        for j in 1..n {
            let m = self.diag[j] - self.lower[j] * c[j - 1];
            c[j] = self.upper[j] / m;
            d[j] = (u[j] - self.lower[j] * d[j - 1]) / m;
        }
        u[n - 1] = d[n - 1];
        for j in (0..n - 1).rev() {
            u[j] = d[j] - c[j] * u[j + 1];
        }
    }

    /// Heun sub-steps of `u' = beta u - k u^2`; returns the number of clips.
    fn react(&self, u: &mut [f64]) -> usize {
        let mut clipped = 0;
        for j in 0..u.len() {
            if self.fixed_zero[j] {
                u[j] = 0.0;
                continue;
            }
            let (b, k) = (self.beta[j], self.k[j]);
            if b == 0.0 && k == 0.0 {
                continue;
            }
            let (tau, mut v) = (self.taus[j], u[j]);
            for _ in 0..self.substeps[j] {
                let r1 = b * v - k * v * v;
                let w = v + tau * r1;
                let r2 = b * w - k * w * w;
                v += 0.5 * tau * (r1 + r2);
                if v < 0.0 {
                    v = 0.0;
                    clipped += 1;
                }
            }
            u[j] = v;
        }
        clipped
    }

    pub(crate) fn step(&mut self, u: &mut [f64]) -> usize {
        self.diffuse(u);
        let mut clipped = 0;
        for v in u.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            }
        }
        clipped + self.react(u)
    }

    /// Smallest sub-step over the grid.
    pub(crate) fn finest_step(&self) -> f64 {
        self.taus.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn local_reaction_step(beta: f64, k: f64, bound: f64) -> f64 {
    let rate = 2.0 * k * bound + beta.abs();
    if rate > 0.0 {
        0.1 / rate
    } else {
        f64::INFINITY
    }
}

/// `U = exp(B^+ T) sup f`.
fn solution_bound(model: &ModelSpec, sup_f: f64, horizon: f64) -> f64 {
    (model.branching.beta_upper_bound.max(0.0) * horizon).exp() * sup_f
}

/// A-priori reaction step `0.1 / (2 k_max U + |beta|_max)`.
pub fn reaction_step_for(model: &ModelSpec, grid: &SpaceGrid, sup_f: f64, horizon: f64) -> f64 {
    let u_max = solution_bound(model, sup_f, horizon);
    let k_max = grid.sample(model.k()).into_iter().fold(0.0, f64::max);
    let beta_max = grid.sample(model.beta()).into_iter().map(f64::abs).fold(0.0, f64::max);
    let rate = 2.0 * k_max * u_max + beta_max;
    if rate > 0.0 {
        0.1 / rate
    } else {
        f64::INFINITY
    }
}

pub(crate) fn check_initial(f: &ScalarField, grid: &SpaceGrid) -> Result<Vec<f64>> {
    let u0 = grid.sample(f);
    if u0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("f", "initial data must be finite and non-negative on the grid"));
    }
    Ok(u0)
}

/// Solves the cumulant equation with `u(0) = f` up to `horizon`.
pub fn solve_cumulant(
    model: &ModelSpec,
    f: &ScalarField,
    horizon: f64,
    grid: &SpaceGrid,
    options: &SolveOptions,
) -> Result<CumulantSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("T", "must be positive and finite"));
    }
    if !(options.dt_pde > 0.0) {
        return Err(invalid("dt_pde", "must be positive"));
    }
    let u0 = check_initial(f, grid)?;
    solve_from(model, u0, horizon, grid, options)
}

pub(crate) fn solve_from(
    model: &ModelSpec,
    mut u: Vec<f64>,
    horizon: f64,
    grid: &SpaceGrid,
    options: &SolveOptions,
) -> Result<CumulantSolution> {
    let steps = ((horizon / options.dt_pde) - 1e-9).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;
    let sup_f = u.iter().copied().fold(0.0, f64::max);
    let schedule = match options.reaction_step {
        Some(tau) => ReactionSchedule::Uniform(tau),
        None => ReactionSchedule::Local {
            bound: solution_bound(model, options.reaction_sup.unwrap_or(sup_f), horizon),
        },
    };
    let mut stepper = Stepper::new(grid, node_coefficients(model, grid)?, dt, schedule);
    let stride = options.stride.unwrap_or((steps / DEFAULT_FRAMES).max(1)).max(1);
    let bound_rate = model.branching.beta_upper_bound;
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut clipped = 0;
    for i in 1..=steps {
        clipped += stepper.step(&mut u);
        let t = i as f64 * dt;
        let bound = (bound_rate * t).exp() * sup_f;
        let peak = u.iter().copied().fold(0.0, f64::max);
        if !peak.is_finite() || peak > INSTABILITY_FACTOR * bound + 1e-300 {
            return Err(Error::SolverInstability {
                time: t,
                value: peak,
                bound,
            });
        }
        if i % stride == 0 || i == steps {
            times.push(t);
            values.push(u.clone());
        }
    }
    let updates = steps * grid.nodes;
    if clipped as f64 > MAX_CLIP_FRACTION * updates as f64 {
        return Err(Error::ExcessiveClipping {
            clipped,
            total: updates,
        });
    }
    Ok(CumulantSolution {
        grid: grid.clone(),
        times,
        values,
        dt_pde: dt,
        reaction_step: stepper.finest_step(),
        clipped,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog_build, Params};

    fn flat(beta: f64, k: f64) -> ModelSpec {
        catalog_build(
            "bm_plain",
            &Params::from([("beta".to_string(), beta), ("k".to_string(), k)]),
        )
        .unwrap()
    }

    fn neumann() -> SpaceGrid {
        SpaceGrid::new(Geometry::Line, 2.0, 65, Boundary::NeumannZero).unwrap()
    }

    #[test]
    fn riccati_without_potential() {
        let theta = 2.0;
        let s = solve_cumulant(&flat(0.0, 1.0), &ScalarField::constant(theta), 1.0, &neumann(), &SolveOptions::default())
            .unwrap();
        let exact = theta / (1.0 + theta);
        for v in s.final_values() {
            assert!(((v - exact) / exact).abs() < 1e-3);
        }
    }

    #[test]
    fn riccati_with_potential() {
        let theta = 0.5;
        let s = solve_cumulant(&flat(1.0, 1.0), &ScalarField::constant(theta), 1.0, &neumann(), &SolveOptions::default())
            .unwrap();
        let e = 1f64.exp();
        let exact = theta * e / (1.0 + theta * (e - 1.0));
        assert!(((s.value_at(&[0.0]) - exact) / exact).abs() < 1e-3);
    }

    #[test]
    fn dirichlet_edges_stay_zero() {
        let g = SpaceGrid::new(Geometry::Line, 2.0, 65, Boundary::DirichletZero).unwrap();
        let s = solve_cumulant(&flat(0.0, 1.0), &ScalarField::one(), 0.5, &g, &SolveOptions::default()).unwrap();
        let last = s.final_values();
        assert_eq!(last[0], 0.0);
        assert_eq!(last[64], 0.0);
        assert!(last[32] > 0.0);
        assert_eq!(s.clipped, 0);
    }

    #[test]
    fn radial_heat_equation_keeps_constants() {
        let m = catalog_build("bm_plain", &Params::from([("d".to_string(), 3.0), ("k".to_string(), 0.0)])).unwrap();
        let g = SpaceGrid::new(Geometry::Radial { dim: 3 }, 3.0, 65, Boundary::NeumannZero).unwrap();
        let s = solve_cumulant(&m, &ScalarField::one(), 1.0, &g, &SolveOptions::default()).unwrap();
        assert!(s.final_values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn stride_controls_frames() {
        let opts = SolveOptions {
            dt_pde: 0.01,
            stride: Some(10),
            ..Default::default()
        };
        let s = solve_cumulant(&flat(0.0, 1.0), &ScalarField::one(), 1.0, &neumann(), &opts).unwrap();
        assert_eq!(s.times.len(), 11);
    }

    #[test]
    fn local_reaction_steps_match_a_uniform_fine_step() {
        let m = catalog_build(
            "htransform_survival",
            &Params::from([("B".to_string(), 0.1), ("eps".to_string(), 0.1)]),
        )
        .unwrap();
        let g = SpaceGrid::with_spacing(Geometry::Line, 6.0, 0.05, Boundary::DirichletZero).unwrap();
        let f = ScalarField::constant(50.0);
        let opts = SolveOptions {
            dt_pde: 0.01,
            ..Default::default()
        };
        let local = solve_cumulant(&m, &f, 1.0, &g, &opts).unwrap();
        let finest = local.reaction_step;
        let uniform = solve_cumulant(&m, &f, 1.0, &g, &SolveOptions { reaction_step: Some(finest), ..opts }).unwrap();
        let gap = local
            .final_values()
            .iter()
            .zip(uniform.final_values())
            .map(|(a, b)| (a - b).abs() / b.max(1e-12))
            .fold(0.0, f64::max);
        assert!(gap < 1e-3, "{gap}");
    }
}
