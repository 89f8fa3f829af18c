use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::grid::{Boundary, Geometry, SpaceGrid};
use super::solver::{check_initial, CumulantSolution};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Time step of the transition kernel and of the Duhamel quadrature.
    pub dt: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            dt: 0.025,
            iterations: 200,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardSolution {
    pub solution: CumulantSolution,
    /// Index of the first iterate whose successor differs by less than the tolerance.
    pub iterations: usize,
    pub residual: f64,
}

/// `int_{-inf}^z Phi(s) ds`.
fn integrated_cdf(z: f64) -> f64 {
    let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    z * cdf + pdf
}

/// One-step kernel `K[i][j] = E[hat_j(X_dt) | X_0 = x_i]` for the Euler
/// Gaussian transition, weighted by `exp(beta(x_i) dt)`. Mass landing beyond
/// the box is dropped (Dirichlet) or mirrored back (Neumann).
fn weighted_kernel(model: &ModelSpec, grid: &SpaceGrid, dt: f64) -> Result<DMatrix<f64>> {
    let n = grid.nodes;
    let h = grid.spacing();
    let x0 = grid.coordinate(0);
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut b = [0.0];
    let beta = grid.sample(model.beta());
    for i in 0..n {
        let x = [grid.coordinate(i)];
        model.diffusion.sde_drift_at(&x, &mut b);
        let a = model
            .diffusion
            .isotropic_scale(&x)
            .ok_or_else(|| invalid("a", "picard oracle needs a scalar diffusion matrix"))?;
        let mean = x[0] + b[0] * dt;
        let sd = (a * dt).sqrt();
        let reach = ((8.0 * sd + (mean - x[0]).abs()) / h).ceil() as i64 + 2;
        let centre = ((mean - x0) / h).round() as i64;
        let weight = (beta[i] * dt).exp();
        for m in (centre - reach)..=(centre + reach) {
            let node = x0 + m as f64 * h;
            let z = |c: f64| integrated_cdf((c - mean) / sd);
            let p = sd / h * (z(node + h) - 2.0 * z(node) + z(node - h));
            if p <= 0.0 {
                continue;
            }
            let target = match grid.boundary {
                Boundary::DirichletZero if m <= 0 || m >= n as i64 - 1 => None,
                Boundary::DirichletZero => Some(m as usize),
                Boundary::NeumannZero => reflect(m, n),
            };
            if let Some(j) = target {
                k[(i, j)] += weight * p;
            }
        }
    }
    if grid.boundary == Boundary::DirichletZero {
        for j in 0..n {
            k[(0, j)] = 0.0;
            k[(n - 1, j)] = 0.0;
        }
    }
    Ok(k)
}

fn reflect(m: i64, n: usize) -> Option<usize> {
    let last = n as i64 - 1;
    let period = 2 * last;
    let mut r = m.rem_euclid(period);
    if r > last {
        r = period - r;
    }
    Some(r as usize)
}

/// Fixed point of `u(t) = P^beta_t f - int_0^t P^beta_s [k u(t-s)^2] ds`,
/// iterated from `u = 0` with trapezoidal quadrature in time.
pub fn picard_solve(
    model: &ModelSpec,
    f: &ScalarField,
    horizon: f64,
    grid: &SpaceGrid,
    options: &PicardOptions,
) -> Result<PicardSolution> {
    if grid.geometry != Geometry::Line || model.dim() != 1 {
        return Err(invalid("grid", "the picard oracle is one-dimensional"));
    }
    if !(horizon > 0.0 && horizon <= 5.0) {
        return Err(invalid("T", "the picard oracle is limited to 0 < T <= 5"));
    }
    if options.iterations < 10 {
        return Err(invalid("iterations", "at least 10 iterations are required"));
    }
    let u0 = DVector::from_vec(check_initial(f, grid)?);
    let steps = ((horizon / options.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;
    let kernel = weighted_kernel(model, grid, dt)?;
    let kvals = DVector::from_vec(grid.sample(model.k()));

    let mut linear = Vec::with_capacity(steps + 1);
    let mut zero_edges = u0.clone();
    if grid.boundary == Boundary::DirichletZero {
        zero_edges[0] = 0.0;
        zero_edges[grid.nodes - 1] = 0.0;
    }
    linear.push(zero_edges);
    for s in 1..=steps {
        linear.push(&kernel * &linear[s - 1]);
    }

    let mut u: Vec<DVector<f64>> = vec![DVector::zeros(grid.nodes); steps + 1];
    let mut residual = f64::INFINITY;
    for iteration in 1..=options.iterations {
        let v: Vec<DVector<f64>> = u.iter().map(|un| kvals.component_mul(&un.component_mul(un))).collect();
        // q_n = sum_{m=0}^{n} K^m v_{n-m};  r_n = K^n v_0.
        let mut next = Vec::with_capacity(steps + 1);
        let mut q = v[0].clone();
        let mut r = v[0].clone();
        next.push(linear[0].clone());
        for s in 1..=steps {
            q = &v[s] + &kernel * &q;
            r = &kernel * &r;
            let duhamel = (&q - 0.5 * &v[s] - 0.5 * &r) * dt;
            next.push(&linear[s] - duhamel);
        }
        residual = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        u = next;
        if !residual.is_finite() {
            break;
        }
        if residual < options.tolerance {
            let values: Vec<Vec<f64>> = u.iter().map(|x| x.iter().copied().collect()).collect();
            return Ok(PicardSolution {
                solution: CumulantSolution {
                    grid: grid.clone(),
                    times: (0..=steps).map(|s| s as f64 * dt).collect(),
                    values,
                    dt_pde: dt,
                    reaction_step: dt,
                    clipped: 0,
                    updates: 0,
                },
                iterations: iteration - 1,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: options.iterations,
        residual,
    })
}
