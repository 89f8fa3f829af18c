//! Closed-form and quadrature oracles checked against the estimators.

use superdiff_core::cumulant::{
    extinction_probability, picard_solve, solve_cumulant, Boundary, Geometry, PicardOptions, SolveOptions, SpaceGrid,
};
use superdiff_core::fk::{estimate_semigroup, green_potential, FkConfig, Verdict};
use superdiff_core::model::{catalog_build, InitialMeasure, ModelSpec, Params, ScalarField};
use superdiff_core::particle::{laplace_functional, martingale_series, run_replicas, SimConfig};
use superdiff_core::stats::{variance_and_se, MCEstimate};

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn plain(beta: f64, k: f64) -> ModelSpec {
    catalog_build("bm_plain", &params(&[("beta", beta), ("k", k)])).unwrap()
}

fn origin(mass: f64) -> InitialMeasure {
    InitialMeasure::dirac(vec![0.0], mass).unwrap()
}

/// `u' = beta u - k u^2`, `u(0) = theta`.
fn riccati(theta: f64, beta: f64, k: f64, t: f64) -> f64 {
    if beta == 0.0 {
        theta / (1.0 + k * theta * t)
    } else {
        let g = (beta * t).exp();
        theta * g / (1.0 + theta * k * (g - 1.0) / beta)
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn flat_cumulant_matches_riccati() {
    let grid = SpaceGrid::new(Geometry::Line, 4.0, 161, Boundary::NeumannZero).unwrap();
    for (beta, k, theta) in [(0.0, 1.0, 2.0), (0.7, 1.0, 0.5), (-0.4, 2.0, 3.0)] {
        let model = plain(beta, k);
        let s = solve_cumulant(&model, &ScalarField::constant(theta), 2.0, &grid, &SolveOptions::default()).unwrap();
        let exact = riccati(theta, beta, k, 2.0);
        assert!((s.value_at(&[0.3]) - exact).abs() / exact < 2e-3, "beta {beta}");
    }
}

#[test]
fn picard_and_implicit_solver_agree_on_a_bump() {
    let model = catalog_build("drift_bm", &params(&[("beta", 1.0), ("k", 1.0)])).unwrap();
    let f = ScalarField::Gaussian { rate: 0.5 };
    let grid = SpaceGrid::new(Geometry::Line, 10.0, 401, Boundary::DirichletZero).unwrap();
    let pde = solve_cumulant(&model, &f, 1.0, &grid, &SolveOptions::default()).unwrap();
    let picard = picard_solve(&model, &f, 1.0, &grid, &PicardOptions::default()).unwrap();
    let scale = pde.final_values().iter().cloned().fold(0.0, f64::max);
    let gap = pde
        .final_values()
        .iter()
        .zip(picard.solution.final_values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap / scale < 0.02, "relative gap {}", gap / scale);
}

#[test]
fn extinction_probability_of_critical_feller() {
    let grid = SpaceGrid::new(Geometry::Line, 4.0, 81, Boundary::NeumannZero).unwrap();
    let e = extinction_probability(
        &plain(0.0, 1.0),
        &origin(1.0),
        1.0,
        &[10.0, 100.0, 1e3, 1e4],
        &grid,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(e.monotone);
    assert!((e.probability - (-1.0f64).exp()).abs() < 1e-2, "{e:?}");
}

#[test]
fn drifted_exponential_moment() {
    // E exp(a (B_t - b t)) = exp((a^2/2 - a b) t) with a constant potential on top.
    let model = catalog_build("drift_bm", &params(&[("b0", 1.0), ("beta", 0.3)])).unwrap();
    let a = 0.5;
    let est = estimate_semigroup(&model, &ScalarField::Exponential { rate: a }, &[0.0], 1.0, 4000, &FkConfig::with_seed(4))
        .unwrap();
    let exact = ((0.5 * a * a - a) + 0.3f64).exp();
    assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
}

#[test]
fn green_potential_of_decaying_intensity() {
    // Occupation density of B_t - t from the origin, integrated against exp(-2|y|).
    let density = |y: f64, t: f64| (-(y + t) * (y + t) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
    let k = |y: f64| (-2.0 * y.abs()).exp();
    let horizon = 30.0;
    let oracle = simpson(
        |t| {
            if t == 0.0 {
                k(0.0)
            } else {
                simpson(|y| density(y, t) * k(y), -t - 12.0 * t.sqrt() - 1.0, 12.0 * t.sqrt() + 1.0, 800)
            }
        },
        0.0,
        horizon,
        3000,
    );
    let model = catalog_build("drift_bm", &params(&[("b0", 1.0), ("beta", 0.0), ("k_decay", 2.0)])).unwrap();
    let cfg = FkConfig {
        dt: 2e-3,
        ..FkConfig::with_seed(8)
    };
    let v = green_potential(&model, model.k(), &[0.0], &[5.0, 10.0, horizon], 2000, &cfg).unwrap();
    assert_eq!(v.verdict, Verdict::Finite);
    let last = &v.trace.last().unwrap().1;
    assert!((last.mean - oracle).abs() <= 3.0 * last.std_error + 0.01 * oracle, "{last:?} vs {oracle}");
}

#[test]
fn particle_mass_moments() {
    let (beta, k, t) = (0.5, 1.0, 1.0);
    let cfg = SimConfig::new(100, 0.05, t, 21).unwrap();
    let recs = run_replicas(&plain(beta, k), &origin(1.0), &cfg, &[], 3000).unwrap();
    let masses: Vec<f64> = recs.iter().map(|r| r.final_mass()).collect();
    let mean = MCEstimate::from_samples(&masses);
    assert!(mean.within((beta * t).exp(), 3.0), "{mean:?}");
    let oracle = 2.0 * k * simpson(|s| (beta * s).exp() * (2.0 * beta * (t - s)).exp(), 0.0, t, 200);
    let (var, se) = variance_and_se(&masses);
    assert!((var - oracle).abs() <= 3.0 * se, "{var} +- {se} vs {oracle}");
}

#[test]
fn particle_extinction_matches_riccati_limit() {
    let cfg = SimConfig::new(100, 0.05, 1.0, 17).unwrap();
    let recs = run_replicas(&plain(0.0, 1.0), &origin(1.0), &cfg, &[], 1500).unwrap();
    let extinct = recs.iter().filter(|r| r.final_count() == 0).count() as f64 / 1500.0;
    let p = (-1.0f64).exp();
    let se = (p * (1.0 - p) / 1500.0).sqrt();
    assert!((extinct - p).abs() <= 3.0 * se, "{extinct}");
}

#[test]
fn particle_laplace_matches_cumulant_for_spatial_f() {
    let model = plain(0.0, 1.0);
    let f = ScalarField::Gaussian { rate: 1.0 };
    let grid = SpaceGrid::default_for(&model, 1.0, 0.0, 0.02).unwrap();
    let u = solve_cumulant(&model, &f, 1.0, &grid, &SolveOptions::default()).unwrap();
    let target = (-u.value_at(&[0.0])).exp();
    let cfg = SimConfig::new(100, 0.02, 1.0, 2).unwrap();
    let est = laplace_functional(&model, &origin(1.0), &f, 1.0, 1000, &cfg).unwrap();
    assert!(
        (est.mean - target).abs() <= 3.0 * est.std_error + 0.02 * target,
        "{est:?} vs {target}"
    );
}

#[test]
fn branching_property_of_laplace_functionals() {
    let model = plain(0.5, 1.0);
    let one = ScalarField::one();
    let full = laplace_functional(&model, &origin(1.0), &one, 1.0, 3000, &SimConfig::new(100, 0.05, 1.0, 1).unwrap())
        .unwrap();
    let a = laplace_functional(&model, &origin(0.5), &one, 1.0, 3000, &SimConfig::new(100, 0.05, 1.0, 2).unwrap())
        .unwrap();
    let b = laplace_functional(&model, &origin(0.5), &one, 1.0, 3000, &SimConfig::new(100, 0.05, 1.0, 3).unwrap())
        .unwrap();
    let product = a.mean * b.mean;
    let se = ((a.mean * b.std_error).powi(2) + (b.mean * a.std_error).powi(2) + full.std_error.powi(2)).sqrt();
    assert!((product - full.mean).abs() <= 3.0 * se, "{product} vs {}", full.mean);
}

#[test]
fn subcritical_mass_is_a_supermartingale() {
    let cfg = SimConfig::new(50, 0.05, 4.0, 6).unwrap();
    let series =
        martingale_series(&plain(-0.5, 1.0), &origin(1.0), &ScalarField::one(), 0.0, &[0.0, 1.0, 2.0, 4.0], 1000, &cfg)
            .unwrap();
    for w in series.windows(2) {
        let slack = 3.0 * (w[0].estimate.std_error + w[1].estimate.std_error);
        assert!(w[1].estimate.mean <= w[0].estimate.mean + slack);
    }
}

#[test]
fn constant_potential_martingale_has_constant_mean() {
    let cfg = SimConfig::new(50, 0.05, 3.0, 7).unwrap();
    let t_grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let series = martingale_series(&plain(0.4, 1.0), &origin(1.0), &ScalarField::one(), 0.4, &t_grid, 2000, &cfg).unwrap();
    for p in &series {
        assert!(p.estimate.within(1.0, 3.0), "{p:?}");
    }
}
