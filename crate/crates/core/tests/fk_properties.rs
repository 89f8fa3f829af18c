use proptest::prelude::*;

use superdiff_core::fk::{
    estimate_gauge, estimate_lambda2, estimate_lambda_inf, estimate_semigroup, killed_semigroup_trace,
    semigroup_trace, FkConfig,
};
use superdiff_core::model::{catalog_build, ModelSpec, Params, ScalarField};

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn model(name: &str, pairs: &[(&str, f64)]) -> ModelSpec {
    catalog_build(name, &params(pairs)).unwrap()
}

/// Killed Brownian motion on (-1, 1) decays at the Dirichlet eigenvalue pi^2 / 8.
#[test]
fn killed_brownian_motion_decays_at_the_dirichlet_rate() {
    let m = model("bm_plain", &[("beta", 0.0), ("k", 1.0)]);
    let cfg = FkConfig {
        dt: 1e-3,
        ball_grid_points: 1,
        ..FkConfig::with_seed(5)
    };
    let est = estimate_lambda2(&m, &[1.0], &[1.0, 1.5, 2.0, 2.5, 3.0], 20_000, &cfg).unwrap();
    let fit = est.fit.expect("enough survivors");
    let exact = -std::f64::consts::PI.powi(2) / 8.0;
    assert!((fit.rate - exact).abs() < 0.1, "{} vs {exact}", fit.rate);
}

/// The outward OU process with constant beta has lambda_inf = beta > lambda_2 = beta - gamma d.
#[test]
fn lambda_inf_dominates_lambda_2() {
    let (gamma, beta) = (1.0, 0.5);
    let m = model("ou_outward", &[("gamma", gamma), ("d", 1.0), ("beta", beta), ("k", 1.0)]);
    let cfg = FkConfig {
        dt: 5e-3,
        ball_grid_points: 3,
        ..FkConfig::with_seed(6)
    };
    let t_grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let l2 = estimate_lambda2(&m, &[1.5, 3.0], &t_grid, 10_000, &cfg).unwrap();
    let linf = estimate_lambda_inf(&m, &[vec![0.0], vec![1.0]], &t_grid, 500, &cfg).unwrap();
    let l2_fit = l2.fit.expect("enough survivors");
    assert!((linf.fit.rate - beta).abs() < 1e-9);
    assert!(l2_fit.rate < linf.fit.rate);
    assert!((l2_fit.rate - (beta - gamma)).abs() < 0.25, "{}", l2_fit.rate);
}

#[test]
fn planar_gauge_is_positive_and_below_one() {
    let m = model("planar_annihilation", &[("alpha", 1.0), ("radius", 1.0), ("k", 1.0)]);
    let cfg = FkConfig {
        dt: 0.05,
        ..FkConfig::with_seed(7)
    };
    let v = estimate_gauge(&m, &[0.0, 0.0], &[1.0, 5.0, 25.0], 2000, &cfg).unwrap();
    for (_, e) in &v.trace {
        assert!(e.mean > 0.0 && e.mean <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Killing only removes paths, so on shared streams the killed trace never exceeds the free one.
    #[test]
    fn killing_never_increases_the_semigroup(beta in 0.0f64..1.5, radius in 0.5f64..3.0, seed in 0u64..1000) {
        let m = model("drift_bm", &[("b0", 1.0), ("beta", beta), ("k", 1.0)]);
        let cfg = FkConfig { dt: 0.01, ..FkConfig::with_seed(seed) };
        let times = [0.5, 1.0, 2.0];
        let free = semigroup_trace(&m, &ScalarField::one(), &[0.0], &times, 200, &cfg).unwrap();
        let killed = killed_semigroup_trace(&m, &ScalarField::one(), &[0.0], radius, &times, 200, &cfg).unwrap();
        for ((_, f), (_, k, survivors)) in free.iter().zip(&killed) {
            prop_assert!(k.mean <= f.mean * (1.0 + 1e-12));
            prop_assert!(*survivors <= 200);
        }
    }

    /// Adding a constant c to beta multiplies the semigroup by exp(c t) exactly.
    #[test]
    fn constant_shift_of_beta_is_exponential(c in -1.0f64..1.0, steps in 10usize..100, seed in 0u64..1000) {
        // Checkpoints sit on the step grid, so t is a whole number of steps.
        let t = steps as f64 * 0.02;
        let m = model("planar_annihilation", &[("alpha", 1.0), ("radius", 1.0), ("k", 1.0)]);
        let shifted = m.with_beta(m.beta().add(&ScalarField::constant(c))).unwrap();
        let cfg = FkConfig { dt: 0.02, ..FkConfig::with_seed(seed) };
        let f = ScalarField::one();
        let base = estimate_semigroup(&m, &f, &[0.5, 0.0], t, 100, &cfg).unwrap();
        let moved = estimate_semigroup(&shifted, &f, &[0.5, 0.0], t, 100, &cfg).unwrap();
        let expected = base.mean * (c * t).exp();
        prop_assert!((moved.mean - expected).abs() <= 1e-9 * expected.max(1e-300));
    }
}
