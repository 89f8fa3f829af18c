use proptest::prelude::*;

use superdiff_core::cumulant::{
    domain_monotone_check, read_dump, solve_cumulant, write_dump, Boundary, CumulantSolution, Geometry, SolveOptions,
    SpaceGrid,
};
use superdiff_core::model::{catalog_build, h_transform, Atom, InitialMeasure, ModelSpec, Params, ScalarField};
use superdiff_core::particle::{init_cloud, run_trajectory, Observable, SimConfig};
use superdiff_core::stats::{growth_fit, MCEstimate};

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn plain(beta: f64, k: f64) -> ModelSpec {
    catalog_build("bm_plain", &params(&[("beta", beta), ("k", k)])).unwrap()
}

fn coarse() -> SolveOptions {
    SolveOptions {
        dt_pde: 1e-2,
        ..Default::default()
    }
}

fn line(half_width: f64) -> SpaceGrid {
    SpaceGrid::with_spacing(Geometry::Line, half_width, 0.05, Boundary::DirichletZero).unwrap()
}

fn drift_and_coefficients(m: &ModelSpec, x: f64) -> (f64, f64, f64) {
    let mut b = [0.0];
    m.diffusion.drift_at(&[x], &mut b);
    (b[0], m.beta().eval(&[x]), m.k().eval(&[x]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn field_algebra_is_pointwise(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.1f64..3.0, x in -3.0f64..3.0) {
        let f = ScalarField::Exponential { rate: a };
        let g = ScalarField::Exponential { rate: b };
        let k = ScalarField::constant(c);
        let p = [x];
        prop_assert!((f.mul(&g).eval(&p) - f.eval(&p) * g.eval(&p)).abs() <= 1e-12 * f.eval(&p) * g.eval(&p));
        prop_assert!((f.add(&k).eval(&p) - f.eval(&p) - c).abs() < 1e-12 * (1.0 + f.eval(&p)));
        prop_assert!((f.scale(c).eval(&p) - c * f.eval(&p)).abs() < 1e-12 * (1.0 + c * f.eval(&p)));
    }

    #[test]
    fn h_transforms_compose(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, beta in 0.0f64..1.0, x in -2.0f64..2.0) {
        let m = catalog_build("drift_bm", &params(&[("b0", 0.5), ("beta", beta), ("k", 1.0)])).unwrap();
        let h1 = ScalarField::Exponential { rate: c1 };
        let h2 = ScalarField::Exponential { rate: c2 };
        let stepwise = h_transform(&h_transform(&m, &h1, None).unwrap(), &h2, None).unwrap();
        let direct = h_transform(&m, &h1.mul(&h2), None).unwrap();
        let (b1, be1, k1) = drift_and_coefficients(&stepwise, x);
        let (b2, be2, k2) = drift_and_coefficients(&direct, x);
        prop_assert!((b1 - b2).abs() < 1e-12);
        prop_assert!((be1 - be2).abs() < 1e-12);
        prop_assert!((k1 - k2).abs() < 1e-12 * k1.max(1.0));
    }

    #[test]
    fn growth_fit_recovers_exact_rates(rate in -2.0f64..2.0, scale in 0.1f64..10.0) {
        let series: Vec<(f64, f64)> = (1..=6).map(|t| (t as f64, scale * (rate * t as f64).exp())).collect();
        let g = growth_fit(&series, None).unwrap();
        prop_assert!((g.rate - rate).abs() < 1e-9);
        prop_assert!(g.r_squared > 0.999_999);
    }

    #[test]
    fn log_weighted_matches_plain_mean(values in prop::collection::vec(0.0f64..5.0, 2..50)) {
        let pairs: Vec<(f64, f64)> = values.iter().map(|v| (0.0, *v)).collect();
        let a = MCEstimate::from_log_weighted(&pairs);
        let b = MCEstimate::from_samples(&values);
        prop_assert!((a.mean - b.mean).abs() < 1e-12 * (1.0 + b.mean));
        prop_assert!((a.std_error - b.std_error).abs() < 1e-12 * (1.0 + b.std_error));
    }

    #[test]
    fn init_cloud_rounds_each_atom(masses in prop::collection::vec(0.05f64..2.0, 1..5), n in 10u32..200) {
        let atoms = masses
            .iter()
            .enumerate()
            .map(|(i, m)| Atom { position: vec![i as f64], mass: *m })
            .collect();
        let mu = InitialMeasure::new(atoms).unwrap();
        let expected: usize = masses.iter().map(|m| (m * n as f64).round() as usize).sum();
        match init_cloud(&mu, n) {
            Ok(c) => prop_assert_eq!(c.count(), expected),
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }

    #[test]
    fn dump_round_trips(values in prop::collection::vec(-1e3f64..1e3, 64..65), t in 0.0f64..10.0) {
        let grid = SpaceGrid::new(Geometry::Line, 2.0, 64, Boundary::DirichletZero).unwrap();
        let s = CumulantSolution {
            grid,
            times: vec![0.0, t + 1.0],
            values: vec![values.clone(), values.iter().map(|v| v * 0.5).collect()],
            dt_pde: 0.1,
            reaction_step: 0.1,
            clipped: 0,
            updates: 0,
        };
        let mut buf = Vec::new();
        write_dump(&s, &mut buf).unwrap();
        let d = read_dump(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(d.values, s.values);
        prop_assert_eq!(d.times, s.times);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cumulant_is_bounded_and_ordered(beta in -0.5f64..1.0, k in 0.2f64..2.0, theta in 0.1f64..3.0) {
        let m = plain(beta, k);
        let grid = line(4.0);
        let f = ScalarField::Gaussian { rate: 0.5 }.scale(theta);
        let lo = solve_cumulant(&m, &f, 1.0, &grid, &coarse()).unwrap();
        let hi = solve_cumulant(&m, &f.scale(1.5), 1.0, &grid, &coarse()).unwrap();
        let bound = theta * beta.max(0.0).exp();
        for (a, b) in lo.final_values().iter().zip(hi.final_values()) {
            prop_assert!(*a >= 0.0);
            prop_assert!(*a <= bound + 1e-9);
            prop_assert!(*a <= *b + 1e-12);
        }
    }

    #[test]
    fn domain_solutions_increase_with_radius(beta in 0.0f64..1.0, k in 0.5f64..2.0) {
        let m = plain(beta, k);
        let r = domain_monotone_check(&m, &ScalarField::one(), 1.0, &[2.0, 3.0, 4.0], &line(4.0), &coarse()).unwrap();
        prop_assert!(r.min_increment >= -1e-8, "{}", r.min_increment);
    }

    #[test]
    fn particle_mass_is_count_over_n(seed in 0u64..1000, beta in -1.0f64..1.0) {
        let m = catalog_build("drift_bm", &params(&[("beta", beta.max(0.0)), ("k_decay", 1.0)])).unwrap();
        let cfg = SimConfig { samples: 10, ..SimConfig::new(20, 0.05, 1.0, seed).unwrap() };
        let mu = InitialMeasure::dirac(vec![0.0], 1.0).unwrap();
        let ball = Observable::Ball { name: "b".into(), center: vec![0.0], radius: 1.0 };
        let r = run_trajectory(&m, &mu, &cfg, &[ball.clone()], 0).unwrap();
        for (mass, count) in r.total_mass.iter().zip(&r.particle_count) {
            prop_assert_eq!(*mass, *count as f64 / 20.0);
        }
        prop_assert_eq!(r.clone(), run_trajectory(&m, &mu, &cfg, &[ball], 0).unwrap());
    }
}
