//! Invariants across the pricing, objective and solver layers, checked on
//! randomly drawn models.

mod common;

use proptest::prelude::*;
use rand::Rng;
use reinsure::grid::{Discretization, GridSpec};
use reinsure::objective::{objective_eval, solve_rate, v_eval, value_function, RateOptions};
use reinsure::premium::{premium_direct, premium_dual, DualDistribution};
use reinsure::retention::RetentionFunction;
use reinsure::solver::QpOptions;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn pricing_routes_agree(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let f = common::random_loss(&mut rng, true);
        let g = common::random_distortion(&mut rng, true);
        let dual = DualDistribution::new(&f, &g, rng.random_range(0.0..2.0)).unwrap();
        let h = common::random_retention(&mut rng, f.survival_quantile(1e-3).max(1.0));
        let (a, b) = (premium_direct(&h, &dual), premium_dual(&h, &dual));
        prop_assert!(rel(a, b) <= 1e-6, "{a} vs {b}");
    }

    #[test]
    fn more_cover_costs_more(seed in any::<u64>(), c in 0.0..1.0f64) {
        let mut rng = common::rng(seed);
        let f = common::random_loss(&mut rng, true);
        let g = common::random_distortion(&mut rng, true);
        let dual = DualDistribution::new(&f, &g, 0.5).unwrap();
        let h = common::random_retention(&mut rng, f.survival_quantile(1e-3).max(1.0));
        let (more, less) = (premium_dual(&h.scaled(c), &dual), premium_dual(&h, &dual));
        prop_assert!(more >= less - 1e-9 * (1.0 + less), "{more} < {less}");
        prop_assert!(premium_dual(&RetentionFunction::identity(), &dual).abs() <= 1e-12);
        prop_assert!(rel(premium_dual(&RetentionFunction::zero(), &dual), dual.loaded_mean()) <= 1e-9);
    }

    #[test]
    fn indemnity_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let h = common::random_retention(&mut rng, 10.0);
        let nodes = h.nodes().to_vec();
        let i: Vec<f64> = nodes.iter().map(|&z| h.indemnity(z)).collect();
        let back = RetentionFunction::from_indemnity(nodes.clone(), &i).unwrap();
        // the tail slope is not determined by node values alone
        let z_max = *nodes.last().unwrap();
        prop_assert!(h.sup_distance_on(&back, z_max) <= 1e-12);

        let mut finer: Vec<f64> = nodes.iter().chain((0..20).map(|k| 0.6 * k as f64).collect::<Vec<_>>().iter()).copied().collect();
        finer.sort_by(f64::total_cmp);
        finer.dedup();
        let fine = h.resample(&finer);
        prop_assert!(h.sup_distance(&fine) <= 1e-12);
        for z in [0.3, 2.9, 12.0, 40.0] {
            let i = h.indemnity(z);
            prop_assert!((0.0..=z + 1e-12).contains(&i));
        }
    }

    #[test]
    fn quantiles_invert_the_cdf(seed in any::<u64>(), p in 0.001..0.999f64) {
        let mut rng = common::rng(seed);
        let f = common::random_loss(&mut rng, true);
        let q = f.quantile(p).unwrap();
        prop_assert!(f.cdf(q).unwrap() >= p - 1e-12);
        if q > 0.0 {
            prop_assert!(f.cdf(q * (1.0 - 1e-9)).unwrap() <= p + 1e-9);
        }
    }

    #[test]
    fn value_function_decays(a in 1e-3..10.0f64, x in 0.0..50.0f64, dx in 1e-3..5.0f64) {
        let v = value_function(a, x).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(value_function(a, x + dx).unwrap() < v || v == 0.0);
    }
}

proptest! {
    #![proptest_config(config(16))]

    /// `v` is an infimum of functions affine and nondecreasing in `a`.
    #[test]
    fn v_is_monotone_and_concave(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let fx = common::random_fixture(&mut rng, true);
        let d = Discretization::new(&GridSpec::with_nodes(150), &fx.dual).unwrap();
        let qp = QpOptions::default();
        let a0 = rng.random_range(0.05..3.0);
        let a1 = a0 * rng.random_range(1.1..4.0);
        let [v0, vm, v1] = [a0, 0.5 * (a0 + a1), a1].map(|a| v_eval(a, &d, None, &qp).unwrap().value);
        let tol = 1e-8 * (1.0 + v1.abs());
        prop_assert!(v0 <= vm + tol && vm <= v1 + tol, "{v0} {vm} {v1}");
        prop_assert!(vm >= 0.5 * (v0 + v1) - tol, "{vm} below chord of {v0}, {v1}");
    }

    /// The grid minimizer beats every other retention on the same grid.
    #[test]
    fn grid_minimizer_is_minimal(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let fx = common::random_fixture(&mut rng, true);
        let d = Discretization::new(&GridSpec::with_nodes(150), &fx.dual).unwrap();
        let a = rng.random_range(0.05..3.0);
        let best = v_eval(a, &d, None, &QpOptions::default()).unwrap();
        let exact = objective_eval(&best.retention(&d), a, &fx.dual).unwrap().total;
        prop_assert!(rel(exact, best.value) <= 1e-8, "{exact} vs {}", best.value);
        for _ in 0..8 {
            let slopes = d.nodes.iter().map(|_| rng.random::<f64>().powi(3)).collect();
            let other = RetentionFunction::new(d.nodes.clone(), slopes).unwrap();
            let j = objective_eval(&other, a, &fx.dual).unwrap().total;
            prop_assert!(j >= best.value - 1e-8 * (1.0 + j.abs()), "{j} < {}", best.value);
        }
    }

    /// The optimum is admissible and solves the rate equation.
    #[test]
    fn optimum_is_admissible(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let fx = common::random_fixture(&mut rng, true);
        let opts = RateOptions { grid: GridSpec::with_nodes(300), ..RateOptions::default() };
        let sol = solve_rate(&fx.params, &fx.dual, &opts).unwrap();
        prop_assert!(sol.a_star > 0.0);
        prop_assert!(sol.h_star.slopes().iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert_eq!(sol.h_star.eval(0.0), 0.0);
        let mut last = 0.0;
        for &z in sol.h_star.nodes() {
            let i = sol.h_star.indemnity(z);
            prop_assert!(i >= last - 1e-12 && i <= z + 1e-12);
            last = i;
        }
        prop_assert!((sol.v_at_a_star - sol.target).abs() <= 1e-6 * (1.0 + sol.target.abs()));
    }
}
