//! Random model fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reinsure::distortions::{Distortion, Interpolation};
use reinsure::distributions::{LossDistribution, PiecewiseExponentialSpec};
use reinsure::premium::{check_assumption, DualDistribution, MarketParams};
use reinsure::retention::RetentionFunction;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_loss(rng: &mut ChaCha8Rng, allow_atoms: bool) -> LossDistribution {
    let kinds = if allow_atoms { 4 } else { 2 };
    match rng.random_range(0..kinds) {
        0 => {
            let m0 = if rng.random_bool(0.5) { rng.random_range(0.0..0.5) } else { 0.0 };
            LossDistribution::exponential_with_zero_mass(rng.random_range(0.3..4.0), m0).unwrap()
        }
        1 => {
            let b1 = rng.random_range(0.2..2.0);
            let b2 = b1 + rng.random_range(0.5..4.0);
            // S(z) = exp(-z / s_k) on piece k, so the scales may not increase
            let mut scales: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..6.0)).collect();
            scales.sort_by(|a, b| b.total_cmp(a));
            LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
                breakpoints: vec![b1, b2],
                scales,
                mass_at_zero: if rng.random_bool(0.3) { rng.random_range(0.0..0.4) } else { 0.0 },
            })
            .unwrap()
        }
        2 => {
            let n = rng.random_range(2..6);
            let mut pts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..8.0)).collect();
            if rng.random_bool(0.3) {
                pts[0] = 0.0;
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let w: Vec<f64> = pts.iter().map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
            LossDistribution::discrete(&pts, &probs).unwrap()
        }
        _ => {
            let base = LossDistribution::exponential(rng.random_range(0.5..3.0)).unwrap();
            LossDistribution::empirical(&base.sample(rng.random(), rng.random_range(5..40)).unwrap()).unwrap()
        }
    }
}

/// Any distortion family, including non-concave and discontinuous ones.
pub fn random_distortion(rng: &mut ChaCha8Rng, allow_jumps: bool) -> Distortion {
    let kinds = if allow_jumps { 6 } else { 4 };
    match rng.random_range(0..kinds) {
        0 => Distortion::identity(),
        1 => Distortion::proportional_hazard(rng.random_range(1.0..3.0)).unwrap(),
        2 => Distortion::wang(rng.random_range(0.0..1.0)).unwrap(),
        3 => Distortion::inverse_s(rng.random_range(0.5..1.0)).unwrap(),
        4 => {
            let x = rng.random_range(0.2..0.8);
            let lo = rng.random_range(0.1..0.9) * x;
            let hi = lo + rng.random_range(0.0..(1.0 - lo));
            Distortion::tabular(&[[0.0, 0.0], [x, lo], [x, hi], [1.0, 1.0]], Interpolation::Linear).unwrap()
        }
        _ => {
            // g(0+) = 0 forces the first step to vanish
            let mut ys: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
            ys.sort_by(f64::total_cmp);
            Distortion::tabular(&[[0.0, 0.0], [0.25, 0.0], [0.5, ys[0]], [0.75, ys[1]], [1.0, 1.0]], Interpolation::Step).unwrap()
        }
    }
}

/// Any admissible retention: slopes in `[0, 1]` on random nodes, with a
/// share of bang-bang pieces.
pub fn random_retention(rng: &mut ChaCha8Rng, z_max: f64) -> RetentionFunction {
    let n = rng.random_range(1..12);
    let mut nodes: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..z_max)).collect();
    nodes.push(0.0);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let slopes = nodes
        .iter()
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect();
    RetentionFunction::new(nodes, slopes).unwrap()
}

pub struct Fixture {
    pub loss: LossDistribution,
    pub dual: DualDistribution,
    pub params: MarketParams,
}

/// A fixture whose premium lies strictly inside the admissible band.
pub fn random_fixture(rng: &mut ChaCha8Rng, allow_atoms: bool) -> Fixture {
    loop {
        let loss = random_loss(rng, allow_atoms);
        let g = random_distortion(rng, allow_atoms);
        let theta0 = rng.random_range(0.1..2.0);
        let Ok(dual) = DualDistribution::new(&loss, &g, theta0) else { continue };
        let u = rng.random_range(0.1..0.9);
        let pi = loss.mean() + u * (dual.loaded_mean() - loss.mean());
        let params = MarketParams { pi, theta0 };
        if check_assumption(&params, &dual).passed && dual.loaded_mean() - loss.mean() > 1e-3 {
            return Fixture { loss, dual, params };
        }
    }
}
