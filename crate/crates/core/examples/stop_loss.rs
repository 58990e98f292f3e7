//! Expected value principle (no distortion): the optimum is stop-loss. The
//! deductible solves a scalar monotone equation; the general solver and the
//! stop-loss certificate confirm it.

use reinsure::closedform::{kappa_deductible, no_distortion_deductible, stoploss_check};
use reinsure::distortions::Distortion;
use reinsure::distributions::LossDistribution;
use reinsure::objective::{solve_rate, RateOptions};
use reinsure::premium::{DualDistribution, MarketParams};
use reinsure::retention::RetentionFunction;

fn main() -> reinsure::error::Result<()> {
    let f = LossDistribution::exponential(1.0)?;
    let theta0 = 1.0;
    let dual = DualDistribution::new(&f, &Distortion::identity(), theta0)?;

    println!("insurer loading   d*        a* = theta0/d*   solver a*    sup|H - min(z,d*)|");
    for insurer_loading in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let pi = 1.0 + insurer_loading;
        let ded = no_distortion_deductible(&f, theta0, pi)?;
        // E[Z] = 1, so the scaled equation applies with kappa = loading / theta0
        let d_kappa = kappa_deductible(&f, insurer_loading / theta0)?;
        assert!((d_kappa - ded.d_star).abs() < 1e-8);
        let rate = solve_rate(&MarketParams { pi, theta0 }, &dual, &RateOptions::default())?;
        let err = rate.h_star.sup_distance(&RetentionFunction::stop_loss(ded.d_star)?);
        println!("{insurer_loading:>15}   {:<9.6} {:<16.9} {:<12.9} {err:.2e}", ded.d_star, ded.a_star, rate.a_star);
    }

    let params = MarketParams { pi: 1.5, theta0 };
    let d = no_distortion_deductible(&f, theta0, params.pi)?.d_star;
    for trial in [d, 0.5 * d, 2.0 * d] {
        let c = stoploss_check(trial, &params, &dual)?;
        println!(
            "\nd = {trial:.4}: {}  (margin on [0,d): {:.2e} at z = {:.3}; on [d,inf): {:.2e} at z = {:.3})",
            if c.passed { "optimal" } else { "not optimal" },
            c.below.min,
            c.below.at,
            c.above.min,
            c.above.at
        );
    }
    Ok(())
}
