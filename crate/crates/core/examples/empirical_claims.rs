//! Claims data instead of a parametric law: an empirical distribution has
//! atoms only, so the convex program is the solver of record.

use reinsure::distortions::Distortion;
use reinsure::distributions::LossDistribution;
use reinsure::grid::GridSpec;
use reinsure::objective::{solve_rate, RateOptions};
use reinsure::premium::{DualDistribution, MarketParams};
use reinsure::solver::verify_optimality;

fn main() -> reinsure::error::Result<()> {
    // stand-in for a claims file: 400 draws from a loss law with zero claims
    let claims = LossDistribution::exponential_with_zero_mass(1.5, 0.25)?.sample(2024, 400)?;
    let f = LossDistribution::empirical(&claims)?;
    println!("{}: mean {:.4}, P(Z = 0) = {:.3}, max claim {:.3}", f.label(), f.mean(), f.mass_at_zero(), f.support_upper());

    let theta0 = 0.25;
    let dual = DualDistribution::new(&f, &Distortion::proportional_hazard(1.4)?, theta0)?;
    let params = MarketParams { pi: 0.4 * f.mean() + 0.6 * dual.loaded_mean(), theta0 };
    let sol = solve_rate(&params, &dual, &RateOptions::default())?;
    println!("a* = {:.8}", sol.a_star);
    for z in [0.5, 1.0, 2.0, 3.0, 5.0] {
        println!("  I*({z}) = {:.5}", sol.h_star.indemnity(z));
    }

    let cert = verify_optimality(&sol.h_star, sol.a_star, &dual, &GridSpec::default(), 500, 1)?;
    println!("certified: {} (condition I worst {:.1e})", cert.passed, cert.condition_i.worst);
    if cert.oide.non_unique {
        println!("slopes are free on {} intervals between claims: the optimum is not unique there", cert.oide.non_unique_intervals.len());
    }
    Ok(())
}
