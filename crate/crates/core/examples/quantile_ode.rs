//! When F has a quantile density, the optimum also follows from a double
//! obstacle problem in the probability variable p. For concave g a single
//! obstacle problem suffices whenever it is solvable.

use reinsure::distortions::Distortion;
use reinsure::distributions::LossDistribution;
use reinsure::objective::{solve_rate, RateOptions};
use reinsure::premium::{DualDistribution, MarketParams};
use reinsure::solver::{retention_from_psi, solve_quantile_ode, solve_single_obstacle_concave, NodeLabel, OdeOptions};

fn main() -> reinsure::error::Result<()> {
    let f = LossDistribution::exponential_with_zero_mass(2.0, 0.3)?;
    let g = Distortion::wang(0.5)?;
    let theta0 = 0.6;
    let dual = DualDistribution::new(&f, &g, theta0)?;
    let params = MarketParams { pi: 0.5 * (f.mean() + dual.loaded_mean()), theta0 };

    let rate = solve_rate(&params, &dual, &RateOptions::default())?;
    let psi = solve_quantile_ode(rate.a_star, &dual, &OdeOptions::default())?;
    let h_ode = retention_from_psi(&psi)?;
    let z_max = psi.z_resolved;
    println!("a* = {:.8}", rate.a_star);
    println!(
        "double obstacle: {} cells, {} ({} iterations), residual {:.1e}",
        psi.dpsi.len(),
        psi.method,
        psi.iterations,
        psi.residual
    );
    println!(
        "sup |H_ode - H_qp| on [0, {z_max:.1}] = {:.2e}  (2 x grid spacing = {:.2e})",
        h_ode.sup_distance_on(&rate.h_star, z_max),
        2.0 * rate.max_spacing
    );

    let count = |l: NodeLabel| psi.labels.iter().filter(|&&x| x == l).count();
    println!(
        "nodes on the obstacle: {}, free: {}, at full slope: {}",
        count(NodeLabel::Lower),
        count(NodeLabel::Interior),
        count(NodeLabel::Upper)
    );

    match solve_single_obstacle_concave(rate.a_star, &dual, &OdeOptions::default()) {
        Ok(single) => {
            let gap = single.psi.iter().zip(&psi.psi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            println!("single obstacle route agrees to {gap:.1e}");
        }
        Err(e) => println!("single obstacle route unavailable: {e}"),
    }

    // a cheap reinsurer: small losses are ceded too, and the single
    // obstacle problem has no solution
    let cheap = DualDistribution::new(&LossDistribution::exponential(1.0)?, &Distortion::proportional_hazard(2.0)?, 0.2)?;
    match solve_single_obstacle_concave(1.0, &cheap, &OdeOptions { n_nodes: 400, ..OdeOptions::default() }) {
        Ok(_) => println!("unexpected: single obstacle solved"),
        Err(e) => println!("PH(2), theta0 = 0.2: {e}"),
    }
    Ok(())
}
