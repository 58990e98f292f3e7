//! Monte Carlo check of V(x) = exp(-a* x): simulate the surplus diffusion
//! under the optimal contract and under perturbed ones with common random
//! numbers.

use reinsure::closedform::{layer_loss, layer_premium, multilayer_case, LAYER_THETA0};
use reinsure::distortions::Distortion;
use reinsure::premium::{DualDistribution, MarketParams};
use reinsure::retention::RetentionFunction;
use reinsure::simulate::{hjb_residual, simulate_ruin, SimConfig};

fn main() -> reinsure::error::Result<()> {
    let g = Distortion::layer_canonical();
    let dual = DualDistribution::new(&layer_loss(), &g, LAYER_THETA0)?;
    let params = MarketParams { pi: layer_premium(&g), theta0: LAYER_THETA0 };
    let h_star = multilayer_case()?.rate.h_star;

    let cfg = SimConfig { x: 1.0, horizon: 200.0, dt: 1e-3, n_paths: 100_000, seed: 11, model_rate: Some(1.0), ..SimConfig::default() };
    let t = std::time::Instant::now();
    let r = simulate_ruin(&h_star, &params, &dual, &cfg)?;
    println!("optimum: p = {:.5} +- {:.5}  (exp(-x) = {:.5}, analytic {:.5}) in {:?}", r.estimate, r.std_error, r.model_value.unwrap(), r.analytic_infinite, t.elapsed());
    println!("  {}", r.note);

    println!("\ncontract                 HJB residual    ruin estimate");
    let others = [
        ("no reinsurance", RetentionFunction::identity()),
        ("stop-loss d=3", RetentionFunction::stop_loss(3.0)?),
        ("stop-loss d=2", RetentionFunction::stop_loss(2.0)?),
        ("quota share 50%", RetentionFunction::new(vec![0.0], vec![0.5])?),
    ];
    for (name, h) in others {
        let res = hjb_residual(&h, 1.0, &params, &dual)?;
        let r = simulate_ruin(&h, &params, &dual, &cfg)?;
        println!("{name:<22} {res:>13.5}   {:.5} +- {:.5}", r.estimate, r.std_error);
    }
    Ok(())
}
