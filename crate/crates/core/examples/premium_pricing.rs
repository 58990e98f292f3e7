//! Distortion premiums for a few contracts, priced by layer-cake integration
//! and as a loaded expectation under the dual distribution.

use reinsure::distortions::{concave_envelope, validate_distortion, Distortion, Interpolation};
use reinsure::distributions::{LossDistribution, Measure};
use reinsure::premium::{premium_rate, DualDistribution};
use reinsure::retention::RetentionFunction;

fn main() -> reinsure::error::Result<()> {
    let f = LossDistribution::exponential(1.0)?;
    // an S-shaped table with a jump: not concave, still a valid distortion
    let jumpy = Distortion::tabular(&[[0.0, 0.0], [0.2, 0.1], [0.5, 0.4], [0.5, 0.6], [1.0, 1.0]], Interpolation::Linear)?;
    let report = validate_distortion(&jumpy, 1000);
    println!("tabular g valid: {}, jumps: {:?}", report.passed, report.jumps);
    let env = concave_envelope(&jumpy, 1.0)?;
    println!("concave envelope at 0.2, 0.5: {:.4}, {:.4}", env.eval(0.2), env.eval(0.5));

    let contracts = [
        ("full cover", RetentionFunction::zero()),
        ("stop-loss d=1", RetentionFunction::stop_loss(1.0)?),
        ("quota share 40%", RetentionFunction::new(vec![0.0], vec![0.6])?),
        ("layer (1, 3]", RetentionFunction::new(vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0])?),
    ];
    let distortions = [
        Distortion::identity(),
        Distortion::proportional_hazard(1.5)?,
        Distortion::wang(0.3)?,
        Distortion::inverse_s(0.7)?,
        jumpy,
    ];
    println!("\n{:<18}{}", "contract", distortions.iter().map(|g| format!(" {:>24}", g.label())).collect::<String>());
    for (name, h) in &contracts {
        print!("{name:<18}");
        for g in &distortions {
            let dual = DualDistribution::new(&f, g, 0.2)?;
            let q = premium_rate(h, &dual)?;
            print!(" {:>24}", format!("{:.6} ({:.0e})", q.dual, (q.dual - q.direct).abs()));
        }
        println!();
    }

    let dual = DualDistribution::new(&f, &Distortion::proportional_hazard(1.5)?, 0.2)?;
    println!("\nPH(1.5): theta = {:.3}, dual survival at 1, 2: {:.5}, {:.5}", dual.theta(), dual.survival(1.0), dual.survival(2.0));
    Ok(())
}
