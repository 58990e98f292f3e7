//! The two-layer optimum: losses with exponential pieces (means 6, 5, 3
//! switching at 1 and 6), the canonical layer distortion, theta0 = 3 and the
//! premium that makes a* = 1. The optimal indemnity is
//! I*(z) = (z - 2)^+ / 2 + (z - 4)^+ / 2.

use reinsure::closedform::{layer_indemnity, multilayer_case};

fn main() -> reinsure::error::Result<()> {
    let r = multilayer_case()?;
    println!("pi = {:.12}, theta = {}", r.pi, r.theta);
    println!("a* = {:.9} (bracket {:?}, {} evaluations of v)", r.rate.a_star, r.rate.bracket, r.rate.trace.len());
    println!("V(1) = {:.9}  vs  e^-1 = {:.9}", r.v_at_1, (-1.0f64).exp());

    println!("\n   z     I* (solver)   I* (exact)");
    for z in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 12.0] {
        println!("{z:5.1}  {:12.6}  {:12.6}", r.rate.h_star.indemnity(z), layer_indemnity(z));
    }

    println!("\nsign pattern of Phi for the numerical optimum:");
    for c in &r.sign_checks_numerical {
        println!("  [{:>4}, {:>4})  Phi {}  worst violation {:.2e}", c.z_from, c.z_to, c.expect, c.violation);
    }
    Ok(())
}
