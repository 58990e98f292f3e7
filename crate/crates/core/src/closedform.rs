//! Closed-form benchmarks: the stop-loss optimality test, the deductible
//! under the expected value principle, and the multi-layer example with
//! `a* = 1` and `I*(z) = (z - 2)^+ / 2 + (z - 4)^+ / 2`.

use serde::Serialize;

use crate::distortions::Distortion;
use crate::distributions::{LossDistribution, Measure, PiecewiseExponentialSpec};
use crate::error::{Error, Result};
use crate::objective::{objective_eval, solve_rate, value_function, RateOptions, RateSolution};
use crate::premium::{check_assumption, premium_rate, DualDistribution, MarketParams};
use crate::quad;
use crate::retention::RetentionFunction;
use crate::solver::phi::{phi_eval, PhiEvaluator, PhiProfile};

/// Tolerance on both stop-loss inequalities.
pub const STOPLOSS_TOL: f64 = 1e-8;

/// Largest violation of one of the two stop-loss inequalities.
#[derive(Clone, Debug, Serialize)]
pub struct Margin {
    /// `min` over the region of (right side - left side); negative = violated.
    pub min: f64,
    pub at: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StopLossCertificate {
    pub deductible: f64,
    /// `a*` from the explicit formula for a stop-loss optimum.
    pub a_star: f64,
    /// `(1 + theta0) g(S) + a int_(z,d) (d - x) dF - (a d + 1) S`, on `[0, d)`.
    pub below: Margin,
    /// `(a d + 1) S - (1 + theta0) g(S)`, on `[d, inf)`.
    pub above: Margin,
    pub tol: f64,
    pub passed: bool,
}

/// Tests whether `I(z) = (z - d)^+` is optimal.
///
/// `a*` is taken from the explicit formula
/// `(pi - c(I) - E[min(Z, d)]) / (E[min(Z, d)^2] / 2)`, then the two
/// inequalities are scanned on a dense grid covering both regions, the
/// breaks of `F` and of `F_hat`, and geometric survival levels in the tail.
pub fn stoploss_check(d: f64, params: &MarketParams, dual: &DualDistribution) -> Result<StopLossCertificate> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::arg(format!("deductible must be positive and finite, got {d}")));
    }
    let f = dual.loss();
    let g = dual.distortion();
    let h = RetentionFunction::stop_loss(d)?;
    let c = premium_rate(&h, dual)?.value();
    let (m1, m2) = f.retained_moments(&h)?;
    let a = (params.pi - c - m1) / (0.5 * m2);
    if !a.is_finite() {
        return Err(Error::NonFinite("stop-loss a*".into()));
    }
    let load = 1.0 + params.theta0;

    let lhs_below = |z: f64| {
        // int_(z,d) (d - x) dF
        let [m0, m1, _] = f.segment_moments(z, d);
        let atom = f.survival_left(z) - f.survival(z);
        let tail = (d - z) * (m0 - atom) - m1;
        let s = f.survival(z);
        load * g.eval(s) + a * tail - (a * d + 1.0) * s
    };
    let lhs_above = |z: f64| {
        let s = f.survival(z);
        (a * d + 1.0) * s - load * g.eval(s)
    };

    let n = 4000;
    let mut below_z: Vec<f64> = (0..n).map(|k| d * k as f64 / n as f64).collect();
    let mut above_z: Vec<f64> = (0..n).map(|k| d + d * k as f64 / n as f64).collect();
    let top = if f.support_upper().is_finite() { f.support_upper() } else { f.survival_quantile(1e-14) };
    if top > 2.0 * d {
        above_z.extend((0..n).map(|k| 2.0 * d + (top - 2.0 * d) * k as f64 / n as f64));
    }
    let s_d = f.survival(d);
    let mut s = s_d;
    while s > 1e-16 {
        above_z.push(f.survival_quantile(s));
        s *= 0.8;
    }
    for &b in f.breaks().iter().chain(dual.breaks()) {
        for z in [b, b * (1.0 - 1e-12)] {
            if z < d {
                below_z.push(z);
            } else if z.is_finite() {
                above_z.push(z);
            }
        }
    }
    let scan = |zs: &[f64], m: &dyn Fn(f64) -> f64| {
        let mut out = Margin { min: f64::INFINITY, at: f64::NAN, points: 0 };
        for &z in zs.iter().filter(|z| z.is_finite() && **z >= 0.0) {
            let v = m(z);
            out.points += 1;
            if v < out.min {
                out.min = v;
                out.at = z;
            }
        }
        out
    };
    let below = scan(&below_z, &lhs_below);
    let above = scan(&above_z, &lhs_above);
    let passed = a > 0.0 && below.min >= -STOPLOSS_TOL && above.min >= -STOPLOSS_TOL;
    Ok(StopLossCertificate { deductible: d, a_star: a, below, above, tol: STOPLOSS_TOL, passed })
}

/// `int psi(d, z) dF(z)` with `psi(d, z) = (2 - min(1, z/d)) min(d, z)`,
/// i.e. `2 E[min(Z, d)] - E[min(Z, d)^2] / d`.
pub fn psi_integral(f: &LossDistribution, d: f64) -> Result<f64> {
    let (m1, m2) = f.retained_moments(&RetentionFunction::stop_loss(d)?)?;
    Ok(2.0 * m1 - m2 / d)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Deductible {
    pub d_star: f64,
    /// `theta0 / d*`.
    pub a_star: f64,
}

const DEDUCTIBLE_TOL: f64 = 1e-10;

/// Bisection for an increasing `phi` on `(0, inf)` with `phi(0+) < target`.
fn increasing_root(mut phi: impl FnMut(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut steps = 0;
    while phi(hi)? < target {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::Assumption("no deductible below 2^200".into()));
        }
    }
    while phi(lo)? > target {
        lo *= 0.5;
        steps += 1;
        if steps > 1200 {
            return Err(Error::Assumption("no positive deductible".into()));
        }
    }
    while hi - lo > DEDUCTIBLE_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Optimal deductible when the reinsurer uses the expected value principle:
/// `(theta0 / 2) int psi(d*, z) dF(z) = (1 + theta0) E[Z] - pi`, and then
/// `a* = theta0 / d*`.
pub fn no_distortion_deductible(f: &LossDistribution, theta0: f64, pi: f64) -> Result<Deductible> {
    if !(theta0 > 0.0) {
        return Err(Error::arg(format!("theta0 must be positive, got {theta0}")));
    }
    let dual = DualDistribution::new(f, &Distortion::identity(), theta0)?;
    let report = check_assumption(&MarketParams { pi, theta0 }, &dual);
    if let Some(v) = report.violation {
        return Err(Error::Assumption(v));
    }
    let target = (1.0 + theta0) * f.mean() - pi;
    let d_star = increasing_root(|d| Ok(0.5 * theta0 * psi_integral(f, d)?), target)?;
    Ok(Deductible { d_star, a_star: theta0 / d_star })
}

/// Root of the scaled form `int_0^d (2 - z/d) z dF(z) + d (1 - F(d)) = 2 (1 - kappa)`
/// for `E[Z] = 1`, evaluated by direct quadrature against the density and
/// atoms of `F`.
pub fn kappa_deductible(f: &LossDistribution, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::arg(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    if (f.mean() - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("the scaled equation needs E[Z] = 1, got {}", f.mean())));
    }
    let breaks: Vec<f64> = f.breaks().to_vec();
    let lhs = |d: f64| -> Result<f64> {
        let cont = quad::integrate_split(|z| (2.0 - z / d) * z * f.density(z), 0.0, d, &breaks);
        let atoms: f64 = f.atoms().iter().filter(|&&(z, _)| z < d).map(|&(z, p)| (2.0 - z / d) * z * p).sum();
        Ok(cont + atoms + d * f.survival_left(d))
    };
    increasing_root(lhs, 2.0 * (1.0 - kappa))
}

/// The multi-layer example's loss law: exponential pieces with scales 6, 5
/// and 3 switching at 1 and 6.
pub fn layer_loss() -> LossDistribution {
    LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
        breakpoints: vec![1.0, 6.0],
        scales: vec![6.0, 5.0, 3.0],
        mass_at_zero: 0.0,
    })
    .expect("static layer law is valid")
}

pub const LAYER_THETA0: f64 = 3.0;

/// The premium making `a* = 1` in the layer example, by quadrature for the
/// given distortion.
pub fn layer_premium(g: &Distortion) -> f64 {
    let e5 = |z: f64| (-z / 5.0).exp();
    quad::integrate(|z| (z + 1.0) * (-z / 6.0).exp(), 0.0, 1.0)
        + quad::integrate(|z| (z + 1.0) * e5(z), 1.0, 2.0)
        + 0.25 * quad::integrate(|z| (z + 4.0) * e5(z), 2.0, 4.0)
        + 2.0 * quad::integrate(|z| g.eval(e5(z)), 2.0, 4.0)
        + 4.0 * quad::integrate(e5, 4.0, 6.0)
        + 4.0 * quad::integrate_to_inf(|z| g.eval((-z / 3.0).exp()), 6.0)
}

/// `I*(z) = (z - 2)^+ / 2 + (z - 4)^+ / 2`.
pub fn layer_indemnity(z: f64) -> f64 {
    0.5 * (z - 2.0).max(0.0) + 0.5 * (z - 4.0).max(0.0)
}

/// Tolerances of the reproduction.
pub const LAYER_A_TOL: f64 = 1e-3;
pub const LAYER_I_TOL: f64 = 0.02;
pub const LAYER_PHI_TOL: f64 = 1e-6;

/// One sign region of `Phi` the layer optimum must satisfy.
#[derive(Clone, Debug, Serialize)]
pub struct SignCheck {
    pub z_from: f64,
    pub z_to: f64,
    /// "<= 0", "= 0" or ">= 0".
    pub expect: &'static str,
    /// Worst violation of the expected sign (0 when satisfied).
    pub violation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerReproduction {
    pub pi: f64,
    pub theta0: f64,
    pub theta: f64,
    pub rate: RateSolution,
    /// `(z, numerical I*, exact I*)`.
    pub indemnity: Vec<(f64, f64, f64)>,
    pub max_indemnity_error: f64,
    /// `Phi` of the exact optimum at `a = 1`.
    pub phi_exact: PhiProfile,
    /// `Phi` of the numerical optimum at the numerical `a*`.
    pub phi_numerical: PhiProfile,
    /// Sign pattern of `Phi` for the exact optimum.
    pub sign_checks: Vec<SignCheck>,
    /// The same for the numerical optimum.
    pub sign_checks_numerical: Vec<SignCheck>,
    /// `v(1)` of the exact optimum vs `pi - (1 + theta) int z dF_hat`.
    pub v_exact_at_1: f64,
    pub target: f64,
    pub v_at_1: f64,
}

fn check_signs(phi: &dyn Fn(f64) -> f64, tol: f64) -> Vec<SignCheck> {
    let regions: [(f64, f64, &'static str); 3] = [(0.0, 2.0, "<= 0"), (2.0, 4.0, "= 0"), (4.0, 60.0, ">= 0")];
    regions
        .iter()
        .map(|&(lo, hi, expect)| {
            let n = 2000;
            let mut violation: f64 = 0.0;
            for k in 0..n {
                let z = lo + (hi - lo) * k as f64 / n as f64;
                let v = phi(z);
                let bad = match expect {
                    "<= 0" => v.max(0.0),
                    ">= 0" => (-v).max(0.0),
                    _ => v.abs(),
                };
                violation = violation.max(bad);
            }
            SignCheck { z_from: lo, z_to: hi, expect, violation, passed: violation <= tol }
        })
        .collect()
}

/// Solves the multi-layer example from scratch and checks it against its
/// closed form. Any mismatch is an [`Error::Regression`].
pub fn multilayer_case() -> Result<LayerReproduction> {
    multilayer_case_with(&RateOptions::default())
}

pub fn multilayer_case_with(opts: &RateOptions) -> Result<LayerReproduction> {
    let f = layer_loss();
    let g = Distortion::layer_canonical();
    let theta0 = LAYER_THETA0;
    let pi = layer_premium(&g);
    let dual = DualDistribution::new(&f, &g, theta0)?;
    let params = MarketParams { pi, theta0 };
    let rate = solve_rate(&params, &dual, opts)?;
    if (rate.a_star - 1.0).abs() > LAYER_A_TOL {
        return Err(Error::Regression(format!("layer a* = {} is not 1 within {LAYER_A_TOL}", rate.a_star)));
    }

    let probes = [0.5, 1.5, 2.0, 3.0, 4.0, 5.0, 8.0];
    let indemnity: Vec<(f64, f64, f64)> = probes.iter().map(|&z| (z, rate.h_star.indemnity(z), layer_indemnity(z))).collect();
    let max_indemnity_error = indemnity.iter().map(|(_, n, e)| (n - e).abs()).fold(0.0, f64::max);
    if max_indemnity_error > LAYER_I_TOL {
        return Err(Error::Regression(format!("layer I* off by {max_indemnity_error} at the probe points")));
    }

    let exact = RetentionFunction::new(vec![0.0, 2.0, 4.0], vec![1.0, 0.5, 0.0])?;
    let ev = PhiEvaluator::new(&exact, 1.0, &dual);
    let sign_checks = check_signs(&|z| ev.by_survival(z), LAYER_PHI_TOL);
    let ev_num = PhiEvaluator::new(&rate.h_star, rate.a_star, &dual);
    let sign_checks_numerical = check_signs(&|z| ev_num.by_survival(z), LAYER_PHI_TOL);
    for (which, checks) in [("exact", &sign_checks), ("numerical", &sign_checks_numerical)] {
        if let Some(bad) = checks.iter().find(|c| !c.passed) {
            return Err(Error::Regression(format!(
                "Phi of the {which} layer optimum violates '{}' on [{}, {}) by {}",
                bad.expect, bad.z_from, bad.z_to, bad.violation
            )));
        }
    }
    let profile_z: Vec<f64> = (0..=240).map(|k| 0.05 * k as f64).collect();
    let phi_exact = phi_eval(&exact, 1.0, &dual, &profile_z)?;
    let phi_numerical = phi_eval(&rate.h_star, rate.a_star, &dual, &profile_z)?;

    let target = pi - dual.loaded_mean();
    let v_exact_at_1 = objective_eval(&exact, 1.0, &dual)?.total;
    if (v_exact_at_1 - target).abs() > 1e-8 * (1.0 + target.abs()) {
        return Err(Error::Regression(format!("J(H*; 1) = {v_exact_at_1} differs from the target {target}")));
    }
    let v_at_1 = value_function(rate.a_star, 1.0)?;
    if (v_at_1 - (-1.0f64).exp()).abs() > 1e-3 {
        return Err(Error::Regression(format!("V(1) = {v_at_1} is not e^-1")));
    }
    Ok(LayerReproduction {
        pi,
        theta0,
        theta: dual.theta(),
        rate,
        indemnity,
        max_indemnity_error,
        phi_exact,
        phi_numerical,
        sign_checks,
        sign_checks_numerical,
        v_exact_at_1,
        target,
        v_at_1,
    })
}
