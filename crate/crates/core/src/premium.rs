//! The dual distribution, the effective loading and the distortion premium.

use serde::{Deserialize, Serialize};

use crate::distortions::Distortion;
use crate::distributions::{LossDistribution, Measure};
use crate::error::{Error, Result};
use crate::quad;
use crate::retention::RetentionFunction;

/// Relative agreement required between the two premium routes.
pub const PREMIUM_XCHECK_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Insurer's premium rate per unit loss frequency.
    pub pi: f64,
    /// Reinsurer's safety loading.
    pub theta0: f64,
}

/// `F_hat(z) = 1 - g(1 - F(z)) / g(1 - F(0))` together with the effective
/// loading `theta = (1 + theta0) g(1 - F(0)) - 1`.
#[derive(Clone, Debug)]
pub struct DualDistribution {
    f: LossDistribution,
    g: Distortion,
    theta0: f64,
    norm: f64,
    theta: f64,
    breaks: Vec<f64>,
    dual_mean: f64,
}

impl DualDistribution {
    pub fn new(f: &LossDistribution, g: &Distortion, theta0: f64) -> Result<Self> {
        if !(theta0 > -1.0 && theta0.is_finite()) {
            return Err(Error::arg(format!("theta0 must exceed -1, got {theta0}")));
        }
        let top = 1.0 - f.mass_at_zero();
        let norm = g.eval(top);
        if !(norm > 0.0) {
            return Err(Error::DegenerateDistortion(norm));
        }
        let mut breaks: Vec<f64> = f.breaks().to_vec();
        breaks.extend(f.atoms().iter().map(|a| a.0));
        for &u in g.breakpoints() {
            if u > 0.0 && u < top {
                let z = f.survival_quantile(u);
                if z.is_finite() {
                    breaks.push(z);
                }
            }
        }
        breaks.retain(|&z| z > 0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut d = Self {
            f: f.clone(),
            g: g.clone(),
            theta0,
            norm,
            theta: (1.0 + theta0) * norm - 1.0,
            breaks,
            dual_mean: 0.0,
        };
        let mean = d.segment_moments(0.0, f64::INFINITY)[1];
        if !mean.is_finite() {
            return Err(Error::Assumption("E_g[Z] is infinite".into()));
        }
        d.dual_mean = mean;
        Ok(d)
    }

    pub fn loss(&self) -> &LossDistribution {
        &self.f
    }

    pub fn distortion(&self) -> &Distortion {
        &self.g
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Effective loading `theta`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `g(1 - F(0))`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    /// `int z dF_hat`.
    pub fn dual_mean(&self) -> f64 {
        self.dual_mean
    }

    /// `E_g[Z] = (1 + theta) int z dF_hat`.
    pub fn loaded_mean(&self) -> f64 {
        (1.0 + self.theta) * self.dual_mean
    }

    pub fn cdf(&self, z: f64) -> f64 {
        1.0 - self.survival(z)
    }
}

impl Measure for DualDistribution {
    fn survival(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0;
        }
        self.g.eval(self.f.survival(z)) / self.norm
    }

    fn survival_left(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        let s = self.f.survival_left(z);
        // S decreases strictly into z when F has a density, so g is
        // approached from above
        let v = if self.f.has_density() { self.g.right_limit(s) } else { self.g.eval(s) };
        (v / self.norm).min(1.0)
    }

    fn breaks(&self) -> &[f64] {
        &self.breaks
    }
}

/// Shorthand for [`DualDistribution::new`].
pub fn dual_cdf(f: &LossDistribution, g: &Distortion, theta0: f64) -> Result<DualDistribution> {
    DualDistribution::new(f, g, theta0)
}

/// `(1 + theta0) int_0^inf g(P(xi > z)) dz`.
pub fn g_expectation(g: &Distortion, theta0: f64, xi: &LossDistribution) -> Result<f64> {
    let mut pts = xi.breaks().to_vec();
    pts.extend(xi.atoms().iter().map(|a| a.0));
    for &u in g.breakpoints() {
        let z = xi.survival_quantile(u);
        if z.is_finite() {
            pts.push(z);
        }
    }
    let upper = xi.support_upper();
    let v = if upper.is_finite() {
        quad::integrate_split(|z| g.eval(xi.survival(z)), 0.0, upper, &pts)
    } else {
        quad::integrate_split_to_inf(|z| g.eval(xi.survival(z)), 0.0, &pts)
    };
    if !v.is_finite() {
        return Err(Error::NonFinite("g-expectation".into()));
    }
    Ok((1.0 + theta0) * v)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PremiumQuote {
    /// `(1 + theta0) int g(P(I(Z) > t)) dt` by layer-cake over the range of `I`.
    pub direct: f64,
    /// `(1 + theta) int I dF_hat`.
    pub dual: f64,
}

impl PremiumQuote {
    pub fn value(&self) -> f64 {
        self.dual
    }
}

/// `c(I)` for the indemnity `I(z) = z - H(z)`, computed by both routes.
pub fn premium_rate(h: &RetentionFunction, dual: &DualDistribution) -> Result<PremiumQuote> {
    let direct = premium_direct(h, dual);
    let dual_v = premium_dual(h, dual);
    if !(direct.is_finite() && dual_v.is_finite()) {
        return Err(Error::NonFinite("premium".into()));
    }
    if (direct - dual_v).abs() > PREMIUM_XCHECK_TOL * (1.0 + dual_v.abs()) {
        return Err(Error::CrossCheck(format!("premium routes disagree: direct {direct}, dual {dual_v}")));
    }
    Ok(PremiumQuote { direct, dual: dual_v })
}

/// `(1 + theta) int I dF_hat`, interval by interval.
pub fn premium_dual(h: &RetentionFunction, dual: &DualDistribution) -> f64 {
    let nodes = h.nodes();
    let mut sum = 0.0;
    for k in 0..nodes.len() {
        let a = nodes[k];
        let b = nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let r = 1.0 - h.slopes()[k];
        let i0 = a - h.value_at_node(k);
        if i0 == 0.0 && r == 0.0 {
            continue;
        }
        let m = dual.segment_moments(a, b);
        sum += i0 * m[0] + r * m[1];
    }
    (1.0 + dual.theta()) * sum
}

/// Layer-cake in the indemnity variable `t`: on each piece where `I` grows
/// with slope `r > 0`, `P(I(Z) > t) = S(z_k + (t - I_k) / r)`.
pub fn premium_direct(h: &RetentionFunction, dual: &DualDistribution) -> f64 {
    let f = dual.loss();
    let g = dual.distortion();
    let nodes = h.nodes();
    let zbreaks = dual.breaks();
    let mut sum = 0.0;
    for k in 0..nodes.len() {
        let r = 1.0 - h.slopes()[k];
        if r <= 0.0 {
            continue;
        }
        let za = nodes[k];
        let zb = nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let ta = za - h.value_at_node(k);
        let to_t = |z: f64| ta + r * (z - za);
        let surv = |t: f64| g.eval(f.survival(za + (t - ta) / r));
        let tbreaks: Vec<f64> = zbreaks.iter().filter(|&&z| z > za && z < zb).map(|&z| to_t(z)).collect();
        sum += if zb.is_finite() {
            quad::integrate_split(surv, ta, to_t(zb), &tbreaks)
        } else {
            quad::integrate_split_to_inf(surv, ta, &tbreaks)
        };
    }
    (1.0 + dual.theta0()) * sum
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub expected_loss: f64,
    pub pi: f64,
    /// `E_g[Z] = (1 + theta) int z dF_hat`.
    pub loaded_dual_mean: f64,
    /// `pi - E[Z]`.
    pub lower_margin: f64,
    /// `E_g[Z] - pi`.
    pub upper_margin: f64,
    pub passed: bool,
    pub violation: Option<String>,
}

/// Evaluates `0 < E[Z] < pi < E_g[Z] < inf`.
pub fn check_assumption(params: &MarketParams, dual: &DualDistribution) -> AssumptionReport {
    let ez = dual.loss().mean();
    let eg = dual.loaded_mean();
    let pi = params.pi;
    let violation = if !(ez > 0.0) {
        Some(format!("expected loss E[Z] = {ez} must be positive"))
    } else if !(pi > ez) {
        Some(format!("insurance premium below expected loss: pi = {pi} <= E[Z] = {ez}"))
    } else if !eg.is_finite() {
        Some("reinsurance premium for full cover E_g[Z] is infinite".into())
    } else if !(pi < eg) {
        Some(format!("full reinsurance is cheap: pi = {pi} >= E_g[Z] = {eg}"))
    } else {
        None
    };
    AssumptionReport {
        expected_loss: ez,
        pi,
        loaded_dual_mean: eg,
        lower_margin: pi - ez,
        upper_margin: eg - pi,
        passed: violation.is_none(),
        violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortions::layer;
    use crate::distributions::PiecewiseExponentialSpec;

    fn layer_f() -> LossDistribution {
        LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![1.0, 6.0],
            scales: vec![6.0, 5.0, 3.0],
            mass_at_zero: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn identity_dual_is_f() {
        let f = LossDistribution::exponential(1.0).unwrap();
        let d = DualDistribution::new(&f, &Distortion::identity(), 0.0).unwrap();
        for &z in &[0.0, 0.3, 1.0, 4.0] {
            assert!((d.cdf(z) - f.cdf(z).unwrap()).abs() < 1e-15);
        }
        let f2 = LossDistribution::exponential_with_zero_mass(1.0, 0.2).unwrap();
        let d2 = DualDistribution::new(&f2, &Distortion::identity(), 0.0).unwrap();
        for &z in &[0.0, 0.5, 2.0] {
            assert!((d2.cdf(z) - (f2.cdf(z).unwrap() - 0.2) / 0.8).abs() < 1e-15);
        }
        assert!((d2.theta() - (0.8 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn layer_dual_values() {
        let d = DualDistribution::new(&layer_f(), &Distortion::layer_canonical(), 3.0).unwrap();
        assert!((d.cdf(5.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(d.theta(), 3.0);
        // atom of F_hat at z = 2 from the jump of g
        let jump = d.survival_left(2.0) - d.survival(2.0);
        assert!((jump - (layer::c() - layer::eval(layer::u2()))).abs() < 1e-12);
        assert!(d.breaks().iter().any(|&z| (z - 2.0).abs() < 1e-12));
        assert!((d.loaded_mean() - 15.64258610020125).abs() < 1e-8);
    }

    #[test]
    fn degenerate_distortion_rejected() {
        let g = Distortion::tabular(&[[0.0, 0.0], [0.5, 0.0], [1.0, 1.0]], Default::default()).unwrap();
        let f = LossDistribution::exponential_with_zero_mass(1.0, 0.6).unwrap();
        assert!(matches!(DualDistribution::new(&f, &g, 0.0), Err(Error::DegenerateDistortion(_))));
    }

    #[test]
    fn g_expectations() {
        let f = LossDistribution::exponential(1.0).unwrap();
        assert!((g_expectation(&Distortion::identity(), 0.0, &f).unwrap() - 1.0).abs() < 1e-10);
        assert!((g_expectation(&Distortion::identity(), 0.5, &f).unwrap() - 1.5).abs() < 1e-10);
        let ph = Distortion::proportional_hazard(2.0).unwrap();
        assert!((g_expectation(&ph, 0.0, &f).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn premium_examples() {
        let f = LossDistribution::exponential(1.0).unwrap();
        let d = DualDistribution::new(&f, &Distortion::identity(), 0.5).unwrap();
        let full = premium_rate(&RetentionFunction::zero(), &d).unwrap();
        assert!((full.value() - 1.5).abs() < 1e-9);
        let none = premium_rate(&RetentionFunction::identity(), &d).unwrap();
        assert_eq!(none.value(), 0.0);
        let d1 = DualDistribution::new(&f, &Distortion::identity(), 1.0).unwrap();
        for &ded in &[0.3, 1.0, 2.5] {
            let q = premium_rate(&RetentionFunction::stop_loss(ded).unwrap(), &d1).unwrap();
            assert!((q.value() - 2.0 * (-ded).exp()).abs() < 1e-9, "{ded}");
        }
    }

    #[test]
    fn assumption_cases() {
        let f = LossDistribution::exponential(1.0).unwrap();
        let d = DualDistribution::new(&f, &Distortion::identity(), 1.0).unwrap();
        assert!(check_assumption(&MarketParams { pi: 1.5, theta0: 1.0 }, &d).passed);
        let low = check_assumption(&MarketParams { pi: 0.9, theta0: 1.0 }, &d);
        assert!(!low.passed && low.violation.unwrap().contains("below expected loss"));
        let high = check_assumption(&MarketParams { pi: 2.5, theta0: 1.0 }, &d);
        assert!(!high.passed && high.violation.unwrap().contains("E_g[Z]"));
    }
}
