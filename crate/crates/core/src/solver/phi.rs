//! `Phi(z; H) = int_(z, inf) [(a H + 1) dF - (1 + theta) dF_hat]`.
//!
//! The open interval makes `Phi` right-continuous; it matches the
//! survival-function form
//! `a int_z^inf S H' dx + S(z)(a H(z) + 1) - (1 + theta0) g(S(z))`,
//! which is the second, independent evaluation route.

use serde::Serialize;

use crate::distributions::Measure;
use crate::error::{Error, Result};
use crate::premium::DualDistribution;
use crate::retention::RetentionFunction;

/// Allowed gap between the two evaluation routes.
pub const PHI_XCHECK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct PhiProfile {
    pub z: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhiProfile {
    /// Value at `z` from the nearest tabulated point at or left of `z`.
    pub fn at(&self, z: f64) -> f64 {
        let k = self.z.partition_point(|&x| x <= z);
        if k == 0 {
            self.values[0]
        } else {
            self.values[k - 1]
        }
    }
}

/// Evaluates `Phi` at every node of `H` plus the extra points in `at`.
pub fn phi_eval(h: &RetentionFunction, a: f64, dual: &DualDistribution, at: &[f64]) -> Result<PhiProfile> {
    let mut z: Vec<f64> = h.nodes().iter().chain(at.iter()).copied().filter(|v| *v >= 0.0 && v.is_finite()).collect();
    z.sort_by(f64::total_cmp);
    z.dedup();
    let ev = PhiEvaluator::new(h, a, dual);
    let mut values = Vec::with_capacity(z.len());
    for &x in &z {
        let m = ev.by_measure(x);
        let s = ev.by_survival(x);
        if (m - s).abs() > PHI_XCHECK_TOL * (1.0 + m.abs().max(s.abs())) {
            return Err(Error::CrossCheck(format!("Phi({x}) routes disagree: {m} vs {s}")));
        }
        values.push(m);
    }
    Ok(PhiProfile { z, values })
}

/// Precomputed suffix sums over the intervals of `H`.
pub struct PhiEvaluator<'a> {
    h: &'a RetentionFunction,
    a: f64,
    dual: &'a DualDistribution,
    /// `int_[z_k, inf) (aH + 1) dF - (1 + theta) dF_hat`
    suffix: Vec<f64>,
    /// `int_[z_k, inf) S H' dx`
    suffix_sh: Vec<f64>,
}

impl<'a> PhiEvaluator<'a> {
    pub fn new(h: &'a RetentionFunction, a: f64, dual: &'a DualDistribution) -> Self {
        let f = dual.loss();
        let nodes = h.nodes();
        let n = nodes.len();
        let load = 1.0 + dual.theta();
        let mut suffix = vec![0.0; n + 1];
        let mut suffix_sh = vec![0.0; n + 1];
        for k in (0..n).rev() {
            let b = nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let [m0, m1, _] = f.segment_moments(nodes[k], b);
            let mh = dual.segment_moments(nodes[k], b);
            let s = h.slopes()[k];
            suffix[k] = suffix[k + 1] + a * (h.value_at_node(k) * m0 + s * m1) + m0 - load * mh[0];
            // int_a^b S dx = M1 + (b - a) S(b-) from the by-parts identity
            let int_s = if b.is_finite() { m1 + (b - nodes[k]) * f.survival_left(b) } else { m1 };
            suffix_sh[k] = suffix_sh[k + 1] + s * int_s;
        }
        Self { h, a, dual, suffix, suffix_sh }
    }

    fn locate(&self, z: f64) -> (usize, f64) {
        let nodes = self.h.nodes();
        let k = nodes.partition_point(|&x| x <= z).max(1) - 1;
        (k, nodes.get(k + 1).copied().unwrap_or(f64::INFINITY))
    }

    /// Accumulates the signed measure over `(z, inf)`.
    pub fn by_measure(&self, z: f64) -> f64 {
        let f = self.dual.loss();
        let (k, b) = self.locate(z);
        let hz = self.h.eval(z);
        let s = self.h.slopes()[k];
        let load = 1.0 + self.dual.theta();
        let [m0, m1, _] = f.segment_moments(z, b);
        let mh = self.dual.segment_moments(z, b);
        let mut v = self.suffix[k + 1] + self.a * (hz * m0 + s * m1) + m0 - load * mh[0];
        // drop the atoms sitting exactly at z
        let atom_f = f.survival_left(z) - f.survival(z);
        let atom_h = self.dual.survival_left(z) - self.dual.survival(z);
        v -= (self.a * hz + 1.0) * atom_f - load * atom_h;
        v
    }

    /// Survival-function form.
    pub fn by_survival(&self, z: f64) -> f64 {
        let f = self.dual.loss();
        let g = self.dual.distortion();
        let (k, b) = self.locate(z);
        let sz = f.survival(z);
        let s = self.h.slopes()[k];
        let [_, m1, _] = f.segment_moments(z, b);
        let int_s = if b.is_finite() { m1 + (b - z) * f.survival_left(b) } else { m1 };
        let tail = self.suffix_sh[k + 1] + s * int_s;
        self.a * tail + sz * (self.a * self.h.eval(z) + 1.0) - (1.0 + self.dual.theta0()) * g.eval(sz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortions::Distortion;
    use crate::distributions::{LossDistribution, PiecewiseExponentialSpec};

    fn layer() -> (DualDistribution, RetentionFunction) {
        let f = LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![1.0, 6.0],
            scales: vec![6.0, 5.0, 3.0],
            mass_at_zero: 0.0,
        })
        .unwrap();
        let dual = DualDistribution::new(&f, &Distortion::layer_canonical(), 3.0).unwrap();
        let h = RetentionFunction::new(vec![0.0, 2.0, 4.0], vec![1.0, 0.5, 0.0]).unwrap();
        (dual, h)
    }

    #[test]
    fn layer_phi_values() {
        let (dual, h) = layer();
        let p = phi_eval(&h, 1.0, &dual, &[3.0, 7.0, 50.0]).unwrap();
        assert!(p.at(3.0).abs() < 1e-9, "{}", p.at(3.0));
        let g = Distortion::layer_canonical();
        let e = (-7.0f64 / 3.0).exp();
        assert!((p.at(7.0) - 4.0 * (e - g.eval(e))).abs() < 1e-9);
        assert!(p.at(50.0).abs() < 1e-6);
    }

    #[test]
    fn beyond_support_is_zero() {
        let f = LossDistribution::discrete(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        let dual = DualDistribution::new(&f, &Distortion::proportional_hazard(2.0).unwrap(), 0.1).unwrap();
        let h = RetentionFunction::stop_loss(1.5).unwrap();
        let p = phi_eval(&h, 0.8, &dual, &[2.0, 2.5, 10.0]).unwrap();
        assert_eq!(p.at(2.5), 0.0);
        assert_eq!(p.at(10.0), 0.0);
        // right-continuity: the atom at 2 is excluded at z = 2
        assert!(p.at(2.0).abs() < 1e-15);
    }
}
