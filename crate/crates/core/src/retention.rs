use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slopes within this distance of `[0, 1]` are clipped rather than rejected.
pub const SLOPE_TOL: f64 = 1e-9;

/// Continuous piecewise-linear retention `H` with `H(0) = 0` and slopes in
/// `[0, 1]`. Interval `k` is `[z_k, z_{k+1})`; the last slope extends from the
/// final node to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetentionFunction {
    nodes: Vec<f64>,
    slopes: Vec<f64>,
    values: Vec<f64>,
}

impl RetentionFunction {
    /// `nodes` start at 0 and strictly increase; one slope per node.
    pub fn new(nodes: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        check_nodes(&nodes)?;
        if slopes.len() != nodes.len() {
            return Err(Error::arg(format!(
                "{} nodes need {} slopes (last one is the tail), got {}",
                nodes.len(),
                nodes.len(),
                slopes.len()
            )));
        }
        let mut slopes = slopes;
        for (k, s) in slopes.iter_mut().enumerate() {
            if !(*s >= -SLOPE_TOL && *s <= 1.0 + SLOPE_TOL) {
                return Err(Error::Inadmissible(format!(
                    "slope {s} on [{}, ..) outside [0, 1]: violates 0 <= I(z) - I(z') <= z - z'",
                    nodes[k]
                )));
            }
            *s = s.clamp(0.0, 1.0);
        }
        Ok(Self::from_parts(nodes, slopes))
    }

    pub(crate) fn from_parts(nodes: Vec<f64>, slopes: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(nodes.len());
        let mut h = 0.0;
        values.push(0.0);
        for k in 1..nodes.len() {
            h += slopes[k - 1] * (nodes[k] - nodes[k - 1]);
            values.push(h);
        }
        Self { nodes, slopes, values }
    }

    /// Retention from its values at the nodes; beyond the last node the
    /// final interval's slope continues (or `tail_slope` if given).
    pub fn from_values(nodes: Vec<f64>, values: &[f64], tail_slope: Option<f64>) -> Result<Self> {
        check_nodes(&nodes)?;
        if values.len() != nodes.len() {
            return Err(Error::arg("one value per node required"));
        }
        if values[0].abs() > SLOPE_TOL {
            return Err(Error::Inadmissible(format!("H(0) = {} but I(0) = 0 is required", values[0])));
        }
        let mut slopes: Vec<f64> = nodes.windows(2).zip(values.windows(2)).map(|(z, h)| (h[1] - h[0]) / (z[1] - z[0])).collect();
        let tail = tail_slope.unwrap_or_else(|| slopes.last().copied().unwrap_or(1.0));
        slopes.push(tail);
        for (k, &s) in slopes.iter().enumerate() {
            if s < -SLOPE_TOL {
                return Err(Error::Inadmissible(format!(
                    "retention decreases on [{}, ..): indemnity grows faster than the loss (z - z' >= I(z) - I(z') fails)",
                    nodes[k]
                )));
            }
            if s > 1.0 + SLOPE_TOL {
                return Err(Error::Inadmissible(format!(
                    "indemnity decreases on [{}, ..) (I(z) - I(z') >= 0 fails)",
                    nodes[k]
                )));
            }
        }
        Self::new(nodes, slopes)
    }

    /// Retention of an indemnity given by its values at the nodes.
    pub fn from_indemnity(nodes: Vec<f64>, indemnity: &[f64]) -> Result<Self> {
        if indemnity.len() != nodes.len() {
            return Err(Error::arg("one indemnity value per node required"));
        }
        if let Some(&i0) = indemnity.first() {
            if i0.abs() > SLOPE_TOL {
                return Err(Error::Inadmissible(format!("I(0) = {i0}, but I(0) = 0 is required")));
            }
        }
        let h: Vec<f64> = nodes.iter().zip(indemnity).map(|(z, i)| z - i).collect();
        Self::from_values(nodes, &h, None)
    }

    /// Samples `h` at the nodes.
    pub fn from_fn(nodes: Vec<f64>, h: impl Fn(f64) -> f64, tail_slope: Option<f64>) -> Result<Self> {
        let values: Vec<f64> = nodes.iter().map(|&z| h(z)).collect();
        Self::from_values(nodes, &values, tail_slope)
    }

    /// `H(z) = 0`: full reinsurance.
    pub fn zero() -> Self {
        Self::from_parts(vec![0.0], vec![0.0])
    }

    /// `H(z) = z`: no reinsurance.
    pub fn identity() -> Self {
        Self::from_parts(vec![0.0], vec![1.0])
    }

    /// `H(z) = min(z, d)`, i.e. the stop-loss indemnity `(z - d)+`.
    pub fn stop_loss(d: f64) -> Result<Self> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::arg(format!("deductible must be finite and >= 0, got {d}")));
        }
        if d == 0.0 {
            return Ok(Self::zero());
        }
        Ok(Self::from_parts(vec![0.0, d], vec![1.0, 0.0]))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `H` at every node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_node(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let k = self.nodes.partition_point(|&x| x <= z) - 1;
        self.values[k] + self.slopes[k] * (z - self.nodes[k])
    }

    /// `I(z) = z - H(z)`.
    pub fn indemnity(&self, z: f64) -> f64 {
        z.max(0.0) - self.eval(z)
    }

    /// `c H` for `c` in `[0, 1]`.
    pub fn scaled(&self, c: f64) -> Self {
        let c = c.clamp(0.0, 1.0);
        Self::from_parts(self.nodes.clone(), self.slopes.iter().map(|s| s * c).collect())
    }

    /// Represents `self` on a refined node set (which must contain all of
    /// `self`'s nodes for the result to be exact).
    pub fn resample(&self, nodes: &[f64]) -> Self {
        let slopes = nodes
            .iter()
            .map(|&z| {
                let k = self.nodes.partition_point(|&x| x <= z).max(1) - 1;
                self.slopes[k]
            })
            .collect();
        Self::from_parts(nodes.to_vec(), slopes)
    }

    /// `sup_z |H(z) - other(z)|`, attained at a node of either function
    /// (or in the tail, where it may be infinite).
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for &z in self.nodes.iter().chain(other.nodes.iter()) {
            d = d.max((self.eval(z) - other.eval(z)).abs());
        }
        let ts = self.slopes.last().copied().unwrap_or(0.0);
        let to = other.slopes.last().copied().unwrap_or(0.0);
        if (ts - to).abs() > 0.0 {
            return f64::INFINITY;
        }
        d
    }

    /// Sup distance restricted to `[0, z_max]`.
    pub fn sup_distance_on(&self, other: &Self, z_max: f64) -> f64 {
        let mut d: f64 = (self.eval(z_max) - other.eval(z_max)).abs();
        for &z in self.nodes.iter().chain(other.nodes.iter()) {
            if z <= z_max {
                d = d.max((self.eval(z) - other.eval(z)).abs());
            }
        }
        d
    }
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.first() != Some(&0.0) {
        return Err(Error::arg("retention grid must start at z = 0"));
    }
    if nodes.iter().any(|z| !z.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("retention grid must be finite and strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stop_loss_shape() {
        let h = RetentionFunction::stop_loss(2.0).unwrap();
        assert_eq!(h.eval(1.0), 1.0);
        assert_eq!(h.eval(5.0), 2.0);
        assert_eq!(h.indemnity(5.0), 3.0);
        assert_eq!(h.indemnity(1.5), 0.0);
    }

    #[test]
    fn decreasing_indemnity_is_inadmissible() {
        // I(z) = min(z, 1) - (z - 2)+ decreases after 2
        let nodes = vec![0.0, 1.0, 2.0, 3.0];
        let i = [0.0, 1.0, 1.0, 0.0];
        let err = RetentionFunction::from_indemnity(nodes, &i).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(ref m) if m.contains("I(z) - I(z') >= 0")), "{err}");
    }

    #[test]
    fn steep_indemnity_is_inadmissible() {
        let nodes = vec![0.0, 1.0];
        let err = RetentionFunction::from_values(nodes, &[0.0, -0.5], None).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
    }

    proptest! {
        #[test]
        fn admissible_retention_is_one_lipschitz(slopes in prop::collection::vec(0.0f64..=1.0, 1..30),
                                                 gaps in prop::collection::vec(0.01f64..3.0, 30),
                                                 probe in prop::collection::vec(0.0f64..100.0, 20)) {
            let mut nodes = vec![0.0];
            for g in gaps.iter().take(slopes.len() - 1) {
                nodes.push(nodes.last().unwrap() + g);
            }
            let h = RetentionFunction::new(nodes, slopes).unwrap();
            for w in probe.windows(2) {
                let (x, y) = (w[0].min(w[1]), w[0].max(w[1]));
                let (hx, hy) = (h.eval(x), h.eval(y));
                prop_assert!(hx >= -1e-12 && hx <= x + 1e-12);
                prop_assert!(hy - hx >= -1e-12 && hy - hx <= y - x + 1e-12);
            }
        }
    }
}
