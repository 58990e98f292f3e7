//! The z-grid on which retention functions are optimized, with the interval
//! moments of `F` and `F_hat` precomputed.

use serde::{Deserialize, Serialize};

use crate::distributions::Measure;
use crate::error::{Error, Result};
use crate::premium::DualDistribution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Number of quantile nodes.
    pub n_nodes: usize,
    /// Quantile nodes cover `p` in `[m0, 1 - p_eps]`.
    pub p_eps: f64,
    /// Also lay `n_nodes / 2` evenly spaced nodes up to the last quantile
    /// node, so the maximum spacing stays bounded in the tail.
    pub uniform_fill: bool,
    /// Use exactly these nodes instead (must start at 0).
    pub nodes: Option<Vec<f64>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_nodes: 2000, p_eps: 1e-6, uniform_fill: true, nodes: None }
    }
}

impl GridSpec {
    pub fn explicit(nodes: Vec<f64>) -> Self {
        Self { nodes: Some(nodes), ..Self::default() }
    }

    pub fn with_nodes(n_nodes: usize) -> Self {
        Self { n_nodes, ..Self::default() }
    }

    /// Builds the node set for a dual pair: the resolved nodes followed by
    /// the tail buffer.
    pub fn build_nodes(&self, dual: &DualDistribution) -> Result<Vec<f64>> {
        let mut nodes = self.resolved_nodes(dual)?;
        if self.nodes.is_none() {
            nodes.extend(tail_buffer(dual, &nodes, self.p_eps));
        }
        Ok(nodes)
    }

    fn resolved_nodes(&self, dual: &DualDistribution) -> Result<Vec<f64>> {
        if let Some(nodes) = &self.nodes {
            if nodes.first() != Some(&0.0) || nodes.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::arg("explicit grid must start at 0 and strictly increase"));
            }
            return Ok(nodes.clone());
        }
        if self.n_nodes < 2 || !(self.p_eps > 0.0 && self.p_eps < 1.0) {
            return Err(Error::arg("grid needs n_nodes >= 2 and p_eps in (0, 1)"));
        }
        let f = dual.loss();
        let m0 = f.mass_at_zero();
        let top = 1.0 - self.p_eps;
        if top <= m0 {
            return Err(Error::arg("p_eps leaves no probability above the zero atom"));
        }
        // (z, pinned): pinned nodes win when two candidates coincide
        let mut cand: Vec<(f64, bool)> = vec![(0.0, true)];
        let n = self.n_nodes;
        for k in 0..n {
            let p = m0 + (top - m0) * k as f64 / (n - 1) as f64;
            if p > 0.0 {
                cand.push((f.quantile_unchecked(p), false));
            }
        }
        for &(z, _) in f.atoms() {
            cand.push((z, true));
        }
        for &z in dual.breaks() {
            cand.push((z, true));
        }
        cand.retain(|c| c.0.is_finite() && c.0 >= 0.0);
        let z_last = cand.iter().map(|c| c.0).fold(0.0, f64::max);
        if self.uniform_fill && z_last > 0.0 {
            let m = n / 2;
            for k in 1..m {
                cand.push((z_last * k as f64 / m as f64, false));
            }
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut nodes: Vec<f64> = Vec::with_capacity(cand.len());
        let mut pinned: Vec<bool> = Vec::with_capacity(cand.len());
        for (z, pin) in cand {
            match nodes.last() {
                Some(&last) if z - last <= 1e-10 * (1.0 + z) => {
                    if pin && !*pinned.last().unwrap() {
                        *nodes.last_mut().unwrap() = z;
                        *pinned.last_mut().unwrap() = true;
                    }
                }
                _ => {
                    nodes.push(z);
                    pinned.push(pin);
                }
            }
        }
        nodes[0] = 0.0;
        Ok(nodes)
    }
}

/// Nodes beyond the last resolved node at doubling distances, until both
/// tails fall below `1e-6 p_eps`. The last interval is unbounded and carries
/// one slope, which distorts the optimum on the few intervals before it;
/// the buffer moves that distortion to where it has no mass.
fn tail_buffer(dual: &DualDistribution, nodes: &[f64], p_eps: f64) -> Vec<f64> {
    let f = dual.loss();
    let (Some(&z_last), true) = (nodes.last(), nodes.len() >= 2) else { return Vec::new() };
    let h = nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let floor = 1e-6 * p_eps;
    let mut out = Vec::new();
    let mut step = h;
    let mut z = z_last;
    while out.len() < 64 && z < f.support_upper() && (f.survival(z) > floor || dual.survival(z) > floor) {
        z += step;
        step *= 2.0;
        out.push(z);
    }
    out
}

/// Interval `k` is `[z_k, z_{k+1})`; the last interval is `[z_n, inf)`.
/// Moments are taken about the left end of each interval.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub nodes: Vec<f64>,
    /// Interval lengths; zero for the unbounded last interval.
    pub delta: Vec<f64>,
    pub f: Vec<[f64; 3]>,
    pub fhat: Vec<[f64; 3]>,
    /// `F`-mass of `[z_{k+1}, inf)`.
    pub f_after: Vec<f64>,
    /// `F_hat`-mass of `[z_{k+1}, inf)`.
    pub fhat_after: Vec<f64>,
    /// `1 + theta`.
    pub load: f64,
    /// End of the resolved part of the grid (the tail buffer lies beyond).
    pub resolved: f64,
}

impl Discretization {
    pub fn new(spec: &GridSpec, dual: &DualDistribution) -> Result<Self> {
        let resolved = *spec.resolved_nodes(dual)?.last().unwrap();
        Ok(Self { resolved, ..Self::from_nodes(spec.build_nodes(dual)?, dual)? })
    }

    pub fn from_nodes(nodes: Vec<f64>, dual: &DualDistribution) -> Result<Self> {
        if nodes.first() != Some(&0.0) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("grid must start at 0 and strictly increase"));
        }
        let f = dual.loss();
        let n = nodes.len();
        let right = |k: usize| nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let fm: Vec<[f64; 3]> = (0..n).map(|k| f.segment_moments(nodes[k], right(k))).collect();
        let hm: Vec<[f64; 3]> = (0..n).map(|k| dual.segment_moments(nodes[k], right(k))).collect();
        if fm.iter().chain(hm.iter()).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid moments".into()));
        }
        let mut f_after = vec![0.0; n];
        let mut fhat_after = vec![0.0; n];
        for k in (0..n - 1).rev() {
            f_after[k] = f_after[k + 1] + fm[k + 1][0];
            fhat_after[k] = fhat_after[k + 1] + hm[k + 1][0];
        }
        let delta = (0..n).map(|k| if k + 1 < n { nodes[k + 1] - nodes[k] } else { 0.0 }).collect();
        let resolved = nodes[n - 1];
        Ok(Self { nodes, delta, f: fm, fhat: hm, f_after, fhat_after, load: 1.0 + dual.theta(), resolved })
    }

    /// Number of intervals (= number of nodes).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest interval on the resolved part of the grid.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.iter().zip(&self.delta).filter(|(z, _)| **z < self.resolved).map(|(_, d)| *d).fold(0.0, f64::max)
    }

    /// Node values of `H` for the given slopes.
    pub fn node_values(&self, slopes: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.len()];
        for k in 1..self.len() {
            h[k] = h[k - 1] + slopes[k - 1] * self.delta[k - 1];
        }
        h
    }

    /// `(int H dF, int H^2 dF, int H dF_hat)` for slopes on this grid.
    pub fn moments(&self, slopes: &[f64]) -> (f64, f64, f64) {
        let h = self.node_values(slopes);
        let (mut m1, mut m2, mut d1) = (0.0, 0.0, 0.0);
        for k in 0..self.len() {
            let [p0, p1, p2] = self.f[k];
            let s = slopes[k];
            m1 += h[k] * p0 + s * p1;
            m2 += h[k] * h[k] * p0 + 2.0 * h[k] * s * p1 + s * s * p2;
            d1 += h[k] * self.fhat[k][0] + s * self.fhat[k][1];
        }
        (m1, m2, d1)
    }

    /// Discrete objective `J = (a/2) int H^2 dF + int H dF - (1+theta) int H dF_hat`.
    pub fn objective(&self, a: f64, slopes: &[f64]) -> f64 {
        let (m1, m2, d1) = self.moments(slopes);
        0.5 * a * m2 + m1 - self.load * d1
    }

    /// `G_k = int over interval k of Phi(z; H) dz` for every interval
    /// (for the last one: `int_{z_n}^inf Phi`). These are the partial
    /// derivatives of `J` with respect to the slopes.
    pub fn slope_gradient(&self, a: f64, slopes: &[f64]) -> Vec<f64> {
        let n = self.len();
        let h = self.node_values(slopes);
        let mut tail = 0.0;
        let mut g = vec![0.0; n];
        for k in (0..n).rev() {
            let [m0, m1, m2] = self.f[k];
            let [_, d1, _] = self.fhat[k];
            let s = slopes[k];
            let dk = self.delta[k];
            g[k] = a * (h[k] * m1 + s * m2 + dk * tail) + m1 + dk * self.f_after[k]
                - self.load * (d1 + dk * self.fhat_after[k]);
            tail += h[k] * m0 + s * m1;
        }
        g
    }
}
