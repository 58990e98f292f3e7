//! Optimality certificates for a candidate retention `H*`:
//!
//! * condition I: `int (H - H*) [(a H* + 1) dF - (1 + theta) dF_hat] >= 0`
//!   for every admissible `H`;
//! * condition II: slope 1 where `Phi < 0`, slope 0 where `Phi > 0`, free
//!   where `Phi = 0`.
//!
//! Both are checked on a fine grid containing the nodes of `H*`. On such a
//! grid the directional value for any grid-representable `H` is the inner
//! product of the slope difference with the interval integrals of `Phi`,
//! which also yields the exact worst direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{Discretization, GridSpec};
use crate::premium::DualDistribution;
use crate::retention::RetentionFunction;

#[derive(Clone, Debug, Serialize)]
pub struct ConditionIReport {
    /// Smallest directional value found.
    pub worst: f64,
    pub worst_probe: String,
    pub probes: usize,
    pub scale: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiRegion {
    pub z_from: f64,
    pub z_to: f64,
    /// "negative", "zero" or "positive".
    pub sign: &'static str,
    pub min_slope: f64,
    pub max_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OideReport {
    /// `max_k |min{max{s_k - 1, Phi_k}, s_k}|` with `Phi_k` the interval
    /// average of `Phi`.
    pub complementarity: f64,
    pub tol: f64,
    /// Intervals where `|Phi| <= tol` and neither measure charges the
    /// interior: any slope is optimal there.
    pub non_unique_intervals: Vec<(f64, f64)>,
    pub non_unique: bool,
    pub regions: Vec<PhiRegion>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalityReport {
    pub condition_i: ConditionIReport,
    pub oide: OideReport,
    pub passed: bool,
}

/// Default tolerance factor for both conditions.
pub const VERIFY_TOL: f64 = 1e-6;

/// `H*` on a grid fine enough to resolve `F`, `F_hat` and `H*` itself.
pub struct Certifier {
    pub d: Discretization,
    pub a: f64,
    pub slopes: Vec<f64>,
    /// `G_k = int over interval k of Phi(z; H*) dz`.
    pub grad: Vec<f64>,
    pub scale: f64,
}

impl Certifier {
    pub fn new(h_star: &RetentionFunction, a: f64, dual: &DualDistribution, grid: &GridSpec) -> Result<Self> {
        let mut nodes = grid.build_nodes(dual)?;
        nodes.extend_from_slice(h_star.nodes());
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let d = Discretization::from_nodes(nodes, dual)?;
        Ok(Self::on(d, h_star, a, dual))
    }

    /// Uses the nodes of `h_star` as they are.
    pub fn on_own_grid(h_star: &RetentionFunction, a: f64, dual: &DualDistribution) -> Result<Self> {
        let d = Discretization::from_nodes(h_star.nodes().to_vec(), dual)?;
        Ok(Self::on(d, h_star, a, dual))
    }

    fn on(d: Discretization, h_star: &RetentionFunction, a: f64, dual: &DualDistribution) -> Self {
        let slopes = h_star.resample(&d.nodes).slopes().to_vec();
        let grad = d.slope_gradient(a, &slopes);
        let f = dual.loss();
        let scale = 1.0 + f.mean() + dual.loaded_mean() + a * f.second_moment();
        Self { d, a, slopes, grad, scale }
    }

    /// `int (H - H*) dmu_{H*}` for `H` given by slopes on this grid.
    pub fn direction_value(&self, slopes: &[f64]) -> f64 {
        slopes.iter().zip(&self.slopes).zip(&self.grad).map(|((s, t), g)| (s - t) * g).sum()
    }

    /// The slope vector minimizing the directional value.
    pub fn worst_direction(&self) -> Vec<f64> {
        self.grad.iter().map(|&g| if g < 0.0 { 1.0 } else { 0.0 }).collect()
    }

    fn slopes_of(&self, h: &RetentionFunction) -> Vec<f64> {
        h.resample(&self.d.nodes).slopes().to_vec()
    }

    pub fn condition_i(&self, n_directions: usize, seed: u64, tol: f64) -> ConditionIReport {
        let n = self.d.len();
        let mut worst = (f64::INFINITY, String::new());
        let mut probes = 0usize;
        let mut consider = |v: f64, name: &dyn Fn() -> String| {
            probes += 1;
            if v < worst.0 {
                worst = (v, name());
            }
        };
        consider(0.0, &|| "H*".into());
        consider(self.direction_value(&vec![0.0; n]), &|| "H = 0".into());
        consider(self.direction_value(&vec![1.0; n]), &|| "H = z".into());
        let half: Vec<f64> = self.slopes.iter().map(|s| 0.5 * s).collect();
        consider(self.direction_value(&half), &|| "H*/2".into());
        consider(self.direction_value(&self.worst_direction()), &|| "steepest admissible direction".into());
        let nodes = &self.d.nodes;
        let stride = (n / 64).max(1);
        for k in (0..n).step_by(stride) {
            let d = nodes[k];
            let s = self.slopes_of(&RetentionFunction::stop_loss(d).expect("grid nodes are finite"));
            consider(self.direction_value(&s), &|| format!("min(z, {d})"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n_directions {
            let s: Vec<f64> = match i % 5 {
                0 => (0..n).map(|_| rng.random::<f64>()).collect(),
                1 => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect(),
                2 => {
                    // blocky slopes
                    let mut out = Vec::with_capacity(n);
                    while out.len() < n {
                        let len = rng.random_range(1..=n.div_ceil(8).max(1));
                        let v = rng.random::<f64>();
                        out.extend(std::iter::repeat_n(v, len.min(n - out.len())));
                    }
                    out
                }
                3 => {
                    let d = nodes[rng.random_range(0..n)];
                    self.slopes_of(&RetentionFunction::stop_loss(d).expect("grid nodes are finite"))
                }
                _ => {
                    // mixtures of two stop-loss layers
                    let (i1, i2) = (rng.random_range(0..n), rng.random_range(0..n));
                    let w = rng.random::<f64>();
                    let (d1, d2) = (nodes[i1.min(i2)], nodes[i1.max(i2)]);
                    nodes
                        .iter()
                        .map(|&z| 1.0 - w * f64::from(u8::from(z >= d1)) - (1.0 - w) * f64::from(u8::from(z >= d2)))
                        .collect()
                }
            };
            let v = self.direction_value(&s);
            consider(v, &|| format!("random direction #{i}"));
        }
        let passed = worst.0 >= -tol * self.scale;
        ConditionIReport { worst: worst.0, worst_probe: worst.1, probes, scale: self.scale, passed }
    }

    pub fn oide(&self, tol: f64) -> OideReport {
        let d = &self.d;
        let n = d.len();
        let mut worst: f64 = 0.0;
        let mut non_unique = Vec::new();
        let mut regions: Vec<PhiRegion> = Vec::new();
        for k in 0..n {
            let phi = if d.delta[k] > 0.0 { self.grad[k] / d.delta[k] } else { self.grad[k] };
            let s = self.slopes[k];
            let r = (s - 1.0).max(phi).min(s);
            worst = worst.max(r.abs());
            let sign = if phi < -tol {
                "negative"
            } else if phi > tol {
                "positive"
            } else {
                "zero"
            };
            let z_to = d.nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
            if sign == "zero" && d.f[k][1] <= 1e-15 && d.fhat[k][1] <= 1e-15 {
                non_unique.push((d.nodes[k], z_to));
            }
            match regions.last_mut() {
                Some(last) if last.sign == sign => {
                    last.z_to = z_to;
                    last.min_slope = last.min_slope.min(s);
                    last.max_slope = last.max_slope.max(s);
                }
                _ => regions.push(PhiRegion { z_from: d.nodes[k], z_to, sign, min_slope: s, max_slope: s }),
            }
        }
        // a zero-measure tail beyond the support is trivially free
        let support_end = non_unique.last().map(|x| x.1.is_infinite()).unwrap_or(false);
        let flag = !non_unique.is_empty() && !(support_end && non_unique.len() == 1);
        OideReport {
            complementarity: worst,
            tol,
            non_unique: flag,
            non_unique_intervals: non_unique,
            regions,
            passed: worst <= tol,
        }
    }
}

/// Condition I with `n_directions` random admissible directions plus the
/// deterministic probes.
pub fn verify_condition_i(
    h_star: &RetentionFunction,
    a: f64,
    dual: &DualDistribution,
    grid: &GridSpec,
    n_directions: usize,
    seed: u64,
) -> Result<ConditionIReport> {
    Ok(Certifier::new(h_star, a, dual, grid)?.condition_i(n_directions, seed, VERIFY_TOL))
}

/// Condition II (the complementarity pattern of `Phi` and the slopes).
pub fn verify_oide(h_star: &RetentionFunction, a: f64, dual: &DualDistribution, grid: &GridSpec, tol: f64) -> Result<OideReport> {
    Ok(Certifier::new(h_star, a, dual, grid)?.oide(tol))
}

/// Both conditions.
pub fn verify_optimality(
    h_star: &RetentionFunction,
    a: f64,
    dual: &DualDistribution,
    grid: &GridSpec,
    n_directions: usize,
    seed: u64,
) -> Result<OptimalityReport> {
    let c = Certifier::new(h_star, a, dual, grid)?;
    let condition_i = c.condition_i(n_directions, seed, VERIFY_TOL);
    let oide = c.oide(VERIFY_TOL);
    let passed = condition_i.passed && oide.passed;
    Ok(OptimalityReport { condition_i, oide, passed })
}
