//! Loss distributions and the Stieltjes integration machinery shared by the
//! loss law `F` and its distorted dual.
//!
//! Integrals follow the half-open convention `int_a^b = int_[a,b)`: an atom at
//! `a` is included, an atom at `b` is not.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::retention::RetentionFunction;

/// A positive measure on `[0, inf)` described through its survival function.
///
/// The default [`Measure::segment_moments`] integrates by parts against the
/// survival function, so an implementor only needs `survival`,
/// `survival_left` and the list of points where the survival function is
/// not smooth.
pub trait Measure {
    /// `mu((z, inf))`.
    fn survival(&self, z: f64) -> f64;
    /// `mu([z, inf))`.
    fn survival_left(&self, z: f64) -> f64;
    /// Sorted points where the survival function jumps or has a kink.
    fn breaks(&self) -> &[f64];

    /// `int_[a,b) (x - a)^k dmu(x)` for `k = 0, 1, 2`; `b` may be infinite.
    fn segment_moments(&self, a: f64, b: f64) -> [f64; 3] {
        by_parts_moments(self, a, b)
    }
}

/// Moments via integration by parts, split at interior breaks.
pub fn by_parts_moments<M: Measure + ?Sized>(m: &M, a: f64, b: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    if !(b > a) {
        return out;
    }
    let mut cuts: Vec<f64> = m.breaks().iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(b);
    let mut lo = a;
    for hi in cuts {
        if hi <= lo {
            continue;
        }
        let s_hi = if hi.is_finite() { m.survival_left(hi) } else { 0.0 };
        let m0 = m.survival_left(lo) - s_hi;
        let (m1, m2) = if hi.is_finite() && s_hi >= 0.01 * m.survival(lo) {
            (
                quad::integrate(|x| m.survival(x) - s_hi, lo, hi),
                2.0 * quad::integrate(|x| (x - lo) * (m.survival(x) - s_hi), lo, hi),
            )
        } else if hi.is_finite() {
            // most of the decay happens inside: a single finite panel can
            // miss it, so take differences of tail integrals instead
            let w = hi - lo;
            let t1 = |c: f64| quad::integrate_to_inf(|x| m.survival(x), c);
            let t2 = |c: f64| quad::integrate_to_inf(|x| (x - lo) * m.survival(x), c);
            (t1(lo) - t1(hi) - w * s_hi, 2.0 * (t2(lo) - t2(hi)) - w * w * s_hi)
        } else {
            (
                quad::integrate_to_inf(|x| m.survival(x), lo),
                2.0 * quad::integrate_to_inf(|x| (x - lo) * m.survival(x), lo),
            )
        };
        shift_accumulate(&mut out, [m0, m1, m2], lo - a);
        lo = hi;
    }
    out
}

/// Add moments taken about `c` into moments about `c - delta`.
pub(crate) fn shift_accumulate(out: &mut [f64; 3], m: [f64; 3], delta: f64) {
    out[0] += m[0];
    out[1] += m[1] + delta * m[0];
    out[2] += m[2] + 2.0 * delta * m[1] + delta * delta * m[0];
}

/// Segment layout of a piecewise exponential law:
/// `F(z) = 1 - exp(-z / scale_k)` on the `k`-th segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseExponentialSpec {
    /// Increasing interior breakpoints.
    pub breakpoints: Vec<f64>,
    /// One mean parameter per segment (`breakpoints.len() + 1` entries).
    #[serde(alias = "rates")]
    pub scales: Vec<f64>,
    /// Optional probability of a zero loss.
    #[serde(default)]
    pub mass_at_zero: f64,
}

/// Config-level description; `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DistributionSpec {
    Exponential {
        /// Mean of the positive part.
        mean: f64,
        #[serde(default)]
        mass_at_zero: f64,
    },
    PiecewiseExponential(PiecewiseExponentialSpec),
    Discrete { points: Vec<f64>, probs: Vec<f64> },
    /// Claims inline or from a one-column CSV.
    Empirical {
        #[serde(default)]
        claims: Vec<f64>,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Kind {
    PiecewiseExponential { breakpoints: Vec<f64>, scales: Vec<f64> },
    Discrete { points: Vec<f64>, cum: Vec<f64> },
}

#[derive(Debug)]
struct Inner {
    kind: Kind,
    label: String,
    m0: f64,
    mean: f64,
    second_moment: f64,
    support_upper: f64,
    atoms: Vec<(f64, f64)>,
    breaks: Vec<f64>,
    quantile_density: bool,
}

/// The law `F` of a single loss `Z >= 0`. Cheap to clone; immutable.
#[derive(Clone, Debug)]
pub struct LossDistribution {
    inner: Arc<Inner>,
}

impl LossDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        Self::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![],
            scales: vec![mean],
            mass_at_zero: 0.0,
        })
    }

    /// Exponential severity with an atom `m0` at zero.
    pub fn exponential_with_zero_mass(mean_if_positive: f64, m0: f64) -> Result<Self> {
        Self::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![],
            scales: vec![mean_if_positive],
            mass_at_zero: m0,
        })
    }

    pub fn piecewise_exponential(spec: &PiecewiseExponentialSpec) -> Result<Self> {
        let bp = &spec.breakpoints;
        let sc = &spec.scales;
        let m0 = spec.mass_at_zero;
        if sc.len() != bp.len() + 1 {
            return Err(Error::InvalidDistribution(format!(
                "{} breakpoints need {} scales, got {}",
                bp.len(),
                bp.len() + 1,
                sc.len()
            )));
        }
        if !(0.0..1.0).contains(&m0) {
            return Err(Error::InvalidDistribution(format!("mass at zero {m0} outside [0, 1)")));
        }
        if sc.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidDistribution("scales must be positive and finite".into()));
        }
        if bp.iter().any(|&b| !(b > 0.0 && b.is_finite())) || bp.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "breakpoints must be positive and strictly increasing".into(),
            ));
        }
        let mut atoms = Vec::new();
        if m0 > 0.0 {
            atoms.push((0.0, m0));
        }
        for (k, &b) in bp.iter().enumerate() {
            // survival just left of b uses scale k, at b uses scale k+1
            let left = (-b / sc[k]).exp();
            let right = (-b / sc[k + 1]).exp();
            if right > left * (1.0 + 1e-15) {
                return Err(Error::InvalidDistribution(format!(
                    "cdf decreases at breakpoint {b}: F({b}-) = {:.6} > F({b}) = {:.6}",
                    1.0 - left,
                    1.0 - right
                )));
            }
            let jump = (1.0 - m0) * (left - right);
            if jump > 0.0 {
                atoms.push((b, jump));
            }
        }
        // closed-form moments of the segment pieces
        let mut mean = 0.0;
        let mut second = 0.0;
        let mut lo = 0.0;
        for (k, &s) in sc.iter().enumerate() {
            let hi = bp.get(k).copied().unwrap_or(f64::INFINITY);
            let e = |z: f64| if z.is_finite() { (-z / s).exp() } else { 0.0 };
            // int S dz and int 2 z S dz over [lo, hi)
            mean += s * (e(lo) - e(hi));
            let prim = |z: f64| if z.is_finite() { -2.0 * s * e(z) * (z + s) } else { 0.0 };
            second += prim(hi) - prim(lo);
            lo = hi;
        }
        mean *= 1.0 - m0;
        second *= 1.0 - m0;
        let label = if bp.is_empty() {
            format!("exponential(mean={})", sc[0])
        } else {
            format!("piecewise_exponential(breakpoints={bp:?}, scales={sc:?})")
        };
        let quantile_density = atoms.iter().all(|&(z, _)| z == 0.0);
        Ok(Self {
            inner: Arc::new(Inner {
                kind: Kind::PiecewiseExponential { breakpoints: bp.clone(), scales: sc.clone() },
                label,
                m0,
                mean,
                second_moment: second,
                support_upper: f64::INFINITY,
                breaks: bp.clone(),
                atoms,
                quantile_density,
            }),
        })
    }

    /// Finite law with the given support points and probabilities.
    pub fn discrete(points: &[f64], probs: &[f64]) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::InvalidDistribution(
                "discrete law needs equally many (nonzero) points and probabilities".into(),
            ));
        }
        if points.iter().any(|&z| !(z >= 0.0 && z.is_finite())) {
            return Err(Error::InvalidDistribution("support points must be finite and >= 0".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidDistribution("probabilities must be >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> =
            points.iter().copied().zip(probs.iter().map(|p| p / total)).filter(|p| p.1 > 0.0).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (z, p) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == z => last.1 += p,
                _ => merged.push((z, p)),
            }
        }
        Self::from_atoms(merged, "discrete")
    }

    /// Step-cdf law putting mass `1/n` on each observed claim.
    pub fn empirical(claims: &[f64]) -> Result<Self> {
        if claims.is_empty() {
            return Err(Error::InvalidDistribution("empirical law needs at least one claim".into()));
        }
        if let Some(c) = claims.iter().find(|&&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidDistribution(format!("negative or non-finite claim {c}")));
        }
        let mut sorted = claims.to_vec();
        sorted.sort_by(f64::total_cmp);
        let w = 1.0 / sorted.len() as f64;
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for z in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == z => last.1 += w,
                _ => merged.push((z, w)),
            }
        }
        Self::from_atoms(merged, "empirical")
    }

    /// Reads a one-column CSV of claim amounts; a header row is optional.
    pub fn empirical_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut claims = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let Some(field) = rec.get(0) else { continue };
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) => claims.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => {
                    return Err(Error::InvalidDistribution(format!("row {}: '{field}' is not a number", i + 1)))
                }
            }
        }
        Self::empirical(&claims)
    }

    fn from_atoms(merged: Vec<(f64, f64)>, name: &str) -> Result<Self> {
        let points: Vec<f64> = merged.iter().map(|a| a.0).collect();
        let masses: Vec<f64> = merged.iter().map(|a| a.1).collect();
        let mut cum = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            cum.push(acc);
        }
        let last = cum.len() - 1;
        cum[last] = 1.0;
        let m0 = if points[0] == 0.0 { masses[0] } else { 0.0 };
        if m0 >= 1.0 - 1e-15 {
            return Err(Error::InvalidDistribution("all mass sits at zero".into()));
        }
        let mean = merged.iter().map(|(z, p)| z * p).sum();
        let second_moment = merged.iter().map(|(z, p)| z * z * p).sum();
        let breaks = points.iter().copied().filter(|&z| z > 0.0).collect();
        let support_upper = points[last];
        Ok(Self {
            inner: Arc::new(Inner {
                kind: Kind::Discrete { points, cum },
                label: format!("{name}({} atoms)", merged.len()),
                m0,
                mean,
                second_moment,
                support_upper,
                atoms: merged,
                breaks,
                quantile_density: false,
            }),
        })
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Exponential { mean, mass_at_zero } if *mass_at_zero == 0.0 => Self::exponential(*mean),
            DistributionSpec::Exponential { mean, mass_at_zero } => Self::exponential_with_zero_mass(*mean, *mass_at_zero),
            DistributionSpec::PiecewiseExponential(p) => Self::piecewise_exponential(p),
            DistributionSpec::Discrete { points, probs } => Self::discrete(points, probs),
            DistributionSpec::Empirical { claims, csv } => match (csv, claims.is_empty()) {
                (Some(path), true) => Self::empirical_from_csv(path),
                (None, false) => Self::empirical(claims),
                _ => Err(Error::InvalidDistribution("empirical needs exactly one of `claims` or `csv`".into())),
            },
        }
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    /// `m0 = F(0)`.
    pub fn mass_at_zero(&self) -> f64 {
        self.inner.m0
    }

    pub fn mean(&self) -> f64 {
        self.inner.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.inner.second_moment
    }

    pub fn support_upper(&self) -> f64 {
        self.inner.support_upper
    }

    /// `(location, mass)` of every atom, increasing in location.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.inner.atoms
    }

    /// True when `F` has a positive density on `(0, inf)` (possibly with
    /// additional atoms), so that `S` is strictly decreasing there.
    pub fn has_density(&self) -> bool {
        matches!(self.inner.kind, Kind::PiecewiseExponential { .. })
    }

    /// True when the quantile function is absolutely continuous on
    /// `[m0, 1)` with a positive density.
    pub fn has_quantile_density(&self) -> bool {
        self.inner.quantile_density
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::arg(format!("cdf needs z >= 0, got {z}")));
        }
        Ok(1.0 - self.survival(z))
    }

    /// Generalized inverse `inf { z >= 0 : F(z) >= p }`, with `inf {} = inf`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::arg(format!("quantile needs p in (0, 1], got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        if p <= self.inner.m0 {
            return 0.0;
        }
        self.survival_quantile(1.0 - p)
    }

    /// `inf { z >= 0 : S(z) <= s }`. Working with survival levels directly
    /// keeps `Q(1 - u)` exact for distortion breakpoints `u`.
    pub fn survival_quantile(&self, s: f64) -> f64 {
        let m0 = self.inner.m0;
        if s >= 1.0 - m0 {
            return 0.0;
        }
        match &self.inner.kind {
            Kind::PiecewiseExponential { breakpoints, scales } => {
                // survival level of the continuous part
                let s = (s / (1.0 - m0)).clamp(0.0, 1.0);
                let mut lo = 0.0;
                for (k, &sc) in scales.iter().enumerate() {
                    let s_lo = (-lo / sc).exp();
                    if s >= s_lo {
                        return lo;
                    }
                    let hi = breakpoints.get(k).copied().unwrap_or(f64::INFINITY);
                    let s_hi = if hi.is_finite() { (-hi / sc).exp() } else { 0.0 };
                    if s > s_hi || !hi.is_finite() {
                        return if s <= 0.0 { f64::INFINITY } else { -sc * s.ln() };
                    }
                    lo = hi;
                }
                f64::INFINITY
            }
            Kind::Discrete { points, cum, .. } => {
                let target = 1.0 - s - 1e-12;
                let i = cum.partition_point(|&c| c < target);
                points[i.min(points.len() - 1)]
            }
        }
    }

    /// Derivative of the quantile function, when it exists.
    pub fn quantile_density(&self, p: f64) -> Option<f64> {
        if !self.inner.quantile_density || !(p > self.inner.m0 && p < 1.0) {
            return None;
        }
        match &self.inner.kind {
            Kind::PiecewiseExponential { scales, .. } => Some(scales[0] / (1.0 - p)),
            Kind::Discrete { .. } => None,
        }
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        match &self.inner.kind {
            Kind::PiecewiseExponential { breakpoints, scales } => {
                let k = breakpoints.partition_point(|&b| b <= z);
                let s = scales[k];
                (1.0 - self.inner.m0) * (-z / s).exp() / s
            }
            Kind::Discrete { .. } => 0.0,
        }
    }

    /// i.i.d. draws by inverse transform; identical output for identical seeds.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::arg("sample size must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile_unchecked(u)
            })
            .collect())
    }

    /// `(int H dF, int H^2 dF)` for a retention function `H`.
    pub fn retained_moments(&self, h: &RetentionFunction) -> Result<(f64, f64)> {
        let nodes = h.nodes();
        let slopes = h.slopes();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for k in 0..slopes.len() {
            let a = nodes[k];
            let b = nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let [p0, p1, p2] = self.segment_moments(a, b);
            let h0 = h.value_at_node(k);
            let s = slopes[k];
            m1 += h0 * p0 + s * p1;
            m2 += h0 * h0 * p0 + 2.0 * h0 * s * p1 + s * s * p2;
        }
        if !(m1.is_finite() && m2.is_finite()) {
            return Err(Error::NonFinite("retained moments".into()));
        }
        Ok((m1, m2))
    }

    fn atom_moments(&self, a: f64, b: f64) -> [f64; 3] {
        let atoms = &self.inner.atoms;
        let start = atoms.partition_point(|&(z, _)| z < a);
        let mut out = [0.0; 3];
        for &(z, w) in &atoms[start..] {
            if z >= b {
                break;
            }
            let d = z - a;
            out[0] += w;
            out[1] += w * d;
            out[2] += w * d * d;
        }
        out
    }
}

/// `(int H dF, int H^2 dF)`, the retained mean and variance building blocks.
pub fn mean_and_second_moment(dist: &LossDistribution, h: &RetentionFunction) -> Result<(f64, f64)> {
    dist.retained_moments(h)
}

impl Measure for LossDistribution {
    fn survival(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0;
        }
        match &self.inner.kind {
            Kind::PiecewiseExponential { breakpoints, scales } => {
                let k = breakpoints.partition_point(|&b| b <= z);
                (1.0 - self.inner.m0) * (-z / scales[k]).exp()
            }
            Kind::Discrete { points, cum, .. } => {
                let i = points.partition_point(|&x| x <= z);
                if i == 0 {
                    1.0
                } else {
                    (1.0 - cum[i - 1]).max(0.0)
                }
            }
        }
    }

    fn survival_left(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        match &self.inner.kind {
            Kind::PiecewiseExponential { breakpoints, scales } => {
                let k = breakpoints.partition_point(|&b| b < z);
                (1.0 - self.inner.m0) * (-z / scales[k]).exp()
            }
            Kind::Discrete { points, cum, .. } => {
                let i = points.partition_point(|&x| x < z);
                if i == 0 {
                    1.0
                } else {
                    (1.0 - cum[i - 1]).max(0.0)
                }
            }
        }
    }

    fn breaks(&self) -> &[f64] {
        &self.inner.breaks
    }

    /// Atoms exactly, plus the exponential pieces in closed form (short
    /// pieces by Gauss-Kronrod, which avoids cancellation).
    fn segment_moments(&self, a: f64, b: f64) -> [f64; 3] {
        let mut out = self.atom_moments(a, b);
        if let Kind::PiecewiseExponential { breakpoints, scales } = &self.inner.kind {
            if !(b > a) {
                return out;
            }
            let w = 1.0 - self.inner.m0;
            let mut lo = a.max(0.0);
            let mut k = breakpoints.partition_point(|&x| x <= lo);
            while lo < b {
                let hi = breakpoints.get(k).copied().unwrap_or(f64::INFINITY).min(b);
                let s = scales[k];
                let piece = if (hi - lo) / s < 0.05 {
                    let f = |x: f64| w * (-x / s).exp() / s;
                    [
                        quad::integrate(f, lo, hi),
                        quad::integrate(|x| (x - a) * f(x), lo, hi),
                        quad::integrate(|x| (x - a) * (x - a) * f(x), lo, hi),
                    ]
                } else {
                    // int u^k e^{-x/s} / s dx = -e^{-x/s} P_k(u), u = x - a
                    let p = |u: f64| [1.0, u + s, u * u + 2.0 * s * u + 2.0 * s * s];
                    let (e_lo, p_lo) = ((-lo / s).exp(), p(lo - a));
                    let (e_hi, p_hi) = if hi.is_finite() { ((-hi / s).exp(), p(hi - a)) } else { (0.0, [0.0; 3]) };
                    std::array::from_fn(|j| w * (e_lo * p_lo[j] - e_hi * p_hi[j]))
                };
                for j in 0..3 {
                    out[j] += piece[j];
                }
                lo = hi;
                k += 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer() -> LossDistribution {
        LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![1.0, 6.0],
            scales: vec![6.0, 5.0, 3.0],
            mass_at_zero: 0.0,
        })
        .unwrap()
    }

    #[test]
    fn exponential_cdf_and_quantile() {
        let d = LossDistribution::exponential(1.0).unwrap();
        assert!((d.cdf(1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((d.quantile(1.0 - (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        assert!(d.cdf(-1.0).is_err());
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.5).is_err());
        assert!(d.quantile(1.0).unwrap().is_infinite());
        assert!((d.mean() - 1.0).abs() < 1e-15);
        assert!((d.second_moment() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn layer_segments_and_jumps() {
        let d = layer();
        assert!((d.cdf(3.0).unwrap() - (1.0 - (-0.6f64).exp())).abs() < 1e-15);
        assert!((1.0 - d.survival_left(1.0) - (1.0 - (-1.0f64 / 6.0).exp())).abs() < 1e-15);
        assert!((d.cdf(1.0).unwrap() - (1.0 - (-0.2f64).exp())).abs() < 1e-15);
        assert!((1.0 - d.survival_left(6.0) - (1.0 - (-1.2f64).exp())).abs() < 1e-15);
        assert!((d.cdf(6.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(d.atoms().len(), 2);
        assert!(!d.has_quantile_density());
        // probabilities inside the jump at 1 map to the breakpoint
        let p = 1.0 - (-0.19f64).exp();
        assert_eq!(d.quantile(p).unwrap(), 1.0);
    }

    #[test]
    fn decreasing_join_is_rejected() {
        let err = LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![1.0],
            scales: vec![1.0, 2.0],
            mass_at_zero: 0.0,
        });
        assert!(matches!(err, Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn single_segment_is_exponential() {
        let d = LossDistribution::piecewise_exponential(&PiecewiseExponentialSpec {
            breakpoints: vec![],
            scales: vec![2.5],
            mass_at_zero: 0.0,
        })
        .unwrap();
        assert!((d.mean() - 2.5).abs() < 1e-14);
        assert!(d.has_quantile_density());
    }

    #[test]
    fn zero_mass_quantile() {
        let d = LossDistribution::exponential_with_zero_mass(1.0, 0.2).unwrap();
        assert_eq!(d.quantile(0.1).unwrap(), 0.0);
        assert_eq!(d.mass_at_zero(), 0.2);
        assert!((d.cdf(0.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((d.mean() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn empirical_counts() {
        let d = LossDistribution::empirical(&[0.0, 0.0, 1.0, 3.0]).unwrap();
        assert_eq!(d.mass_at_zero(), 0.5);
        assert!((d.mean() - 1.0).abs() < 1e-15);
        assert!((d.cdf(1.0).unwrap() - 0.75).abs() < 1e-15);
        let p = LossDistribution::empirical(&[2.0]).unwrap();
        assert_eq!(p.cdf(2.0).unwrap(), 1.0);
        assert_eq!(p.cdf(1.999).unwrap(), 0.0);
        let e = LossDistribution::empirical(&[0.0, 1.0, 1.0, 2.0, 2.0, 2.0, 10.0]).unwrap();
        // counting oracle: six of seven claims are <= 2
        let oracle = [0.0, 1.0, 1.0, 2.0, 2.0, 2.0, 10.0].iter().filter(|&&c| c <= 2.0).count() as f64 / 7.0;
        assert!((e.cdf(2.0).unwrap() - oracle).abs() < 1e-15);
        assert!(LossDistribution::empirical(&[]).is_err());
        assert!(LossDistribution::empirical(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn two_point_quantile() {
        let d = LossDistribution::discrete(&[1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!(d.quantile(0.5).unwrap(), 1.0);
        assert_eq!(d.quantile(0.5001).unwrap(), 2.0);
        assert_eq!(d.quantile(1.0).unwrap(), 2.0);
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let d = LossDistribution::exponential(1.0).unwrap();
        let n = 100_000;
        let a = d.sample(7, n).unwrap();
        let b = d.sample(7, n).unwrap();
        assert_eq!(a, b);
        let mean = a.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());
        assert!(d.sample(1, 0).is_err());

        let e = LossDistribution::empirical(&[1.0, 2.0]).unwrap();
        let s = e.sample(3, 10_000).unwrap();
        let ones = s.iter().filter(|&&x| x == 1.0).count() as f64 / 1e4;
        assert!((ones - 0.5).abs() < 0.02);
    }

    #[test]
    fn density_and_by_parts_moments_agree() {
        for d in [layer(), LossDistribution::exponential_with_zero_mass(2.0, 0.3).unwrap()] {
            for &(a, b) in &[(0.0, 0.5), (0.7, 1.3), (2.0, 6.5), (5.5, f64::INFINITY), (0.0, f64::INFINITY)] {
                let x = d.segment_moments(a, b);
                let y = by_parts_moments(&d, a, b);
                for k in 0..3 {
                    assert!((x[k] - y[k]).abs() <= 1e-9 * (1.0 + x[k].abs()), "{a} {b} {k}: {x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn half_open_convention_on_atoms() {
        let d = LossDistribution::discrete(&[1.0, 3.0], &[0.25, 0.75]).unwrap();
        // atom at the left end counts, atom at the right end does not
        assert_eq!(d.segment_moments(1.0, 3.0)[0], 0.25);
        assert_eq!(d.segment_moments(0.0, 1.0)[0], 0.0);
        let y = by_parts_moments(&d, 1.0, 3.0);
        assert!((y[0] - 0.25).abs() < 1e-15);
        let z = by_parts_moments(&d, 0.5, f64::INFINITY);
        assert!((z[1] - (0.25 * 0.5 + 0.75 * 2.5)).abs() < 1e-9);
    }
}
