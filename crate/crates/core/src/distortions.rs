//! Distortion functions: left-continuous, non-decreasing maps of `[0, 1]`
//! onto itself with `g(0) = g(0+) = 0` and `g(1) = 1`. Concavity is not
//! required.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Envelope refinement tolerance, with margin below the 1e-9 to which the
/// envelope majorizes `g` between probes.
const HULL_TOL: f64 = 5e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear between knots; a repeated abscissa encodes a jump
    /// (first ordinate is the left value, second the right limit).
    #[default]
    Linear,
    /// Left-continuous step: `g = y_k` on `(x_{k-1}, x_k]`.
    Step,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TabularParams {
    #[serde(default)]
    pub knots: Vec<[f64; 2]>,
    /// Alternative source for the knots: a two-column `p,g` CSV.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub interpolation: Interpolation,
}

/// Config-level description; `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DistortionSpec {
    Identity,
    ProportionalHazard { rho: f64 },
    InverseS { gamma: f64 },
    Wang { lambda: f64 },
    Tabular(TabularParams),
    /// The concrete distortion used for the two-layer reproduction.
    LayerCanonical,
}

/// Piecewise-linear table with optional jumps at knots.
#[derive(Clone, Debug, PartialEq)]
struct Table {
    xs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Table {
    fn eval(&self, p: f64) -> f64 {
        let k = self.xs.partition_point(|&x| x < p);
        if k >= self.xs.len() {
            return *self.left.last().unwrap();
        }
        if self.xs[k] == p || k == 0 {
            return self.left[k];
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.right[k - 1], self.left[k]);
        y0 + (y1 - y0) * (p - x0) / (x1 - x0)
    }

    fn right_limit(&self, p: f64) -> f64 {
        let k = self.xs.partition_point(|&x| x < p);
        if k < self.xs.len() && self.xs[k] == p {
            self.right[k]
        } else {
            self.eval(p)
        }
    }
}

#[derive(Clone)]
enum Kind {
    Identity,
    ProportionalHazard(f64),
    InverseS(f64),
    Wang(f64, Normal),
    Table(Table),
    Layer,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A distortion `g`. Evaluation at a jump returns the left value; the right
/// limit is available separately.
#[derive(Clone)]
pub struct Distortion {
    kind: Kind,
    label: String,
    breaks: Vec<f64>,
}

impl fmt::Debug for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Distortion").field("label", &self.label).field("breaks", &self.breaks).finish()
    }
}

/// Constants of the canonical layer distortion.
pub mod layer {
    /// `e^{-4/5}`: `g` is the identity below this level.
    pub fn u1() -> f64 {
        (-0.8f64).exp()
    }
    /// `e^{-2/5}`: location of the upward jump.
    pub fn u2() -> f64 {
        (-0.4f64).exp()
    }
    /// Height of the flat piece after the jump.
    pub fn c() -> f64 {
        1.75 * (-0.2f64).exp() - 0.625 * (-0.4f64).exp() - 0.625 * (-0.8f64).exp()
    }
    pub fn eval(u: f64) -> f64 {
        if u <= u1() {
            u
        } else if u <= u2() {
            u / 8.0 * (9.0 - 5.0 * u.ln()) - 0.625 * u1()
        } else {
            u.max(c())
        }
    }
}

impl Distortion {
    pub fn identity() -> Self {
        Self { kind: Kind::Identity, label: "identity".into(), breaks: vec![] }
    }

    /// `g(p) = p^{1/rho}`, `rho >= 1`.
    pub fn proportional_hazard(rho: f64) -> Result<Self> {
        if !(rho >= 1.0 && rho.is_finite()) {
            return Err(Error::InvalidDistortion(format!("proportional hazard needs rho >= 1, got {rho}")));
        }
        Ok(Self { kind: Kind::ProportionalHazard(rho), label: format!("proportional_hazard(rho={rho})"), breaks: vec![] })
    }

    /// Tversky-Kahneman weighting `p^g / (p^g + (1-p)^g)^{1/g}`: concave then
    /// convex, monotone for `gamma` in `(0.28, 1)`.
    pub fn inverse_s(gamma: f64) -> Result<Self> {
        if !(gamma > 0.28 && gamma < 1.0) {
            return Err(Error::InvalidDistortion(format!("inverse-S needs gamma in (0.28, 1), got {gamma}")));
        }
        Ok(Self { kind: Kind::InverseS(gamma), label: format!("inverse_s(gamma={gamma})"), breaks: vec![] })
    }

    /// `g(p) = N(N^{-1}(p) + lambda)`.
    pub fn wang(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidDistortion("wang shift must be finite".into()));
        }
        let n = Normal::standard();
        Ok(Self { kind: Kind::Wang(lambda, n), label: format!("wang(lambda={lambda})"), breaks: vec![] })
    }

    pub fn layer_canonical() -> Self {
        Self {
            kind: Kind::Layer,
            label: "layer_canonical".into(),
            breaks: vec![layer::u1(), layer::u2(), layer::c()],
        }
    }

    /// Tabular distortion from `(p, g)` knots sorted by `p`.
    pub fn tabular(knots: &[[f64; 2]], rule: Interpolation) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDistortion("tabular distortion needs at least two knots".into()));
        }
        if knots.iter().any(|k| !(k[0].is_finite() && k[1].is_finite())) {
            return Err(Error::InvalidDistortion("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1][0] < w[0][0]) {
            return Err(Error::InvalidDistortion("knots must be sorted by p".into()));
        }
        if knots[0][0] != 0.0 || knots[knots.len() - 1][0] != 1.0 {
            return Err(Error::InvalidDistortion("knots must span p = 0 to p = 1".into()));
        }
        let table = match rule {
            Interpolation::Linear => {
                let mut t = Table { xs: vec![], left: vec![], right: vec![] };
                for k in knots {
                    if t.xs.last() == Some(&k[0]) {
                        // repeated abscissa: a jump; keep the first value as g(x)
                        *t.right.last_mut().unwrap() = k[1];
                    } else {
                        t.xs.push(k[0]);
                        t.left.push(k[1]);
                        t.right.push(k[1]);
                    }
                }
                t
            }
            Interpolation::Step => {
                if knots.windows(2).any(|w| w[1][0] == w[0][0]) {
                    return Err(Error::InvalidDistortion("step knots need distinct p".into()));
                }
                let n = knots.len();
                let left: Vec<f64> = knots.iter().map(|k| k[1]).collect();
                let mut right: Vec<f64> = (1..n).map(|i| knots[i][1]).collect();
                right.push(left[n - 1]);
                Table { xs: knots.iter().map(|k| k[0]).collect(), left, right }
            }
        };
        let breaks = table.xs[1..table.xs.len() - 1].to_vec();
        let g = Self { kind: Kind::Table(table), label: format!("tabular({} knots)", knots.len()), breaks };
        g.ensure_valid()?;
        Ok(g)
    }

    /// Reads `p,g` knots from a CSV file (header optional).
    pub fn tabular_from_csv(path: &std::path::Path, rule: Interpolation) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut knots = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| rec.get(j).and_then(|s| s.trim().parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(p), Some(g)) => knots.push([p, g]),
                _ if i == 0 => continue,
                _ => return Err(Error::InvalidDistortion(format!("row {} is not a (p, g) pair", i + 1))),
            }
        }
        Self::tabular(&knots, rule)
    }

    /// Wraps an arbitrary function. Nothing is checked; run
    /// [`validate_distortion`] before relying on class membership.
    pub fn from_fn(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: Kind::Custom(Arc::new(f)), label: label.into(), breaks: vec![] }
    }

    pub fn from_spec(spec: &DistortionSpec) -> Result<Self> {
        let g = match spec {
            DistortionSpec::Identity => Self::identity(),
            DistortionSpec::ProportionalHazard { rho } => Self::proportional_hazard(*rho)?,
            DistortionSpec::InverseS { gamma } => Self::inverse_s(*gamma)?,
            DistortionSpec::Wang { lambda } => Self::wang(*lambda)?,
            DistortionSpec::LayerCanonical => Self::layer_canonical(),
            DistortionSpec::Tabular(t) => match (&t.csv, t.knots.is_empty()) {
                (Some(path), true) => Self::tabular_from_csv(path, t.interpolation)?,
                (None, false) => Self::tabular(&t.knots, t.interpolation)?,
                _ => {
                    return Err(Error::InvalidDistortion("tabular needs exactly one of `knots` or `csv`".into()))
                }
            },
        };
        g.ensure_valid()?;
        Ok(g)
    }

    fn ensure_valid(&self) -> Result<()> {
        let report = validate_distortion(self, 10_000);
        if report.passed {
            Ok(())
        } else {
            Err(Error::InvalidDistortion(format!("{}: {}", self.label, report.violations.join("; "))))
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    /// `g(p)` with range checking.
    pub fn distort(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::arg(format!("distortion argument {p} outside [0, 1]")));
        }
        Ok(self.eval(p))
    }

    /// `g(p)`; arguments are clamped to `[0, 1]`.
    pub fn eval(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Identity => p,
            Kind::ProportionalHazard(rho) => p.powf(1.0 / rho),
            Kind::InverseS(g) => {
                if p == 0.0 || p == 1.0 {
                    return p;
                }
                let a = p.powf(*g);
                let b = (1.0 - p).powf(*g);
                a / (a + b).powf(1.0 / g)
            }
            Kind::Wang(l, n) => {
                if p == 0.0 || p == 1.0 {
                    return p;
                }
                n.cdf(n.inverse_cdf(p) + l)
            }
            Kind::Table(t) => t.eval(p),
            Kind::Layer => layer::eval(p),
            Kind::Custom(f) => f(p),
        }
    }

    /// `g(p+)`; equals `g(p)` except at jumps.
    pub fn right_limit(&self, p: f64) -> f64 {
        match &self.kind {
            Kind::Table(t) => t.right_limit(p.clamp(0.0, 1.0)),
            Kind::Layer if p == layer::u2() => layer::c(),
            Kind::Identity | Kind::ProportionalHazard(_) | Kind::InverseS(_) | Kind::Wang(..) | Kind::Layer => {
                if p >= 1.0 {
                    1.0
                } else {
                    self.eval(p)
                }
            }
            Kind::Custom(f) => {
                if p >= 1.0 {
                    f(1.0)
                } else {
                    f((p + 1e-12).min(1.0))
                }
            }
        }
    }

    /// Interior points of `(0, 1)` where `g` jumps or has a kink.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// `(location, left value, right limit)` for every jump.
    pub fn jumps(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &p in &self.breaks {
            let (l, r) = (self.eval(p), self.right_limit(p));
            if r != l {
                out.push((p, l, r));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<String>,
    /// `(location, left value, right limit)`.
    pub jumps: Vec<(f64, f64, f64)>,
}

/// Checks membership in the distortion class on a probe grid plus every
/// jump location; never fails, the report carries the findings.
pub fn validate_distortion(g: &Distortion, probe_count: usize) -> ValidationReport {
    let n = probe_count.max(2);
    let mut pts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    for &b in g.breakpoints() {
        pts.extend_from_slice(&[b, (b - 1e-9).max(0.0), (b + 1e-9).min(1.0)]);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut violations = Vec::new();
    let vals: Vec<f64> = pts.iter().map(|&p| g.eval(p)).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite() || *v < -1e-12 || *v > 1.0 + 1e-12) {
        violations.push(format!("g({}) = {} outside [0, 1]", pts[i], vals[i]));
    }
    if let Some(i) = (1..pts.len()).find(|&i| vals[i] < vals[i - 1] - 1e-12) {
        violations.push(format!("decreasing: g({}) = {} > g({}) = {}", pts[i - 1], vals[i - 1], pts[i], vals[i]));
    }
    if g.eval(0.0).abs() > 1e-12 {
        violations.push(format!("g(0) = {} != 0", g.eval(0.0)));
    }
    if g.right_limit(0.0).abs() > 1e-12 {
        violations.push(format!("g(0+) = {} != 0", g.right_limit(0.0)));
    }
    if (g.eval(1.0) - 1.0).abs() > 1e-12 {
        violations.push(format!("g(1) = {} != 1", g.eval(1.0)));
    }
    let jumps = g.jumps();
    for &(p, l, r) in &jumps {
        if r < l {
            violations.push(format!("downward jump at {p}"));
        }
        if p > 0.0 {
            let before = g.eval((p - 1e-10).max(0.0));
            if (l - before).abs() > 1e-6 * (1.0 + (r - l).abs()) && (r - before).abs() < (l - before).abs() {
                violations.push(format!("not left-continuous at {p}"));
            }
        }
    }
    ValidationReport { passed: violations.is_empty(), violations, jumps }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Upper convex hull of points sorted by abscissa (ties: larger ordinate last).
fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        if let Some(last) = h.last() {
            if last.0 == p.0 {
                if p.1 > last.1 {
                    h.pop();
                } else {
                    continue;
                }
            }
        }
        while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) >= 0.0 {
            h.pop();
        }
        h.push(p);
    }
    h
}

/// `g` on `n + 1` even points of `[0, cutoff]`, plus both one-sided values
/// at its breakpoints, sorted for [`upper_hull`].
fn samples(g: &Distortion, cutoff: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(Error::arg(format!("envelope cutoff {cutoff} outside (0, 1]")));
    }
    let mut pts: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let p = cutoff * i as f64 / n as f64;
            (p, g.eval(p))
        })
        .collect();
    pts.last_mut().unwrap().0 = cutoff;
    for &b in g.breakpoints() {
        if b < cutoff {
            pts.push((b, g.eval(b)));
            // the supremum near a jump is its right limit
            pts.push((b, g.right_limit(b)));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(pts)
}

/// Smallest concave majorant of `g` on `[0, cutoff]`, extended linearly to
/// `(1, 1)` beyond the cutoff.
pub fn concave_envelope(g: &Distortion, cutoff: f64) -> Result<Distortion> {
    let n = 4096;
    let step = cutoff / n as f64;
    let mut pts = samples(g, cutoff, n)?;
    let mut hull = upper_hull(&pts);
    // hull edges already probed and found clean
    let mut clean = HashSet::new();
    for _ in 0..60 {
        let mut added = Vec::new();
        for w in hull.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x1 - x0 < 1e-13 || !clean.insert([x0, y0, x1, y1].map(f64::to_bits)) {
                continue;
            }
            let mut worst = (0.0, 0.0, HULL_TOL);
            // where g pokes above a long chord it does so in a sliver next
            // to a vertex, so probe geometrically towards both ends as well
            let ends = if x1 - x0 > 2.0 * step { 5..40 } else { 0..0 };
            let fractions = (1..16).map(|j| j as f64 / 16.0).chain(ends.flat_map(|k| {
                let t = 0.5f64.powi(k);
                [t, 1.0 - t]
            }));
            for t in fractions {
                let x = x0 + (x1 - x0) * t;
                if x <= x0 || x >= x1 {
                    continue;
                }
                let v = g.eval(x).max(g.right_limit(x));
                let excess = v - (y0 + (y1 - y0) * (x - x0) / (x1 - x0));
                if excess > worst.2 {
                    worst = (x, v, excess);
                }
            }
            if worst.2 > HULL_TOL {
                added.push((worst.0, worst.1));
            }
        }
        if added.is_empty() {
            break;
        }
        pts.extend(added);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        hull = upper_hull(&pts);
    }
    let mut knots: Vec<[f64; 2]> = hull.iter().map(|&(x, y)| [x, y]).collect();
    // the hull already passes through (0, 0) and (cutoff, g(cutoff))
    knots[0] = [0.0, 0.0];
    if cutoff < 1.0 {
        knots.push([1.0, 1.0]);
    }
    let table = Table {
        xs: knots.iter().map(|k| k[0]).collect(),
        left: knots.iter().map(|k| k[1]).collect(),
        right: knots.iter().map(|k| k[1]).collect(),
    };
    let breaks = table.xs[1..table.xs.len() - 1].to_vec();
    Ok(Distortion { kind: Kind::Table(table), label: format!("concave_envelope({}, {cutoff})", g.label()), breaks })
}

/// Concavity of `g` on `[0, upper]`: no upward jumps, and no probe point
/// more than `tol` below the upper hull of all probes.
pub fn is_concave_on(g: &Distortion, upper: f64, tol: f64) -> Result<bool> {
    let pts = samples(g, upper, 10_000)?;
    if g.jumps().iter().any(|&(p, l, r)| p > 0.0 && p < upper && r > l + tol) {
        return Ok(false);
    }
    let hull = upper_hull(&pts);
    let mut k = 0;
    Ok(pts.iter().all(|&(x, y)| {
        while k + 2 < hull.len() && hull[k + 1].0 <= x {
            k += 1;
        }
        let ((x0, y0), (x1, y1)) = (hull[k], hull[(k + 1).min(hull.len() - 1)]);
        let top = if x1 > x0 { y0 + (y1 - y0) * (x - x0) / (x1 - x0) } else { y0.max(y1) };
        top - y <= tol
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_values() {
        assert_eq!(Distortion::identity().distort(0.3).unwrap(), 0.3);
        assert!((Distortion::proportional_hazard(2.0).unwrap().eval(0.25) - 0.5).abs() < 1e-15);
        let u1 = layer::u1();
        assert_eq!(Distortion::layer_canonical().eval(u1), u1);
        assert!(Distortion::identity().distort(1.5).is_err());
        assert!(Distortion::proportional_hazard(0.5).is_err());
        assert!(Distortion::inverse_s(0.2).is_err());
    }

    #[test]
    fn layer_constants() {
        assert!((layer::c() - 0.7329981865409303).abs() < 1e-15);
        assert!((layer::eval(layer::u2()) - 0.6408594607257405).abs() < 1e-15);
        let g = Distortion::layer_canonical();
        assert_eq!(g.right_limit(layer::u2()), layer::c());
        assert_eq!(g.eval(1.0), 1.0);
    }

    #[test]
    fn validation_of_known_cases() {
        assert!(validate_distortion(&Distortion::identity(), 1000).passed);
        let bad = Distortion::from_fn("1-p", |p| 1.0 - p);
        let r = validate_distortion(&bad, 1000);
        assert!(!r.passed);
        assert!(r.violations.iter().any(|v| v.contains("decreasing")));
        let layer = validate_distortion(&Distortion::layer_canonical(), 100_000);
        assert!(layer.passed, "{:?}", layer.violations);
        assert_eq!(layer.jumps.len(), 1);
        assert!((layer.jumps[0].0 - (-0.4f64).exp()).abs() < 1e-15);
        assert!(layer.jumps[0].2 > layer.jumps[0].1);
    }

    #[test]
    fn tabular_kinds() {
        assert!(Distortion::tabular(&[[0.0, 0.0], [0.5, 0.9], [1.0, 1.0]], Interpolation::Linear).is_ok());
        let g = Distortion::tabular(&[[0.0, 0.0], [0.5, 0.1], [1.0, 1.0]], Interpolation::Linear).unwrap();
        assert!((g.eval(0.75) - 0.55).abs() < 1e-15);
        assert!(Distortion::tabular(&[[0.0, 0.0], [0.5, 0.6], [1.0, 0.5]], Interpolation::Linear).is_err());
        let j = Distortion::tabular(&[[0.0, 0.0], [0.4, 0.2], [0.4, 0.6], [1.0, 1.0]], Interpolation::Linear).unwrap();
        assert_eq!(j.eval(0.4), 0.2);
        assert_eq!(j.right_limit(0.4), 0.6);
        assert_eq!(j.jumps().len(), 1);
        let s = Distortion::tabular(&[[0.0, 0.0], [0.5, 0.3], [1.0, 1.0]], Interpolation::Step);
        assert!(s.is_err(), "g(0+) = 0.3 violates the class");
    }

    #[test]
    fn spec_json_round_trip() {
        let s: DistortionSpec = serde_json::from_str(r#"{"kind":"proportional_hazard","params":{"rho":2.0}}"#).unwrap();
        assert_eq!(s, DistortionSpec::ProportionalHazard { rho: 2.0 });
        let s: DistortionSpec = serde_json::from_str(r#"{"kind":"identity"}"#).unwrap();
        assert!(Distortion::from_spec(&s).unwrap().is_identity());
        let t: DistortionSpec =
            serde_json::from_str(r#"{"kind":"tabular","params":{"knots":[[0,0],[0.5,0.9],[1,1]]}}"#).unwrap();
        assert!(Distortion::from_spec(&t).is_ok());
    }

    #[test]
    fn envelope_of_concave_is_fixed_point() {
        let g = Distortion::proportional_hazard(2.0).unwrap();
        let e = concave_envelope(&g, 1.0).unwrap();
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            assert!((e.eval(p) - g.eval(p)).abs() < 1e-6, "{p}");
        }
        let id = concave_envelope(&Distortion::identity(), 0.5).unwrap();
        for i in 0..=100 {
            let p = 0.5 * i as f64 / 100.0;
            assert!((id.eval(p) - p).abs() < 1e-12);
        }
        assert!(concave_envelope(&g, 0.0).is_err());
    }

    #[test]
    fn envelope_catches_slivers_at_tangent_points() {
        // the tangent from the concave part to the cutoff leaves g just
        // above the chord in a sliver next to the tangent vertex
        let g = Distortion::inverse_s(0.7622992883772908).unwrap();
        let cutoff = 0.8524390766424335;
        let e = concave_envelope(&g, cutoff).unwrap();
        for i in 0..=20_000 {
            let p = cutoff * i as f64 / 20_000.0;
            assert!(e.eval(p) >= g.eval(p) - 1e-9, "{p}");
        }
        assert!(!is_concave_on(&g, cutoff, 1e-9).unwrap());
        assert!(is_concave_on(&g, 0.2, 1e-9).unwrap());
    }

    /// Upper hull of a plain 10^4-point discretization, independent of the
    /// adaptive construction.
    fn hull_oracle(g: &Distortion, cutoff: f64, p: f64) -> f64 {
        let n = 10_000;
        let pts: Vec<(f64, f64)> = (0..=n).map(|i| (cutoff * i as f64 / n as f64, g.eval(cutoff * i as f64 / n as f64))).collect();
        let mut best: f64 = g.eval(p);
        // the hull value at p is the max over chords through p
        for i in (0..=n).step_by(10) {
            for j in (0..=n).step_by(10) {
                let (a, b) = (pts[i], pts[j]);
                if a.0 <= p && p <= b.0 && b.0 > a.0 {
                    best = best.max(a.1 + (b.1 - a.1) * (p - a.0) / (b.0 - a.0));
                }
            }
        }
        best
    }

    #[test]
    fn inverse_s_envelope_matches_hull_oracle() {
        let g = Distortion::inverse_s(0.65).unwrap();
        let e = concave_envelope(&g, 1.0).unwrap();
        assert_eq!(e.eval(0.0), 0.0);
        assert!((e.eval(1.0) - 1.0).abs() < 1e-12);
        for &p in &[0.05, 0.2, 0.5, 0.7, 0.9, 0.99] {
            let o = hull_oracle(&g, 1.0, p);
            assert!((e.eval(p) - o).abs() < 1e-5, "{p}: {} vs {o}", e.eval(p));
        }
        // strictly above g somewhere in the convex region
        assert!(e.eval(0.9) > g.eval(0.9) + 1e-4);
        assert!(!is_concave_on(&g, 1.0, 1e-9).unwrap());
        assert!(is_concave_on(&Distortion::identity(), 1.0, 1e-9).unwrap());
    }

    #[test]
    fn layer_envelope_covers_jump() {
        let g = Distortion::layer_canonical();
        let e = concave_envelope(&g, 1.0).unwrap();
        assert!(e.eval(layer::u2()) >= layer::c() - 1e-12);
    }

    fn family() -> impl Strategy<Value = Distortion> {
        prop_oneof![
            (1.0f64..8.0).prop_map(|r| Distortion::proportional_hazard(r).unwrap()),
            (0.3f64..0.99).prop_map(|g| Distortion::inverse_s(g).unwrap()),
            (-1.0f64..1.5).prop_map(|l| Distortion::wang(l).unwrap()),
            Just(Distortion::layer_canonical()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn built_distortions_are_in_class(g in family()) {
            let n = 10_000;
            let mut prev = 0.0;
            for i in 0..=n {
                let v = g.eval(i as f64 / n as f64);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
            prop_assert!(g.right_limit(0.0).abs() < 1e-12);
            prop_assert_eq!(g.eval(1.0), 1.0);
        }

        #[test]
        fn envelope_is_concave_majorant_and_idempotent(g in family(), cutoff in 0.3f64..=1.0) {
            let e = concave_envelope(&g, cutoff).unwrap();
            let n = 400;
            let xs: Vec<f64> = (0..=n).map(|i| cutoff * i as f64 / n as f64).collect();
            for &x in &xs {
                prop_assert!(e.eval(x) >= g.eval(x) - 1e-9);
            }
            for i in 1..n {
                let mid = e.eval(xs[i]);
                prop_assert!(mid >= 0.5 * (e.eval(xs[i - 1]) + e.eval(xs[i + 1])) - 1e-9);
            }
            let ee = concave_envelope(&e, cutoff).unwrap();
            for &x in &xs {
                prop_assert!((ee.eval(x) - e.eval(x)).abs() < 1e-8);
            }
        }
    }
}
