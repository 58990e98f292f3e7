//! The inner objective `J(H; a)`, the value `v(a) = inf_H J(H; a)`, the
//! decay rate `a*` solving `v(a) = pi - (1 + theta) int z dF_hat`, and the
//! value function `V(x) = exp(-a* x)`.

use serde::{Deserialize, Serialize};

use crate::distributions::Measure;
use crate::error::{Error, Result};
use crate::grid::{Discretization, GridSpec};
use crate::premium::{check_assumption, premium_rate, DualDistribution, MarketParams};
use crate::roots;
use crate::solver::qp::{solve_slopes, QpOptions};

pub use crate::retention::RetentionFunction;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    /// `(a/2) int H^2 dF`
    pub quad_term: f64,
    /// `int H dF`
    pub lin_term: f64,
    /// `(1 + theta) int H dF_hat`
    pub prem_term: f64,
    pub total: f64,
}

/// Exact evaluation of `J(H; a)` on the intervals of `H`.
pub fn objective_eval(h: &RetentionFunction, a: f64, dual: &DualDistribution) -> Result<ObjectiveBreakdown> {
    if !(a > 0.0) {
        return Err(Error::arg(format!("rate a must be positive, got {a}")));
    }
    let (m1, m2) = dual.loss().retained_moments(h)?;
    let nodes = h.nodes();
    let mut d1 = 0.0;
    for k in 0..nodes.len() {
        let b = nodes.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let m = dual.segment_moments(nodes[k], b);
        d1 += h.value_at_node(k) * m[0] + h.slopes()[k] * m[1];
    }
    let quad_term = 0.5 * a * m2;
    let prem_term = (1.0 + dual.theta()) * d1;
    let total = quad_term + m1 - prem_term;
    if !total.is_finite() {
        return Err(Error::NonFinite("objective".into()));
    }
    Ok(ObjectiveBreakdown { quad_term, lin_term: m1, prem_term, total })
}

#[derive(Clone, Debug)]
pub struct VEval {
    pub a: f64,
    pub value: f64,
    pub slopes: Vec<f64>,
    pub sweeps: usize,
    pub kkt_violation: f64,
}

impl VEval {
    pub fn retention(&self, d: &Discretization) -> RetentionFunction {
        RetentionFunction::from_parts(d.nodes.clone(), self.slopes.clone())
    }
}

/// `v(a)` and its minimizer on the grid `d`.
pub fn v_eval(a: f64, d: &Discretization, warm: Option<&[f64]>, opts: &QpOptions) -> Result<VEval> {
    let sol = solve_slopes(d, a, warm, opts)?;
    Ok(VEval { a, value: sol.objective, sweeps: sol.sweeps, kkt_violation: sol.kkt_violation, slopes: sol.slopes })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RateOptions {
    pub grid: GridSpec,
    /// Root tolerance factor: `|v(a) - target| <= tol (|target| + 1)`.
    pub tol: f64,
    /// Bracket width tolerance relative to `a`.
    pub xtol_rel: f64,
    pub max_sweeps: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { grid: GridSpec::default(), tol: 1e-8, xtol_rel: 1e-10, max_sweeps: 100_000 }
    }
}

impl RateOptions {
    pub fn qp(&self) -> QpOptions {
        QpOptions { max_sweeps: self.max_sweeps, ..QpOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSolution {
    pub a_star: f64,
    pub v_at_a_star: f64,
    /// `pi - (1 + theta) int z dF_hat`.
    pub target: f64,
    pub bracket: (f64, f64),
    /// `(a, v(a))` for every evaluation, in order.
    pub trace: Vec<(f64, f64)>,
    #[serde(skip)]
    pub h_star: RetentionFunction,
    pub max_spacing: f64,
}

/// Finds the unique `a*` with `v(a*) = pi - (1 + theta) int z dF_hat`.
pub fn solve_rate(params: &MarketParams, dual: &DualDistribution, opts: &RateOptions) -> Result<RateSolution> {
    let report = check_assumption(params, dual);
    if let Some(v) = report.violation {
        return Err(Error::Assumption(v));
    }
    let d = Discretization::new(&opts.grid, dual)?;
    solve_rate_on(params, dual, &d, opts)
}

/// [`solve_rate`] on a prebuilt grid.
pub fn solve_rate_on(params: &MarketParams, dual: &DualDistribution, d: &Discretization, opts: &RateOptions) -> Result<RateSolution> {
    if (params.theta0 - dual.theta0()).abs() > 0.0 {
        return Err(Error::arg("market theta0 differs from the dual distribution's"));
    }
    let target = params.pi - dual.loaded_mean();
    let qp = opts.qp();
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let phi = |a: f64, trace: &mut Vec<(f64, f64)>, warm: &mut Option<Vec<f64>>| -> Result<f64> {
        let ev = v_eval(a, d, warm.as_deref(), &qp)?;
        trace.push((a, ev.value));
        *warm = Some(ev.slopes);
        Ok(ev.value - target)
    };

    let (mut lo, mut hi) = (2f64.powi(-20), 1.0);
    let mut f_hi = phi(hi, &mut trace, &mut warm)?;
    let mut f_lo = None;
    let mut doublings = 0;
    while f_hi <= 0.0 {
        if doublings == 60 {
            return Err(Error::Solver("no bracket for a* within 60 doublings".into()));
        }
        lo = hi;
        f_lo = Some(f_hi);
        hi *= 2.0;
        f_hi = phi(hi, &mut trace, &mut warm)?;
        doublings += 1;
    }
    let mut f_lo = match f_lo {
        Some(v) => v,
        None => phi(lo, &mut trace, &mut warm)?,
    };
    let mut halvings = 0;
    while f_lo >= 0.0 {
        if halvings == 60 {
            return Err(Error::Solver("no bracket for a* within 60 halvings".into()));
        }
        hi = lo;
        f_hi = f_lo;
        lo *= 0.5;
        f_lo = phi(lo, &mut trace, &mut warm)?;
        halvings += 1;
    }
    let ftol = opts.tol * (target.abs() + 1.0);
    let bracket = (lo, hi);
    let root = {
        let trace_ref = &mut trace;
        let warm_ref = &mut warm;
        roots::brent(|a| phi(a, trace_ref, warm_ref), lo, hi, f_lo, f_hi, |a| opts.xtol_rel * a.abs(), ftol, 200)?
    };
    let a_star = root.x;
    // final solve at exactly a*, warm-started
    let fin = v_eval(a_star, d, warm.as_deref(), &qp)?;
    Ok(RateSolution {
        a_star,
        v_at_a_star: fin.value,
        target,
        bracket,
        trace,
        h_star: fin.retention(d),
        max_spacing: d.max_spacing(),
    })
}

/// `V(x) = exp(-a* x)`, the minimal lifetime ruin probability.
pub fn value_function(a_star: f64, x: f64) -> Result<f64> {
    if !(a_star > 0.0) {
        return Err(Error::arg(format!("a* must be positive, got {a_star}")));
    }
    if !(x >= 0.0) {
        return Err(Error::arg(format!("initial surplus must be >= 0, got {x}")));
    }
    Ok((-a_star * x).exp())
}

/// Drift `mu = pi - c(I) - E[H(Z)]` and variance `sigma^2 = E[H(Z)^2]` of
/// the diffusion surplus under the retention `H`.
pub fn drift_volatility(h: &RetentionFunction, params: &MarketParams, dual: &DualDistribution) -> Result<(f64, f64)> {
    let c = premium_rate(h, dual)?.value();
    let (m1, m2) = dual.loss().retained_moments(h)?;
    let mu = params.pi - c - m1;
    if !(mu.is_finite() && m2.is_finite()) {
        return Err(Error::NonFinite("drift or volatility".into()));
    }
    Ok((mu, m2))
}
