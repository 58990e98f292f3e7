//! Quantile-domain route for absolutely continuous quantile functions.
//!
//! With `Psi(p) = -a int_p^1 H(F^{-1}(t)) dt` the inner problem becomes the
//! double-obstacle system on `[m0, 1]`
//!
//! ```text
//! min{ max{ Psi'' - a h, L - Psi }, Psi'' } = 0,   Psi(1) = 0,  Psi'(m0) = 0,
//! L(p) = 1 - p - (1 + theta0) g(1 - p),
//! ```
//!
//! and `Phi(F^{-1}(p)) = L(p) - Psi(p)`.
//!
//! Discretization: `Psi'` lives on cells, `Psi'(p_{i+1/2}) = a H(q_{i+1/2})`
//! with `q` the quantile at the cell midpoint, so the jump of `Psi'` across
//! node `i` lies in `[0, kappa_i]`, `kappa_i = a (q_{i+1/2} - q_{i-1/2})`.
//! Each node then reduces to `Psi_i = median(B_i, L_i, A_i)` where `A_i` is
//! the weighted neighbour average (no jump) and `B_i` the value with the full
//! jump. The left end mirrors (`Psi_{-1} = Psi_1`, `q_{-1/2} = -q_{1/2}`).
//! The truncated tail `[1 - eps, 1]` is one more cell whose midpoint
//! quantile is the conditional tail mean `E[Z | Z > F^{-1}(1 - eps)]`, which
//! is exact for `H` linear in the tail, and `Psi(1) = 0` closes the system.

use serde::Serialize;

use crate::distortions::is_concave_on;
use crate::distributions::{LossDistribution, Measure};
use crate::error::{Error, Result};
use crate::premium::DualDistribution;
use crate::retention::RetentionFunction;

#[derive(Clone, Debug, Serialize)]
pub struct OdeOptions {
    /// Number of p-grid cells.
    pub n_nodes: usize,
    /// The grid stops at `1 - p_eps`.
    pub p_eps: f64,
    /// Place half of the nodes at `F(z)` for equally spaced `z`, so that
    /// the tail is resolved in loss space as well.
    pub z_fill: bool,
    pub max_newton: usize,
    pub psor_omega: f64,
    pub psor_max_sweeps: usize,
    /// PSOR stops when the largest nodal update is below this.
    pub psor_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            n_nodes: 4000,
            p_eps: 1e-6,
            z_fill: true,
            max_newton: 100_000,
            psor_omega: 1.5,
            psor_max_sweeps: 1_000_000,
            psor_tol: 1e-10,
        }
    }
}

/// Which branch of the nodal median is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeLabel {
    /// `Psi'' = 0`: retention flat (full cover at the margin).
    Lower,
    /// `Psi = L`: on the obstacle, slope free.
    Interior,
    /// `Psi'' = a h`: retention slope 1.
    Upper,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiSolution {
    pub a: f64,
    /// Nodes `p_0 = m0 < ... < p_N = 1 - p_eps`.
    pub p: Vec<f64>,
    /// `Psi` at every node; the last entry comes from the right boundary row.
    pub psi: Vec<f64>,
    /// `Psi'` on each cell `[p_i, p_{i+1}]`.
    pub dpsi: Vec<f64>,
    /// `F^{-1}` at the cell midpoints.
    pub q_mid: Vec<f64>,
    /// `F^{-1}(1 - p_eps)`: `H` is solved for on `[0, z_resolved]` and
    /// extrapolated beyond.
    pub z_resolved: f64,
    /// Largest admissible jump of `Psi'` at each unknown node.
    pub kappa: Vec<f64>,
    /// `L(p_i)` at the unknown nodes.
    pub obstacle: Vec<f64>,
    pub labels: Vec<NodeLabel>,
    /// `max_i |Psi_i - median(B_i, L_i, A_i)|`.
    pub residual: f64,
    pub method: String,
    pub iterations: usize,
}

impl PsiSolution {
    /// Jumps of `Psi'` at the unknown nodes, the discrete `Psi'' dp`.
    pub fn jumps(&self) -> Vec<f64> {
        (0..self.kappa.len()).map(|i| if i == 0 { 2.0 * self.dpsi[0] } else { self.dpsi[i] - self.dpsi[i - 1] }).collect()
    }

    /// Discrete `Psi''` at the unknown nodes.
    pub fn second_difference(&self) -> Vec<f64> {
        let j = self.jumps();
        (0..j.len())
            .map(|i| {
                let left = if i == 0 { self.p[1] - self.p[0] } else { self.p[i] - self.p[i - 1] };
                j[i] / (0.5 * (left + self.p[i + 1] - self.p[i]))
            })
            .collect()
    }

    /// Retention slope on `[q_{i-1/2}, q_{i+1/2}]`: jump over `kappa`.
    pub fn slopes(&self) -> Vec<f64> {
        self.jumps().iter().zip(&self.kappa).map(|(j, k)| j / k).collect()
    }

    /// Residual of the nodal median relation for an arbitrary `Psi` on this
    /// grid (`psi` without or with the boundary entry).
    pub fn residual_of(&self, psi: &[f64]) -> f64 {
        let s = Setup::from_parts(self.a, self.p.clone(), self.q_mid.clone(), self.obstacle.clone());
        s.residual(&psi[..s.n()])
    }
}

struct Setup {
    a: f64,
    p: Vec<f64>,
    /// Right boundary row: `Psi_N = r Psi_{N-1}` (`r = 0` when the grid
    /// reaches `p = 1`).
    r: f64,
    q_mid: Vec<f64>,
    z_resolved: f64,
    kappa: Vec<f64>,
    /// Neighbour weights of the no-jump average.
    wl: Vec<f64>,
    wr: Vec<f64>,
    /// `B_i = A_i - drop_i`.
    drop: Vec<f64>,
    obstacle: Vec<f64>,
}

fn p_grid(f: &LossDistribution, n: usize, eps: f64, z_fill: bool) -> Vec<f64> {
    let m0 = f.mass_at_zero();
    let top = 1.0 - eps;
    let n_u = if z_fill { n / 2 } else { n };
    let mut p: Vec<f64> = (0..=n_u).map(|k| m0 + (top - m0) * k as f64 / n_u as f64).collect();
    if z_fill {
        let z_max = f.quantile_unchecked(top);
        let n_z = n - n_u;
        p.extend((1..n_z).map(|j| 1.0 - f.survival(z_max * j as f64 / n_z as f64)));
        p.sort_by(f64::total_cmp);
        // near-duplicates only; relative to the remaining mass so the
        // z-spaced nodes deep in the tail survive
        let min_gap = |l: f64| 1e-3 * ((top - m0) / n as f64).min(1.0 - l);
        let mut out: Vec<f64> = Vec::with_capacity(p.len());
        for v in p {
            match out.last() {
                Some(&l) if v - l < min_gap(l) => {}
                _ => out.push(v),
            }
        }
        // keep the exact end point
        let last = out.len() - 1;
        if out[last] != top {
            if top - out[last - 1] < min_gap(out[last - 1]) {
                out.pop();
            }
            *out.last_mut().unwrap() = top;
        }
        p = out;
    }
    p
}

impl Setup {
    fn new(a: f64, dual: &DualDistribution, opts: &OdeOptions) -> Result<Self> {
        let f = dual.loss();
        if !f.has_quantile_density() {
            return Err(Error::NoQuantileDensity(format!("{} has no absolutely continuous quantile function", f.label())));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::arg(format!("rate a must be positive and finite, got {a}")));
        }
        if opts.n_nodes < 4 {
            return Err(Error::arg("quantile grid needs at least 4 cells"));
        }
        let eps = opts.p_eps;
        let m0 = f.mass_at_zero();
        if !(eps > 0.0 && eps < 1.0 - m0) {
            return Err(Error::arg(format!("p_eps must lie in (0, {}), got {eps}", 1.0 - m0)));
        }
        let mut p = p_grid(f, opts.n_nodes, eps, opts.z_fill);
        let mut q_mid: Vec<f64> = p.windows(2).map(|w| f.quantile_unchecked(0.5 * (w[0] + w[1]))).collect();
        let q_top = f.quantile_unchecked(*p.last().unwrap());
        let [m0, m1, _] = f.segment_moments(q_top, f64::INFINITY);
        if !(m0 > 0.0 && m1.is_finite()) {
            return Err(Error::NoQuantileDensity(format!("no tail mass beyond z = {q_top}")));
        }
        q_mid.push(q_top + m1 / m0);
        p.push(1.0);
        let g = dual.distortion();
        let load = 1.0 + dual.theta0();
        let obstacle = p[..p.len() - 1].iter().map(|&pi| 1.0 - pi - load * g.eval(1.0 - pi)).collect();
        let s = Self { z_resolved: q_top, ..Self::from_parts(a, p, q_mid, obstacle) };
        if let Some(i) = s.kappa.iter().position(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(Error::NoQuantileDensity(format!("quantile density vanishes or blows up near p = {}", s.p[i])));
        }
        Ok(s)
    }

    fn from_parts(a: f64, p: Vec<f64>, q_mid: Vec<f64>, obstacle: Vec<f64>) -> Self {
        let n = q_mid.len();
        let d: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        let eps = 1.0 - p[n];
        let r = eps / (d[n - 1] + eps);
        let mut kappa = Vec::with_capacity(n);
        let (mut wl, mut wr, mut drop) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (dl, ql) = if i == 0 { (d[0], -q_mid[0]) } else { (d[i - 1], q_mid[i - 1]) };
            let k = a * (q_mid[i] - ql);
            let (il, ir) = (1.0 / dl, 1.0 / d[i]);
            kappa.push(k);
            wl.push(il / (il + ir));
            wr.push(ir / (il + ir));
            drop.push(k / (il + ir));
        }
        let z_resolved = q_mid[n - 1];
        Self { a, p, r, q_mid, z_resolved, kappa, wl, wr, drop, obstacle }
    }

    fn n(&self) -> usize {
        self.kappa.len()
    }

    fn neighbour_average(&self, psi: &[f64], i: usize) -> f64 {
        let n = self.n();
        let left = if i == 0 { psi[1] } else { psi[i - 1] };
        let right = if i + 1 == n { self.r * psi[n - 1] } else { psi[i + 1] };
        self.wl[i] * left + self.wr[i] * right
    }

    fn median_target(&self, psi: &[f64], i: usize) -> (f64, NodeLabel) {
        let a = self.neighbour_average(psi, i);
        let b = a - self.drop[i];
        let l = self.obstacle[i];
        if l <= b {
            (b, NodeLabel::Upper)
        } else if l >= a {
            (a, NodeLabel::Lower)
        } else {
            (l, NodeLabel::Interior)
        }
    }

    fn residual(&self, psi: &[f64]) -> f64 {
        (0..self.n()).map(|i| (psi[i] - self.median_target(psi, i).0).abs()).fold(0.0, f64::max)
    }

    /// Tridiagonal row of `Psi_i - A_i(Psi)`.
    fn average_row(&self, i: usize, lower: &mut [f64], diag: &mut [f64], upper: &mut [f64]) {
        let n = self.n();
        if i == 0 {
            upper[0] = -1.0;
        } else if i + 1 == n {
            lower[i] = -self.wl[i];
            diag[i] = 1.0 - self.wr[i] * self.r;
        } else {
            lower[i] = -self.wl[i];
            upper[i] = -self.wr[i];
        }
    }

    /// Solves the linear system fixed by `labels`.
    fn solve_labels(&self, labels: &[NodeLabel]) -> Vec<f64> {
        let n = self.n();
        let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; n], vec![1.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            match labels[i] {
                NodeLabel::Interior => rhs[i] = self.obstacle[i],
                l => {
                    rhs[i] = if l == NodeLabel::Upper { -self.drop[i] } else { 0.0 };
                    self.average_row(i, &mut lower, &mut diag, &mut upper);
                }
            }
        }
        thomas(&lower, &diag, &upper, &rhs)
    }

    fn with_boundary(&self, mut psi: Vec<f64>) -> Vec<f64> {
        let n = self.n();
        psi.push(self.r * psi[n - 1]);
        psi
    }

    fn finish(&self, psi_unknowns: Vec<f64>, method: &str, iterations: usize) -> PsiSolution {
        let n = self.n();
        let labels = (0..n).map(|i| self.median_target(&psi_unknowns, i).1).collect();
        let residual = self.residual(&psi_unknowns);
        let psi = self.with_boundary(psi_unknowns);
        let dpsi = (0..n).map(|i| (psi[i + 1] - psi[i]) / (self.p[i + 1] - self.p[i])).collect();
        PsiSolution {
            a: self.a,
            p: self.p.clone(),
            psi,
            dpsi,
            q_mid: self.q_mid.clone(),
            z_resolved: self.z_resolved,
            kappa: self.kappa.clone(),
            obstacle: self.obstacle.clone(),
            labels,
            residual,
            method: method.into(),
            iterations,
        }
    }

    fn converged(&self, psi: &[f64]) -> bool {
        let scale = 1.0 + psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.residual(psi) <= 1e-11 * scale
    }

    /// Two-level policy iteration on `Psi_i = min(A_i, max(L_i, B_i))`.
    ///
    /// The outer loop picks, per node, the `A` branch or the `max` branch
    /// (minimizing player); for a fixed outer choice the inner `max` problem
    /// is solved exactly by Howard's algorithm. Every linear system is a
    /// transient random walk (the right boundary leaks), so both levels are
    /// monotone and terminate.
    fn newton(&self, max_outer: usize, guess: Option<&[f64]>) -> std::result::Result<(Vec<f64>, usize), Vec<f64>> {
        let n = self.n();
        let mut rows: Vec<NodeLabel> = match guess {
            Some(g) => (0..n).map(|i| self.median_target(g, i).1).collect(),
            // Psi is increasing, so it cannot follow a decreasing obstacle
            None => (0..n)
                .map(|i| if i + 1 < n && self.obstacle[i] > self.obstacle[i + 1] { NodeLabel::Lower } else { NodeLabel::Upper })
                .collect(),
        };
        let mut use_a: Vec<bool> = rows.iter().map(|&l| l == NodeLabel::Lower).collect();
        let mut psi = vec![0.0; n];
        let mut solves = 0;
        for _ in 0..max_outer {
            // inner Howard iteration for the max player
            for _ in 0..=n {
                psi = self.solve_labels(&rows);
                solves += 1;
                let mut changed = false;
                for i in 0..n {
                    if use_a[i] {
                        continue;
                    }
                    let b = self.neighbour_average(&psi, i) - self.drop[i];
                    let l = self.obstacle[i];
                    let want = if l > b { NodeLabel::Interior } else { NodeLabel::Upper };
                    let current = if rows[i] == NodeLabel::Interior { l } else { b };
                    if want != rows[i] && l.max(b) > current + switch_margin(current) {
                        rows[i] = want;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            // outer improvement for the min player
            let mut changed = false;
            for i in 0..n {
                let a = self.neighbour_average(&psi, i);
                let b = a - self.drop[i];
                let m = self.obstacle[i].max(b);
                let (cur, alt) = if use_a[i] { (a, m) } else { (m, a) };
                if alt < cur - switch_margin(cur) {
                    use_a[i] = !use_a[i];
                    rows[i] = if use_a[i] {
                        NodeLabel::Lower
                    } else if self.obstacle[i] > b {
                        NodeLabel::Interior
                    } else {
                        NodeLabel::Upper
                    };
                    changed = true;
                }
            }
            if !changed {
                return if self.converged(&psi) { Ok((psi, solves)) } else { Err(psi) };
            }
        }
        Err(psi)
    }

    /// Projected SOR on the nodal median relation.
    fn psor(&self, mut psi: Vec<f64>, opts: &OdeOptions) -> Result<(Vec<f64>, usize)> {
        let n = self.n();
        let mut omega = opts.psor_omega;
        let mut last_change = f64::INFINITY;
        let mut growth = 0usize;
        for sweep in 1..=opts.psor_max_sweeps {
            let mut change: f64 = 0.0;
            for i in 0..n {
                let a = self.neighbour_average(&psi, i);
                let b = a - self.drop[i];
                let old = psi[i];
                let relax = |t: f64| old + omega * (t - old);
                let new = relax(b).max(self.obstacle[i].min(relax(a)));
                change = change.max((new - old).abs());
                psi[i] = new;
            }
            if change < opts.psor_tol {
                return Ok((psi, sweep));
            }
            // over-relaxation that keeps growing the update is oscillating
            if change > last_change {
                growth += 1;
                if growth > 20 && omega > 1.0 {
                    omega = 1.0;
                    growth = 0;
                }
            } else {
                growth = 0;
            }
            last_change = change;
        }
        Err(Error::Solver(format!("projected SOR did not converge in {} sweeps", opts.psor_max_sweeps)))
    }
}

/// Piecewise-linear interpolation of `(xs, ys)` at sorted `at`.
fn interpolate(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    at.iter()
        .map(|&x| {
            let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
            let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            ys[k - 1] + w * (ys[k] - ys[k - 1])
        })
        .collect()
}

fn switch_margin(v: f64) -> f64 {
    1e-14 * (1.0 + v.abs())
}

/// Tridiagonal solve; the systems here are irreducibly diagonally dominant.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Solves the double-obstacle system at rate `a`.
pub fn solve_quantile_ode(a: f64, dual: &DualDistribution, opts: &OdeOptions) -> Result<PsiSolution> {
    let s = Setup::new(a, dual, opts)?;
    // coarse-to-fine cascade: each level seeds the active sets of the next,
    // so the policy iteration only has to move free boundaries locally
    let mut levels = vec![opts.n_nodes];
    while levels.last().unwrap() / 2 >= 64 {
        levels.push(levels.last().unwrap() / 2);
    }
    let mut guess: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut total = 0;
    for &m in levels[1..].iter().rev() {
        let c = Setup::new(a, dual, &OdeOptions { n_nodes: m, ..opts.clone() })?;
        let seed = guess.as_ref().map(|(p, v)| interpolate(p, v, &c.p[..c.n()]));
        match c.newton(opts.max_newton, seed.as_deref()) {
            Ok((psi, it)) => {
                total += it;
                guess = Some((c.p.clone(), c.with_boundary(psi)));
            }
            Err(_) => {
                guess = None;
                break;
            }
        }
    }
    let seed = guess.as_ref().map(|(p, v)| interpolate(p, v, &s.p[..s.n()]));
    match s.newton(opts.max_newton, seed.as_deref()) {
        Ok((psi, it)) => Ok(s.finish(psi, "newton", total + it)),
        Err(start) => {
            let (psi, sweeps) = s.psor(start, opts)?;
            Ok(s.finish(psi, "psor", sweeps))
        }
    }
}

/// Single-obstacle route for distortions concave on the relevant range:
/// with `Theta = Psi + a int_p^1 F^{-1}` the upper branch becomes
/// `Theta'' = 0` and the lower constraint is automatic, leaving
/// `max{Theta'', O - Theta} = 0` with `O = L + a int_p^1 F^{-1}`.
pub fn solve_single_obstacle_concave(a: f64, dual: &DualDistribution, opts: &OdeOptions) -> Result<PsiSolution> {
    let s = Setup::new(a, dual, opts)?;
    let upper = 1.0 - dual.loss().mass_at_zero();
    if !is_concave_on(dual.distortion(), upper, 1e-10)? {
        return Err(Error::NotConcave(upper));
    }
    let n = s.n();
    // w_i = -int_{p_i}^1 F^{-1}, with the same midpoint quantiles, so that
    // w carries exactly the full jumps kappa / a
    let mut w = vec![0.0; n + 1];
    w[n] = -(1.0 - s.p[n]) * s.q_mid[n - 1];
    for i in (0..n).rev() {
        w[i] = w[i + 1] - (s.p[i + 1] - s.p[i]) * s.q_mid[i];
    }
    let obst: Vec<f64> = (0..n).map(|i| s.obstacle[i] - a * w[i]).collect();

    // Howard iteration: obstacle rows vs average rows, starting from averages
    let mut on_obstacle = vec![false; n];
    let mut theta = vec![0.0; n];
    let mut iterations = 0;
    for it in 1..=n + 1 {
        iterations = it;
        let (mut lower, mut diag, mut up, mut rhs) = (vec![0.0; n], vec![1.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            if on_obstacle[i] {
                rhs[i] = obst[i];
            } else {
                s.average_row(i, &mut lower, &mut diag, &mut up);
            }
        }
        theta = thomas(&lower, &diag, &up, &rhs);
        let next: Vec<bool> = (0..n).map(|i| obst[i] >= s.neighbour_average(&theta, i)).collect();
        if next == on_obstacle {
            break;
        }
        on_obstacle = next;
    }
    let psi: Vec<f64> = (0..n).map(|i| theta[i] + a * w[i]).collect();
    let sol = s.finish(psi, "single_obstacle", iterations);
    let scale = 1.0 + sol.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sol.residual > 1e-9 * scale {
        // typically the obstacle falls at m0 faster than any admissible Psi
        // can follow, so no solution honours Psi'(m0) = 0
        return Err(Error::Solver(format!(
            "single-obstacle problem has no solution compatible with the boundary conditions \
             (double-obstacle residual {:.3e}); use the double-obstacle route",
            sol.residual
        )));
    }
    Ok(sol)
}

/// `H(z) = Psi'(F(z)) / a`, tabulated at the midpoint quantiles.
pub fn retention_from_psi(psi: &PsiSolution) -> Result<RetentionFunction> {
    let n = psi.q_mid.len();
    let slopes = psi.slopes();
    // a slope is a difference of differences of Psi over kappa, so on tiny
    // cells rounding in Psi alone can push it past [0, 1]
    let psi_max = psi.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = |i: usize| psi.p[i + 1] - psi.p[i];
    for (i, &s) in slopes.iter().enumerate() {
        let inv = 1.0 / d(i) + if i == 0 { 1.0 / d(0) } else { 1.0 / d(i - 1) };
        let tol = 1e-6 + 16.0 * f64::EPSILON * psi_max * inv / psi.kappa[i];
        if !(-tol..=1.0 + tol).contains(&s) {
            return Err(Error::Solver(format!("recovered retention slope {s:.3e} near p = {} leaves [0, 1]", psi.p[i])));
        }
    }
    let mut nodes = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    values.push(0.0);
    for i in 0..n {
        if psi.q_mid[i] > *nodes.last().unwrap() {
            nodes.push(psi.q_mid[i]);
            values.push(psi.dpsi[i] / psi.a);
        }
    }
    let tail = slopes[n - 1].clamp(0.0, 1.0);
    let slopes: Vec<f64> = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(z, h)| ((h[1] - h[0]) / (z[1] - z[0])).clamp(0.0, 1.0))
        .chain(std::iter::once(tail))
        .collect();
    RetentionFunction::new(nodes, slopes)
}

/// `Psi` of a given retention on the grid of `like`, including the boundary
/// entry: `Psi'` on each cell is `a H(q_mid)`.
pub fn psi_from_retention(h: &RetentionFunction, like: &PsiSolution) -> Vec<f64> {
    let n = like.q_mid.len();
    let d = |i: usize| like.p[i + 1] - like.p[i];
    let eps = 1.0 - like.p[n];
    let r = eps / (d(n - 1) + eps);
    let mut psi = vec![0.0; n + 1];
    psi[n - 1] = -like.a * d(n - 1) * h.eval(like.q_mid[n - 1]) / (1.0 - r);
    psi[n] = r * psi[n - 1];
    for i in (0..n - 1).rev() {
        psi[i] = psi[i + 1] - like.a * d(i) * h.eval(like.q_mid[i]);
    }
    psi
}
