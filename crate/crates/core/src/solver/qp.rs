//! Projected coordinate descent for the discretized inner problem over
//! slope vectors in `[0, 1]^n`.
//!
//! Two families of exact line searches alternate: slope coordinates (shift
//! `H` on a whole tail `[z_{k+1}, inf)`), and nodal hats (move `H(z_k)` alone,
//! trading slope between the two adjacent intervals). The first resolves
//! long-range structure, the second local structure.

use crate::error::{Error, Result};
use crate::grid::Discretization;

#[derive(Clone, Debug)]
pub struct QpOptions {
    pub max_sweeps: usize,
    /// Stop when a full sweep lowers `J` by less than `rel_decrease (1 + |J|)`...
    pub rel_decrease: f64,
    /// ...and the worst interval-averaged complementarity violation is below this.
    pub kkt_tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self { max_sweeps: 100_000, rel_decrease: 1e-12, kkt_tol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub slopes: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    pub kkt_violation: f64,
}

/// Curvatures below this count as zero (direction carries no mass).
const FLAT: f64 = 1e-300;

fn line_min(g: f64, c: f64, lo: f64, hi: f64) -> f64 {
    if c > FLAT {
        (-g / c).clamp(lo, hi)
    } else if g < 0.0 {
        hi
    } else if g > 0.0 {
        lo
    } else {
        0.0
    }
}

/// Worst complementarity violation: `G_k / delta_k` must be `<= 0` where the
/// slope is 1, `>= 0` where it is 0, and vanish in between.
pub fn kkt_violation(d: &Discretization, a: f64, slopes: &[f64]) -> f64 {
    let g = d.slope_gradient(a, slopes);
    let mut worst: f64 = 0.0;
    for k in 0..d.len() {
        let scale = if d.delta[k] > 0.0 { d.delta[k] } else { 1.0 };
        let gk = g[k] / scale;
        let v = if slopes[k] <= 0.0 {
            (-gk).max(0.0)
        } else if slopes[k] >= 1.0 {
            gk.max(0.0)
        } else {
            gk.abs()
        };
        worst = worst.max(v);
    }
    worst
}

struct State<'a> {
    d: &'a Discretization,
    a: f64,
    s: Vec<f64>,
    h: Vec<f64>,
}

impl State<'_> {
    fn refresh(&mut self) {
        self.h = self.d.node_values(&self.s);
    }

    /// Ascending Gauss-Seidel over slope coordinates in O(n): updates of
    /// earlier slopes shift all later node values by a common amount.
    fn slope_sweep(&mut self) {
        let d = self.d;
        let a = self.a;
        let n = d.len();
        let mut tail = vec![0.0; n];
        let mut acc = 0.0;
        for k in (0..n).rev() {
            tail[k] = acc;
            acc += self.h[k] * d.f[k][0] + self.s[k] * d.f[k][1];
        }
        let mut shift = 0.0;
        for k in 0..n {
            let [_, m1, m2] = d.f[k];
            let dk = d.delta[k];
            let hk = self.h[k] + shift;
            let t = tail[k] + shift * d.f_after[k];
            let s = self.s[k];
            let g = a * (hk * m1 + s * m2 + dk * t) + m1 + dk * d.f_after[k]
                - d.load * (d.fhat[k][1] + dk * d.fhat_after[k]);
            let c = a * (m2 + dk * dk * d.f_after[k]);
            let step = line_min(g, c, -s, 1.0 - s);
            if step != 0.0 {
                self.s[k] = (s + step).clamp(0.0, 1.0);
                shift += (self.s[k] - s) * dk;
            }
        }
        self.refresh();
    }

    /// Nodal hat moves `H(z_k) += delta` for `k = 1..n`.
    fn hat_sweep(&mut self, descending: bool) {
        let d = self.d;
        let a = self.a;
        let n = d.len();
        let order: Box<dyn Iterator<Item = usize>> =
            if descending { Box::new((1..n).rev()) } else { Box::new(1..n) };
        for k in order {
            let dl = d.delta[k - 1];
            let [_, l1, l2] = d.f[k - 1];
            let sl = self.s[k - 1];
            let hl = self.h[k - 1];
            let mut g = (a * (hl * l1 + sl * l2) + l1 - d.load * d.fhat[k - 1][1]) / dl;
            let mut c = a * l2 / (dl * dl);
            let mut lo = -sl * dl;
            let mut hi = (1.0 - sl) * dl;
            let [r0, r1, r2] = d.f[k];
            let sr = self.s[k];
            let hk = self.h[k];
            if k + 1 < n {
                let dr = d.delta[k];
                g += a * (hk * r0 + sr * r1) + r0 - d.load * d.fhat[k][0]
                    - (a * (hk * r1 + sr * r2) + r1 - d.load * d.fhat[k][1]) / dr;
                c += a * (r0 - 2.0 * r1 / dr + r2 / (dr * dr));
                lo = lo.max((sr - 1.0) * dr);
                hi = hi.min(sr * dr);
            } else {
                g += a * (hk * r0 + sr * r1) + r0 - d.load * d.fhat[k][0];
                c += a * r0;
            }
            if lo > hi {
                continue;
            }
            let step = line_min(g, c.max(0.0), lo, hi);
            if step != 0.0 {
                self.h[k] += step;
                self.s[k - 1] = (sl + step / dl).clamp(0.0, 1.0);
                if k + 1 < n {
                    self.s[k] = (sr - step / d.delta[k]).clamp(0.0, 1.0);
                }
            }
        }
        // re-derive node values from the clamped slopes
        self.refresh();
    }
}

/// Minimizes the discretized objective at rate `a`, starting from `warm`
/// (zero slopes if absent or of the wrong length).
pub fn solve_slopes(d: &Discretization, a: f64, warm: Option<&[f64]>, opts: &QpOptions) -> Result<QpSolution> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::arg(format!("rate a must be positive and finite, got {a}")));
    }
    let n = d.len();
    let s0 = match warm {
        Some(w) if w.len() == n => w.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        _ => vec![0.0; n],
    };
    let mut st = State { d, a, h: d.node_values(&s0), s: s0 };
    let mut j = d.objective(a, &st.s);
    for sweep in 1..=opts.max_sweeps {
        st.slope_sweep();
        st.hat_sweep(sweep % 2 == 0);
        let j_new = d.objective(a, &st.s);
        if !j_new.is_finite() {
            return Err(Error::NonFinite("objective during descent".into()));
        }
        let decrease = j - j_new;
        j = j_new.min(j);
        if decrease < opts.rel_decrease * (1.0 + j.abs()) {
            let kkt = kkt_violation(d, a, &st.s);
            if kkt <= opts.kkt_tol || decrease <= 0.0 && sweep > 50 && kkt <= 1e3 * opts.kkt_tol {
                return Ok(QpSolution { objective: j_new, sweeps: sweep, kkt_violation: kkt, slopes: st.s });
            }
        }
    }
    Err(Error::Solver(format!(
        "coordinate descent did not converge in {} sweeps (kkt violation {:.3e})",
        opts.max_sweeps,
        kkt_violation(d, a, &st.s)
    )))
}
