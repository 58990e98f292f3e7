//! Bracketed scalar root finding (Brent's method, bisection fallback).

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    /// Final bracket `[lo, hi]` with `f(lo) < 0 < f(hi)` (or a zero hit).
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Brent's method on a sign-changing bracket. Converges when the bracket is
/// narrower than `xtol(x)`; the residual must then satisfy `|f(x)| <= ftol`.
pub fn brent<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: impl Fn(f64) -> f64, ftol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa * fb > 0.0 {
        return Err(Error::Solver(format!("no sign change on [{a}, {b}]: f = {fa}, {fb}")));
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 0..max_iter {
        let tol = 0.5 * xtol(b).max(4.0 * f64::EPSILON * b.abs());
        if fb == 0.0 || (b - c).abs() <= 2.0 * tol {
            if fb.abs() <= ftol {
                return Ok(Root { x: b, fx: fb, bracket: ordered(b, c), iterations: it });
            }
            return Err(Error::Solver(format!("bracket collapsed at {b} with residual {fb}")));
        }
        let m = 0.5 * (c - b);
        let mut use_bisect = true;
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
                use_bisect = false;
            }
        }
        if use_bisect {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
    }
    Err(Error::Solver(format!("root not found in {max_iter} iterations")))
}

fn ordered(x: f64, y: f64) -> (f64, f64) {
    (x.min(y), x.max(y))
}

/// Plain bisection for an increasing function: returns `x` with the root in
/// `[x - tol, x + tol]`.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::Solver(format!("no root of increasing map in [{lo}, {hi}]: f = {flo}, {fhi}")));
    }
    for _ in 0..400 {
        if hi - lo <= 2.0 * tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = brent(f, 0.0, 2.0, -2.0, 6.0, |_| 1e-14, 1e-14, 100).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
        assert!(r.iterations < 20);
    }

    #[test]
    fn brent_rejects_same_sign() {
        assert!(brent(|x: f64| Ok(x), 1.0, 2.0, 1.0, 2.0, |_| 1e-12, 1e-12, 10).is_err());
    }

    #[test]
    fn bisection_on_increasing() {
        let x = bisect_increasing(|x| x.ln(), 0.1, 10.0, 1e-12).unwrap();
        assert!((x - 1.0).abs() < 1e-11);
    }
}
