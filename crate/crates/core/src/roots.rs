//! Bracketed scalar root finding.

use crate::error::{GsamError, Result};

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

/// Brent's method on `[a, b]`, which must bracket a sign change.
///
/// Stops when `|f(x)| <= ftol` or the bracket is narrower than `xtol`.
pub fn brent<F>(mut f: F, a: f64, b: f64, ftol: f64, xtol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut evals = 2;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, evaluations: evals });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, evaluations: evals });
    }
    if fa.signum() == fb.signum() {
        return Err(GsamError::Solver {
            solver: "brent bracket",
            iterations: 0,
            residual: fa.abs().min(fb.abs()),
        });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..max_iter {
        if fb.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok(Root { x: b, fx: fb, evaluations: evals });
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = if lo < b { s > lo && s < b } else { s > b && s < lo };
        let bisect = !between
            || (mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            || (mflag && (b - c).abs() < xtol)
            || (!mflag && (c - d).abs() < xtol);
        if bisect {
            s = 0.5 * (a + b);
        }
        mflag = bisect;
        let fs = f(s)?;
        evals += 1;
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    if fb.abs() <= ftol {
        return Ok(Root { x: b, fx: fb, evaluations: evals });
    }
    Err(GsamError::Solver {
        solver: "brent",
        iterations: max_iter,
        residual: fb.abs(),
    })
}

/// Expands `[lo, hi]` geometrically (on a log scale for positive arguments)
/// until `f` changes sign, staying inside `[floor, ceil]`.
pub fn expand_bracket<F>(mut f: F, mut lo: f64, mut hi: f64, floor: f64, ceil: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    for _ in 0..200 {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi));
        }
        // Assumes f increasing: move towards the side that can still change sign.
        if flo > 0.0 {
            if lo <= floor {
                break;
            }
            hi = lo;
            fhi = flo;
            lo = (lo / 100.0).max(floor);
            flo = f(lo)?;
        } else {
            if hi >= ceil {
                break;
            }
            lo = hi;
            flo = fhi;
            hi = (hi * 100.0).min(ceil);
            fhi = f(hi)?;
        }
    }
    Err(GsamError::Solver {
        solver: "bracket expansion",
        iterations: 200,
        residual: flo.abs().min(fhi.abs()),
    })
}
