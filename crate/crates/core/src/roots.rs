//! Scalar solvers over fallible closures: Brent's bracketed root finder and
//! golden-section maximization.

use crate::error::{CarpetError, Result};

const MAX_ITER: usize = 200;

/// Root of `f` in `[a, b]` given `f(a)·f(b) ≤ 0`.
///
/// Stops when `|f(x)| ≤ ftol` or the bracket is narrower than `xtol`.
pub fn brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    xtol: f64,
    ftol: f64,
    what: &'static str,
) -> Result<f64> {
    let fa = f(a)?;
    let fb = f(b)?;
    brent_with_values(f, (a, fa), (b, fb), xtol, ftol, what)
}

/// [`brent`] with the end-point values already known.
pub fn brent_with_values(
    mut f: impl FnMut(f64) -> Result<f64>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    xtol: f64,
    ftol: f64,
    what: &'static str,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(CarpetError::BracketFailure {
            what,
            lo: a.min(b),
            hi: a.max(b),
        });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..MAX_ITER {
        if fb.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
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
    Err(CarpetError::NoConvergence {
        what,
        iterations: MAX_ITER,
    })
}

/// Maximizer of a unimodal `f` on `[a, b]`, returned with its value.
pub fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_roots() {
        let r = brent(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-15, 0.0, "sqrt2").unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        let r = brent(|x| Ok(x.cos() - x), 1.0, 0.0, 1e-14, 0.0, "dottie").unwrap();
        assert!((r - 0.7390851332151607).abs() < 1e-13);
        assert!(matches!(
            brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 0.0, "none"),
            Err(CarpetError::BracketFailure { .. })
        ));
    }

    #[test]
    fn brent_propagates_errors() {
        let err = brent(
            |x| if x > 0.5 { Err(CarpetError::NoRootInUnitInterval) } else { Ok(x - 0.7) },
            0.0,
            1.0,
            1e-12,
            0.0,
            "err",
        );
        assert_eq!(err, Err(CarpetError::NoRootInUnitInterval));
    }

    #[test]
    fn golden_section() {
        let (x, v) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3) + 1.0), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!((v - 1.0).abs() < 1e-15);
    }
}
