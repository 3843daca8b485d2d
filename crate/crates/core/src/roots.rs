//! Scalar root finding and convex minimisation.

use crate::error::{domain, Error, Result};

/// Stopping rules for [`bracketed_newton`].
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-9,
            max_iter: 200,
        }
    }
}

/// Bisection with Newton polishing.
///
/// `f` returns the residual and, optionally, its derivative. The bracket
/// `[lo, hi]` must contain a sign change. A Newton step is taken whenever it
/// stays strictly inside the current bracket and shrinks it at least as fast
/// as bisection would; otherwise the bracket is halved. Iteration stops when
/// `|f(x)| <= residual_tol` or when the bracket has collapsed to machine
/// precision.
pub fn bracketed_newton<F>(f: F, lo: f64, hi: f64, opts: &RootOptions) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, Option<f64>)>,
{
    if !(lo <= hi) {
        return domain(format!("invalid bracket [{lo}, {hi}]"));
    }
    let (f_lo, _) = f(lo)?;
    if f_lo.abs() <= opts.residual_tol {
        return Ok(lo);
    }
    let (f_hi, _) = f(hi)?;
    if f_hi.abs() <= opts.residual_tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    let increasing = f_hi > 0.0;
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    let mut last_width = b - a;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let (fx, dfx) = f(x)?;
        residual = fx.abs();
        if residual <= opts.residual_tol {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            b = x;
        } else {
            a = x;
        }
        if b - a <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        let newton = dfx
            .filter(|d| d.is_finite() && *d != 0.0)
            .map(|d| x - fx / d)
            .filter(|n| *n > a && *n < b && (n - x).abs() < 0.5 * last_width);
        last_width = b - a;
        x = newton.unwrap_or(0.5 * (a + b));
    }
    Err(Error::MaxIterations {
        iterations: opts.max_iter,
        residual,
    })
}

/// Expands `hi` geometrically from `start` until `f(hi)` has the sign of
/// `target_sign`, returning the first such point.
pub fn expand_upper<F>(f: F, start: f64, target_sign: f64, max_doublings: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..max_doublings {
        let v = f(hi)?;
        if v == 0.0 || v.signum() == target_sign.signum() {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(Error::NoRoot(format!("no sign change found up to {hi}")))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal function on
/// `[lo, hi]`, narrowed until the bracket is no wider than `width_tol`.
/// Returns the minimiser and the function value there.
pub fn golden_section_min<F>(f: F, lo: f64, hi: f64, width_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo < hi) || !(width_tol > 0.0) {
        return domain(format!("invalid golden-section bracket [{lo}, {hi}]"));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > width_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    // the endpoints themselves are never probed by the interior search
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    let mut best = (x, fx);
    if f_hi < best.1 {
        best = (hi, f_hi);
    }
    if f_lo < best.1 {
        best = (lo, f_lo);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt2() {
        let r = bracketed_newton(
            |x| Ok((x * x - 2.0, Some(2.0 * x))),
            0.0,
            5.0,
            &RootOptions {
                residual_tol: 1e-14,
                max_iter: 200,
            },
        )
        .unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisection_only_without_derivative() {
        let r = bracketed_newton(
            |x| Ok((x.cos() - x, None)),
            0.0,
            1.0,
            &RootOptions::default(),
        )
        .unwrap();
        assert!((r.cos() - r).abs() <= 1e-9);
    }

    #[test]
    fn decreasing_function() {
        let r = bracketed_newton(
            |x| Ok((1.0 - x, Some(-1.0))),
            -3.0,
            10.0,
            &RootOptions::default(),
        )
        .unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_sign_change() {
        let r = bracketed_newton(
            |x| Ok((x * x + 1.0, Some(2.0 * x))),
            -1.0,
            1.0,
            &RootOptions::default(),
        );
        assert!(matches!(r, Err(Error::NoRoot(_))));
    }

    #[test]
    fn newton_escaping_bracket_falls_back() {
        // atan has Newton iterates that overshoot wildly from |x| > 1.39
        let r = bracketed_newton(
            |x| Ok((x.atan(), Some(1.0 / (1.0 + x * x)))),
            -2.0,
            30.0,
            &RootOptions::default(),
        )
        .unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn expand_finds_sign() {
        let hi = expand_upper(|x| Ok(x - 37.0), 1.0, 1.0, 30).unwrap();
        assert_eq!(hi, 64.0);
        assert!(expand_upper(|_| Ok(-1.0), 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(|x| Ok((x - 0.3).powi(2)), 0.0, 2.0, 1e-9).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn golden_section_boundary_minimum() {
        let (x, _) = golden_section_min(|x| Ok(-x), 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(x, 1.0);
    }
}
