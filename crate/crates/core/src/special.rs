//! Special functions and adaptive quadrature used by the loss distribution.
//!
//! Only half-integer orders of the modified Bessel function of the second
//! kind are needed (the query dimension is an integer), so `K_{m+1/2}` is
//! evaluated from its terminating series
//!
//! ```text
//! K_{m+1/2}(t) = sqrt(pi / 2t) e^{-t} sum_{i=0}^{m} (m+i)! / (i! (m-i)!) (2t)^{-i}
//! ```

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma requires a finite x > 0, got {x}"));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Coefficients `(m+i)! / (i! (m-i)!)` of the half-integer Bessel series.
fn half_order_coefficients(m: u32) -> Vec<f64> {
    let m = m as usize;
    let mut coef = Vec::with_capacity(m + 1);
    let mut c = 1.0_f64;
    coef.push(c);
    for i in 0..m {
        c *= ((m + i + 1) * (m - i)) as f64 / (i + 1) as f64;
        coef.push(c);
    }
    coef
}

/// `K_{m+1/2}(t)` for `t > 0`.
///
/// The series contains `(2t)^{-m}`, so for small `t` and large `m` the result
/// leaves the `f64` range; this happens roughly once
/// `t < 0.5 * exp(-709 / m)` and is reported as [`Error::Overflow`].
pub fn bessel_k_half(m: u32, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("bessel_k_half requires a finite t > 0, got {t}"));
    }
    let u = 0.5 / t;
    let coef = half_order_coefficients(m);
    let mut series = 0.0;
    for c in coef.iter().rev() {
        series = series * u + c;
    }
    let value = (PI * u).sqrt() * (-t).exp() * series;
    if !value.is_finite() {
        return Err(Error::Overflow(format!(
            "K_{{{m}+1/2}}({t}) exceeds the f64 range"
        )));
    }
    Ok(value)
}

/// `t^{m+1/2} K_{m+1/2}(t)` for `t >= 0`, including the finite limit at 0.
///
/// This is the combination the loss density actually needs; multiplying the
/// power through the series keeps it well conditioned near the origin.
pub fn bessel_k_half_scaled(m: u32, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!(
            "bessel_k_half_scaled requires a finite t >= 0, got {t}"
        ));
    }
    // sum_i c_i 2^{-i} t^{m-i}, Horner in t starting from the i = 0 term
    let coef = half_order_coefficients(m);
    let mut poly = 0.0;
    let mut scale = 1.0;
    let mut scaled: Vec<f64> = Vec::with_capacity(coef.len());
    for c in &coef {
        scaled.push(c * scale);
        scale *= 0.5;
    }
    for c in &scaled {
        poly = poly * t + c;
    }
    let value = (0.5 * PI).sqrt() * (-t).exp() * poly;
    if !value.is_finite() {
        return Err(Error::Overflow(format!(
            "scaled K_{{{m}+1/2}}({t}) exceeds the f64 range"
        )));
    }
    Ok(value)
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Target bound on the absolute error of the whole integral.
    pub abs_tol: f64,
    /// Maximum number of bisections applied to any one sub-interval.
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_depth: 60,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, max_depth: u32) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return domain(format!(
                "absolute tolerance must be positive, got {abs_tol}"
            ));
        }
        if max_depth == 0 {
            return domain("max subdivisions must be at least 1");
        }
        Ok(Self { abs_tol, max_depth })
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 15 point panel. The endpoints are never evaluated, so an
/// integrable singularity at `a` is tolerated.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        finite &= f1.is_finite() && f2.is_finite();
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !finite {
        return Err(Error::Numeric(format!(
            "integrand is not finite on ({a}, {b})"
        )));
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    Ok((value, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

/// Hard cap on live panels; the depth limit alone does not bound the work.
const MAX_PANELS: usize = 20_000;

/// Integrates `f` over `[a, b]` by globally adaptive Gauss-Kronrod bisection.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate drops below `cfg.abs_tol`. A panel that would exceed
/// `cfg.max_depth` bisections ends the search with [`Error::NonConvergence`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return domain(format!(
            "integration bounds must satisfy a <= b, got [{a}, {b}]"
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = gk15(&f, a, b)?;
    let mut panels = vec![Panel {
        a,
        b,
        value,
        err,
        depth: 0,
    }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= cfg.abs_tol {
            return Ok(panels.iter().map(|p| p.value).sum());
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        if p.depth >= cfg.max_depth || panels.len() + 2 > MAX_PANELS {
            return Err(Error::NonConvergence {
                a,
                b,
                estimate: total_err,
                tolerance: cfg.abs_tol,
            });
        }
        let mid = 0.5 * (p.a + p.b);
        let (lv, le) = gk15(&f, p.a, mid)?;
        let (rv, re) = gk15(&f, mid, p.b)?;
        panels.push(Panel {
            a: p.a,
            b: mid,
            value: lv,
            err: le,
            depth: p.depth + 1,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: rv,
            err: re,
            depth: p.depth + 1,
        });
    }
}

/// Finds where a decaying integrand drops below `abs_tol / 100`, doubling the
/// distance from `a` each step. Assumes the integrand decays monotonically
/// once it first falls below the threshold, as `e^{-t}`-dominated densities do.
pub fn truncation_point<F: Fn(f64) -> f64>(f: &F, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let threshold = cfg.abs_tol / 100.0;
    let mut width = 1.0;
    for _ in 0..64 {
        let b = a + width;
        if f(b).abs() < threshold {
            return Ok(b);
        }
        width *= 2.0;
    }
    Err(Error::Numeric(format!(
        "integrand does not decay below {threshold:e} beyond {a}"
    )))
}

/// Integrates a decaying integrand over `[a, inf)` by truncating at
/// [`truncation_point`].
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let b = truncation_point(&f, a, cfg)?;
    integrate(f, a, b, cfg)
}
