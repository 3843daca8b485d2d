//! The privacy-loss distribution of the Laplace mechanism.
//!
//! If `G1, G2` are i.i.d. `Gamma(k, theta)`, then `T = |G1 - G2| / theta` has
//! the dimensionless density
//!
//! ```text
//! p_T(t) = 2^{2-k} t^{k-1/2} K_{k-1/2}(t) / (sqrt(2 pi) Gamma(k)),   t > 0
//! ```
//!
//! which collapses to `e^{-t}` for `k = 1`. The scale `theta = sensitivity /
//! eps0` never appears here: callers express privacy levels directly in units
//! of `t`.

use crate::error::{domain, Error, Result};
use crate::roots::{bracketed_newton, RootOptions};
use crate::special::{
    bessel_k_half_scaled, integrate, log_gamma, truncation_point, QuadratureConfig,
};

/// Width of the panels whose integrals are tabulated at construction.
const PANEL_WIDTH: f64 = 0.5;

/// Distribution of the scaled absolute difference of two i.i.d. `Gamma(k)`
/// variables, for query output dimension `k`.
#[derive(Debug, Clone)]
pub struct LossDistribution {
    k: u32,
    prefactor: f64,
    cfg: QuadratureConfig,
    /// `cumulative[j]` is the integral of the density over `[0, j * PANEL_WIDTH]`.
    cumulative: Vec<f64>,
    tail_end: f64,
}

impl LossDistribution {
    pub fn new(k: u32) -> Result<Self> {
        Self::with_config(k, QuadratureConfig::default())
    }

    pub fn with_config(k: u32, cfg: QuadratureConfig) -> Result<Self> {
        if k == 0 {
            return domain("query dimension k must be at least 1");
        }
        let kf = k as f64;
        let log_pref = (2.0 - kf) * std::f64::consts::LN_2
            - 0.5 * (2.0 * std::f64::consts::PI).ln()
            - log_gamma(kf)?;
        let mut dist = Self {
            k,
            prefactor: log_pref.exp(),
            cfg,
            cumulative: vec![0.0],
            tail_end: 0.0,
        };
        let density = |t: f64| dist.density(t);
        let tail = truncation_point(&density, 0.0, &cfg)?;
        let panels = (tail / PANEL_WIDTH).ceil() as usize;
        let panel_cfg = QuadratureConfig {
            abs_tol: cfg.abs_tol / panels as f64,
            ..cfg
        };
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for j in 0..panels {
            let a = j as f64 * PANEL_WIDTH;
            acc += integrate(density, a, a + PANEL_WIDTH, &panel_cfg)?;
            cumulative.push(acc);
        }
        dist.tail_end = panels as f64 * PANEL_WIDTH;
        dist.cumulative = cumulative;
        Ok(dist)
    }

    pub fn dimension(&self) -> u32 {
        self.k
    }

    /// Point beyond which the density is negligible and the CDF is taken as
    /// its tabulated total.
    pub fn tail_end(&self) -> f64 {
        self.tail_end
    }

    fn density(&self, t: f64) -> f64 {
        match bessel_k_half_scaled(self.k - 1, t) {
            Ok(v) => self.prefactor * v,
            Err(_) => f64::NAN,
        }
    }

    /// Density at `t > 0`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return domain(format!("loss density requires t > 0, got {t}"));
        }
        Ok(self.prefactor * bessel_k_half_scaled(self.k - 1, t)?)
    }

    /// `P(T <= t)` for `t >= 0`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("loss CDF requires t >= 0, got {t}"));
        }
        if t >= self.tail_end {
            return Ok(self.total_mass().min(1.0));
        }
        let j = (t / PANEL_WIDTH).floor() as usize;
        let a = j as f64 * PANEL_WIDTH;
        let partial = integrate(|x| self.density(x), a, t, &self.cfg)?;
        Ok((self.cumulative[j] + partial).clamp(0.0, 1.0))
    }

    /// Total tabulated mass, i.e. the numerical normalisation of the density.
    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().expect("non-empty table")
    }

    /// `P(T <= min(eps, bound)) / P(T <= bound)`: the CDF of `T` conditioned
    /// on `T <= bound`.
    pub fn truncated_ratio(&self, eps: f64, bound: f64) -> Result<f64> {
        if !(bound > 0.0) {
            return domain(format!("truncation bound must be positive, got {bound}"));
        }
        if !(eps >= 0.0) {
            return domain(format!("privacy level must be non-negative, got {eps}"));
        }
        if eps >= bound {
            return Ok(1.0);
        }
        let num = self.cdf(eps)?;
        let den = self.cdf(bound)?;
        Ok((num / den).clamp(0.0, 1.0))
    }

    /// Smallest `t` with `P(T <= t) = p`, for `p` in `[0, total mass)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("probability must lie in [0, 1], got {p}"));
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        if p >= self.total_mass() {
            return Err(Error::NoRoot(format!(
                "probability {p} is not reached below t = {}",
                self.tail_end
            )));
        }
        bracketed_newton(
            |x| Ok((self.cdf(x)? - p, Some(self.density(x)))),
            0.0,
            self.tail_end,
            &RootOptions {
                residual_tol: 1e-12,
                max_iter: 200,
            },
        )
    }
}
