//! Simulation oracles for the analytic risk formulas.
//!
//! All estimators split their draws into fixed chunks, each with its own
//! random stream, so an estimate depends on `(seed, samples)` only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mechanism::{laplace_from_uniform, laplace_sample};
use crate::rng::{open_unit, par_chunks};
use crate::sensitivity::{sensitivity_samples, DataSource, QuerySpec};

/// Minimum number of accepted draws for a conditional estimate.
pub const MIN_KEPT: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Thread count; does not affect results.
    pub workers: usize,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return domain("need at least one Monte Carlo sample");
        }
        Ok(())
    }
}

/// A proportion estimated by simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Draws the proportion is taken over.
    pub kept: u64,
}

impl McEstimate {
    fn from_counts(hits: u64, kept: u64) -> Self {
        let p = hits as f64 / kept as f64;
        Self {
            estimate: p,
            stderr: (p * (1.0 - p) / kept as f64).sqrt(),
            kept,
        }
    }
}

/// Analytic value against a simulation estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub analytic: f64,
    pub mc_estimate: f64,
    pub stderr: f64,
    pub gap: f64,
    pub pass: bool,
}

impl ValidationReport {
    /// Passes when the gap is at most `max(sigmas * stderr, floor)`.
    pub fn new(
        name: impl Into<String>,
        analytic: f64,
        mc: &McEstimate,
        sigmas: f64,
        floor: f64,
    ) -> Self {
        let gap = (analytic - mc.estimate).abs();
        Self {
            name: name.into(),
            analytic,
            mc_estimate: mc.estimate,
            stderr: mc.stderr,
            gap,
            pass: gap <= (sigmas * mc.stderr).max(floor),
        }
    }
}

/// `Gamma(k, 1)` as a sum of `k` unit exponentials.
pub fn gamma_sampler<R: Rng + ?Sized>(k: u32, rng: &mut R) -> f64 {
    (0..k).map(|_| -open_unit(rng).ln()).sum()
}

fn check_levels(eps: f64, bound: f64) -> Result<()> {
    if !(eps > 0.0) || !(bound > 0.0) {
        return domain(format!(
            "privacy levels must be positive, got {eps} and {bound}"
        ));
    }
    Ok(())
}

/// Fraction of `|G1 - G2| <= eps` among draws with `|G1 - G2| <= bound`,
/// for independent `G1, G2 ~ Gamma(k, 1)`.
fn truncated_fraction(eps: f64, bound: f64, k: u32, cfg: &McConfig) -> Result<McEstimate> {
    cfg.check()?;
    if k == 0 {
        return domain("query dimension k must be at least 1");
    }
    check_levels(eps, bound)?;
    let counts = par_chunks(cfg.samples, cfg.seed, cfg.workers, |_, len, rng| {
        let (mut kept, mut hits) = (0u64, 0u64);
        for _ in 0..len {
            let t = (gamma_sampler(k, rng) - gamma_sampler(k, rng)).abs();
            if t <= bound {
                kept += 1;
                if t <= eps {
                    hits += 1;
                }
            }
        }
        (kept, hits)
    });
    let (kept, hits) = counts
        .into_iter()
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if kept < MIN_KEPT {
        return Err(Error::InsufficientAcceptance {
            kept,
            required: MIN_KEPT,
        });
    }
    Ok(McEstimate::from_counts(hits, kept))
}

/// Simulation estimate of the explicit-case confidence.
pub fn mc_gamma1(eps: f64, eps0: f64, k: u32, cfg: &McConfig) -> Result<McEstimate> {
    if eps > eps0 {
        return domain(format!("eps ({eps}) must not exceed eps0 ({eps0})"));
    }
    truncated_fraction(eps, eps0, k, cfg)
}

/// Simulation estimate of the coupled-case confidence, truncating at
/// `eta * eps0` and scaling by `gamma2`.
pub fn mc_gamma3(
    eps: f64,
    eps0: f64,
    k: u32,
    eta: f64,
    gamma2: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if !(eta > 0.0) {
        return domain(format!("eta must be positive, got {eta}"));
    }
    if !(0.0..=1.0).contains(&gamma2) {
        return domain(format!("gamma2 must lie in [0, 1], got {gamma2}"));
    }
    let est = truncated_fraction(eps, eta * eps0, k, cfg)?;
    Ok(McEstimate {
        estimate: est.estimate * gamma2,
        stderr: est.stderr * gamma2,
        kept: est.kept,
    })
}

/// A deterministic map applied to mechanism outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PostProcess {
    Identity,
    /// Keep a single coordinate.
    Project(usize),
    /// Clamp every coordinate to `[lo, hi]`.
    Clamp {
        lo: f64,
        hi: f64,
    },
}

/// `ln P(X <= x)` for `X ~ Lap(centre, b)`.
fn laplace_log_cdf(centre: f64, b: f64, x: f64) -> f64 {
    let d = (x - centre) / b;
    if d < 0.0 {
        0.5f64.ln() + d
    } else {
        (-0.5 * (-d).exp()).ln_1p()
    }
}

/// `ln P(X >= x)` for `X ~ Lap(centre, b)`.
fn laplace_log_sf(centre: f64, b: f64, x: f64) -> f64 {
    laplace_log_cdf(-centre, b, -x)
}

/// Privacy loss `ln(P_x(w) / P_y(w))` of one released coordinate, where the
/// likelihoods are of the preimage of `w` under `phi`.
fn coordinate_loss(x: f64, y: f64, b: f64, z: f64, phi: PostProcess) -> f64 {
    if let PostProcess::Clamp { lo, hi } = phi {
        if z <= lo {
            return laplace_log_cdf(x, b, lo) - laplace_log_cdf(y, b, lo);
        }
        if z >= hi {
            return laplace_log_sf(x, b, hi) - laplace_log_sf(y, b, hi);
        }
    }
    ((y - z).abs() - (x - z).abs()) / b
}

/// Estimate of `P(|L| <= eps)` for the privacy loss `L` of the Laplace
/// mechanism calibrated at `eps0` with sensitivity `|fx - fy|_1`, released
/// through `phi` and sampled on input `fx`.
pub fn mc_post_processed_loss(
    eps: f64,
    eps0: f64,
    fx: &[f64],
    fy: &[f64],
    phi: PostProcess,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.check()?;
    check_levels(eps, eps0)?;
    if fx.len() != fy.len() || fx.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: fx.len(),
            got: fy.len(),
        });
    }
    match phi {
        PostProcess::Project(i) if i >= fx.len() => {
            return domain(format!("projection index {i} out of range"));
        }
        PostProcess::Clamp { lo, hi } if !(lo < hi) => {
            return domain(format!("clamp window [{lo}, {hi}] is empty"));
        }
        _ => {}
    }
    let delta: f64 = fx.iter().zip(fy).map(|(a, b)| (a - b).abs()).sum();
    if delta == 0.0 {
        return Err(Error::Degenerate("fx and fy coincide".into()));
    }
    let b = delta / eps0;
    // the loss sits exactly at +-eps0 on much of the support; absorb rounding
    let limit = eps + 8.0 * f64::EPSILON * eps0;
    let counts = par_chunks(cfg.samples, cfg.seed, cfg.workers, |_, len, rng| {
        let mut hits = 0u64;
        for _ in 0..len {
            let loss: f64 = match phi {
                PostProcess::Project(i) => {
                    // other coordinates are discarded but still consume draws
                    let mut l = 0.0;
                    for (j, (x, y)) in fx.iter().zip(fy).enumerate() {
                        let z = x + laplace_sample(b, rng);
                        if j == i {
                            l = coordinate_loss(*x, *y, b, z, phi);
                        }
                    }
                    l
                }
                _ => fx
                    .iter()
                    .zip(fy)
                    .map(|(x, y)| coordinate_loss(*x, *y, b, x + laplace_sample(b, rng), phi))
                    .sum(),
            };
            if loss.abs() <= limit {
                hits += 1;
            }
        }
        hits
    });
    Ok(McEstimate::from_counts(
        counts.into_iter().sum(),
        cfg.samples,
    ))
}

/// Estimate of `P(|L| <= eps)` for the mechanism-level privacy loss.
pub fn mc_mechanism_loss(
    eps: f64,
    eps0: f64,
    fx: &[f64],
    fy: &[f64],
    cfg: &McConfig,
) -> Result<McEstimate> {
    mc_post_processed_loss(eps, eps0, fx, fy, PostProcess::Identity, cfg)
}

/// Frequency with which fresh neighbour pairs have sensitivity at most
/// `delta_s`.
pub fn mc_case2_validation(
    src: &DataSource,
    q: &QuerySpec,
    p: usize,
    delta_s: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.check()?;
    if !(delta_s >= 0.0) {
        return domain(format!(
            "sampled sensitivity must be non-negative, got {delta_s}"
        ));
    }
    let s = sensitivity_samples(src, q, p, cfg.samples as usize, cfg.seed)?;
    let hits = s.iter().filter(|v| **v <= delta_s).count() as u64;
    Ok(McEstimate::from_counts(hits, cfg.samples))
}

fn overlap_args(eps1: f64, eps2: f64, sensitivity: f64) -> Result<(f64, f64)> {
    if !(eps1 > 0.0 && eps2 > 0.0 && sensitivity > 0.0) {
        return domain("overlap needs positive privacy levels and sensitivity");
    }
    Ok((sensitivity / eps1, sensitivity / eps2))
}

/// `integral of min(p1, p2)` for zero-centred Laplace densities with scales
/// `sensitivity / eps_i`, by importance sampling from the first density.
pub fn mc_overlap(eps1: f64, eps2: f64, sensitivity: f64, cfg: &McConfig) -> Result<McEstimate> {
    cfg.check()?;
    let (b1, b2) = overlap_args(eps1, eps2, sensitivity)?;
    let sums = par_chunks(cfg.samples, cfg.seed, cfg.workers, |_, len, rng| {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            let x = laplace_from_uniform(b1, open_unit(rng)).abs();
            // p2 / p1 at |x|
            let w = ((b1 / b2) * (x / b1 - x / b2).exp()).min(1.0);
            s += w;
            s2 += w * w;
        }
        (s, s2)
    });
    let (s, s2) = sums
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = cfg.samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / n).sqrt(),
        kept: cfg.samples,
    })
}

/// `integral of min(p1, p2)` by the midpoint rule on `points` cells of
/// `[0, L]`, doubled by symmetry, with `L` far in the heavier tail.
pub fn overlap_numeric(eps1: f64, eps2: f64, sensitivity: f64, points: usize) -> Result<f64> {
    let (b1, b2) = overlap_args(eps1, eps2, sensitivity)?;
    if points == 0 {
        return domain("need at least one grid point");
    }
    let end = 40.0 * b1.max(b2);
    let h = end / points as f64;
    let pdf = |b: f64, x: f64| (-x / b).exp() / (2.0 * b);
    let s: f64 = (0..points)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            pdf(b1, x).min(pdf(b2, x))
        })
        .sum();
    Ok(2.0 * s * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn gamma_sampler_moments() {
        let mut rng = stream_rng(1, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| gamma_sampler(4, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 4.0).abs() < 5.0 * (4.0 / n as f64).sqrt());
        assert!((var - 4.0).abs() < 0.1);
        let a = gamma_sampler(3, &mut stream_rng(2, 5));
        let b = gamma_sampler(3, &mut stream_rng(2, 5));
        assert_eq!(a, b);
    }

    #[test]
    fn gamma1_saturates_and_rejects() {
        let cfg = McConfig {
            samples: 20_000,
            seed: 3,
            workers: 2,
        };
        assert_eq!(mc_gamma1(0.3, 0.3, 2, &cfg).unwrap().estimate, 1.0);
        assert!(mc_gamma1(0.4, 0.3, 2, &cfg).is_err());
        let tiny = McConfig {
            samples: 500,
            ..cfg
        };
        assert!(matches!(
            mc_gamma1(0.1, 0.2, 1, &tiny),
            Err(Error::InsufficientAcceptance { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_matter() {
        let a = McConfig {
            samples: 150_000,
            seed: 11,
            workers: 1,
        };
        let b = McConfig { workers: 5, ..a };
        assert_eq!(
            mc_gamma1(0.2, 0.5, 3, &a).unwrap(),
            mc_gamma1(0.2, 0.5, 3, &b).unwrap()
        );
        assert_eq!(
            mc_overlap(1.0, 0.6, 1.0, &a).unwrap(),
            mc_overlap(1.0, 0.6, 1.0, &b).unwrap()
        );
    }

    #[test]
    fn mechanism_loss_is_bounded_by_eps0() {
        let cfg = McConfig {
            samples: 10_000,
            seed: 4,
            workers: 2,
        };
        let fx = [0.2, -1.0, 3.0];
        let fy = [0.7, -0.5, 2.0];
        assert_eq!(
            mc_mechanism_loss(0.8, 0.8, &fx, &fy, &cfg)
                .unwrap()
                .estimate,
            1.0
        );
        let a = mc_mechanism_loss(0.3, 0.8, &fx, &fy, &cfg).unwrap();
        let sx: Vec<f64> = fx.iter().map(|v| v * 7.0).collect();
        let sy: Vec<f64> = fy.iter().map(|v| v * 7.0).collect();
        let b = mc_mechanism_loss(0.3, 0.8, &sx, &sy, &cfg).unwrap();
        assert!((a.estimate - b.estimate).abs() < 1e-12);
        assert!(mc_mechanism_loss(0.3, 0.8, &fx, &fx, &cfg).is_err());
    }

    #[test]
    fn log_tails() {
        for (c, b, x) in [(0.0f64, 1.0f64, -2.0f64), (1.0, 0.5, 1.3), (-2.0, 3.0, 4.0)] {
            let cdf: f64 = if x < c {
                0.5 * ((x - c) / b).exp()
            } else {
                1.0 - 0.5 * (-(x - c) / b).exp()
            };
            assert!((laplace_log_cdf(c, b, x) - cdf.ln()).abs() < 1e-12);
            assert!((laplace_log_sf(c, b, x) - (1.0 - cdf).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_oracles() {
        let exact = crate::mechanism::overlap(1.0, 0.6, 1.0).unwrap();
        let grid = overlap_numeric(1.0, 0.6, 1.0, 1_000_000).unwrap();
        assert!((grid - exact).abs() < 1e-6);
        let mc = mc_overlap(
            1.0,
            0.6,
            1.0,
            &McConfig {
                samples: 200_000,
                seed: 8,
                workers: 4,
            },
        )
        .unwrap();
        assert!((mc.estimate - exact).abs() < 5.0 * mc.stderr);
    }

    #[test]
    fn report_pass_rule() {
        let est = McEstimate {
            estimate: 0.5,
            stderr: 0.001,
            kept: 10,
        };
        assert!(ValidationReport::new("a", 0.503, &est, 4.0, 0.005).pass);
        assert!(!ValidationReport::new("a", 0.51, &est, 4.0, 0.005).pass);
    }
}
