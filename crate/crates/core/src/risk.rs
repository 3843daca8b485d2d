//! Privacy at risk for the Laplace mechanism.
//!
//! Three sources of randomness give three confidence levels:
//!
//! * explicit (noise only, sensitivity known): `gamma1 = P(T <= eps) / P(T <= eps0)`;
//! * implicit (sensitivity estimated from samples): the DKW bound
//!   `gamma2_hat >= gamma2 (1 - 2 exp(-2 rho^2 n))`;
//! * coupled: `gamma3 = P(T <= eps) / P(T <= eta eps0) * gamma2`.
//!
//! Throughout, `gamma` is the confidence that the stronger level `eps` holds.
//! The complementary violation probability is [`RiskAssessment::violation_risk`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::loss::LossDistribution;
use crate::roots::{bracketed_newton, expand_upper, RootOptions};

/// Which source of randomness a confidence level accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Explicit,
    Implicit,
    Coupled,
}

/// A privacy level together with the confidence that it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    /// Privacy-at-risk level. Absent only for implicit-case bounds, which do
    /// not depend on the level.
    pub eps: Option<f64>,
    /// Privacy level the noise is calibrated with.
    pub eps0: Option<f64>,
    pub gamma: f64,
    pub case: Case,
    pub rho: Option<f64>,
    pub n: Option<u64>,
    pub eta: Option<f64>,
}

impl RiskAssessment {
    pub fn explicit(eps: f64, eps0: f64, gamma: f64) -> Result<Self> {
        Self {
            eps: Some(eps),
            eps0: Some(eps0),
            gamma,
            case: Case::Explicit,
            rho: None,
            n: None,
            eta: None,
        }
        .validated()
    }

    pub fn implicit(eps: Option<f64>, gamma: f64, rho: f64, n: u64) -> Result<Self> {
        Self {
            eps,
            eps0: None,
            gamma,
            case: Case::Implicit,
            rho: Some(rho),
            n: Some(n),
            eta: None,
        }
        .validated()
    }

    pub fn coupled(eps: f64, eps0: f64, gamma: f64, rho: f64, n: u64, eta: f64) -> Result<Self> {
        Self {
            eps: Some(eps),
            eps0: Some(eps0),
            gamma,
            case: Case::Coupled,
            rho: Some(rho),
            n: Some(n),
            eta: Some(eta),
        }
        .validated()
    }

    /// Checks the field invariants for the record's case.
    pub fn validated(self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return domain(format!("confidence must lie in [0, 1], got {}", self.gamma));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return domain(format!("privacy level must be positive, got {e}"));
            }
        } else if self.case != Case::Implicit {
            return domain("privacy level is required for this case");
        }
        let sampled = matches!(self.case, Case::Implicit | Case::Coupled);
        if sampled != self.rho.is_some() || sampled != self.n.is_some() {
            return domain("rho and n are present exactly for the implicit and coupled cases");
        }
        if (self.case == Case::Coupled) != self.eta.is_some() {
            return domain("eta is present exactly for the coupled case");
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho <= 1.0) {
                return domain(format!("rho must lie in (0, 1], got {rho}"));
            }
        }
        if self.n == Some(0) {
            return domain("sample count must be positive");
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return domain(format!("eta must be positive, got {eta}"));
            }
        }
        Ok(self)
    }

    /// Probability that the stated level is violated, `1 - gamma`.
    pub fn violation_risk(&self) -> f64 {
        1.0 - self.gamma
    }
}

fn check_eps0(eps0: f64) -> Result<()> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return domain(format!("eps0 must be positive, got {eps0}"));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return domain(format!("{name} must lie in [0, 1], got {v}"));
    }
    Ok(())
}

/// Confidence with which an `eps0`-calibrated Laplace mechanism on a
/// `k`-dimensional query also satisfies `eps`. Saturates at 1 for `eps >= eps0`.
pub fn gamma1(eps: f64, eps0: f64, k: u32) -> Result<f64> {
    gamma1_with(&LossDistribution::new(k)?, eps, eps0)
}

/// [`gamma1`] against a prebuilt distribution.
pub fn gamma1_with(dist: &LossDistribution, eps: f64, eps0: f64) -> Result<f64> {
    check_eps0(eps0)?;
    if !(eps >= 0.0) {
        return domain(format!("eps must be non-negative, got {eps}"));
    }
    dist.truncated_ratio(eps, eps0)
}

/// Closed form of [`gamma1`] for scalar queries:
/// `(1 - e^{-eps}) / (1 - e^{-eps0})`.
pub fn gamma1_closed_k1(eps: f64, eps0: f64) -> Result<f64> {
    check_eps0(eps0)?;
    if !(eps >= 0.0) {
        return domain(format!("eps must be non-negative, got {eps}"));
    }
    if eps >= eps0 {
        return Ok(1.0);
    }
    Ok((-eps).exp_m1() / (-eps0).exp_m1())
}

/// Closed-form inverse of [`gamma1_closed_k1`]:
/// `eps = ln(1 / (1 - gamma (1 - e^{-eps0})))`.
pub fn epsilon_for_gamma1_closed_k1(gamma: f64, eps0: f64) -> Result<f64> {
    check_eps0(eps0)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("confidence must lie in (0, 1], got {gamma}"));
    }
    Ok(-(gamma * (-eps0).exp_m1()).ln_1p())
}

/// Smallest privacy level held with confidence `gamma`, i.e. the inverse of
/// [`gamma1`] in `eps` on `(0, eps0]`.
pub fn epsilon_for_gamma1(gamma: f64, eps0: f64, k: u32) -> Result<f64> {
    epsilon_for_gamma1_with(&LossDistribution::new(k)?, gamma, eps0)
}

pub fn epsilon_for_gamma1_with(dist: &LossDistribution, gamma: f64, eps0: f64) -> Result<f64> {
    check_eps0(eps0)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("confidence must lie in (0, 1], got {gamma}"));
    }
    if gamma == 1.0 {
        return Ok(eps0);
    }
    let target = gamma * dist.cdf(eps0)?;
    bracketed_newton(
        |e| Ok((dist.cdf(e)? - target, dist.pdf(e).ok())),
        0.0,
        eps0,
        &RootOptions {
            residual_tol: 1e-12 * target.max(1e-300),
            max_iter: 200,
        },
    )
}

/// DKW probabilistic tolerance `1 - 2 exp(-2 rho^2 n)`. Negative values mean
/// the sample is too small for a non-vacuous bound.
pub fn probabilistic_tolerance(rho: f64, n: u64) -> f64 {
    1.0 - 2.0 * (-2.0 * rho * rho * n as f64).exp()
}

/// Smallest sample count whose probabilistic tolerance at accuracy `rho`
/// reaches `alpha`: `ceil(ln(2 / (1 - alpha)) / (2 rho^2))`.
pub fn sample_size_for(rho: f64, alpha: f64) -> Result<u64> {
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("rho must lie in (0, 1), got {rho}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let exact = (2.0 / (1.0 - alpha)).ln() / (2.0 * rho * rho);
    if !exact.is_finite() || exact >= u64::MAX as f64 {
        return Err(Error::Overflow(format!(
            "sample size for rho={rho}, alpha={alpha} is not representable"
        )));
    }
    let mut n = exact.ceil().max(1.0) as u64;
    // guard the ceiling against rounding in either direction
    while n > 1 && probabilistic_tolerance(rho, n - 1) >= alpha {
        n -= 1;
    }
    while probabilistic_tolerance(rho, n) < alpha {
        n += 1;
    }
    Ok(n)
}

fn dkw_bound(gamma: f64, rho: f64, n: u64) -> Result<f64> {
    check_unit("confidence", gamma)?;
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("rho must lie in (0, 1), got {rho}"));
    }
    if n == 0 {
        return domain("sample count must be positive");
    }
    Ok(gamma * probabilistic_tolerance(rho, n).max(0.0))
}

/// Lower bound on the empirical confidence when the sensitivity is the
/// `gamma2`-quantile of `n` sampled sensitivities at DKW accuracy `rho`.
pub fn empirical_risk_bound(gamma2: f64, rho: f64, n: u64) -> Result<f64> {
    dkw_bound(gamma2, rho, n)
}

/// Coupled-case confidence `P(T <= eps) / P(T <= eta eps0) * gamma2`.
pub fn gamma3(eps: f64, eps0: f64, k: u32, eta: f64, gamma2: f64) -> Result<f64> {
    gamma3_with(&LossDistribution::new(k)?, eps, eps0, eta, gamma2)
}

pub fn gamma3_with(
    dist: &LossDistribution,
    eps: f64,
    eps0: f64,
    eta: f64,
    gamma2: f64,
) -> Result<f64> {
    check_eps0(eps0)?;
    if !(eta > 0.0) {
        return domain(format!("eta must be positive, got {eta}"));
    }
    check_unit("gamma2", gamma2)?;
    if !(eps >= 0.0) {
        return domain(format!("eps must be non-negative, got {eps}"));
    }
    Ok((dist.truncated_ratio(eps, eta * eps0)? * gamma2).clamp(0.0, 1.0))
}

/// Lower bound on the empirical coupled-case confidence.
pub fn empirical_risk_bound3(gamma3: f64, rho: f64, n: u64) -> Result<f64> {
    dkw_bound(gamma3, rho, n)
}

/// Noise level `eps0` at which a Laplace mechanism with known sensitivity
/// meets `eps` with confidence `gamma_target`: the root of
/// `gamma_target P(T <= eps0) - P(T <= eps) = 0` with `eps0 >= eps`.
pub fn epsilon0_for_target_case1(eps: f64, gamma_target: f64, k: u32) -> Result<f64> {
    epsilon0_for_target_case1_with(&LossDistribution::new(k)?, eps, gamma_target)
}

pub fn epsilon0_for_target_case1_with(
    dist: &LossDistribution,
    eps: f64,
    gamma_target: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    if !(gamma_target > 0.0 && gamma_target <= 1.0) {
        return domain(format!(
            "target confidence must lie in (0, 1], got {gamma_target}"
        ));
    }
    if gamma_target == 1.0 {
        return Ok(eps);
    }
    let p_eps = dist.cdf(eps)?;
    // the ratio tends to P(T <= eps) as eps0 grows without bound
    if gamma_target * dist.total_mass() <= p_eps {
        return Err(Error::NoRoot(format!(
            "confidence {gamma_target} is below the limiting value {p_eps} for eps = {eps}"
        )));
    }
    let residual = |e0: f64| -> Result<f64> { Ok(gamma_target * dist.cdf(e0)? - p_eps) };
    let hi = expand_upper(residual, 2.0 * eps, 1.0, 64)?;
    bracketed_newton(
        |e0| Ok((residual(e0)?, dist.pdf(e0).ok().map(|d| gamma_target * d))),
        eps,
        hi,
        &RootOptions {
            residual_tol: 1e-9 * p_eps.min(1.0),
            ..RootOptions::default()
        },
    )
}

/// Coupled-case recalibration: the root `eps0` of
/// `gamma3_hat P(T <= eta eps0) - alpha gamma2 P(T <= eps) = 0`.
///
/// A root with `eta eps0 >= eps` exists only when
/// `gamma3_hat <= alpha gamma2`; otherwise [`Error::NoRoot`] is returned.
pub fn epsilon0_for_target_case3(
    eps: f64,
    gamma3_hat: f64,
    gamma2: f64,
    alpha: f64,
    eta: f64,
    k: u32,
) -> Result<f64> {
    epsilon0_for_target_case3_with(
        &LossDistribution::new(k)?,
        eps,
        gamma3_hat,
        gamma2,
        alpha,
        eta,
    )
}

pub fn epsilon0_for_target_case3_with(
    dist: &LossDistribution,
    eps: f64,
    gamma3_hat: f64,
    gamma2: f64,
    alpha: f64,
    eta: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    for (name, v) in [
        ("gamma3_hat", gamma3_hat),
        ("gamma2", gamma2),
        ("alpha", alpha),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return domain(format!("{name} must lie in (0, 1], got {v}"));
        }
    }
    if !(eta > 0.0) {
        return domain(format!("eta must be positive, got {eta}"));
    }
    let scale = alpha * gamma2;
    if gamma3_hat > scale {
        return Err(Error::NoRoot(format!(
            "target {gamma3_hat} exceeds alpha * gamma2 = {scale}"
        )));
    }
    let p_eps = dist.cdf(eps)?;
    let residual =
        |e0: f64| -> Result<f64> { Ok(gamma3_hat * dist.cdf(eta * e0)? - scale * p_eps) };
    if gamma3_hat * dist.total_mass() <= scale * p_eps {
        return Err(Error::NoRoot(format!(
            "target {gamma3_hat} is below the limiting value {} for eps = {eps}",
            scale * p_eps
        )));
    }
    let lo = eps / eta;
    let hi = expand_upper(residual, 2.0 * lo, 1.0, 64)?;
    bracketed_newton(
        |e0| {
            Ok((
                residual(e0)?,
                dist.pdf(eta * e0).ok().map(|d| gamma3_hat * eta * d),
            ))
        },
        lo,
        hi,
        &RootOptions {
            residual_tol: 1e-9 * p_eps.min(1.0),
            ..RootOptions::default()
        },
    )
}

/// `delta` of the probabilistic-DP guarantee implied by [`gamma1`]:
/// `1 - gamma1` for `eps <= eps0`, else 0.
pub fn pdp_delta(eps: f64, eps0: f64, k: u32) -> Result<f64> {
    check_eps0(eps0)?;
    if eps > eps0 {
        return Ok(0.0);
    }
    Ok(1.0 - gamma1(eps, eps0, k)?)
}

/// Privacy at risk of a mechanism that runs one of two calibrations of the
/// same `eps0`-DP mechanism, the first with probability `p`.
///
/// Returns `(eps', gamma')` where `eps'` is the confidence-weighted level
/// `(p g1 e1 + (1-p) g2 e2) / (p g1 + (1-p) g2)` and `gamma'` is the mixed
/// confidence `p g1 + (1-p) g2`, so that
/// `gamma' eps' + (1 - gamma') eps0` equals the mixture of the two loss bounds.
pub fn convex_mixture(first: (f64, f64), second: (f64, f64), p: f64) -> Result<(f64, f64)> {
    check_unit("mixing probability", p)?;
    let (e1, g1) = first;
    let (e2, g2) = second;
    check_unit("gamma", g1)?;
    check_unit("gamma", g2)?;
    let weight = p * g1 + (1.0 - p) * g2;
    if weight == 0.0 {
        return Err(Error::Degenerate(
            "both components have zero confidence".into(),
        ));
    }
    let eps = (p * g1 * e1 + (1.0 - p) * g2 * e2) / weight;
    Ok((eps, weight))
}
