//! Compensation budgets for a privacy level and their minimisation.
//!
//! Per-person compensation at privacy level `eps` is modelled as
//! `E_min + E exp(-c / eps)`. When the mechanism is calibrated at `eps0` but
//! meets `eps` with confidence `gamma`, the expected compensation mixes the
//! two levels by `gamma`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::loss::LossDistribution;
use crate::risk::gamma1_with;
use crate::roots::{bracketed_newton, golden_section_min, RootOptions};

/// Bracket width at which [`epsilon_min`] stops.
pub const EPS_MIN_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModelParams {
    /// Compensation per person without any privacy guarantee.
    pub e: f64,
    /// Floor of the compensation per person.
    pub e_min: f64,
    /// Rate at which compensation grows with the privacy level.
    pub c: f64,
    pub population: u64,
}

impl CostModelParams {
    pub fn new(e: f64, e_min: f64, c: f64, population: u64) -> Result<Self> {
        if !(e_min >= 0.0) || !(e > e_min) || !e.is_finite() {
            return domain(format!("need E > E_min >= 0, got E = {e}, E_min = {e_min}"));
        }
        if !(c > 0.0) || !c.is_finite() {
            return domain(format!("rate c must be positive, got {c}"));
        }
        if population == 0 {
            return domain("population must be at least 1");
        }
        Ok(Self {
            e,
            e_min,
            c,
            population,
        })
    }
}

/// Per-person compensation at privacy level `eps`.
pub fn dp_cost(eps: f64, p: &CostModelParams) -> Result<f64> {
    if !(eps > 0.0) {
        return domain(format!("privacy level must be positive, got {eps}"));
    }
    Ok(p.e_min + p.e * (-p.c / eps).exp())
}

/// `gamma dp(eps) + (1 - gamma) dp(eps0)` for a given confidence.
pub fn mixture_cost(eps: f64, eps0: f64, gamma: f64, p: &CostModelParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("gamma must lie in [0, 1], got {gamma}"));
    }
    Ok(gamma * dp_cost(eps, p)? + (1.0 - gamma) * dp_cost(eps0, p)?)
}

/// Expected per-person compensation with confidence supplied by `gamma_fn`.
pub fn par_cost_with<G>(eps: f64, eps0: f64, p: &CostModelParams, gamma_fn: G) -> Result<f64>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    if !(eps > 0.0 && eps <= eps0) {
        return domain(format!(
            "need 0 < eps <= eps0, got eps = {eps}, eps0 = {eps0}"
        ));
    }
    mixture_cost(eps, eps0, gamma_fn(eps, eps0)?, p)
}

/// Expected per-person compensation with the explicit-case confidence of a
/// `k`-dimensional Laplace mechanism.
pub fn par_cost(eps: f64, eps0: f64, p: &CostModelParams, k: u32) -> Result<f64> {
    let dist = LossDistribution::new(k)?;
    par_cost_with(eps, eps0, p, |e, e0| gamma1_with(&dist, e, e0))
}

/// Total budget `N * par_cost`.
pub fn budget(eps: f64, eps0: f64, p: &CostModelParams, k: u32) -> Result<f64> {
    Ok(p.population as f64 * par_cost(eps, eps0, p, k)?)
}

/// Total budget without privacy at risk, `N * dp_cost(eps0)`.
pub fn dp_budget(eps0: f64, p: &CostModelParams) -> Result<f64> {
    Ok(p.population as f64 * dp_cost(eps0, p)?)
}

/// Cost-optimal calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub eps_min: f64,
    pub gamma: f64,
    /// Per-person compensation at the optimum.
    pub cost: f64,
}

/// Minimiser of [`par_cost`] over `(0, eps0]`.
pub fn epsilon_min(eps0: f64, p: &CostModelParams, k: u32) -> Result<Optimum> {
    let dist = LossDistribution::new(k)?;
    epsilon_min_with(eps0, p, |e, e0| gamma1_with(&dist, e, e0))
}

pub fn epsilon_min_with<G>(eps0: f64, p: &CostModelParams, gamma_fn: G) -> Result<Optimum>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return domain(format!("eps0 must be positive, got {eps0}"));
    }
    let lo = eps0 * 1e-9;
    let (eps_min, cost) = golden_section_min(
        |e| par_cost_with(e, eps0, p, &gamma_fn),
        lo,
        eps0,
        EPS_MIN_WIDTH,
    )?;
    Ok(Optimum {
        eps_min,
        gamma: gamma_fn(eps_min, eps0)?,
        cost,
    })
}

/// Stationary point of the one-dimensional model with `c = 1`, `E_min = 0`:
/// the root of `1/eps - ln(1 + (e^eps - 1)/eps^2) = 1/eps0`.
pub fn epsilon_min_stationary_k1(eps0: f64) -> Result<f64> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return domain(format!("eps0 must be positive, got {eps0}"));
    }
    let h = |e: f64| {
        let em1 = e.exp_m1();
        let g = 1.0 + em1 / (e * e);
        let dg = (e * e.exp() - 2.0 * em1) / (e * e * e);
        Ok((1.0 / e - g.ln() - 1.0 / eps0, Some(-1.0 / (e * e) - dg / g)))
    };
    bracketed_newton(
        h,
        eps0 * 1e-6,
        eps0,
        &RootOptions {
            residual_tol: 1e-12,
            max_iter: 200,
        },
    )
}

/// Feasible privacy levels for a utility and budget constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBounds {
    pub lower: f64,
    /// `None` when the budget never binds.
    pub upper: Option<f64>,
}

/// Interval of privacy levels whose expected absolute error is at most
/// `max_mae` (unit sensitivity) and whose expected total compensation at
/// confidence `gamma` is at most `total_budget`.
///
/// An empty interval is reported as [`Error::Infeasible`], including the
/// case where the budget cannot even cover the `eps0` share.
pub fn epsilon_bounds(
    max_mae: f64,
    total_budget: f64,
    gamma: f64,
    eps0: f64,
    p: &CostModelParams,
) -> Result<EpsilonBounds> {
    if !(max_mae > 0.0) {
        return domain(format!("maximum MAE must be positive, got {max_mae}"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("gamma must lie in (0, 1], got {gamma}"));
    }
    if !(total_budget > 0.0) {
        return domain(format!("budget must be positive, got {total_budget}"));
    }
    let lower = 1.0 / max_mae;
    let per_person = total_budget / p.population as f64;
    let slack = per_person - gamma * p.e_min - (1.0 - gamma) * dp_cost(eps0, p)?;
    if slack <= 0.0 {
        return Err(Error::Infeasible { lower, upper: 0.0 });
    }
    let arg = gamma * p.e / slack;
    if arg <= 1.0 {
        return Ok(EpsilonBounds { lower, upper: None });
    }
    let upper = p.c / arg.ln();
    if lower > upper {
        return Err(Error::Infeasible { lower, upper });
    }
    Ok(EpsilonBounds {
        lower,
        upper: Some(upper),
    })
}

/// `(eps, budget)` on `points` evenly spaced levels in `(0, eps0]`.
pub fn budget_curve(
    eps0: f64,
    p: &CostModelParams,
    k: u32,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if points == 0 {
        return domain("need at least one curve point");
    }
    let dist = LossDistribution::new(k)?;
    (1..=points)
        .map(|i| {
            let eps = eps0 * i as f64 / points as f64;
            let cost = par_cost_with(eps, eps0, p, |e, e0| gamma1_with(&dist, e, e0))?;
            Ok((eps, p.population as f64 * cost))
        })
        .collect()
}

pub fn write_budget_curve_csv<W: Write>(curve: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "budget"])?;
    for (e, b) in curve {
        w.write_record([e.to_string(), format!("{b:.2}")])?;
    }
    w.flush()?;
    Ok(())
}
