//! The Laplace mechanism, its utility and the ridge-regression RMSE harness.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{open_unit, stream_rng};
use crate::sensitivity::{normalize, ridge_fit, ridge_predict, DataSource};

/// Adds i.i.d. `Lap(sensitivity / eps0)` noise to each of `k` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMechanism {
    sensitivity: f64,
    eps0: f64,
    k: usize,
}

impl LaplaceMechanism {
    pub fn new(sensitivity: f64, eps0: f64, k: usize) -> Result<Self> {
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return domain(format!("sensitivity must be positive, got {sensitivity}"));
        }
        if !(eps0 > 0.0) || !eps0.is_finite() {
            return domain(format!("eps0 must be positive, got {eps0}"));
        }
        if k == 0 {
            return domain("output dimension must be at least 1");
        }
        Ok(Self {
            sensitivity,
            eps0,
            k,
        })
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    /// Noise scale `b = sensitivity / eps0`.
    pub fn scale(&self) -> f64 {
        self.sensitivity / self.eps0
    }

    pub fn apply<R: Rng + ?Sized>(&self, output: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        if output.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: output.len(),
            });
        }
        let b = self.scale();
        Ok(output.iter().map(|v| v + laplace_sample(b, rng)).collect())
    }
}

/// Inverse CDF of `Lap(b)` at `u` in `(0, 1)`.
pub fn laplace_from_uniform(b: f64, u: f64) -> f64 {
    if u < 0.5 {
        b * (2.0 * u).ln()
    } else {
        -b * (2.0 * (1.0 - u)).ln()
    }
}

/// One draw from `Lap(b)`.
pub fn laplace_sample<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    laplace_from_uniform(b, open_unit(rng))
}

/// CDF of `Lap(b)`.
pub fn laplace_cdf(b: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Expected absolute error per coordinate, `sensitivity / eps`.
pub fn expected_mae(sensitivity: f64, eps: f64) -> Result<f64> {
    if !(sensitivity > 0.0) || !(eps > 0.0) {
        return domain(format!(
            "sensitivity and eps must be positive, got {sensitivity} and {eps}"
        ));
    }
    Ok(sensitivity / eps)
}

/// Overlapping mass of two zero-centred Laplace densities with scales
/// `sensitivity / eps1` and `sensitivity / eps2`.
pub fn overlap(eps1: f64, eps2: f64, sensitivity: f64) -> Result<f64> {
    if !(eps1 > 0.0 && eps2 > 0.0 && sensitivity > 0.0) {
        return domain("overlap needs positive privacy levels and sensitivity");
    }
    let (hi, lo) = if eps1 >= eps2 {
        (eps1, eps2)
    } else {
        (eps2, eps1)
    };
    if hi == lo {
        return Ok(1.0);
    }
    // |x| at which the two densities cross
    let mu = sensitivity * (hi / lo).ln() / (hi - lo);
    Ok(1.0 - ((-mu * lo / sensitivity).exp() - (-mu * hi / sensitivity).exp()))
}

/// Outcome of [`rmse_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub eps0: f64,
    pub mean_rmse: f64,
    pub noiseless_mean: f64,
    pub runs: Vec<f64>,
}

impl RmseReport {
    /// Rows `(eps0, run, rmse)`.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        if header {
            w.write_record(["eps0", "run", "rmse"])?;
        }
        for (i, r) in self.runs.iter().enumerate() {
            w.write_record([self.eps0.to_string(), i.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rmse(weights: &[f64], rows: &[&[f64]], target: usize) -> f64 {
    let sse: f64 = rows
        .iter()
        .map(|r| (ridge_predict(weights, r, target) - r[target]).powi(2))
        .sum();
    (sse / rows.len() as f64).sqrt()
}

/// Output perturbation of ridge regression.
///
/// Each run shuffles the source with its own stream, fits ridge on the first
/// `train_fraction` of records, perturbs the coefficients with `mech` and
/// measures RMSE on the rest. Run `r` uses stream `r` under `seed`, so two
/// calls that differ only in `mech` share splits and uniform draws.
pub fn rmse_experiment(
    src: &DataSource,
    target: usize,
    lambda: f64,
    mech: &LaplaceMechanism,
    runs: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<RmseReport> {
    if runs == 0 {
        return domain("need at least one run");
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return domain(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        ));
    }
    if target >= src.width() {
        return domain(format!("target column {target} out of range"));
    }
    if mech.dimension() != src.width() - 1 {
        return Err(Error::DimensionMismatch {
            expected: src.width() - 1,
            got: mech.dimension(),
        });
    }
    let n_train = ((src.len() as f64) * train_fraction).round() as usize;
    if n_train == 0 || n_train >= src.len() {
        return domain("train/test split leaves an empty side");
    }
    let per_run: Vec<(f64, f64)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut idx: Vec<usize> = (0..src.len()).collect();
            idx.shuffle(&mut rng);
            let train: Vec<&[f64]> = idx[..n_train].iter().map(|&i| src.record(i)).collect();
            let test: Vec<&[f64]> = idx[n_train..].iter().map(|&i| src.record(i)).collect();
            let w = ridge_fit(&train, target, lambda)?;
            let noisy = mech.apply(&w, &mut rng)?;
            Ok((rmse(&noisy, &test, target), rmse(&w, &test, target)))
        })
        .collect::<Result<_>>()?;
    let n = runs as f64;
    Ok(RmseReport {
        eps0: mech.eps0(),
        mean_rmse: per_run.iter().map(|r| r.0).sum::<f64>() / n,
        noiseless_mean: per_run.iter().map(|r| r.1).sum::<f64>() / n,
        runs: per_run.into_iter().map(|r| r.0).collect(),
    })
}

/// Synthetic linear-regression data: standard-normal features, response
/// `sum_j x_j / (j + 1)` plus `N(0, 0.1^2)` noise, normalised with the
/// response in the last column.
pub fn synthetic_regression(records: usize, features: usize, seed: u64) -> Result<DataSource> {
    if records < 2 || features == 0 {
        return domain("need at least 2 records and 1 feature");
    }
    let mut rng = stream_rng(seed, 0);
    let raw: Vec<Vec<f64>> = (0..records)
        .map(|_| {
            let mut row: Vec<f64> = (0..features)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let noise: f64 = StandardNormal.sample(&mut rng);
            let y = row
                .iter()
                .enumerate()
                .map(|(j, x)| x / (j + 1) as f64)
                .sum::<f64>()
                + 0.1 * noise;
            row.push(y);
            row
        })
        .collect();
    normalize(raw, features)
}
