use std::io::Write;

use crate::error::{domain, Error, Result};

/// Empirical distribution of non-negative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return domain("empirical CDF needs at least one sample");
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return domain(format!(
                "samples must be finite and non-negative, got {bad}"
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `F_n(x)`: fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|s| *s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `s` with `F_n(s) >= q`, i.e. the `ceil(q n)`-th order
    /// statistic.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return domain(format!("quantile level must lie in (0, 1], got {q}"));
        }
        let n = self.sorted.len();
        let mut rank = (q * n as f64).ceil() as usize;
        // q n can land a hair above an integer through rounding
        if rank > 1 && (rank - 1) as f64 / n as f64 >= q {
            rank -= 1;
        }
        Ok(self.sorted[rank.clamp(1, n) - 1])
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("non-empty")
    }

    /// `sup_x |F_n(x) - F(x)|` against a continuous CDF `f`.
    pub fn sup_deviation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let fx = f(x);
                (fx - i as f64 / n)
                    .abs()
                    .max(((i + 1) as f64 / n - fx).abs())
            })
            .fold(0.0, f64::max)
    }

    /// One sample per line under a `sensitivity` header.
    pub fn write_samples_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sensitivity"])?;
        for s in &self.sorted {
            w.write_record([s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// The step function as `(value, F_n(value))` rows at each distinct sample.
    pub fn write_cdf_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "cdf"])?;
        let n = self.sorted.len();
        for (i, s) in self.sorted.iter().enumerate() {
            if i + 1 < n && self.sorted[i + 1] == *s {
                continue;
            }
            w.write_record([s.to_string(), ((i + 1) as f64 / n as f64).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `F_n^{-1}(gamma2)`.
pub fn sampled_sensitivity(cdf: &EmpiricalCdf, gamma2: f64) -> Result<f64> {
    cdf.quantile(gamma2)
}

/// Coupling coefficient between true and sampled sensitivity.
///
/// With a known true sensitivity this is `delta_true / F_n^{-1}(gamma2)`.
/// Otherwise `1 + rho / max_sample`, taking the order constant as 1.
pub fn eta_estimate(
    delta_true: Option<f64>,
    cdf: &EmpiricalCdf,
    gamma2: f64,
    rho: f64,
) -> Result<f64> {
    match delta_true {
        Some(d) => {
            if !(d > 0.0) {
                return domain(format!("true sensitivity must be positive, got {d}"));
            }
            let s = sampled_sensitivity(cdf, gamma2)?;
            if s == 0.0 {
                return Err(Error::Degenerate("sampled sensitivity is zero".into()));
            }
            Ok(d / s)
        }
        None => {
            if !(rho > 0.0 && rho < 1.0) {
                return domain(format!("accuracy rho must lie in (0, 1), got {rho}"));
            }
            let m = cdf.max();
            if m == 0.0 {
                return Err(Error::Degenerate(
                    "maximum sampled sensitivity is zero".into(),
                ));
            }
            Ok(1.0 + rho / m)
        }
    }
}
