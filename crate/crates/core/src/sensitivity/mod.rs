//! Sampling the sensitivity of a query over neighbouring datasets drawn from
//! a record pool, and summarising it through an empirical CDF.

mod data;
mod ecdf;
mod query;

pub use data::{normalize, read_csv, DataSource};
pub use ecdf::{eta_estimate, sampled_sensitivity, EmpiricalCdf};
pub use query::{ridge_fit, ridge_predict, split_features, QueryKind, QuerySpec};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::rng::stream_rng;

/// Two neighbouring datasets as indices into a [`DataSource`]: both contain
/// the `shared` records, plus `x_extra` and `y_extra` respectively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourPair {
    pub shared: Vec<usize>,
    pub x_extra: usize,
    pub y_extra: usize,
}

impl NeighbourPair {
    pub fn datasets<'a>(&self, src: &'a DataSource) -> (Vec<&'a [f64]>, Vec<&'a [f64]>) {
        let mut x: Vec<&[f64]> = self.shared.iter().map(|&i| src.record(i)).collect();
        let mut y = x.clone();
        x.push(src.record(self.x_extra));
        y.push(src.record(self.y_extra));
        (x, y)
    }
}

/// Draws `p - 1` shared records with replacement and two distinct differing
/// records.
pub fn sample_neighbour_pair<R: Rng + ?Sized>(
    src: &DataSource,
    p: usize,
    rng: &mut R,
) -> Result<NeighbourPair> {
    if p < 2 {
        return domain(format!("datasets need at least 2 records, got p = {p}"));
    }
    let n = src.len();
    if n < 2 {
        return domain("neighbour sampling needs at least 2 source records");
    }
    let shared = (0..p - 1).map(|_| rng.random_range(0..n)).collect();
    let x_extra = rng.random_range(0..n);
    let mut y_extra = rng.random_range(0..n - 1);
    if y_extra >= x_extra {
        y_extra += 1;
    }
    Ok(NeighbourPair {
        shared,
        x_extra,
        y_extra,
    })
}

/// `n` draws of `|f(x) - f(y)|_1` over independently sampled neighbour
/// pairs. Pair `i` uses stream `i` under `seed`.
pub fn sensitivity_samples(
    src: &DataSource,
    q: &QuerySpec,
    p: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return domain("need at least one sensitivity sample");
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let pair = sample_neighbour_pair(src, p, &mut rng)?;
            let (x, y) = pair.datasets(src);
            let fx = q.eval(&x)?;
            let fy = q.eval(&y)?;
            Ok(fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).sum())
        })
        .collect()
}
