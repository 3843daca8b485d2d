use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};

/// The numeric queries the sensitivity sampler can evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryKind {
    /// Number of records, or of records whose `column` is at least `threshold`.
    Count {
        predicate: Option<(usize, f64)>,
    },
    Sum {
        column: usize,
    },
    Mean {
        column: usize,
    },
    /// Ridge regression coefficients of `target` on all other columns,
    /// minimising `(1/m) sum (y - w.x)^2 + lambda |w|^2` without intercept.
    Ridge {
        lambda: f64,
        target: usize,
    },
}

/// A query bound to a record width, with its output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    kind: QueryKind,
    width: usize,
    dimension: usize,
}

impl QuerySpec {
    pub fn new(kind: QueryKind, width: usize) -> Result<Self> {
        let in_range = |c: usize| -> Result<()> {
            if c >= width {
                return domain(format!("column {c} out of range for width {width}"));
            }
            Ok(())
        };
        let dimension = match &kind {
            QueryKind::Count { predicate } => {
                if let Some((c, _)) = predicate {
                    in_range(*c)?;
                }
                1
            }
            QueryKind::Sum { column } | QueryKind::Mean { column } => {
                in_range(*column)?;
                1
            }
            QueryKind::Ridge { lambda, target } => {
                in_range(*target)?;
                if !(*lambda > 0.0) {
                    return domain(format!(
                        "ridge regularisation must be positive, got {lambda}"
                    ));
                }
                if width < 2 {
                    return domain("ridge regression needs at least one feature column");
                }
                width - 1
            }
        };
        Ok(Self {
            kind,
            width,
            dimension,
        })
    }

    pub fn kind(&self) -> &QueryKind {
        &self.kind
    }

    /// Output dimension `k`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn eval(&self, rows: &[&[f64]]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return domain("query evaluated on an empty dataset");
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != self.width) {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                got: bad.len(),
            });
        }
        match self.kind {
            QueryKind::Count { predicate } => {
                let n = match predicate {
                    None => rows.len(),
                    Some((c, at)) => rows.iter().filter(|r| r[c] >= at).count(),
                };
                Ok(vec![n as f64])
            }
            QueryKind::Sum { column } => Ok(vec![rows.iter().map(|r| r[column]).sum()]),
            QueryKind::Mean { column } => Ok(vec![
                rows.iter().map(|r| r[column]).sum::<f64>() / rows.len() as f64,
            ]),
            QueryKind::Ridge { lambda, target } => ridge_fit(rows, target, lambda),
        }
    }
}

/// Splits a record into its feature vector (all columns but `target`) and
/// the response.
pub fn split_features(row: &[f64], target: usize) -> (impl Iterator<Item = f64> + '_, f64) {
    let feats = row
        .iter()
        .enumerate()
        .filter(move |(j, _)| *j != target)
        .map(|(_, v)| *v);
    (feats, row[target])
}

/// Closed-form ridge solution `(X'X + m lambda I) w = X'y`.
pub fn ridge_fit(rows: &[&[f64]], target: usize, lambda: f64) -> Result<Vec<f64>> {
    let m = rows.len();
    let d = rows[0].len() - 1;
    let x = DMatrix::from_fn(m, d, |i, j| {
        let col = if j < target { j } else { j + 1 };
        rows[i][col]
    });
    let y = DVector::from_iterator(m, rows.iter().map(|r| r[target]));
    let mut a = x.transpose() * &x;
    for i in 0..d {
        a[(i, i)] += m as f64 * lambda;
    }
    let b = x.transpose() * &y;
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("ridge normal equations are not positive definite".into()))?;
    let w = chol.solve(&b);
    let residual = (&a * &w - &b).norm();
    if !(residual <= 1e-8 * b.norm().max(1.0)) {
        return Err(Error::Numeric(format!(
            "ridge solve residual {residual:e} exceeds 1e-8"
        )));
    }
    Ok(w.iter().copied().collect())
}

/// Prediction `w.x` for one record.
pub fn ridge_predict(weights: &[f64], row: &[f64], target: usize) -> f64 {
    let (feats, _) = split_features(row, target);
    feats.zip(weights).map(|(x, w)| x * w).sum()
}
