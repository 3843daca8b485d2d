use std::io::Read;

use crate::error::{domain, Error, Result};

/// A pool of fixed-width numeric records standing in for the
/// data-generating distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    width: usize,
    records: Vec<Vec<f64>>,
}

impl DataSource {
    pub fn new(records: Vec<Vec<f64>>) -> Result<Self> {
        let width = match records.first() {
            Some(r) => r.len(),
            None => return domain("data source has no records"),
        };
        if width == 0 {
            return domain("records must have at least one column");
        }
        for (i, r) in records.iter().enumerate() {
            if r.len() != width {
                return domain(format!(
                    "record {i} has {} columns, expected {width}",
                    r.len()
                ));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return domain(format!("record {i} contains a non-finite value"));
            }
        }
        Ok(Self { width, records })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, i: usize) -> &[f64] {
        &self.records[i]
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }
}

/// Scales the target column to `[0, 1]` by min-max and every remaining
/// feature sub-vector to unit L2 norm. All-zero feature rows are kept as is.
pub fn normalize(raw: Vec<Vec<f64>>, target: usize) -> Result<DataSource> {
    let mut src = DataSource::new(raw)?;
    if target >= src.width {
        return domain(format!(
            "target column {target} out of range for width {}",
            src.width
        ));
    }
    let (lo, hi) = src
        .records
        .iter()
        .map(|r| r[target])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "target column {target} is constant and cannot be min-max scaled"
        )));
    }
    for r in &mut src.records {
        r[target] = (r[target] - lo) / (hi - lo);
        let norm = r
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != target)
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for (j, v) in r.iter_mut().enumerate() {
                if j != target {
                    *v /= norm;
                }
            }
        }
    }
    Ok(src)
}

/// Reads a headed CSV of numeric columns. Returns the header and the rows.
pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.iter().map(str::to_owned).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    Error::Domain(format!(
                        "row {} column {j}: '{field}' is not numeric",
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_max_target() {
        let raw = vec![vec![3.0, 0.0], vec![4.0, 50.0], vec![0.0, 100.0]];
        let src = normalize(raw, 1).unwrap();
        let target: Vec<f64> = src.records().iter().map(|r| r[1]).collect();
        assert_eq!(target, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn features_unit_norm() {
        let raw = vec![
            vec![3.0, 4.0, 1.0],
            vec![0.0, 0.0, 2.0],
            vec![-1.0, 2.0, 5.0],
        ];
        let src = normalize(raw, 2).unwrap();
        let n0 = (src.record(0)[0].powi(2) + src.record(0)[1].powi(2)).sqrt();
        assert!((n0 - 1.0).abs() < 1e-12);
        assert!((src.record(0)[0] - 0.6).abs() < 1e-12);
        // zero feature row passes through
        assert_eq!(&src.record(1)[..2], &[0.0, 0.0]);
        let n2 = (src.record(2)[0].powi(2) + src.record(2)[1].powi(2)).sqrt();
        assert!((n2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target_is_degenerate() {
        let raw = vec![vec![1.0, 7.0], vec![2.0, 7.0]];
        assert!(matches!(normalize(raw, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ragged_and_empty_rejected() {
        assert!(DataSource::new(vec![]).is_err());
        assert!(DataSource::new(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(normalize(vec![vec![1.0, 2.0]], 5).is_err());
    }

    #[test]
    fn csv_parsing() {
        let text = "age,income\n30, 1000\n# comment\n40,2000\n";
        let (header, rows) = read_csv(text.as_bytes()).unwrap();
        assert_eq!(header, vec!["age", "income"]);
        assert_eq!(rows, vec![vec![30.0, 1000.0], vec![40.0, 2000.0]]);
        assert!(read_csv("a\nx\n".as_bytes()).is_err());
    }
}
