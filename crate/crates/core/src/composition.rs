//! Privacy accounting under repeated use of a mechanism.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

fn check_common(eps0: f64, n: u64, delta: f64) -> Result<()> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return domain(format!("eps0 must be positive, got {eps0}"));
    }
    if n == 0 {
        return domain("composition needs n >= 1");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

/// `n * eps0`.
pub fn basic_composition(eps0: f64, n: u64) -> Result<f64> {
    if !(eps0 > 0.0) || n == 0 {
        return domain("basic composition needs eps0 > 0 and n >= 1");
    }
    Ok(n as f64 * eps0)
}

/// `eps0 sqrt(2 n ln(1/delta)) + n eps0 (e^eps0 - 1)`.
pub fn advanced_composition(eps0: f64, n: u64, delta: f64) -> Result<f64> {
    check_common(eps0, n, delta)?;
    let nf = n as f64;
    Ok(eps0 * (2.0 * nf * (1.0 / delta).ln()).sqrt() + nf * eps0 * eps0.exp_m1())
}

/// Expected per-use loss of a mechanism that meets `eps` with confidence
/// `gamma` and `eps0` otherwise.
fn mean_loss(eps0: f64, eps: f64, gamma: f64) -> f64 {
    gamma * eps * eps.exp_m1() + (1.0 - gamma) * eps0 * eps0.exp_m1()
}

fn check_entry(eps0: f64, eps: f64, gamma: f64) -> Result<()> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    if eps > eps0 {
        return domain(format!("eps ({eps}) must not exceed eps0 ({eps0})"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return domain(format!("gamma must lie in [0, 1], got {gamma}"));
    }
    Ok(())
}

/// Privacy level after `n` uses of a mechanism calibrated at `eps0` that
/// satisfies `eps` with confidence `gamma`:
/// `eps0 sqrt(2 n ln(1/delta)) + n mu`.
pub fn par_composition(eps0: f64, eps: f64, gamma: f64, n: u64, delta: f64) -> Result<f64> {
    check_common(eps0, n, delta)?;
    check_entry(eps0, eps, gamma)?;
    let nf = n as f64;
    Ok(eps0 * (2.0 * nf * (1.0 / delta).ln()).sqrt() + nf * mean_loss(eps0, eps, gamma))
}

/// One use of a mechanism in a [`CompositionLedger`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub eps0: f64,
    pub eps: f64,
    pub gamma: f64,
}

/// A sequence of possibly different mechanisms composed under one `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionLedger {
    entries: Vec<LedgerEntry>,
    delta: f64,
}

impl CompositionLedger {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta must lie in (0, 1), got {delta}"));
        }
        Ok(Self {
            entries: Vec::new(),
            delta,
        })
    }

    pub fn push(&mut self, eps0: f64, eps: f64, gamma: f64) -> Result<()> {
        if !(eps0 > 0.0) || !eps0.is_finite() {
            return domain(format!("eps0 must be positive, got {eps0}"));
        }
        check_entry(eps0, eps, gamma)?;
        self.entries.push(LedgerEntry { eps0, eps, gamma });
        Ok(())
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `sqrt(2 ln(1/delta) sum eps0_i^2) + sum mu_i`. Reduces to
    /// [`par_composition`] when all entries are equal.
    pub fn compose(&self) -> Result<f64> {
        if self.entries.is_empty() {
            return domain("ledger is empty");
        }
        let sq: f64 = self.entries.iter().map(|e| e.eps0 * e.eps0).sum();
        let mu: f64 = self
            .entries
            .iter()
            .map(|e| mean_loss(e.eps0, e.eps, e.gamma))
            .sum();
        Ok((2.0 * (1.0 / self.delta).ln() * sq).sqrt() + mu)
    }
}

/// One row of a composition comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: u64,
    pub basic: f64,
    pub advanced: f64,
    pub par: f64,
}

/// Basic, advanced and privacy-at-risk composition for `n = 1..=n_max`.
pub fn compare(
    eps0: f64,
    delta: f64,
    n_max: u64,
    eps: f64,
    gamma: f64,
) -> Result<Vec<ComparisonRow>> {
    (1..=n_max)
        .map(|n| {
            Ok(ComparisonRow {
                n,
                basic: basic_composition(eps0, n)?,
                advanced: advanced_composition(eps0, n, delta)?,
                par: par_composition(eps0, eps, gamma, n, delta)?,
            })
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert!((basic_composition(0.1, 10).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(basic_composition(0.5, 1).unwrap(), 0.5);
        assert_eq!(basic_composition(1.0, 7).unwrap(), 7.0);
        assert!(basic_composition(1.0, 0).is_err());
    }

    #[test]
    fn advanced_values() {
        assert!((advanced_composition(0.1, 10, 1e-5).unwrap() - 1.6226).abs() < 1e-4);
        assert!((advanced_composition(0.5, 1, 1e-5).unwrap() - 2.723_62).abs() < 1e-5);
        assert!(advanced_composition(0.5, 1, 1.0).is_err());
    }

    #[test]
    fn par_values() {
        let v = par_composition(0.1, 0.08, 0.8, 10, 1e-5).unwrap();
        assert!((v - 1.5917).abs() < 1e-3);
        for n in [1, 5, 40] {
            let adv = advanced_composition(0.3, n, 1e-6).unwrap();
            assert_eq!(par_composition(0.3, 0.1, 0.0, n, 1e-6).unwrap(), adv);
            assert_eq!(par_composition(0.3, 0.3, 1.0, n, 1e-6).unwrap(), adv);
        }
        assert!(par_composition(0.1, 0.2, 0.5, 3, 1e-5).is_err());
    }

    #[test]
    fn ledger_reduces_to_homogeneous() {
        let mut l = CompositionLedger::new(1e-5).unwrap();
        assert!(l.compose().is_err());
        for _ in 0..10 {
            l.push(0.1, 0.08, 0.8).unwrap();
        }
        let direct = par_composition(0.1, 0.08, 0.8, 10, 1e-5).unwrap();
        assert!((l.compose().unwrap() - direct).abs() < 1e-12);
        assert!(l.push(0.1, 0.2, 0.5).is_err());
    }

    #[test]
    fn comparison_table() {
        let rows = compare(0.5, 1e-5, 100, 0.27, 0.61).unwrap();
        assert_eq!(rows.len(), 100);
        assert_eq!(rows[0].basic, 0.5);
        assert!(rows.iter().all(|r| r.par < r.advanced));
        let rows = compare(0.1, 1e-5, 1000, 0.08, 0.80).unwrap();
        assert!(rows.iter().any(|r| r.par < r.basic));
        let mut buf = Vec::new();
        write_comparison_csv(&rows[..2], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,basic,advanced,par\n1,0.1,"));
    }
}
