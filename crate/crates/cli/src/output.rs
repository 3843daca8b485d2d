use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

pub fn sig6_opt(x: Option<f64>) -> Option<f64> {
    x.map(sig6)
}

/// Rounds a currency amount to cents.
pub fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Destination for a command's output: a file or standard output.
pub struct Sink(Box<dyn Write>);

impl Sink {
    pub fn open(path: Option<&Path>) -> io::Result<Self> {
        Ok(Self(match path {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        }))
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut self.0, value)?;
        writeln!(self.0)
    }

    /// Writes `# seed=<seed>` ahead of CSV content.
    pub fn seed_header(&mut self, seed: u64) -> io::Result<()> {
        writeln!(self.0, "# seed={seed}")
    }

    pub fn writer(&mut self) -> &mut dyn Write {
        &mut self.0
    }
}
