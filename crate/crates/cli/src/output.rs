use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// A target next to what was achieved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerance {
    pub name: String,
    /// `"<="` or `">="`, read as `achieved <op> target`
    pub op: &'static str,
    pub target: f64,
    pub achieved: f64,
    pub passed: bool,
}

impl Tolerance {
    pub fn at_most(name: impl Into<String>, achieved: f64, target: f64) -> Self {
        Self {
            name: name.into(),
            op: "<=",
            target,
            achieved,
            passed: achieved <= target,
        }
    }

    pub fn at_least(name: impl Into<String>, achieved: f64, target: f64) -> Self {
        Self {
            name: name.into(),
            op: ">=",
            target,
            achieved,
            passed: achieved >= target,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub transmutation: &'static str,
    #[serde(rename = "transmutation-cli")]
    pub cli: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            transmutation: transmutation::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Header block written as the first line of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub experiment: &'a str,
    pub versions: Versions,
    pub config: &'a C,
    pub tolerances: &'a [Tolerance],
    pub extra: serde_json::Value,
}

/// Writes `# <metadata json>`, the column header, then one CSV line per row.
///
/// Rows serialize in order; an empty series gives a header-only file.
pub fn emit_plotdata<M: Serialize, R: Serialize>(
    path: &Path,
    meta: &M,
    columns: &[&str],
    rows: &[R],
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let json = serde_json::to_string(meta)?;
    writeln!(out, "# {json}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}
