//! Reproduction reports and their CSV/JSON export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated in the source publication.
    Paper,
    /// Hand-derived from the model.
    Derived,
}

/// How a computed value is compared with its reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|value − reference| ≤ tolerance`
    Within,
    /// `value ≥ reference − tolerance`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub label: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub check: Check,
    pub provenance: Provenance,
}

impl Quantity {
    pub fn within(
        label: impl Into<String>,
        value: f64,
        reference: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            label: label.into(),
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
            check: Check::Within,
            provenance,
        }
    }

    pub fn at_least(
        label: impl Into<String>,
        value: f64,
        bound: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            label: label.into(),
            value,
            reference: bound,
            tolerance,
            pass: value >= bound - tolerance,
            check: Check::AtLeast,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproReport {
    pub name: String,
    pub quantities: Vec<Quantity>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

impl ReproReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            quantities: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn push(&mut self, q: Quantity) {
        self.quantities.push(q);
    }

    /// True iff every quantity passes.
    pub fn passed(&self) -> bool {
        self.quantities.iter().all(|q| q.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    label: &'a str,
    value: f64,
    reference: f64,
    tolerance: f64,
    pass: bool,
}

/// Writes `rows` as CSV with a header taken from the row type.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_report<W: Write>(out: W, report: &ReproReport, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(
            out,
            report.quantities.iter().map(|q| CsvRow {
                label: &q.label,
                value: q.value,
                reference: q.reference,
                tolerance: q.tolerance,
                pass: q.pass,
            }),
        ),
        Format::Json => write_json(out, report),
    }
}

/// Creates `path` for writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes `report` to `path` in the given format.
pub fn export(report: &ReproReport, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = create(path)?;
    write_report(&mut file, report, format)?;
    file.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
