//! CSV tables and JSON sidecars.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};

pub const SCHEMA: &str = "matprod/1";
pub const GIT_DESCRIBE: &str = env!("MATPROD_GIT_DESCRIBE");

/// Seventeen significant digits in scientific notation, enough to round-trip.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// A rectangular table of numbers with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Numerical(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        wr.write_record(&self.columns)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(|&v| format_f64(v)))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({ "columns": self.columns, "rows": self.rows })
    }
}

/// Column names `x{k}_{i}` for a trajectory of `p` configurations of `n` points.
pub fn trajectory_columns(n: usize, p: usize) -> Vec<String> {
    (1..=p).flat_map(|k| (1..=n).map(move |i| format!("x{k}_{i}"))).collect()
}

/// Metadata written next to every table.
#[derive(Clone, Debug, Serialize)]
pub struct Sidecar {
    pub schema: &'static str,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub params: Value,
    pub columns: Vec<String>,
    pub rows: usize,
    pub extra: Value,
}

impl Sidecar {
    pub fn new(command: &str, seed: Option<u64>, params: Value, table: &Table) -> Self {
        Sidecar {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            command: command.to_string(),
            seed,
            params,
            columns: table.columns.clone(),
            rows: table.rows.len(),
            extra: Value::Null,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Where a command writes its table and sidecar.
#[derive(Clone, Debug)]
pub struct OutputSpec {
    /// Table destination; standard output when absent or `-`.
    pub out: Option<PathBuf>,
    /// Sidecar destination; defaults to `<out>.json` when writing CSV to a file.
    pub meta: Option<PathBuf>,
    pub format: Format,
}

impl OutputSpec {
    fn out_path(&self) -> Option<&Path> {
        self.out.as_deref().filter(|p| p.as_os_str() != "-")
    }

    pub fn sidecar_path(&self) -> Option<PathBuf> {
        if self.format == Format::Json {
            return None;
        }
        self.meta.clone().or_else(|| {
            self.out_path().map(|p| {
                let mut s = p.as_os_str().to_owned();
                s.push(".json");
                PathBuf::from(s)
            })
        })
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Writes the table (CSV or JSON) and, for CSV, the sidecar.
pub fn emit(table: &Table, sidecar: &Sidecar, spec: &OutputSpec) -> Result<()> {
    let mut w = open(spec.out_path())?;
    match spec.format {
        Format::Csv => {
            table.write_csv(&mut w)?;
            w.flush()?;
            if let Some(path) = spec.sidecar_path() {
                write_json(&path, &serde_json::to_value(sidecar)?)?;
            }
        }
        Format::Json => {
            let doc = json!({ "meta": sidecar, "columns": table.columns, "rows": table.rows });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut w = open(Some(path))?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a CSV file with a header row into numeric rows.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::validation(format!("row {}: cannot parse {s:?} as a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// A matrix as nested JSON arrays.
pub fn matrix_json(m: &matprod_core::linalg::Matrix) -> Value {
    Value::Array((0..m.rows).map(|i| json!((0..m.cols).map(|j| m[(i, j)]).collect::<Vec<f64>>())).collect())
}
