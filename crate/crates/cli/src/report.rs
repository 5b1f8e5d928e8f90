//! Machine-readable report output: CSV tables with lossless float
//! serialization and a JSON run summary.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// One CSV cell. The column set is fixed per command; cells that do not
/// apply stay `Empty`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    UInt(u64),
    Bool(bool),
    Str(String),
    Empty,
}

impl Cell {
    pub fn opt_float(value: Option<f64>) -> Cell {
        match value {
            Some(v) => Cell::Float(v),
            None => Cell::Empty,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::UInt(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => quote_if_needed(s),
            Cell::Empty => String::new(),
        }
    }
}

/// 17 significant digits: enough for an exact f64 round trip, no
/// locale-dependent formatting.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn quote_if_needed(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Tabular report with a fixed column schema.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Header plus rows, comma-separated, `\n` line endings, UTF-8.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let rendered: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&rendered.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut file = std::fs::File::create(path).map_err(CliError::io)?;
        file.write_all(self.to_csv().as_bytes()).map_err(CliError::io)?;
        Ok(())
    }
}

/// Metadata and per-command details written next to the CSV.
///
/// `wall_time_ms` is the only field that varies between identical runs; it
/// is excluded from any determinism comparison and from the config hash.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub library_version: String,
    pub wall_time_ms: u64,
    pub rows: usize,
    pub csv_path: String,
    pub details: serde_json::Value,
}

impl RunSummary {
    pub fn write_json(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::numeric_msg(format!("summary serialization: {e}")))?;
        text.push('\n');
        std::fs::write(path, text).map_err(CliError::io)?;
        Ok(())
    }
}
