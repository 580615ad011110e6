//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// Fixed 17-significant-digit rendering.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(t) => t.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash over the canonical config JSON followed by the effective tolerances.
pub fn config_hash(config: &ScenarioConfig) -> Result<String, CliError> {
    let mut text = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
    for (k, v) in config.tolerances()?.entries() {
        let _ = write!(text, "\n{k}={v}");
    }
    Ok(sha256_hex(text.as_bytes()))
}

/// Writes the CSV files and `manifest.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ScenarioConfig,
    tables: &[(String, Table)],
    summaries: &[(String, Value)],
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    let write = |name: &str, bytes: &[u8]| -> Result<String, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(sha256_hex(bytes))
    };
    for (name, table) in tables {
        let csv = table.to_csv();
        let hash = write(name, csv.as_bytes())?;
        let lambda_columns: Vec<&String> = table.header.iter().filter(|h| h.starts_with("lambda.")).collect();
        files.push(json!({ "file": name, "sha256": hash, "rows": table.rows.len(), "lambda_columns": lambda_columns }));
    }
    for (name, value) in summaries {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        let hash = write(name, text.as_bytes())?;
        files.push(json!({ "file": name, "sha256": hash }));
    }
    let tol: serde_json::Map<String, Value> =
        config.tolerances()?.entries().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_hash(config)?,
        "config": config,
        "tolerances": tol,
        "files": files,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    write("manifest.json", text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
    }
}
