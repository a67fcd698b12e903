//! Numeric CSV input: rows of comma-separated floats, no header.

use crate::error::{invalid, CliError, CliResult};
use nalgebra::DMatrix;
use std::path::Path;

/// Reads a rectangular numeric CSV. Errors carry the 1-based line number.
pub fn read_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_rows(&text).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_rows(text: &str) -> CliResult<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (j, cell) in content.split(',').map(str::trim).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| CliError::Validation(format!("line {line}, column {}: cannot parse {cell:?} as a number", j + 1)))?;
            if !v.is_finite() {
                return invalid(format!("line {line}, column {}: value must be finite", j + 1));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return invalid(format!("line {line}: expected {} columns, found {}", first.len(), row.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return invalid("no data rows");
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let rows = read_rows(path)?;
    Ok(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}
