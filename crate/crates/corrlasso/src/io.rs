//! Headerless CSV exchange for matrices and vectors: row-major, decimal
//! notation, one row per line.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;

fn parse_line(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|_| Error::Csv {
                line: line_no,
                detail: format!("`{}` is not a number", field.trim()),
            })
        })
        .collect()
}

/// Reads a rectangular numeric CSV.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_line(line, i + 1)?);
    }
    if rows.is_empty() {
        return Err(Error::Csv {
            line: 0,
            detail: "empty file".into(),
        });
    }
    let cols = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Csv {
            line: i + 1,
            detail: format!("expected {cols} fields, got {}", row.len()),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Reads a design matrix, enforcing the column-norm convention.
pub fn read_design_csv(path: impl AsRef<Path>) -> Result<DesignMatrix> {
    DesignMatrix::new(read_matrix_csv(path)?)
}

/// Reads a vector: either one value per line or a single comma-separated
/// line (the flattened entries in reading order).
pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = read_matrix_csv(path)?;
    Ok(m.transpose().iter().cloned().collect())
}

/// Writes a matrix as headerless CSV, row-major.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes a vector as one value per line.
pub fn write_vector_csv(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    std::fs::write(path, vector_to_csv(v))?;
    Ok(())
}

pub fn vector_to_csv(v: &[f64]) -> String {
    let mut out = String::new();
    for value in v {
        out.push_str(&format!("{value}\n"));
    }
    out
}
