//! CSV ingestion: header-based column selection, strict numeric parsing.

use std::path::Path;

use cvci_core::data::{CausalDataset, SourceTag};

use crate::error::{CliError, Result};

/// Which columns of a CSV file hold the outcome, the treatment
/// indicator, and the covariates (in model order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub outcome: String,
    pub treatment: String,
    pub covariates: Vec<String>,
}

fn parse_err(path: &Path, row: usize, column: &str, message: String) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        row,
        column: column.to_string(),
        message,
    }
}

fn column_index(
    headers: &csv::StringRecord,
    name: &str,
    path: &Path,
) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_err(path, 1, name, "column not found in header".to_string()))
}

/// Load one source from a CSV file with a header row. The outcome and
/// covariates must parse as finite reals; the treatment column must be a
/// 0/1 literal.
pub fn load_csv(path: &Path, spec: &ColumnSpec, tag: SourceTag) -> Result<CausalDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                CliError::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
            }
            _ => parse_err(path, 1, "", e.to_string()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 1, "", e.to_string()))?
        .clone();
    let y_col = column_index(&headers, &spec.outcome, path)?;
    let w_col = column_index(&headers, &spec.treatment, path)?;
    let z_cols: Vec<usize> = spec
        .covariates
        .iter()
        .map(|c| column_index(&headers, c, path))
        .collect::<Result<_>>()?;

    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut z = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is line 1; the first data record is line 2.
        let row = i + 2;
        let record = record.map_err(|e| parse_err(path, row, "", e.to_string()))?;
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record
                .get(col)
                .ok_or_else(|| parse_err(path, row, name, "missing field".to_string()))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, row, name, format!("invalid number {raw:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, row, name, format!("non-finite value {raw:?}")));
            }
            Ok(v)
        };
        y.push(field(y_col, &spec.outcome)?);
        let wv = field(w_col, &spec.treatment)?;
        if wv == 0.0 {
            w.push(0u8);
        } else if wv == 1.0 {
            w.push(1u8);
        } else {
            return Err(CliError::Core(cvci_core::error::Error::NonBinaryTreatment {
                row: i,
                value: wv,
            }));
        }
        for (&col, name) in z_cols.iter().zip(&spec.covariates) {
            z.push(field(col, name)?);
        }
    }
    let d = spec.covariates.len();
    Ok(CausalDataset::new(y, w, z, d, tag)?)
}
