//! Delimited dataset ingestion and file output helpers.

use std::path::Path;

use ndarray::Array2;

use crate::engines::Partition;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub matrix: Array2<f64>,
    /// Raw values of the declared label column, row order preserved.
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Column name (with a header) or zero-based index to hold out as truth
    /// labels.
    pub label_column: Option<String>,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b',',
            has_header: true,
            label_column: None,
        }
    }
}

/// Read a rectangular numeric matrix, optionally holding one column out as
/// labels. Every remaining cell must parse as a finite number; failures name
/// the offending row and column.
pub fn read_dataset(path: &Path, options: &ReadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .from_path(path)?;

    let mut names: Vec<String> = if options.has_header {
        reader.headers()?.iter().map(str::to_string).collect()
    } else {
        Vec::new()
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut label_idx: Option<usize> = None;

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if names.is_empty() {
            names = (1..=record.len()).map(|j| format!("v{j}")).collect();
        }
        if i == 0 {
            label_idx = match &options.label_column {
                None => None,
                Some(wanted) => Some(resolve_column(&names, wanted)?),
            };
        }
        if record.len() != names.len() {
            return Err(Error::invalid_data(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                record.len(),
                names.len()
            )));
        }
        let mut row = Vec::with_capacity(names.len() - label_idx.iter().len());
        for (j, field) in record.iter().enumerate() {
            if Some(j) == label_idx {
                labels.push(field.to_string());
                continue;
            }
            let trimmed = field.trim();
            if trimmed.is_empty() {
                return Err(Error::parse(i + 1, &names[j], "missing value"));
            }
            let value: f64 = trimmed
                .parse()
                .map_err(|_| Error::parse(i + 1, &names[j], format!("non-numeric '{trimmed}'")))?;
            if !value.is_finite() {
                return Err(Error::parse(i + 1, &names[j], "non-finite value"));
            }
            row.push(value);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::invalid_data("no data rows"));
    }
    let p = rows[0].len();
    if p == 0 {
        return Err(Error::invalid_data("no numeric columns"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = flat.len() / p;
    let matrix = Array2::from_shape_vec((n, p), flat).expect("rows were validated rectangular");

    let names: Vec<String> = names
        .into_iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, name)| name)
        .collect();

    Ok(Dataset {
        names,
        matrix,
        labels: label_idx.map(|_| labels),
    })
}

fn resolve_column(names: &[String], wanted: &str) -> Result<usize> {
    if let Some(idx) = names.iter().position(|n| n == wanted) {
        return Ok(idx);
    }
    if let Ok(idx) = wanted.parse::<usize>() {
        if idx < names.len() {
            return Ok(idx);
        }
    }
    Err(Error::invalid_argument(format!(
        "label column '{wanted}' not found"
    )))
}

/// Turn raw label strings into a partition; cluster ids follow first
/// appearance order.
pub fn label_partition(labels: &[String]) -> Result<Partition> {
    if labels.is_empty() {
        return Err(Error::invalid_data("no labels"));
    }
    let mut ids: Vec<usize> = Vec::with_capacity(labels.len());
    let mut seen: Vec<&str> = Vec::new();
    for label in labels {
        let id = match seen.iter().position(|s| *s == label.as_str()) {
            Some(id) => id,
            None => {
                seen.push(label);
                seen.len() - 1
            }
        };
        ids.push(id);
    }
    Partition::new(ids, seen.len())
}

/// Decimal string with the given number of significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Serialise a matrix back to delimited text in input format.
pub fn matrix_csv(names: &[String], matrix: &Array2<f64>) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for row in matrix.rows() {
        let fields: Vec<String> = row.iter().map(|&v| fmt_sig(v, 12)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Write via a temporary file in the destination directory plus rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let mut file = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write;
    file.write_all(contents.as_bytes())?;
    file.persist(path)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(())
}
