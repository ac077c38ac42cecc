//! CSV and JSON persistence for datasets, ground truth and chain outputs.
//!
//! Dataset CSVs carry one column per variable, an integer `level` column for
//! the random effect and a 0/1 `y` column.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Dataset;

pub const LEVEL_COLUMN: &str = "level";
pub const RESPONSE_COLUMN: &str = "y";

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let levels = data.levels().ok_or_else(|| {
        Error::Unsupported("CSV export needs a single one-hot random effect".into())
    })?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = data.variable_names().iter().map(String::as_str).collect();
    header.push(LEVEL_COLUMN);
    header.push(RESPONSE_COLUMN);
    w.write_record(&header)?;
    let x = data.x();
    let mut record = Vec::with_capacity(header.len());
    for i in 0..data.n() {
        record.clear();
        record.extend((0..data.p()).map(|j| format!("{:?}", x[(i, j)])));
        record.push(levels[i].to_string());
        record.push(if data.y()[i] { "1" } else { "0" }.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset CSV. `n_levels` fixes the width of Z (needed when a
/// validation file does not contain every level); by default it is one more
/// than the largest level seen.
pub fn read_dataset_csv(path: &Path, n_levels: Option<usize>) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let level_col = find(LEVEL_COLUMN)
        .ok_or_else(|| Error::Data(format!("{}: no '{LEVEL_COLUMN}' column", path.display())))?;
    let y_col = find(RESPONSE_COLUMN)
        .ok_or_else(|| Error::Data(format!("{}: no '{RESPONSE_COLUMN}' column", path.display())))?;
    let var_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != level_col && c != y_col)
        .collect();
    let names: Vec<String> = var_cols.iter().map(|&c| header[c].to_string()).collect();

    let mut values = Vec::new();
    let mut levels = Vec::new();
    let mut y = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        for &c in &var_cols {
            let v: f64 = rec[c]
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("line {line}: '{}' is not a number", &rec[c])))?;
            values.push(v);
        }
        levels.push(
            rec[level_col].trim().parse::<usize>().map_err(|_| {
                Error::Data(format!("line {line}: bad level '{}'", &rec[level_col]))
            })?,
        );
        y.push(match rec[y_col].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Data(format!(
                    "line {line}: response must be 0 or 1, got '{other}'"
                )))
            }
        });
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, var_cols.len(), &values);
    let seen = levels.iter().max().map_or(1, |m| m + 1);
    let n_levels = n_levels.unwrap_or(seen);
    Dataset::with_levels(x, &levels, n_levels, y, names)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// `variable,count` rows.
pub fn write_counts_csv<C: ToString>(path: &Path, names: &[String], counts: &[C]) -> Result<()> {
    if names.len() != counts.len() {
        return Err(Error::DimensionMismatch(
            "one count per variable name expected".into(),
        ));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["variable", "count"])?;
    for (name, c) in names.iter().zip(counts) {
        w.write_record([name.clone(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
