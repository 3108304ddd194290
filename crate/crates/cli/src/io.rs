//! CSV ingestion and emission.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use gsam::{AdditiveModel, Dataset};
use nalgebra::DMatrix;

use crate::CliError;

/// A numeric table read from CSV: header names and row-major values.
#[derive(Debug, Clone)]
pub struct Table {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table, CliError> {
        let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Table::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: io::Read>(reader: R, source: &str) -> Result<Table, CliError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(|e| parse_error(source, 1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if names.is_empty() || names.iter().all(String::is_empty) {
            return Err(parse_error(source, 1, "missing header row".into()));
        }
        for (k, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(parse_error(source, 1, format!("column {} has an empty name", k + 1)));
            }
            if names[..k].contains(name) {
                return Err(parse_error(source, 1, format!("duplicate column '{name}'")));
            }
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_error(source, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != names.len() {
                return Err(parse_error(
                    source,
                    line,
                    format!("expected {} fields, found {}", names.len(), record.len()),
                ));
            }
            let mut row = Vec::with_capacity(names.len());
            for (field, name) in record.iter().zip(&names) {
                if field.is_empty() || matches!(field.to_ascii_lowercase().as_str(), "na" | "nan" | "null" | "?") {
                    return Err(parse_error(source, line, format!("missing value in column '{name}'")));
                }
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_error(source, line, format!("'{field}' in column '{name}' is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_error(source, line, format!("non-finite value in column '{name}'")));
                }
                row.push(v);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(parse_error(source, 2, "no data rows".into()));
        }
        Ok(Table { names, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Input(format!("no column named '{name}'")))
    }

    /// Splits off the response column; the rest become features in file order.
    pub fn to_dataset(&self, response: &str) -> Result<Dataset, CliError> {
        let r = self.column_index(response)?;
        if self.names.len() < 2 {
            return Err(CliError::Input("no feature columns besides the response".into()));
        }
        let y: Vec<f64> = self.rows.iter().map(|row| row[r]).collect();
        let cols: Vec<usize> = (0..self.names.len()).filter(|&k| k != r).collect();
        let x = DMatrix::from_fn(self.rows.len(), cols.len(), |i, j| self.rows[i][cols[j]]);
        let names = cols.iter().map(|&k| self.names[k].clone()).collect();
        Ok(Dataset::new(y, x, Some(names))?)
    }

    /// Design matrix whose columns follow `features`, looked up by name.
    pub fn design_for(&self, features: &[String]) -> Result<DMatrix<f64>, CliError> {
        let idx = features
            .iter()
            .map(|f| self.column_index(f))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DMatrix::from_fn(self.rows.len(), idx.len(), |i, j| self.rows[i][idx[j]]))
    }
}

fn parse_error(source: &str, line: u64, message: String) -> CliError {
    CliError::Parse {
        file: source.to_string(),
        line,
        message,
    }
}

/// Writes `contents` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| if contents.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Long-format `(feature, x, fitted)` rows at every knot of every component.
pub fn dump_components(model: &AdditiveModel, path: &Path) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["feature", "x", "fitted"]).map_err(csv_error)?;
    for (j, c) in model.components.iter().enumerate() {
        let name = model.feature_names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
        for (x, v) in c.knots.iter().zip(&c.values) {
            w.write_record([name.clone(), x.to_string(), v.to_string()]).map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
