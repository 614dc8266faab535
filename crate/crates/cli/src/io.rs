use std::fs::File;
use std::path::Path;

use sparsevb::nalgebra::{DMatrix, DVector};

use crate::CliError;

/// Numeric CSV as rows. A first row that does not parse as numbers is taken
/// to be a header.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(CliError::Input(format!("{}: line {}: {e}", path.display(), line + 1)));
            }
        };
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::Input(format!(
                    "{}: line {} has {} fields, expected {w}",
                    path.display(),
                    line + 1,
                    row.len()
                )));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let rows = read_numeric_csv(path)?;
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(n, p, rows.into_iter().flatten()))
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>, CliError> {
    let rows = read_numeric_csv(path)?;
    if rows[0].len() != 1 {
        return Err(CliError::Input(format!(
            "{}: response must have a single column, found {}",
            path.display(),
            rows[0].len()
        )));
    }
    Ok(DVector::from_iterator(rows.len(), rows.into_iter().map(|r| r[0])))
}
