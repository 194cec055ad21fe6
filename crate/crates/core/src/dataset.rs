//! Observation matrices: CSV ingestion, the synthetic duplicated-feature
//! dataset, and background samples for marginal expectations.
//!
//! Random draws use ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), whose
//! output stream is fixed by the algorithm, so a seed yields the same
//! matrix on every platform.

use std::io::Read;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("no data rows")]
    NoRows,
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("cannot parse `{text}` at row {row}, column {col} as a finite number")]
    BadCell {
        row: usize,
        col: usize,
        text: String,
    },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("background size {k} must be between 1 and the number of rows {m}")]
    BackgroundSize { k: usize, m: usize },
}

/// Seed for the deterministic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Row-major `m x n` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    feature_names: Vec<String>,
}

pub fn default_feature_names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, DatasetError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(DatasetError::Ragged {
                    row: r + 1,
                    expected: n_cols,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(values, n_rows, n_cols, None)
    }

    pub fn from_flat(
        values: Vec<f64>,
        n_rows: usize,
        n_cols: usize,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        if n_rows == 0 {
            return Err(DatasetError::NoRows);
        }
        if n_cols == 0 {
            return Err(DatasetError::Shape(
                "at least one column is required".into(),
            ));
        }
        if values.len() != n_rows * n_cols {
            return Err(DatasetError::Shape(format!(
                "{} values do not fill a {n_rows}x{n_cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::BadCell {
                row: pos / n_cols + 1,
                col: pos % n_cols + 1,
                text: values[pos].to_string(),
            });
        }
        let feature_names = match feature_names {
            Some(names) if names.len() != n_cols => {
                return Err(DatasetError::Shape(format!(
                    "{} feature names for {n_cols} columns",
                    names.len()
                )))
            }
            Some(names) => names,
            None => default_feature_names(n_cols),
        };
        Ok(Dataset {
            values,
            n_rows,
            n_cols,
            feature_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.values[c..].iter().step_by(self.n_cols).copied()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// Reads a comma-separated numeric table. Rows and columns in errors are
/// 1-based and count data rows only (the header, when present, is row 0).
pub fn load_csv(path: &Path, has_header: bool) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, has_header)
}

pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let names = if has_header {
        let header = rdr
            .headers()
            .map_err(|e| DatasetError::Csv(e.to_string()))?;
        Some(header.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };

    let mut values = Vec::new();
    let mut n_cols = names.as_ref().map(Vec::len);
    let mut n_rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => DatasetError::Io(io),
            other => DatasetError::Csv(format!("{other:?}")),
        })?;
        n_rows += 1;
        let expected = *n_cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DatasetError::Ragged {
                row: n_rows,
                expected,
                got: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(DatasetError::BadCell {
                        row: n_rows,
                        col: c + 1,
                        text: cell.to_string(),
                    })
                }
            }
        }
    }
    if n_rows == 0 {
        return Err(DatasetError::NoRows);
    }
    Dataset::from_flat(values, n_rows, n_cols.unwrap_or(0), names)
}

/// Synthetic five-feature dataset: columns 1, 2, 4, 5 are i.i.d.
/// Uniform[0, 1) and column 3 is a bitwise copy of column 2.
///
/// Values are drawn row by row in column order 1, 2, 4, 5.
pub fn generate_paper_dataset(m: usize, seed: RngSeed) -> Result<Dataset, DatasetError> {
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(m * 5);
    for _ in 0..m {
        let x1: f64 = rng.gen();
        let x2: f64 = rng.gen();
        let x4: f64 = rng.gen();
        let x5: f64 = rng.gen();
        values.extend([x1, x2, x2, x4, x5]);
    }
    Dataset::from_flat(values, m, 5, None)
}

/// Reference sample for marginal expectations. Rows are whole observations,
/// so dependencies between columns inside a row survive.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    data: Dataset,
}

impl BackgroundSet {
    pub fn full(data: &Dataset) -> Self {
        BackgroundSet { data: data.clone() }
    }

    pub fn n_rows(&self) -> usize {
        self.data.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.n_cols()
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.rows()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        self.data.row(r)
    }

    pub fn column_mean(&self, c: usize) -> f64 {
        self.data.column(c).sum::<f64>() / self.n_rows() as f64
    }

    pub fn as_dataset(&self) -> &Dataset {
        &self.data
    }
}

impl From<Dataset> for BackgroundSet {
    fn from(data: Dataset) -> Self {
        BackgroundSet { data }
    }
}

/// Draws `k` distinct rows without replacement. Selected rows keep their
/// original relative order; `k == m` returns the whole dataset unchanged.
pub fn sample_background(
    data: &Dataset,
    k: usize,
    seed: RngSeed,
) -> Result<BackgroundSet, DatasetError> {
    let m = data.n_rows();
    if k == 0 || k > m {
        return Err(DatasetError::BackgroundSize { k, m });
    }
    if k == m {
        return Ok(BackgroundSet::full(data));
    }
    let mut rng = seed.rng();
    let mut picked = index::sample(&mut rng, m, k).into_vec();
    picked.sort_unstable();
    let values = picked
        .iter()
        .flat_map(|&r| data.row(r).iter().copied())
        .collect();
    let subset = Dataset::from_flat(
        values,
        k,
        data.n_cols(),
        Some(data.feature_names().to_vec()),
    )?;
    Ok(BackgroundSet { data: subset })
}
