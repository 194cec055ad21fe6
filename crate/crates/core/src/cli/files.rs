//! CSV artifacts. Numbers are written with the shortest representation
//! that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use super::CliError;
use crate::dataset;
use crate::shapley::{InteractionTensor, ShapMatrix};
use crate::sri::PairMatrix;

/// Labeled `n x n` matrix; masked cells are left empty.
pub(crate) fn matrix_csv(matrix: &PairMatrix, names: &[String]) -> String {
    let mut out = String::from("feature");
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (name, row) in names.iter().zip(matrix.rows()) {
        out.push_str(name);
        for cell in row {
            out.push(',');
            if let Some(v) = cell {
                write!(out, "{v}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

/// `m` rows by `n` columns with a header of feature names.
pub fn write_shap_csv(shap: &ShapMatrix, names: &[String]) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for u in 0..shap.n_obs() {
        let row: Vec<String> = shap.row(u).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_shap_csv(path: &Path) -> Result<(ShapMatrix, Vec<String>), CliError> {
    let data = dataset::load_csv(path, true)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let shap = ShapMatrix::from_flat(data.as_flat().to_vec(), data.n_rows(), data.n_cols())?;
    Ok((shap, data.feature_names().to_vec()))
}

/// Long format `u,i,j,value` with 1-based indices, observation-major.
pub fn write_interactions_csv(inter: &InteractionTensor) -> String {
    let n = inter.n_features();
    let mut out = String::from("u,i,j,value\n");
    for u in 0..inter.n_obs() {
        for i in 0..n {
            for j in 0..n {
                writeln!(out, "{},{},{},{}", u + 1, i + 1, j + 1, inter.get(u, i, j)).unwrap();
            }
        }
    }
    out
}

/// Reads a long-format tensor that must list every `(u, i, j)` exactly once.
pub fn read_interactions_csv(
    path: &Path,
    n_obs: usize,
    n_features: usize,
) -> Result<InteractionTensor, CliError> {
    let ctx = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ctx(e.to_string()))?;
    let header = rdr.headers().map_err(|e| ctx(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["u", "i", "j", "value"] {
        return Err(ctx(format!(
            "expected header u,i,j,value, found {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let total = n_obs * n_features * n_features;
    let mut values: Vec<Option<f64>> = vec![None; total];
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| ctx(e.to_string()))?;
        let row = line + 1;
        let index = |k: usize, bound: usize, what: &str| -> Result<usize, CliError> {
            record[k]
                .parse::<usize>()
                .ok()
                .filter(|&v| (1..=bound).contains(&v))
                .map(|v| v - 1)
                .ok_or_else(|| {
                    ctx(format!(
                        "row {row}: {what} index `{}` outside 1..={bound}",
                        &record[k]
                    ))
                })
        };
        let u = index(0, n_obs, "observation")?;
        let i = index(1, n_features, "feature")?;
        let j = index(2, n_features, "feature")?;
        let value = record[3]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                ctx(format!(
                    "row {row}: `{}` is not a finite number",
                    &record[3]
                ))
            })?;
        let slot = &mut values[(u * n_features + i) * n_features + j];
        if slot.replace(value).is_some() {
            return Err(ctx(format!(
                "row {row}: duplicate entry ({}, {}, {})",
                u + 1,
                i + 1,
                j + 1
            )));
        }
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(ctx(format!(
            "{missing} of {total} entries missing for {n_obs} observations x {n_features} features"
        )));
    }
    Ok(InteractionTensor::from_flat(
        values.into_iter().flatten().collect(),
        n_obs,
        n_features,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shap_and_tensor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let shap = ShapMatrix::from_flat(vec![0.1, -2.5e-17, 1.0 / 3.0, 7.0], 2, 2).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let p = dir.path().join("shap.csv");
        std::fs::write(&p, write_shap_csv(&shap, &names)).unwrap();
        let (back, back_names) = read_shap_csv(&p).unwrap();
        assert_eq!(back, shap);
        assert_eq!(back_names, names);

        let inter =
            InteractionTensor::from_flat((0..8).map(|k| k as f64 / 7.0).collect(), 2, 2).unwrap();
        let p = dir.path().join("inter.csv");
        std::fs::write(&p, write_interactions_csv(&inter)).unwrap();
        assert_eq!(read_interactions_csv(&p, 2, 2).unwrap(), inter);
    }

    #[test]
    fn tensor_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "u,i,j,value\n1,1,1,0\n1,1,2,0\n1,2,1,0\n").unwrap();
        let err = read_interactions_csv(&p, 1, 2).unwrap_err().to_string();
        assert!(err.contains("1 of 4 entries missing"), "{err}");

        std::fs::write(&p, "u,i,j,value\n1,1,3,0\n").unwrap();
        assert!(read_interactions_csv(&p, 1, 2)
            .unwrap_err()
            .to_string()
            .contains("outside"));

        std::fs::write(&p, "u,i,j,value\n1,1,1,0\n1,1,1,0\n").unwrap();
        assert!(read_interactions_csv(&p, 1, 1)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));

        std::fs::write(&p, "a,b,c,d\n").unwrap();
        assert!(read_interactions_csv(&p, 1, 1)
            .unwrap_err()
            .to_string()
            .contains("header"));
    }

    #[test]
    fn masked_cells_are_empty() {
        let names = vec!["x1".to_string(), "x2".to_string()];
        let shap = ShapMatrix::from_flat(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let inter =
            InteractionTensor::from_flat(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], 2, 2)
                .unwrap();
        let r = crate::sri::decompose_all(&shap, &inter).unwrap();
        assert_eq!(
            matrix_csv(&r.synergy, &names),
            "feature,x1,x2\nx1,,0\nx2,0,\n"
        );
    }
}
