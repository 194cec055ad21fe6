use std::fmt::Write as _;

use serde::Serialize;

use crate::sri::{PairMatrix, SriResult};

#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background: Option<usize>,
}

/// Contents of `report.json`. `S`, `R` and `I` hold unrounded values with
/// `null` on the diagonal and for undefined pairs; `undefined_pairs` uses
/// 1-based feature indices.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    #[serde(rename = "S")]
    pub synergy: PairMatrix,
    #[serde(rename = "R")]
    pub redundancy: PairMatrix,
    #[serde(rename = "I")]
    pub independence: PairMatrix,
    pub undefined_pairs: Vec<[usize; 2]>,
    pub features: Vec<String>,
    pub meta: ReportMeta,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(
        result: &SriResult,
        names: &[String],
        meta: ReportMeta,
        warnings: Vec<String>,
    ) -> Self {
        Report {
            synergy: result.synergy.clone(),
            redundancy: result.redundancy.clone(),
            independence: result.independence.clone(),
            undefined_pairs: result
                .undefined_pairs
                .iter()
                .map(|&(i, j)| [i + 1, j + 1])
                .collect(),
            features: names.to_vec(),
            meta,
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn render_matrix(out: &mut String, label: &str, matrix: &PairMatrix, names: &[String]) {
    let width = names
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max(label.len())
        .max(4);
    write!(out, "{label:<width$}").unwrap();
    for name in names {
        write!(out, " {name:>width$}").unwrap();
    }
    out.push('\n');
    for (i, name) in names.iter().enumerate() {
        write!(out, "{name:<width$}").unwrap();
        for j in 0..names.len() {
            let cell = match matrix.get(i, j) {
                _ if i == j => "-".to_string(),
                Some(v) => format!("{v:.2}"),
                None => "n/a".to_string(),
            };
            write!(out, " {cell:>width$}").unwrap();
        }
        out.push('\n');
    }
}

/// Three labeled tables (S, R, I) with 2-decimal fixed-point values.
pub fn render_table(result: &SriResult, names: &[String]) -> String {
    let mut out = String::new();
    for (label, matrix) in [
        ("S_ij", &result.synergy),
        ("R_ij", &result.redundancy),
        ("I_ij", &result.independence),
    ] {
        render_matrix(&mut out, label, matrix, names);
        out.push('\n');
    }
    out
}
