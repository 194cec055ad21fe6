//! Brute-force oracles for checking [`crate::shapley`]. They trade speed for
//! a different summation structure: orderings instead of subsets, or a
//! closed form.

use thiserror::Error;

use crate::dataset::BackgroundSet;
use crate::expr::ModelExpr;
use crate::shapley::{coalition_value, CoalitionMask, ShapleyError};

/// Largest feature count the permutation oracle accepts (8! orderings).
pub const MAX_ORACLE_FEATURES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("permutation oracle supports at most {MAX_ORACLE_FEATURES} features, got {0}")]
    TooManyFeatures(usize),
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
}

/// Shapley values averaged over all `n!` orderings of the features.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationOracleResult {
    pub phi: Vec<f64>,
}

/// Heap's algorithm, calling `visit` once per permutation.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn shapley_by_permutations(
    model: &ModelExpr,
    x: &[f64],
    bg: &BackgroundSet,
) -> Result<PermutationOracleResult, OracleError> {
    let n = model.n_features();
    if n > MAX_ORACLE_FEATURES {
        return Err(OracleError::TooManyFeatures(n));
    }
    // f_x(S) is memoized only to keep n = 8 tractable; the ordering sum
    // itself is independent of the subset loop in `shapley`.
    let mut memo: Vec<Option<f64>> = vec![None; 1 << n];
    let mut value = |mask: CoalitionMask| -> Result<f64, ShapleyError> {
        if let Some(v) = memo[mask.0 as usize] {
            return Ok(v);
        }
        let v = coalition_value(model, x, mask, bg)?;
        memo[mask.0 as usize] = Some(v);
        Ok(v)
    };

    let mut totals = vec![0.0; n];
    let mut count = 0u64;
    let mut failure = None;
    for_each_permutation(n, |order| {
        if failure.is_some() {
            return;
        }
        let mut before = CoalitionMask::EMPTY;
        for &player in order {
            let after = before.with(player);
            match (value(before), value(after)) {
                (Ok(a), Ok(b)) => totals[player] += b - a,
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    return;
                }
            }
            before = after;
        }
        count += 1;
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(PermutationOracleResult {
        phi: totals.into_iter().map(|t| t / count as f64).collect(),
    })
}

/// SHAP values of `sum_i c_i x_i + b`: `c_i * (x_i - mean of background column i)`.
pub fn linear_shap_closed_form(
    coefficients: &[f64],
    _intercept: f64,
    x: &[f64],
    bg: &BackgroundSet,
) -> Vec<f64> {
    coefficients
        .iter()
        .zip(x)
        .enumerate()
        .map(|(i, (c, xi))| c * (xi - bg.column_mean(i)))
        .collect()
}
