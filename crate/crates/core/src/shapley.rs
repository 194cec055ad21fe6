//! Exact Shapley values and SHAP interaction values by enumerating all
//! `2^n` coalitions of an observation.
//!
//! The value of a coalition `S` for observation `x` is the interventional
//! expectation over a background set: every background row is spliced with
//! `x` on the features in `S` and the model outputs are averaged.
//!
//! Coalitions are visited in increasing mask order and every sum
//! accumulates in that order, so results do not depend on how observations
//! are scheduled across threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{BackgroundSet, Dataset};
use crate::expr::{EvalError, ModelExpr};

/// Hard ceiling on the number of features; the value cache holds `2^n` entries.
pub const MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapleyError {
    #[error("{n} features exceed the enumeration limit of {limit}")]
    TooManyFeatures { n: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("model evaluation failed on background row {row}: {source}")]
    Background {
        row: usize,
        #[source]
        source: EvalError,
    },
    #[error("model evaluation failed on the explained point: {0}")]
    Point(#[source] EvalError),
}

/// A failure while explaining one observation of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFailure {
    pub row: usize,
    pub error: ShapleyError,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error(transparent)]
    Setup(#[from] ShapleyError),
    #[error("{} observation(s) failed, first at row {}: {}", .0.len(), .0[0].row, .0[0].error)]
    Observations(Vec<ObservationFailure>),
}

/// Subset of features as a bitset; bit `i` set means feature `i` is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoalitionMask(pub u32);

impl CoalitionMask {
    pub const EMPTY: CoalitionMask = CoalitionMask(0);

    pub fn full(n: usize) -> Self {
        CoalitionMask(((1u64 << n) - 1) as u32)
    }

    pub fn from_features(features: &[usize]) -> Self {
        CoalitionMask(features.iter().fold(0, |acc, &i| acc | (1 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        CoalitionMask(self.0 | 1 << i)
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    // exact: each partial product is itself a binomial coefficient
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Coalition-size weights for `n` players.
///
/// `single[s] = s!(n-s-1)!/n! = 1/(n * C(n-1, s))` and
/// `pair[s] = s!(n-s-2)!/(2(n-1)!) = 1/(2(n-1) * C(n-2, s))`; the binomials
/// are exact integers for `n <= 20`, so each weight is one correctly rounded
/// division.
#[derive(Debug, Clone)]
pub struct ShapleyWeights {
    single: Vec<f64>,
    pair: Vec<f64>,
}

impl ShapleyWeights {
    pub fn new(n: usize) -> Self {
        let single = (0..n)
            .map(|s| 1.0 / (n as f64 * binomial(n - 1, s) as f64))
            .collect();
        let pair = if n >= 2 {
            (0..n - 1)
                .map(|s| 1.0 / (2.0 * (n - 1) as f64 * binomial(n - 2, s) as f64))
                .collect()
        } else {
            Vec::new()
        };
        ShapleyWeights { single, pair }
    }

    pub fn single(&self, size: usize) -> f64 {
        self.single[size]
    }

    pub fn pair(&self, size: usize) -> f64 {
        self.pair[size]
    }
}

fn check_dims(model: &ModelExpr, x: &[f64], bg: &BackgroundSet) -> Result<(), ShapleyError> {
    let n = model.n_features();
    if x.len() != n {
        return Err(ShapleyError::Dimension(format!(
            "observation has {} values, model expects {n}",
            x.len()
        )));
    }
    if bg.n_cols() != n {
        return Err(ShapleyError::Dimension(format!(
            "background has {} columns, model expects {n}",
            bg.n_cols()
        )));
    }
    Ok(())
}

fn check_limit(n: usize, limit: usize) -> Result<(), ShapleyError> {
    let limit = limit.min(MAX_FEATURES);
    if n > limit {
        Err(ShapleyError::TooManyFeatures { n, limit })
    } else {
        Ok(())
    }
}

/// Interventional coalition value with a caller-provided scratch buffer.
fn splice_mean(
    model: &ModelExpr,
    x: &[f64],
    mask: CoalitionMask,
    bg: &BackgroundSet,
    z: &mut [f64],
) -> Result<f64, ShapleyError> {
    let n = x.len();
    if mask == CoalitionMask::full(n) {
        return model.evaluate(x).map_err(ShapleyError::Point);
    }
    let mut sum = 0.0;
    for (row, b) in bg.rows().enumerate() {
        for i in 0..n {
            z[i] = if mask.contains(i) { x[i] } else { b[i] };
        }
        sum += model
            .evaluate(z)
            .map_err(|source| ShapleyError::Background { row, source })?;
    }
    Ok(sum / bg.n_rows() as f64)
}

/// `f_x(S)`: mean model output over background rows with features in `S`
/// taken from `x`. The full coalition returns `f(x)` itself.
pub fn coalition_value(
    model: &ModelExpr,
    x: &[f64],
    mask: CoalitionMask,
    bg: &BackgroundSet,
) -> Result<f64, ShapleyError> {
    check_dims(model, x, bg)?;
    let n = x.len();
    if n < 32 && mask.0 >> n != 0 {
        return Err(ShapleyError::Dimension(format!(
            "coalition mask {:#b} names features beyond {n}",
            mask.0
        )));
    }
    let mut z = vec![0.0; n];
    splice_mean(model, x, mask, bg, &mut z)
}

/// All `2^n` coalition values of one observation, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionValueCache {
    n_features: usize,
    values: Vec<f64>,
}

impl CoalitionValueCache {
    pub fn build(
        model: &ModelExpr,
        x: &[f64],
        bg: &BackgroundSet,
        max_features: usize,
    ) -> Result<Self, ShapleyError> {
        check_dims(model, x, bg)?;
        let n = x.len();
        check_limit(n, max_features)?;
        let mut z = vec![0.0; n];
        let values = (0..1u32 << n)
            .map(|m| splice_mean(model, x, CoalitionMask(m), bg, &mut z))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CoalitionValueCache {
            n_features: n,
            values,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, mask: CoalitionMask) -> f64 {
        self.values[mask.0 as usize]
    }

    /// `f(x)`.
    pub fn prediction(&self) -> f64 {
        *self.values.last().expect("cache is never empty")
    }

    /// `E[f]` over the background.
    pub fn expected_value(&self) -> f64 {
        self.values[0]
    }

    pub fn shap_values(&self, weights: &ShapleyWeights) -> Vec<f64> {
        let n = self.n_features;
        let v = &self.values;
        (0..n)
            .map(|i| {
                let bit = 1usize << i;
                let mut phi = 0.0;
                for s in 0..v.len() {
                    if s & bit == 0 {
                        let size = s.count_ones() as usize;
                        phi += weights.single(size) * (v[s | bit] - v[s]);
                    }
                }
                phi
            })
            .collect()
    }

    /// Row-major `n x n` interaction matrix. Off-diagonal entries use the
    /// pairwise second difference; the diagonal holds the main effect
    /// `phi_i - sum_{j != i} phi_ij`, so each row sums to `phi[i]`.
    pub fn interaction_values(&self, weights: &ShapleyWeights, phi: &[f64]) -> Vec<f64> {
        let n = self.n_features;
        let v = &self.values;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let (bi, bj) = (1usize << i, 1usize << j);
                let mut acc = 0.0;
                for s in 0..v.len() {
                    if s & (bi | bj) == 0 {
                        let size = s.count_ones() as usize;
                        let nabla = v[s | bi | bj] - v[s | bi] - (v[s | bj] - v[s]);
                        acc += weights.pair(size) * nabla;
                    }
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc;
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| out[i * n + j]).sum();
            out[i * n + i] = phi[i] - off;
        }
        out
    }
}

/// Exact SHAP values of one observation under the default feature limit.
pub fn shap_values(
    model: &ModelExpr,
    x: &[f64],
    bg: &BackgroundSet,
) -> Result<Vec<f64>, ShapleyError> {
    let cache = CoalitionValueCache::build(model, x, bg, MAX_FEATURES)?;
    Ok(cache.shap_values(&ShapleyWeights::new(x.len())))
}

/// Exact SHAP interaction matrix (row-major `n x n`) of one observation.
pub fn interaction_values(
    model: &ModelExpr,
    x: &[f64],
    bg: &BackgroundSet,
) -> Result<Vec<f64>, ShapleyError> {
    let cache = CoalitionValueCache::build(model, x, bg, MAX_FEATURES)?;
    let weights = ShapleyWeights::new(x.len());
    let phi = cache.shap_values(&weights);
    Ok(cache.interaction_values(&weights, &phi))
}

/// `m x n` SHAP values; column `i` is the SHAP vector of feature `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    values: Vec<f64>,
    n_obs: usize,
    n_features: usize,
}

impl ShapMatrix {
    pub fn from_flat(
        values: Vec<f64>,
        n_obs: usize,
        n_features: usize,
    ) -> Result<Self, ShapleyError> {
        if n_obs == 0 || n_features == 0 || values.len() != n_obs * n_features {
            return Err(ShapleyError::Dimension(format!(
                "{} values for a {n_obs}x{n_features} SHAP matrix",
                values.len()
            )));
        }
        Ok(ShapMatrix {
            values,
            n_obs,
            n_features,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, u: usize, i: usize) -> f64 {
        self.values[u * self.n_features + i]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.n_features..(u + 1) * self.n_features]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n_obs).map(|u| self.get(u, i)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        ShapMatrix {
            values: self.values.iter().map(|v| v * c).collect(),
            ..*self
        }
    }
}

/// `m x n x n` SHAP interaction values, stored observation-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTensor {
    values: Vec<f64>,
    n_obs: usize,
    n_features: usize,
}

impl InteractionTensor {
    pub fn from_flat(
        values: Vec<f64>,
        n_obs: usize,
        n_features: usize,
    ) -> Result<Self, ShapleyError> {
        if n_obs == 0 || n_features == 0 || values.len() != n_obs * n_features * n_features {
            return Err(ShapleyError::Dimension(format!(
                "{} values for a {n_obs}x{n_features}x{n_features} interaction tensor",
                values.len()
            )));
        }
        Ok(InteractionTensor {
            values,
            n_obs,
            n_features,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, u: usize, i: usize, j: usize) -> f64 {
        let n = self.n_features;
        self.values[(u * n + i) * n + j]
    }

    /// The `n x n` matrix of observation `u`, row-major.
    pub fn matrix(&self, u: usize) -> &[f64] {
        let nn = self.n_features * self.n_features;
        &self.values[u * nn..(u + 1) * nn]
    }

    /// Interaction vector `(phi_ij^(1), ..., phi_ij^(m))`.
    pub fn vector(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.n_obs).map(|u| self.get(u, i, j)).collect()
    }

    /// Largest `|phi_ij - phi_ji|` with its location `(u, i, j)`.
    pub fn max_asymmetry(&self) -> (f64, (usize, usize, usize)) {
        let n = self.n_features;
        let mut worst = (0.0, (0, 0, 0));
        for u in 0..self.n_obs {
            for i in 0..n {
                for j in i + 1..n {
                    let d = (self.get(u, i, j) - self.get(u, j, i)).abs();
                    if d > worst.0 || d.is_nan() {
                        worst = (d, (u, i, j));
                    }
                }
            }
        }
        worst
    }

    pub fn scaled(&self, c: f64) -> Self {
        InteractionTensor {
            values: self.values.iter().map(|v| v * c).collect(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapConfig {
    pub max_features: usize,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
}

impl Default for ShapConfig {
    fn default() -> Self {
        ShapConfig {
            max_features: MAX_FEATURES,
            workers: 0,
        }
    }
}

/// Per-dataset explanation results.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub shap: ShapMatrix,
    pub interactions: InteractionTensor,
    /// `f(x)` per observation.
    pub predictions: Vec<f64>,
    /// Mean model output over the background.
    pub expected_value: f64,
}

struct ObservationResult {
    phi: Vec<f64>,
    inter: Vec<f64>,
    prediction: f64,
    expected: f64,
}

/// Explains every observation of `data`. Each observation fills its own
/// coalition cache once and derives both SHAP and interaction values from
/// it; outputs are identical for any worker count.
pub fn explain_dataset(
    model: &ModelExpr,
    data: &Dataset,
    bg: &BackgroundSet,
    config: &ShapConfig,
) -> Result<Explanation, ExplainError> {
    let n = model.n_features();
    if data.n_cols() != n {
        return Err(ShapleyError::Dimension(format!(
            "dataset has {} columns, model expects {n}",
            data.n_cols()
        ))
        .into());
    }
    if bg.n_cols() != n {
        return Err(ShapleyError::Dimension(format!(
            "background has {} columns, model expects {n}",
            bg.n_cols()
        ))
        .into());
    }
    check_limit(n, config.max_features)?;

    let weights = ShapleyWeights::new(n);
    let explain_one = |x: &[f64]| -> Result<ObservationResult, ShapleyError> {
        let cache = CoalitionValueCache::build(model, x, bg, config.max_features)?;
        let phi = cache.shap_values(&weights);
        let inter = cache.interaction_values(&weights, &phi);
        Ok(ObservationResult {
            prediction: cache.prediction(),
            expected: cache.expected_value(),
            phi,
            inter,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| ShapleyError::Dimension(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<ObservationResult, ShapleyError>> = pool.install(|| {
        (0..data.n_rows())
            .into_par_iter()
            .map(|u| explain_one(data.row(u)))
            .collect()
    });

    let m = data.n_rows();
    let mut shap = Vec::with_capacity(m * n);
    let mut inter = Vec::with_capacity(m * n * n);
    let mut predictions = Vec::with_capacity(m);
    let mut expected_value = 0.0;
    let mut failures = Vec::new();
    for (row, result) in results.into_iter().enumerate() {
        match result {
            Ok(r) => {
                shap.extend(r.phi);
                inter.extend(r.inter);
                predictions.push(r.prediction);
                expected_value = r.expected;
            }
            Err(error) => failures.push(ObservationFailure { row, error }),
        }
    }
    if !failures.is_empty() {
        return Err(ExplainError::Observations(failures));
    }
    Ok(Explanation {
        shap: ShapMatrix::from_flat(shap, m, n)?,
        interactions: InteractionTensor::from_flat(inter, m, n)?,
        predictions,
        expected_value,
    })
}
