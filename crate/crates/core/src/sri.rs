//! Synergy, redundancy and independence of feature pairs, computed from
//! SHAP vectors and SHAP interaction vectors in observation space.
//!
//! For an ordered pair `(i, j)`:
//!
//! ```text
//! phi'_ij = phi_ij - alpha*phi_ii - beta*phi_jj     (orthogonal to both main effects)
//! s_ij    = proj(phi_i onto phi'_ij)                 synergy
//! a_ij    = phi_i - s_ij                             autonomy
//! r_ij    = proj(a_ij onto a_ji)                     redundancy
//! n_ij    = a_ij - r_ij                              independence
//! S_ij = |s_ij|^2 / |phi_i|^2,  R_ij = |r_ij|^2 / |phi_i|^2,  I_ij = |n_ij|^2 / |phi_i|^2
//! ```
//!
//! All inner products are uncentered.

use std::ops::{Index, Sub};

use serde::Serialize;
use thiserror::Error;

use crate::shapley::{InteractionTensor, ShapMatrix};

/// A projection direction whose norm is at most this fraction of the
/// larger SHAP vector norm in the pair counts as zero. Interaction vectors of
/// additive models come out of the second differences as rounding noise of
/// roughly this size, and projecting onto noise would report arbitrary synergy.
pub const ZERO_DIRECTION_REL: f64 = 1e-8;

/// Relative size of the second Gram-Schmidt pivot below which the two main
/// effect vectors are treated as collinear.
pub const COLLINEAR_REL: f64 = 1e-10;

/// Slack allowed outside `[0, 1]` before clamping a scalar.
pub const SCALAR_SLACK: f64 = 1e-12;

/// Allowed deviation of `S + R + I` from one.
pub const UNITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SriError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("feature x{} has an all-zero SHAP vector", .0 + 1)]
    ZeroShapVector(usize),
    #[error("pair (x{}, x{}): {what} = {value} violates its bound", .i + 1, .j + 1)]
    Violation {
        i: usize,
        j: usize,
        what: &'static str,
        value: f64,
    },
}

/// One value per observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Self {
        SampleVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        SampleVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot_unchecked(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> SampleVector {
        SampleVector(self.0.iter().map(|v| v * c).collect())
    }

    /// `self - c * other`.
    pub fn minus_scaled(&self, c: f64, other: &SampleVector) -> SampleVector {
        SampleVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - c * b)
                .collect(),
        )
    }

    fn check_len(&self, other: &SampleVector) -> Result<(), SriError> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(SriError::LengthMismatch(self.len(), other.len()))
        }
    }
}

impl From<Vec<f64>> for SampleVector {
    fn from(v: Vec<f64>) -> Self {
        SampleVector(v)
    }
}

impl Index<usize> for SampleVector {
    type Output = f64;
    fn index(&self, u: usize) -> &f64 {
        &self.0[u]
    }
}

impl Sub for &SampleVector {
    type Output = SampleVector;
    fn sub(self, rhs: &SampleVector) -> SampleVector {
        self.minus_scaled(1.0, rhs)
    }
}

fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uncentered inner product `sum_u v_u w_u`.
pub fn dot(v: &SampleVector, w: &SampleVector) -> Result<f64, SriError> {
    v.check_len(w)?;
    Ok(dot_unchecked(&v.0, &w.0))
}

/// Projection of `v` onto the line spanned by `dir`; zero when `dir` is zero.
fn project(v: &SampleVector, dir: &SampleVector, dir_is_zero: bool) -> SampleVector {
    let dd = dir.norm_sq();
    if dir_is_zero || dd == 0.0 {
        return SampleVector::zeros(v.len());
    }
    dir.scaled(dot_unchecked(&v.0, &dir.0) / dd)
}

/// Interaction vector with both main-effect directions removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedInteraction {
    pub vector: SampleVector,
    pub alpha: f64,
    pub beta: f64,
}

/// Removes from `phi_ij` its orthogonal projection onto
/// `span{phi_ii, phi_jj}` and reports the coefficients of that projection.
///
/// The projection is built with twice-applied modified Gram-Schmidt and
/// column pivoting, so the residual stays orthogonal even when the main
/// effects are nearly parallel. When they are collinear (or one is zero) the
/// minimum-norm `(alpha, beta)` is returned; when both are zero nothing is
/// removed.
pub fn orthogonalize_interaction(
    phi_ij: &SampleVector,
    phi_ii: &SampleVector,
    phi_jj: &SampleVector,
) -> Result<CorrectedInteraction, SriError> {
    phi_ij.check_len(phi_ii)?;
    phi_ij.check_len(phi_jj)?;

    let (norm_i, norm_j) = (phi_ii.norm(), phi_jj.norm());
    if norm_i == 0.0 && norm_j == 0.0 {
        return Ok(CorrectedInteraction {
            vector: phi_ij.clone(),
            alpha: 0.0,
            beta: 0.0,
        });
    }
    // pivot: the longer main effect goes first
    let swapped = norm_j > norm_i;
    let (c1, c2, r11) = if swapped {
        (phi_jj, phi_ii, norm_j)
    } else {
        (phi_ii, phi_jj, norm_i)
    };

    let q1 = c1.scaled(1.0 / r11);
    let r12 = dot_unchecked(&q1.0, &c2.0);
    let mut w = c2.minus_scaled(r12, &q1);
    let fix = dot_unchecked(&q1.0, &w.0);
    w = w.minus_scaled(fix, &q1);
    let r12 = r12 + fix;
    let r22 = w.norm();

    let remove = |v: &SampleVector, basis: &[&SampleVector]| {
        let mut out = v.clone();
        for _ in 0..2 {
            for q in basis {
                let c = dot_unchecked(&q.0, &out.0);
                out = out.minus_scaled(c, q);
            }
        }
        out
    };

    let (t1, t2, vector) = if r22 > COLLINEAR_REL * r11 {
        let q2 = w.scaled(1.0 / r22);
        let p1 = dot_unchecked(&q1.0, &phi_ij.0);
        let p2 = dot_unchecked(&q2.0, &phi_ij.0);
        let t2 = p2 / r22;
        let t1 = (p1 - r12 * t2) / r11;
        (t1, t2, remove(phi_ij, &[&q1, &q2]))
    } else {
        // c2 ≈ ratio * c1; the minimum-norm split of the single coefficient
        // t along (1, ratio)
        let ratio = r12 / r11;
        let t = dot_unchecked(&q1.0, &phi_ij.0) / r11;
        let scale = t / (1.0 + ratio * ratio);
        (scale, scale * ratio, remove(phi_ij, &[&q1]))
    };

    let (alpha, beta) = if swapped { (t2, t1) } else { (t1, t2) };
    Ok(CorrectedInteraction {
        vector,
        alpha,
        beta,
    })
}

/// Synergy/autonomy split of `phi` against the corrected interaction
/// direction. `scale` sets the zero threshold for the direction.
fn split_synergy(
    phi: &SampleVector,
    corrected: &SampleVector,
    scale: f64,
) -> (SampleVector, SampleVector) {
    let negligible = corrected.norm() <= ZERO_DIRECTION_REL * scale;
    let syn = project(phi, corrected, negligible);
    let aut = phi - &syn;
    (syn, aut)
}

/// Autonomy vector `a_ji = phi_j - proj(phi_j onto phi'_ij)`, the input
/// [`decompose_pair`] needs for the reverse direction.
pub fn autonomy_vector(
    phi_j: &SampleVector,
    phi_i: &SampleVector,
    corrected: &CorrectedInteraction,
) -> Result<SampleVector, SriError> {
    phi_j.check_len(phi_i)?;
    phi_j.check_len(&corrected.vector)?;
    let scale = phi_i.norm().max(phi_j.norm());
    Ok(split_synergy(phi_j, &corrected.vector, scale).1)
}

/// Decomposition vectors of one ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDecomposition {
    pub i: usize,
    pub j: usize,
    pub syn: SampleVector,
    pub aut: SampleVector,
    pub red: SampleVector,
    pub ind: SampleVector,
    pub corrected_interaction: SampleVector,
    pub alpha: f64,
    pub beta: f64,
    /// `a_ji`, the reverse-pair autonomy vector `red` was projected onto.
    pub aut_reverse: SampleVector,
    /// The corrected interaction was below the zero threshold (no synergy).
    pub interaction_negligible: bool,
    /// `a_ji` was below the zero threshold (no redundancy).
    pub reverse_negligible: bool,
}

/// Splits `phi_i` into synergy, redundancy and independence with respect to
/// feature `j`. The pair indices are left at zero; [`decompose_all`] fills
/// them in.
///
/// A corrected interaction shorter than [`ZERO_DIRECTION_REL`] times the
/// larger SHAP vector norm gives zero synergy; the same threshold relative to
/// `|phi_j|` applied to `aut_j_given_i` gives zero redundancy.
pub fn decompose_pair(
    phi_i: &SampleVector,
    phi_j: &SampleVector,
    corrected: &CorrectedInteraction,
    aut_j_given_i: &SampleVector,
) -> Result<PairDecomposition, SriError> {
    phi_i.check_len(phi_j)?;
    phi_i.check_len(&corrected.vector)?;
    phi_i.check_len(aut_j_given_i)?;

    let scale = phi_i.norm().max(phi_j.norm());
    let interaction_negligible = corrected.vector.norm() <= ZERO_DIRECTION_REL * scale;
    let (syn, aut) = split_synergy(phi_i, &corrected.vector, scale);
    let reverse_negligible = aut_j_given_i.norm() <= ZERO_DIRECTION_REL * phi_j.norm();
    let red = project(&aut, aut_j_given_i, reverse_negligible);
    let ind = &aut - &red;
    Ok(PairDecomposition {
        i: 0,
        j: 0,
        syn,
        aut,
        red,
        ind,
        corrected_interaction: corrected.vector.clone(),
        alpha: corrected.alpha,
        beta: corrected.beta,
        aut_reverse: aut_j_given_i.clone(),
        interaction_negligible,
        reverse_negligible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SriScalars {
    pub synergy: f64,
    pub redundancy: f64,
    pub independence: f64,
}

fn clamp_unit(value: f64, i: usize, j: usize, what: &'static str) -> Result<f64, SriError> {
    if !(-SCALAR_SLACK..=1.0 + SCALAR_SLACK).contains(&value) {
        return Err(SriError::Violation { i, j, what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Squared-norm fractions of `phi_i` carried by the synergy, redundancy
/// and independence vectors.
pub fn sri_scalars(d: &PairDecomposition, phi_i: &SampleVector) -> Result<SriScalars, SriError> {
    phi_i.check_len(&d.syn)?;
    let total = phi_i.norm_sq();
    if total == 0.0 {
        return Err(SriError::ZeroShapVector(d.i));
    }
    let s = d.syn.norm_sq() / total;
    let r = d.red.norm_sq() / total;
    let ind = d.ind.norm_sq() / total;
    let sum = s + r + ind;
    if (sum - 1.0).abs() > UNITY_TOL {
        return Err(SriError::Violation {
            i: d.i,
            j: d.j,
            what: "S + R + I",
            value: sum,
        });
    }
    Ok(SriScalars {
        synergy: clamp_unit(s, d.i, d.j, "S")?,
        redundancy: clamp_unit(r, d.i, d.j, "R")?,
        independence: clamp_unit(ind, d.i, d.j, "I")?,
    })
}

/// Square matrix with masked cells (`None`): the diagonal and undefined pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PairMatrix(Vec<Vec<Option<f64>>>);

impl PairMatrix {
    fn masked(n: usize) -> Self {
        PairMatrix(vec![vec![None; n]; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.0[i][j]
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.0
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[i][j] = Some(v);
    }
}

/// S, R and I for every ordered pair, with the vectors behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct SriResult {
    pub synergy: PairMatrix,
    pub redundancy: PairMatrix,
    pub independence: PairMatrix,
    /// Ordered pairs `(i, j)` left undefined because `phi_i` is zero.
    pub undefined_pairs: Vec<(usize, usize)>,
    /// Decompositions of all ordered pairs `i != j`, in row-major order.
    pub pairs: Vec<PairDecomposition>,
}

impl SriResult {
    pub fn n_features(&self) -> usize {
        self.synergy.n()
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairDecomposition> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }

    /// Largest `|S + R + I - 1|` over defined pairs.
    pub fn max_unity_error(&self) -> f64 {
        let n = self.n_features();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if let (Some(s), Some(r), Some(v)) = (
                    self.synergy.get(i, j),
                    self.redundancy.get(i, j),
                    self.independence.get(i, j),
                ) {
                    worst = worst.max((s + r + v - 1.0).abs());
                }
            }
        }
        worst
    }
}

/// Runs the decomposition for every ordered pair of features.
///
/// Each unordered pair is corrected once (the corrected vector is the same
/// for both orders, with `alpha`/`beta` swapped), and both autonomy vectors
/// are formed before either redundancy vector.
pub fn decompose_all(shap: &ShapMatrix, inter: &InteractionTensor) -> Result<SriResult, SriError> {
    let (m, n) = (shap.n_obs(), shap.n_features());
    if inter.n_obs() != m || inter.n_features() != n {
        return Err(SriError::Dimension(format!(
            "SHAP matrix is {m}x{n} but interaction tensor is {}x{}x{}",
            inter.n_obs(),
            inter.n_features(),
            inter.n_features()
        )));
    }
    let phi: Vec<SampleVector> = (0..n).map(|i| shap.column(i).into()).collect();
    let main: Vec<SampleVector> = (0..n).map(|i| inter.vector(i, i).into()).collect();

    let mut synergy = PairMatrix::masked(n);
    let mut redundancy = PairMatrix::masked(n);
    let mut independence = PairMatrix::masked(n);
    let mut slots: Vec<Option<PairDecomposition>> = vec![None; n * n];

    for i in 0..n {
        for j in i + 1..n {
            let phi_ij: SampleVector = inter.vector(i, j).into();
            let forward = orthogonalize_interaction(&phi_ij, &main[i], &main[j])?;
            let backward = CorrectedInteraction {
                vector: forward.vector.clone(),
                alpha: forward.beta,
                beta: forward.alpha,
            };
            let a_ij = autonomy_vector(&phi[i], &phi[j], &forward)?;
            let a_ji = autonomy_vector(&phi[j], &phi[i], &backward)?;

            let mut d_ij = decompose_pair(&phi[i], &phi[j], &forward, &a_ji)?;
            (d_ij.i, d_ij.j) = (i, j);
            let mut d_ji = decompose_pair(&phi[j], &phi[i], &backward, &a_ij)?;
            (d_ji.i, d_ji.j) = (j, i);
            slots[i * n + j] = Some(d_ij);
            slots[j * n + i] = Some(d_ji);
        }
    }

    let mut undefined_pairs = Vec::new();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
    for d in slots.into_iter().flatten() {
        match sri_scalars(&d, &phi[d.i]) {
            Ok(sc) => {
                synergy.set(d.i, d.j, sc.synergy);
                redundancy.set(d.i, d.j, sc.redundancy);
                independence.set(d.i, d.j, sc.independence);
            }
            Err(SriError::ZeroShapVector(_)) => undefined_pairs.push((d.i, d.j)),
            Err(e) => return Err(e),
        }
        pairs.push(d);
    }

    Ok(SriResult {
        synergy,
        redundancy,
        independence,
        undefined_pairs,
        pairs,
    })
}
