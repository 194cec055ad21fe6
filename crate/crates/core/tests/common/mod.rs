#![allow(dead_code)]

use rand::Rng;
use sri::dataset::{BackgroundSet, Dataset};
use sri::sri::{PairDecomposition, SampleVector};

/// Random smooth model over `n` features built from `+ - *`, `sin`, `cos`,
/// `exp` and squares; every feature appears at least once.
pub fn random_model_text(rng: &mut impl Rng, n: usize) -> String {
    fn term(rng: &mut impl Rng, n: usize, depth: u32) -> String {
        if depth == 0 || rng.gen_bool(0.3) {
            return if rng.gen_bool(0.75) {
                format!("x{}", rng.gen_range(1..=n))
            } else {
                format!("{:.3}", rng.gen_range(0.1..2.0))
            };
        }
        let a = term(rng, n, depth - 1);
        match rng.gen_range(0..7) {
            0 => format!("({a} + {})", term(rng, n, depth - 1)),
            1 => format!("({a} - {})", term(rng, n, depth - 1)),
            2 | 3 => format!("{a} * {}", term(rng, n, depth - 1)),
            4 => format!("sin({a})"),
            5 => format!("cos({a})"),
            _ => format!("({a})^2"),
        }
    }
    let mut parts: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| term(rng, n, 3)).collect();
    for k in 1..=n {
        if rng.gen_bool(0.5) {
            parts.push(format!(
                "{:.3} * x{k} * {}",
                rng.gen_range(-2.0..2.0f64).abs(),
                term(rng, n, 1)
            ));
        } else {
            parts.push(format!("exp(0.5 * x{k})"));
        }
    }
    parts.join(" + ")
}

pub fn random_rows(rng: &mut impl Rng, rows: usize, n: usize) -> Dataset {
    Dataset::from_rows(
        (0..rows)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.5)).collect())
            .collect(),
    )
    .unwrap()
}

pub fn random_background(rng: &mut impl Rng, rows: usize, n: usize) -> BackgroundSet {
    random_rows(rng, rows, n).into()
}

pub fn random_vector(rng: &mut impl Rng, m: usize) -> SampleVector {
    SampleVector::new((0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

pub fn dotp(a: &SampleVector, b: &SampleVector) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .sum()
}

/// Squared uncentered correlation, 0 when either side is a zero vector.
pub fn corr_sq(a: &SampleVector, b: &SampleVector) -> f64 {
    let (aa, bb) = (dotp(a, a), dotp(b, b));
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        dotp(a, b).powi(2) / (aa * bb)
    }
}

/// The three characterizations of S, R and I for one pair:
/// `[[projection, norm ratio, correlation], ...]` in S, R, I order.
pub fn characterizations(d: &PairDecomposition, phi_i: &SampleVector) -> [[f64; 3]; 3] {
    let total = dotp(phi_i, phi_i);
    let s_corr = if d.interaction_negligible {
        0.0
    } else {
        corr_sq(phi_i, &d.corrected_interaction)
    };
    let s = [
        dotp(&d.syn, phi_i) / total,
        dotp(&d.syn, &d.syn) / total,
        s_corr,
    ];
    let r_corr = if d.reverse_negligible {
        0.0
    } else {
        (1.0 - s_corr) * corr_sq(&d.aut, &d.aut_reverse)
    };
    let r = [
        dotp(&d.red, phi_i) / total,
        dotp(&d.red, &d.red) / total,
        r_corr,
    ];
    let i = [
        dotp(&d.ind, phi_i) / total,
        dotp(&d.ind, &d.ind) / total,
        1.0 - s_corr - r_corr,
    ];
    [s, r, i]
}

/// Largest disagreement between the three forms of any scalar.
pub fn characterization_gap(d: &PairDecomposition, phi_i: &SampleVector) -> f64 {
    characterizations(d, phi_i)
        .iter()
        .map(|forms| {
            let lo = forms.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = forms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Relative violations of the decomposition geometry for one pair:
/// identity, pairwise orthogonality, Pythagoras.
pub fn geometry_errors(d: &PairDecomposition, phi_i: &SampleVector) -> (f64, f64, f64) {
    let norm_sq = dotp(phi_i, phi_i);
    let norm = norm_sq.sqrt();
    let identity = (0..phi_i.len())
        .map(|u| (d.syn[u] + d.red[u] + d.ind[u] - phi_i[u]).abs())
        .fold(0.0, f64::max)
        / norm;
    let ortho = [
        dotp(&d.syn, &d.red),
        dotp(&d.syn, &d.ind),
        dotp(&d.red, &d.ind),
    ]
    .iter()
    .map(|v| v.abs())
    .fold(0.0, f64::max)
        / norm_sq;
    let pyth = (dotp(&d.syn, &d.syn) + dotp(&d.red, &d.red) + dotp(&d.ind, &d.ind) - norm_sq).abs()
        / norm_sq;
    (identity, ortho, pyth)
}

/// `max(|<phi', phi_ii>|, |<phi', phi_jj>|) / (|phi_ij| * max(|phi_ii|, |phi_jj|))`.
pub fn correction_orthogonality(
    corrected: &SampleVector,
    phi_ij: &SampleVector,
    phi_ii: &SampleVector,
    phi_jj: &SampleVector,
) -> f64 {
    let scale =
        dotp(phi_ij, phi_ij).sqrt() * dotp(phi_ii, phi_ii).sqrt().max(dotp(phi_jj, phi_jj).sqrt());
    if scale == 0.0 {
        return 0.0;
    }
    dotp(corrected, phi_ii)
        .abs()
        .max(dotp(corrected, phi_jj).abs())
        / scale
}
