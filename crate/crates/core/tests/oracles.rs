//! Cross-checks of the exact explainer and the decomposition against
//! independent computations.

mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sri::dataset::{generate_paper_dataset, BackgroundSet, Dataset, RngSeed};
use sri::expr::{parse_model, BENCHMARK_MODEL};
use sri::reference::{linear_shap_closed_form, shapley_by_permutations};
use sri::shapley::{explain_dataset, shap_values, InteractionTensor, ShapConfig, ShapMatrix};
use sri::sri::{
    autonomy_vector, decompose_all, decompose_pair, orthogonalize_interaction, SampleVector,
};

#[test]
fn permutation_oracle_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let text = random_model_text(&mut rng, n);
        let model = parse_model(&text, n).unwrap();
        let k = rng.gen_range(1..=5);
        let bg = random_background(&mut rng, k, n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let fast = shap_values(&model, &x, &bg).unwrap();
        let slow = shapley_by_permutations(&model, &x, &bg).unwrap().phi;
        for i in 0..n {
            assert!(
                (fast[i] - slow[i]).abs() <= 1e-9,
                "{text}: feature {i}: {} vs {}",
                fast[i],
                slow[i]
            );
        }
    }
}

#[test]
fn benchmark_model_matches_permutation_oracle() {
    let data = generate_paper_dataset(40, RngSeed(5)).unwrap();
    let bg = BackgroundSet::full(&data);
    let model = parse_model(BENCHMARK_MODEL, 5).unwrap();
    for u in [0, 17, 39] {
        let x = data.row(u);
        let fast = shap_values(&model, x, &bg).unwrap();
        let slow = shapley_by_permutations(&model, x, &bg).unwrap().phi;
        for i in 0..5 {
            assert!((fast[i] - slow[i]).abs() <= 1e-9);
        }
    }
}

#[test]
fn additive_models_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.gen_range(1..=6);
        let coef: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let intercept = rng.gen_range(-1.0..1.0f64);
        let mut text = format!("{intercept:.17}");
        for (k, c) in coef.iter().enumerate() {
            let sign = if *c < 0.0 { '-' } else { '+' };
            text.push_str(&format!(" {sign} {:.17} * x{}", c.abs(), k + 1));
        }
        let model = parse_model(&text, n).unwrap();
        let bg = random_background(&mut rng, 7, n);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let got = shap_values(&model, &x, &bg).unwrap();
        let want = linear_shap_closed_form(&coef, intercept, &x, &bg);
        for i in 0..n {
            assert!((got[i] - want[i]).abs() <= 1e-9, "{text}");
        }
    }
}

#[test]
fn duplicated_features_get_equal_shap_columns() {
    let data = generate_paper_dataset(60, RngSeed(21)).unwrap();
    let model = parse_model(BENCHMARK_MODEL, 5).unwrap();
    let ex = explain_dataset(
        &model,
        &data,
        &BackgroundSet::full(&data),
        &ShapConfig::default(),
    )
    .unwrap();
    let (a, b) = (ex.shap.column(1), ex.shap.column(2));
    for u in 0..60 {
        assert!((a[u] - b[u]).abs() <= 1e-12);
    }
}

#[test]
fn explanation_is_identical_across_worker_counts() {
    let data = generate_paper_dataset(50, RngSeed(8)).unwrap();
    let model = parse_model(BENCHMARK_MODEL, 5).unwrap();
    let bg = BackgroundSet::full(&data);
    let one = explain_dataset(
        &model,
        &data,
        &bg,
        &ShapConfig {
            workers: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let many = explain_dataset(
        &model,
        &data,
        &bg,
        &ShapConfig {
            workers: 4,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(one, many);
}

/// Straight-line computation of the pair definitions for two features,
/// using a Cramer's-rule Gram solve instead of Gram-Schmidt.
#[test]
fn two_feature_decomposition_matches_manual_steps() {
    let phi1 = [1.0, 0.5, -0.2, 0.7];
    let phi2 = [0.3, -0.4, 0.8, 0.1];
    let phi12 = [0.6, 0.1, 0.2, -0.3];
    let m = 4;
    let main1: Vec<f64> = (0..m).map(|u| phi1[u] - phi12[u]).collect();
    let main2: Vec<f64> = (0..m).map(|u| phi2[u] - phi12[u]).collect();

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let proj = |v: &[f64], d: &[f64]| -> Vec<f64> {
        let c = dot(v, d) / dot(d, d);
        d.iter().map(|x| c * x).collect()
    };
    let sub = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };

    let (g11, g12, g22) = (
        dot(&main1, &main1),
        dot(&main1, &main2),
        dot(&main2, &main2),
    );
    let (b1, b2) = (dot(&main1, &phi12), dot(&main2, &phi12));
    let det = g11 * g22 - g12 * g12;
    let alpha = (b1 * g22 - g12 * b2) / det;
    let beta = (g11 * b2 - g12 * b1) / det;
    let corrected: Vec<f64> = (0..m)
        .map(|u| phi12[u] - alpha * main1[u] - beta * main2[u])
        .collect();

    let s12 = proj(&phi1, &corrected);
    let a12 = sub(&phi1, &s12);
    let s21 = proj(&phi2, &corrected);
    let a21 = sub(&phi2, &s21);
    let r12 = proj(&a12, &a21);
    let n12 = sub(&a12, &r12);
    let r21 = proj(&a21, &a12);
    let n21 = sub(&a21, &r21);
    let want = [
        [dot(&s12, &s12), dot(&r12, &r12), dot(&n12, &n12)].map(|v| v / dot(&phi1, &phi1)),
        [dot(&s21, &s21), dot(&r21, &r21), dot(&n21, &n21)].map(|v| v / dot(&phi2, &phi2)),
    ];

    let mut shap = Vec::new();
    let mut tensor = Vec::new();
    for u in 0..m {
        shap.extend([phi1[u], phi2[u]]);
        tensor.extend([main1[u], phi12[u], phi12[u], main2[u]]);
    }
    let shap = ShapMatrix::from_flat(shap, m, 2).unwrap();
    let inter = InteractionTensor::from_flat(tensor, m, 2).unwrap();
    let r = decompose_all(&shap, &inter).unwrap();
    for (i, j, row) in [(0, 1, want[0]), (1, 0, want[1])] {
        let got = [
            r.synergy.get(i, j),
            r.redundancy.get(i, j),
            r.independence.get(i, j),
        ];
        for k in 0..3 {
            assert!((got[k].unwrap() - row[k]).abs() < 1e-12, "({i},{j})[{k}]");
        }
    }
    let d = r.pair(0, 1).unwrap();
    assert!((d.alpha - alpha).abs() < 1e-12 && (d.beta - beta).abs() < 1e-12);
    let d = r.pair(1, 0).unwrap();
    assert!((d.alpha - beta).abs() < 1e-12 && (d.beta - alpha).abs() < 1e-12);
}

fn vec_strategy(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, m)
}

fn tuple_strategy() -> impl Strategy<Value = [Vec<f64>; 5]> {
    (2usize..30).prop_flat_map(|m| {
        [
            vec_strategy(m),
            vec_strategy(m),
            vec_strategy(m),
            vec_strategy(m),
            vec_strategy(m),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pair_geometry_holds(vs in tuple_strategy()) {
        let [phi_i, phi_j, phi_ij, phi_ii, phi_jj] = vs.map(SampleVector::new);
        let c = orthogonalize_interaction(&phi_ij, &phi_ii, &phi_jj).unwrap();
        prop_assert!(correction_orthogonality(&c.vector, &phi_ij, &phi_ii, &phi_jj) <= 1e-9);
        let a_ji = autonomy_vector(&phi_j, &phi_i, &c).unwrap();
        let d = decompose_pair(&phi_i, &phi_j, &c, &a_ji).unwrap();
        prop_assume!(dotp(&phi_i, &phi_i) > 0.0);
        let (identity, ortho, pyth) = geometry_errors(&d, &phi_i);
        prop_assert!(identity <= 1e-9 && ortho <= 1e-9 && pyth <= 1e-9, "{identity} {ortho} {pyth}");
        prop_assert!(characterization_gap(&d, &phi_i) <= 1e-10);
    }

    #[test]
    fn correction_handles_collinear_main_effects(
        base in vec_strategy(8), p in vec_strategy(8), c in -3.0f64..3.0
    ) {
        let a = SampleVector::new(base.clone());
        let b = a.scaled(c);
        let p = SampleVector::new(p);
        let r = orthogonalize_interaction(&p, &a, &b).unwrap();
        prop_assert!(correction_orthogonality(&r.vector, &p, &a, &b) <= 1e-9);
        // the coefficients reproduce the removed component with minimum norm
        let fitted: Vec<f64> = (0..8).map(|u| r.alpha * a[u] + r.beta * b[u]).collect();
        let removed = &(&p - &r.vector) - &SampleVector::new(fitted);
        prop_assert!(removed.norm() <= 1e-9 * (1.0 + p.norm()));
        prop_assert!((r.beta - c * r.alpha).abs() <= 1e-9 * (1.0 + r.alpha.abs()));
    }

    #[test]
    fn scale_invariance(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.gen_range(3..15), rng.gen_range(2..5));
        let shap = ShapMatrix::from_flat((0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect(), m, n).unwrap();
        let mut t = vec![0.0; m * n * n];
        for u in 0..m {
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(-1.0..1.0);
                    t[(u * n + i) * n + j] = v;
                    t[(u * n + j) * n + i] = v;
                }
            }
        }
        let inter = InteractionTensor::from_flat(t, m, n).unwrap();
        let a = decompose_all(&shap, &inter).unwrap();
        let b = decompose_all(&shap.scaled(scale), &inter.scaled(scale)).unwrap();
        for i in 0..n {
            for j in 0..n {
                for (x, y) in [
                    (a.synergy.get(i, j), b.synergy.get(i, j)),
                    (a.redundancy.get(i, j), b.redundancy.get(i, j)),
                    (a.independence.get(i, j), b.independence.get(i, j)),
                ] {
                    match (x, y) {
                        (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-10),
                        (None, None) => {}
                        _ => prop_assert!(false, "definedness changed at ({i},{j})"),
                    }
                }
            }
        }
        prop_assert!(a.max_unity_error() <= 1e-9);
    }

    #[test]
    fn explainer_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let text = random_model_text(&mut rng, n);
        // feature n+1 never appears: a dummy player
        let model = parse_model(&text, n + 1).unwrap();
        let (rows, k) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let data = random_rows(&mut rng, rows, n + 1);
        let bg: BackgroundSet = random_rows(&mut rng, k, n + 1).into();
        let ex = explain_dataset(&model, &data, &bg, &ShapConfig::default()).unwrap();
        let mean_f = bg.rows().map(|r| model.evaluate(r).unwrap()).sum::<f64>() / bg.n_rows() as f64;
        for u in 0..data.n_rows() {
            let fx = model.evaluate(data.row(u)).unwrap();
            let total: f64 = ex.shap.row(u).iter().sum();
            prop_assert!((total - (fx - mean_f)).abs() <= 1e-9 * (1.0 + fx.abs()));
            for i in 0..=n {
                let row_sum: f64 = (0..=n).map(|j| ex.interactions.get(u, i, j)).sum();
                prop_assert!((row_sum - ex.shap.get(u, i)).abs() <= 1e-9);
                for j in 0..=n {
                    prop_assert_eq!(ex.interactions.get(u, i, j), ex.interactions.get(u, j, i));
                }
            }
            prop_assert!(ex.shap.get(u, n).abs() <= 1e-12);
            for j in 0..=n {
                prop_assert!(ex.interactions.get(u, n, j).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn additive_duplicate_is_pure_redundancy() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|_| {
            let a: f64 = rng.gen();
            vec![a, a, rng.gen()]
        })
        .collect();
    let data = Dataset::from_rows(rows).unwrap();
    let model = parse_model("x1 + x2 + 2*x3", 3).unwrap();
    let ex = explain_dataset(
        &model,
        &data,
        &BackgroundSet::full(&data),
        &ShapConfig::default(),
    )
    .unwrap();
    let r = decompose_all(&ex.shap, &ex.interactions).unwrap();
    for (i, j) in [(0, 1), (1, 0)] {
        assert_eq!(r.synergy.get(i, j), Some(0.0));
        assert!((r.redundancy.get(i, j).unwrap() - 1.0).abs() <= 1e-9);
        assert!(r.independence.get(i, j).unwrap() <= 1e-9);
    }
}
