//! Kernel SHAP against Shapley values computed from their permutation
//! definition, plus the linear closed form.

mod common;

use care_core::attribution::{kernel_shap, linear_shap, shap_importance, ShapMethod};
use care_core::model::{init, ModelParams, ModelSpec};
use common::{shapley_by_permutations, RefModel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

fn random_params(mlp: bool, p: usize, seed: u64) -> ModelParams {
    let spec = if mlp { ModelSpec { hidden_dim: 5, ..ModelSpec::mlp(p, seed) } } else { ModelSpec::lr(p, seed) };
    let mut params = init(&spec).unwrap();
    for (k, t) in params.theta.iter_mut().enumerate() {
        *t += 0.2 * ((k as f64) * 1.3 + seed as f64).cos();
    }
    params
}

/// Value of a coalition: mean model output over background rows with the
/// present players' columns copied from `x`.
fn coalition_value(model: &RefModel, bg: &DMatrix<f64>, x: &[f64], column_map: &[usize], present: &[bool]) -> f64 {
    (0..bg.nrows())
        .map(|b| {
            let row: Vec<f64> = (0..x.len()).map(|c| if present[column_map[c]] { x[c] } else { bg[(b, c)] }).collect();
            model.logit(&row)
        })
        .sum::<f64>()
        / bg.nrows() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_path_equals_permutation_shapley(
        mlp in any::<bool>(),
        p in 1usize..6,
        seed in 0u64..1000,
        vals in prop::collection::vec(-2.0f64..2.0, 6 * 4),
        bgv in prop::collection::vec(-2.0f64..2.0, 6 * 3),
    ) {
        let params = random_params(mlp, p, seed);
        let reference = RefModel { p, h: params.spec.hidden_dim, theta: params.theta.clone() };
        let x = DMatrix::from_fn(4, p, |i, j| vals[i * 6 + j]);
        let bg = DMatrix::from_fn(3, p, |i, j| bgv[i * 6 + j]);
        let column_map: Vec<usize> = (0..p).collect();
        let phi = kernel_shap(&params, &bg, &x, &column_map, &names(p), ShapMethod::Exact, seed).unwrap();
        for i in 0..4 {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            let want = shapley_by_permutations(p, |present| coalition_value(&reference, &bg, &xi, &column_map, present));
            for j in 0..p {
                prop_assert!((phi.values[(i, j)] - want[j]).abs() < 1e-8, "row {i} player {j}: {} vs {}", phi.values[(i, j)], want[j]);
            }
            let total: f64 = phi.values.row(i).iter().sum();
            let all = vec![true; p];
            let none = vec![false; p];
            let gap = coalition_value(&reference, &bg, &xi, &column_map, &all) - coalition_value(&reference, &bg, &xi, &column_map, &none);
            prop_assert!((total - gap).abs() < 1e-8, "local accuracy off by {}", (total - gap).abs());
        }
    }

    #[test]
    fn exact_path_matches_linear_closed_form(
        p in 1usize..8,
        seed in 0u64..1000,
        vals in prop::collection::vec(-3.0f64..3.0, 8 * 3),
        bgv in prop::collection::vec(-3.0f64..3.0, 8 * 5),
    ) {
        let params = random_params(false, p, seed);
        let w = params.lr_weights().unwrap().to_vec();
        let x = DMatrix::from_fn(3, p, |i, j| vals[i * 8 + j]);
        let bg = DMatrix::from_fn(5, p, |i, j| bgv[i * 8 + j]);
        let column_map: Vec<usize> = (0..p).collect();
        let kernel = kernel_shap(&params, &bg, &x, &column_map, &names(p), ShapMethod::Exact, 0).unwrap();
        let linear = linear_shap(&params, &bg, &x, &column_map, &names(p)).unwrap();
        for i in 0..3 {
            for j in 0..p {
                let mean: f64 = (0..5).map(|b| bg[(b, j)]).sum::<f64>() / 5.0;
                let closed = w[j] * (x[(i, j)] - mean);
                prop_assert!((kernel.values[(i, j)] - closed).abs() < 1e-8);
                prop_assert!((linear.values[(i, j)] - closed).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn grouped_players_share_columns() {
    // Three encoded columns, the last two belonging to one categorical variable.
    let params = random_params(true, 3, 4);
    let reference = RefModel { p: 3, h: params.spec.hidden_dim, theta: params.theta.clone() };
    let x = DMatrix::from_row_slice(2, 3, &[0.7, 1.0, 0.0, -1.2, 0.0, 1.0]);
    let bg = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.3, 1.0, 0.0]);
    let column_map = [0, 1, 1];
    let phi = kernel_shap(&params, &bg, &x, &column_map, &names(2), ShapMethod::Exact, 0).unwrap();
    assert_eq!(phi.values.ncols(), 2);
    for i in 0..2 {
        let xi: Vec<f64> = x.row(i).iter().copied().collect();
        let want = shapley_by_permutations(2, |present| coalition_value(&reference, &bg, &xi, &column_map, present));
        for j in 0..2 {
            assert!((phi.values[(i, j)] - want[j]).abs() < 1e-8);
        }
    }
}

#[test]
fn sampled_path_is_close_to_exact_and_efficient() {
    let p = 14;
    let params = random_params(true, p, 11);
    let x = DMatrix::from_fn(3, p, |i, j| ((i * p + j) as f64 * 0.37).sin() * 1.5);
    let bg = DMatrix::from_fn(4, p, |i, j| ((i * p + j) as f64 * 0.91).cos());
    let column_map: Vec<usize> = (0..p).collect();
    let exact = kernel_shap(&params, &bg, &x, &column_map, &names(p), ShapMethod::Exact, 0).unwrap();
    let sampled = kernel_shap(&params, &bg, &x, &column_map, &names(p), ShapMethod::Sampled, 5).unwrap();
    let auto = kernel_shap(&params, &bg, &x, &column_map, &names(p), ShapMethod::Auto, 5).unwrap();
    assert_eq!(sampled, auto);
    for i in 0..3 {
        let exact_sum: f64 = exact.values.row(i).iter().sum();
        let sampled_sum: f64 = sampled.values.row(i).iter().sum();
        assert!((exact_sum - sampled_sum).abs() < 1e-8, "efficiency must hold on the sampled path");
        let scale = exact.values.row(i).iter().map(|v| v.abs()).fold(0.0, f64::max);
        for j in 0..p {
            let d = (exact.values[(i, j)] - sampled.values[(i, j)]).abs();
            assert!(
                d < 0.1 * scale + 1e-6,
                "row {i} player {j}: exact {} sampled {}",
                exact.values[(i, j)],
                sampled.values[(i, j)]
            );
        }
    }
}

#[test]
fn exact_is_refused_for_too_many_players() {
    let p = 26;
    let params = random_params(false, p, 0);
    let x = DMatrix::zeros(1, p);
    let column_map: Vec<usize> = (0..p).collect();
    assert!(kernel_shap(&params, &x, &x, &column_map, &names(p), ShapMethod::Exact, 0).is_err());
}

#[test]
fn importance_is_max_normalized() {
    let params = random_params(true, 4, 2);
    let data = DMatrix::from_fn(40, 4, |i, j| ((i * 4 + j) as f64 * 0.53).sin());
    let scores = shap_importance(&params, &data, &data, &[0, 1, 2, 3], &names(4), 1).unwrap();
    let max = scores.scores.iter().copied().fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-12);
    assert!(scores.scores.iter().all(|&s| (0.0..=1.0).contains(&s)));
}
