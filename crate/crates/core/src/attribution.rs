//! Feature attributions: Grad×Input, Kernel SHAP over a k-means background,
//! Linear SHAP, and max-normalized importance scores.
//!
//! Kernel SHAP treats each original variable as one player, so all one-hot
//! columns of a categorical variable enter or leave a coalition together.
//! Absent players take their values from background rows (interventional
//! replacement) and the coalition value is the mean logit over the background.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CareError, Result};
use crate::model::{ModelKind, ModelParams};
use crate::rng;

/// Largest player count solved by full coalition enumeration in
/// [`ShapMethod::Auto`].
pub const EXACT_MAX_PLAYERS: usize = 12;
/// Upper bound on players for an explicitly requested exact solve.
pub const EXACT_HARD_LIMIT: usize = 25;
/// Coalitions drawn per explained row on the sampled path.
pub const SAMPLED_COALITIONS: usize = 2048;

/// Anything that maps an N×p input matrix to N logits.
pub trait LogitModel: Sync {
    fn input_dim(&self) -> usize;
    fn logits(&self, x: &DMatrix<f64>) -> DVector<f64>;
}

impl LogitModel for ModelParams {
    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn logits(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.forward_logit(x).expect("input width checked by caller")
    }
}

/// Signed attributions with a map from matrix columns to original variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix {
    pub values: DMatrix<f64>,
    /// `column_map[c]` is the variable index of matrix column `c`.
    pub column_map: Vec<usize>,
    /// Original variable names.
    pub names: Vec<String>,
}

impl AttributionMatrix {
    pub fn new(values: DMatrix<f64>, column_map: Vec<usize>, names: Vec<String>) -> Result<Self> {
        if values.ncols() != column_map.len() {
            return Err(CareError::Shape(format!(
                "{} attribution columns but {} column-map entries",
                values.ncols(),
                column_map.len()
            )));
        }
        if column_map.iter().any(|&v| v >= names.len()) {
            return Err(CareError::Shape("column map refers past the variable list".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CareError::InvalidArgument("attributions must be finite".into()));
        }
        Ok(Self { values, column_map, names })
    }
}

/// Per-variable scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScores {
    pub names: Vec<String>,
    pub scores: Vec<f64>,
}

impl ImportanceScores {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.scores[i])
    }

    /// Variables sorted by descending score, ties broken by name.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.names.iter().cloned().zip(self.scores.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

fn check_width(model: &dyn LogitModel, x: &DMatrix<f64>, column_map: &[usize]) -> Result<()> {
    if x.ncols() != model.input_dim() || column_map.len() != x.ncols() {
        return Err(CareError::Shape(format!(
            "input has {} columns, model expects {}, column map has {}",
            x.ncols(),
            model.input_dim(),
            column_map.len()
        )));
    }
    Ok(())
}

/// `S_ij = x_ij · ∂logit_i/∂x_ij`.
pub fn grad_x_input(
    params: &ModelParams,
    x: &DMatrix<f64>,
    column_map: &[usize],
    names: &[String],
) -> Result<AttributionMatrix> {
    check_width(params, x, column_map)?;
    let g = params.input_gradient(x)?;
    AttributionMatrix::new(g.component_mul(x), column_map.to_vec(), names.to_vec())
}

/// Result of k-means: centroids plus within-cluster SSE after each
/// assignment step.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: DMatrix<f64>,
    pub sse_history: Vec<f64>,
}

pub const KMEANS_MAX_ITERS: usize = 100;

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, k: usize) -> f64 {
    x.row(i).iter().zip(c.row(k).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Lloyd's algorithm with farthest-point initialization.
///
/// The first centre is a seeded random row; each further centre is the row
/// farthest from its nearest chosen centre (lowest index on ties).
pub fn kmeans_summarize(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeans> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(CareError::InvalidArgument(format!("k-means needs 1 <= k <= N, got k={k}, N={n}")));
    }
    let p = x.ncols();
    let mut rng = rng::seeded(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> =
        (0..n).map(|i| x.row(i).iter().zip(x.row(chosen[0]).iter()).map(|(a, b)| (a - b).powi(2)).sum()).collect();
    while chosen.len() < k {
        let mut best = 0;
        for i in 1..n {
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        chosen.push(best);
        for i in 0..n {
            let d: f64 = x.row(i).iter().zip(x.row(best).iter()).map(|(a, b)| (a - b).powi(2)).sum();
            nearest[i] = nearest[i].min(d);
        }
    }
    let mut centroids = DMatrix::from_fn(k, p, |r, c| x[(chosen[r], c)]);
    let mut assign = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        let mut sse = 0.0;
        for i in 0..n {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for c in 0..k {
                let d = sq_dist(x, i, &centroids, c);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            sse += best_d;
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        history.push(sse);
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, p);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            let mut row = sums.row_mut(assign[i]);
            row += x.row(i);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c) / counts[c] as f64;
                centroids.row_mut(c).copy_from(&mean);
            }
        }
    }
    Ok(KMeans { centroids, sse_history: history })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMethod {
    /// Exact for up to [`EXACT_MAX_PLAYERS`] players, sampled beyond.
    Auto,
    Exact,
    Sampled,
}

/// Mean logit over background rows with present players copied from `x`.
struct CoalitionEvaluator<'a> {
    model: &'a dyn LogitModel,
    background: &'a DMatrix<f64>,
    /// Columns owned by each player.
    player_cols: Vec<Vec<usize>>,
}

impl CoalitionEvaluator<'_> {
    /// Values of many coalitions for one row, batched into a single forward pass.
    fn values(&self, x: &[f64], coalitions: &[Vec<bool>]) -> Vec<f64> {
        let b = self.background.nrows();
        let p = self.background.ncols();
        let mut batch = DMatrix::zeros(coalitions.len() * b, p);
        for (s, present) in coalitions.iter().enumerate() {
            for r in 0..b {
                let row = s * b + r;
                for c in 0..p {
                    batch[(row, c)] = self.background[(r, c)];
                }
                for (player, cols) in self.player_cols.iter().enumerate() {
                    if present[player] {
                        for &c in cols {
                            batch[(row, c)] = x[c];
                        }
                    }
                }
            }
        }
        let logits = self.model.logits(&batch);
        (0..coalitions.len()).map(|s| logits.rows(s * b, b).sum() / b as f64).collect()
    }
}

fn exact_row(eval: &CoalitionEvaluator<'_>, x: &[f64]) -> Vec<f64> {
    let m = eval.player_cols.len();
    let total = 1usize << m;
    let coalitions: Vec<Vec<bool>> = (0..total).map(|bits| (0..m).map(|j| bits >> j & 1 == 1).collect()).collect();
    let v = eval.values(x, &coalitions);
    // Shapley weights |S|!(M-|S|-1)!/M! indexed by |S|.
    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..m).map(|s| fact[s] * fact[m - s - 1] / fact[m]).collect();
    let mut phi = vec![0.0; m];
    for bits in 0..total {
        let size = (bits as u64).count_ones() as usize;
        for (j, out) in phi.iter_mut().enumerate() {
            if bits >> j & 1 == 0 {
                *out += weight[size] * (v[bits | (1 << j)] - v[bits]);
            }
        }
    }
    phi
}

fn sampled_row(eval: &CoalitionEvaluator<'_>, x: &[f64], seed: u64) -> Vec<f64> {
    let m = eval.player_cols.len();
    if m == 1 {
        let v = eval.values(x, &[vec![false], vec![true]]);
        return vec![v[1] - v[0]];
    }
    let mut rng = rng::seeded(seed);
    // Coalition sizes are drawn with probability proportional to the Shapley
    // kernel mass of that size, so the regression weights are uniform.
    let size_w: Vec<f64> = (1..m).map(|s| (m - 1) as f64 / (s * (m - s)) as f64).collect();
    let size_total: f64 = size_w.iter().sum();
    let mut coalitions = Vec::with_capacity(SAMPLED_COALITIONS + 2);
    coalitions.push(vec![false; m]);
    coalitions.push(vec![true; m]);
    while coalitions.len() < SAMPLED_COALITIONS + 2 {
        let mut u = rng.random::<f64>() * size_total;
        let mut size = m - 1;
        for (k, w) in size_w.iter().enumerate() {
            if u < *w {
                size = k + 1;
                break;
            }
            u -= w;
        }
        let mut present = vec![false; m];
        for j in index::sample(&mut rng, m, size) {
            present[j] = true;
        }
        let complement: Vec<bool> = present.iter().map(|b| !b).collect();
        coalitions.push(present);
        coalitions.push(complement);
    }
    let v = eval.values(x, &coalitions);
    let (v0, v_full) = (v[0], v[1]);
    let delta = v_full - v0;
    // Efficiency is imposed exactly by eliminating the last player:
    // φ_last = Δ − Σ_{j<last} φ_j.
    let last = m - 1;
    let rows = coalitions.len() - 2;
    let mut a = DMatrix::zeros(rows, last);
    let mut t = DVector::zeros(rows);
    for (r, (z, val)) in coalitions[2..].iter().zip(&v[2..]).enumerate() {
        let z_last = f64::from(u8::from(z[last]));
        for j in 0..last {
            a[(r, j)] = f64::from(u8::from(z[j])) - z_last;
        }
        t[r] = val - v0 - z_last * delta;
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * t;
    let head = ata
        .clone()
        .cholesky()
        .map(|c| c.solve(&atb))
        .unwrap_or_else(|| ata.svd(true, true).solve(&atb, 1e-12).expect("SVD solve"));
    let mut phi: Vec<f64> = head.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    phi
}

/// Kernel SHAP of the logit for every row of `x`, one player per variable.
///
/// Returns an `N × n_vars` matrix whose column `v` belongs to variable `v`.
pub fn kernel_shap(
    model: &dyn LogitModel,
    background: &DMatrix<f64>,
    x: &DMatrix<f64>,
    column_map: &[usize],
    names: &[String],
    method: ShapMethod,
    seed: u64,
) -> Result<AttributionMatrix> {
    check_width(model, x, column_map)?;
    if background.ncols() != x.ncols() || background.nrows() == 0 {
        return Err(CareError::Shape("background must be non-empty with the input's width".into()));
    }
    let m = names.len();
    if m == 0 || column_map.iter().any(|&v| v >= m) {
        return Err(CareError::Shape("column map does not match the variable list".into()));
    }
    let exact = match method {
        ShapMethod::Auto => m <= EXACT_MAX_PLAYERS,
        ShapMethod::Exact if m > EXACT_HARD_LIMIT => {
            return Err(CareError::InvalidArgument(format!(
                "exact Kernel SHAP supports at most {EXACT_HARD_LIMIT} players, got {m}"
            )))
        }
        ShapMethod::Exact => true,
        ShapMethod::Sampled => false,
    };
    let mut player_cols = vec![Vec::new(); m];
    for (c, &v) in column_map.iter().enumerate() {
        player_cols[v].push(c);
    }
    let eval = CoalitionEvaluator { model, background, player_cols };
    let rows: Vec<Vec<f64>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            if exact {
                exact_row(&eval, &xi)
            } else {
                sampled_row(&eval, &xi, rng::mix(seed, i as u64))
            }
        })
        .collect();
    let values = DMatrix::from_fn(x.nrows(), m, |i, j| rows[i][j]);
    AttributionMatrix::new(values, (0..m).collect(), names.to_vec())
}

/// `φ_ij = w_j (x_ij − mean_background_j)` for logistic regression.
pub fn linear_shap(
    params: &ModelParams,
    background: &DMatrix<f64>,
    x: &DMatrix<f64>,
    column_map: &[usize],
    names: &[String],
) -> Result<AttributionMatrix> {
    let w = params
        .lr_weights()
        .ok_or_else(|| CareError::InvalidArgument("Linear SHAP requires a logistic-regression model".into()))?;
    check_width(params, x, column_map)?;
    if background.ncols() != x.ncols() || background.nrows() == 0 {
        return Err(CareError::Shape("background must be non-empty with the input's width".into()));
    }
    let mean = background.row_mean();
    let values = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| w[j] * (x[(i, j)] - mean[j]));
    AttributionMatrix::new(values, column_map.to_vec(), names.to_vec())
}

pub const IMPORTANCE_SUBSET: usize = 50;

/// Mean |attribution| over the first `subset_size` rows, summed per variable,
/// divided by the largest score. All-zero input gives all-zero scores.
pub fn normalized_importance(attrs: &AttributionMatrix, subset_size: usize) -> ImportanceScores {
    let rows = attrs.values.nrows().min(subset_size.max(1));
    let mut scores = vec![0.0; attrs.names.len()];
    for (c, &v) in attrs.column_map.iter().enumerate() {
        if rows > 0 {
            let col = attrs.values.column(c);
            scores[v] += col.rows(0, rows).iter().map(|a| a.abs()).sum::<f64>() / rows as f64;
        }
    }
    let max = scores.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for s in &mut scores {
            *s /= max;
        }
    }
    ImportanceScores { names: attrs.names.clone(), scores }
}

/// Post-hoc importance following the evaluation protocol: Linear SHAP for
/// LR, Kernel SHAP with a k-means background (`k = min(10, N_bg)`) otherwise.
pub fn shap_importance(
    params: &ModelParams,
    background_data: &DMatrix<f64>,
    explain: &DMatrix<f64>,
    column_map: &[usize],
    names: &[String],
    seed: u64,
) -> Result<ImportanceScores> {
    let rows = explain.nrows().min(IMPORTANCE_SUBSET);
    let explain = explain.rows(0, rows).into_owned();
    let k = background_data.nrows().min(10);
    let bg = kmeans_summarize(background_data, k, seed)?.centroids;
    let attrs = match params.spec.kind {
        ModelKind::Lr => linear_shap(params, &bg, &explain, column_map, names)?,
        ModelKind::Mlp => kernel_shap(params, &bg, &explain, column_map, names, ShapMethod::Auto, seed)?,
    };
    Ok(normalized_importance(&attrs, IMPORTANCE_SUBSET))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init, ModelSpec};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn lr(w: &[f64], b: f64) -> ModelParams {
        let mut p = ModelParams::zeros(&ModelSpec::lr(w.len(), 0)).unwrap();
        p.theta[..w.len()].copy_from_slice(w);
        p.theta[w.len()] = b;
        p
    }

    #[test]
    fn grad_x_input_linear() {
        let p = lr(&[2.0, -1.0], 0.3);
        let x = DMatrix::from_row_slice(2, 2, &[0.5, 3.0, 0.0, 0.0]);
        let s = grad_x_input(&p, &x, &[0, 1], &names(2)).unwrap();
        assert_eq!(s.values.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -3.0]);
        assert!(s.values.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kmeans_separated() {
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 10.0, 10.0]);
        let km = kmeans_summarize(&x, 2, 3).unwrap();
        let mut c: Vec<f64> = km.centroids.iter().copied().collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 10.0]);
        assert!(kmeans_summarize(&x, 5, 0).is_err());
    }

    #[test]
    fn kmeans_saturated() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 5.0, 5.0, -2.0, 7.0]);
        let km = kmeans_summarize(&x, 3, 1).unwrap();
        let mut got: Vec<Vec<f64>> = (0..3).map(|r| km.centroids.row(r).iter().copied().collect()).collect();
        let mut want: Vec<Vec<f64>> = (0..3).map(|r| x.row(r).iter().copied().collect()).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        want.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, want);
        assert_eq!(*km.sse_history.last().unwrap(), 0.0);
    }

    #[test]
    fn linear_shap_closed_form() {
        let p = lr(&[1.0, 0.0], 0.0);
        let bg = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let x = DMatrix::from_row_slice(1, 2, &[3.0, 7.0]);
        let s = linear_shap(&p, &bg, &x, &[0, 1], &names(2)).unwrap();
        assert_eq!(s.values.row(0).iter().copied().collect::<Vec<_>>(), vec![3.0, 0.0]);
        let mlp = init(&ModelSpec::mlp(2, 0)).unwrap();
        assert!(linear_shap(&mlp, &bg, &x, &[0, 1], &names(2)).is_err());
    }

    #[test]
    fn exact_shap_linear_single_background() {
        let p = lr(&[0.5, -2.0, 1.5], 0.1);
        let bg = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, -1.0]);
        let x = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 1.0, 2.0, -1.0]);
        let s = kernel_shap(&p, &bg, &x, &[0, 1, 2], &names(3), ShapMethod::Exact, 0).unwrap();
        let want = [-0.5, 4.0, 1.5];
        for j in 0..3 {
            assert!((s.values[(0, j)] - want[j]).abs() < 1e-12);
            assert!(s.values[(1, j)].abs() < 1e-12);
        }
    }

    #[test]
    fn grouped_players_share_columns() {
        // Columns 1 and 2 belong to variable 1.
        let p = lr(&[1.0, 2.0, 3.0], 0.0);
        let bg = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 0.0]);
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let s = kernel_shap(&p, &bg, &x, &[0, 1, 1], &names(2), ShapMethod::Exact, 0).unwrap();
        assert_eq!(s.values.ncols(), 2);
        assert!((s.values[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((s.values[(0, 1)] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn exact_limit_enforced() {
        let p = lr(&[0.0; 26], 0.0);
        let bg = DMatrix::zeros(1, 26);
        let x = DMatrix::zeros(1, 26);
        let map: Vec<usize> = (0..26).collect();
        assert!(kernel_shap(&p, &bg, &x, &map, &names(26), ShapMethod::Exact, 0).is_err());
    }

    #[test]
    fn importance_normalization() {
        let attrs = AttributionMatrix::new(
            DMatrix::from_row_slice(2, 4, &[1.0, 0.5, -0.5, 0.0, -3.0, 0.5, 0.5, 1.0]),
            vec![0, 1, 1, 2],
            names(3),
        )
        .unwrap();
        let imp = normalized_importance(&attrs, 50);
        // means: v0 = 2, v1 = 0.5 + 0.5 = 1, v2 = 0.5
        assert_eq!(imp.scores, vec![1.0, 0.5, 0.25]);
        let zero = AttributionMatrix::new(DMatrix::zeros(3, 2), vec![0, 1], names(2)).unwrap();
        assert_eq!(normalized_importance(&zero, 50).scores, vec![0.0, 0.0]);
        assert_eq!(imp.ranked()[0].0, "v0");
    }

    #[test]
    fn importance_uses_first_rows() {
        let attrs = AttributionMatrix::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 100.0]),
            vec![0, 1],
            names(2),
        )
        .unwrap();
        assert_eq!(normalized_importance(&attrs, 2).scores, vec![1.0, 0.0]);
    }
}
