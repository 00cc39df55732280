//! Conditional-independence tests consumed by structure learning.
//!
//! Every tester answers `test(i, j, S)` with a p-value for the null
//! hypothesis "variable i is independent of variable j given the set S".
//! Variables are indexed over a [`CiData`] view: the dataset's features in
//! order, followed by the target.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::dataset::{ColumnKind, Dataset};
use crate::error::{CareError, Result};
use crate::graph::Dag;
use crate::rng;

/// Significance level used throughout structure learning.
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Discrete,
}

/// Column-major raw values of every variable, target last.
#[derive(Debug, Clone, PartialEq)]
pub struct CiData {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    columns: Vec<Vec<f64>>,
}

impl CiData {
    pub fn new(names: Vec<String>, kinds: Vec<VarKind>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != kinds.len() || names.len() != columns.len() {
            return Err(CareError::Shape("names, kinds and columns must align".into()));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(CareError::Shape("columns have different lengths".into()));
            }
        }
        Ok(Self { names, kinds, columns })
    }

    /// Features then target (if present). Categorical columns and the target
    /// are discrete.
    pub fn from_dataset(data: &Dataset) -> Self {
        let mut names = data.names().to_vec();
        let mut kinds: Vec<VarKind> = data
            .kinds()
            .iter()
            .map(|k| match k {
                ColumnKind::Continuous => VarKind::Continuous,
                _ => VarKind::Discrete,
            })
            .collect();
        let mut columns: Vec<Vec<f64>> = (0..data.n_features()).map(|j| data.column(j)).collect();
        if let Some(t) = data.target() {
            names.push(t.name.clone());
            kinds.push(VarKind::Discrete);
            columns.push(t.values.iter().map(|&v| f64::from(v)).collect());
        }
        Self { names, kinds, columns }
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    pub fn column(&self, v: usize) -> &[f64] {
        &self.columns[v]
    }
}

/// Diagnostic attached to p-values produced by a fallback path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CiFlag {
    /// Singular covariance; reported as dependence.
    Singular,
    /// Too few samples for the test; reported as independence.
    Untestable,
    /// Constant response; reported as independence.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub p_value: f64,
    pub flag: Option<CiFlag>,
}

impl CiResult {
    fn plain(p: f64) -> Self {
        Self { p_value: p.clamp(0.0, 1.0), flag: None }
    }

    fn flagged(p: f64, flag: CiFlag) -> Self {
        Self { p_value: p, flag: Some(flag) }
    }
}

pub trait CiTester: Sync {
    fn n_vars(&self) -> usize;
    fn test(&self, i: usize, j: usize, cond: &[usize]) -> CiResult;
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Fisher z-transform of the sample partial correlation.
pub fn fisher_z(data: &CiData, i: usize, j: usize, cond: &[usize]) -> CiResult {
    let (i, j) = ordered(i, j);
    let n = data.n_rows();
    if n <= cond.len() + 3 {
        return CiResult::flagged(1.0, CiFlag::Untestable);
    }
    let vars: Vec<usize> = [i, j].iter().chain(cond).copied().collect();
    let k = vars.len();
    let nf = n as f64;
    let means: Vec<f64> = vars.iter().map(|&v| data.column(v).iter().sum::<f64>() / nf).collect();
    let mut cov = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let (ca, cb) = (data.column(vars[a]), data.column(vars[b]));
            let s: f64 = ca.iter().zip(cb).map(|(x, y)| (x - means[a]) * (y - means[b])).sum();
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    let scale: Vec<f64> = (0..k).map(|a| cov[(a, a)].sqrt()).collect();
    if scale.iter().any(|&s| !(s > 1e-12 * nf.sqrt())) {
        return CiResult::flagged(0.0, CiFlag::Singular);
    }
    let corr = DMatrix::from_fn(k, k, |a, b| cov[(a, b)] / (scale[a] * scale[b]));
    let chol = match corr.cholesky() {
        Some(c) => c,
        None => return CiResult::flagged(0.0, CiFlag::Singular),
    };
    let l = chol.l();
    if (0..k).any(|a| l[(a, a)] < 1e-7) {
        return CiResult::flagged(0.0, CiFlag::Singular);
    }
    let prec = chol.inverse();
    let r = -prec[(0, 1)] / (prec[(0, 0)] * prec[(1, 1)]).sqrt();
    if !r.is_finite() || r.abs() >= 1.0 - 1e-12 {
        return CiResult::flagged(0.0, CiFlag::Singular);
    }
    let z = r.atanh() * ((n - cond.len() - 3) as f64).sqrt();
    CiResult::plain(erfc(z.abs() / std::f64::consts::SQRT_2))
}

/// Map arbitrary discrete values to dense codes `0..r` (sorted order).
fn encode_discrete(col: &[f64]) -> (Vec<usize>, usize) {
    let mut uniq: Vec<f64> = col.to_vec();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup();
    let codes = col.iter().map(|v| uniq.binary_search_by(|u| u.total_cmp(v)).expect("value present")).collect();
    (codes, uniq.len())
}

/// Likelihood-ratio G² test on (stratified) contingency tables.
///
/// Cardinalities are the numbers of distinct observed values. Degrees of
/// freedom are `(r_i - 1)(r_j - 1) * prod(r_s)`; fewer than `5 * df` rows
/// yields p = 1 with [`CiFlag::Untestable`].
pub fn g_squared(data: &CiData, i: usize, j: usize, cond: &[usize]) -> CiResult {
    let (i, j) = ordered(i, j);
    let n = data.n_rows();
    let (ci, ri) = encode_discrete(data.column(i));
    let (cj, rj) = encode_discrete(data.column(j));
    let strata: Vec<(Vec<usize>, usize)> = cond.iter().map(|&s| encode_discrete(data.column(s))).collect();
    let df = (ri - 1) * (rj - 1) * strata.iter().map(|s| s.1).product::<usize>();
    if df == 0 {
        return CiResult::plain(1.0);
    }
    if n < 5 * df {
        return CiResult::flagged(1.0, CiFlag::Untestable);
    }
    let mut tables: HashMap<usize, Vec<f64>> = HashMap::new();
    for row in 0..n {
        let key = strata.iter().fold(0usize, |acc, (codes, r)| acc * r + codes[row]);
        tables.entry(key).or_insert_with(|| vec![0.0; ri * rj])[ci[row] * rj + cj[row]] += 1.0;
    }
    let mut keys: Vec<usize> = tables.keys().copied().collect();
    keys.sort_unstable();
    let mut g2 = 0.0;
    for key in keys {
        let t = &tables[&key];
        let total: f64 = t.iter().sum();
        let rows: Vec<f64> = (0..ri).map(|a| (0..rj).map(|b| t[a * rj + b]).sum()).collect();
        let cols: Vec<f64> = (0..rj).map(|b| (0..ri).map(|a| t[a * rj + b]).sum()).collect();
        for a in 0..ri {
            for b in 0..rj {
                let o = t[a * rj + b];
                if o > 0.0 {
                    g2 += o * (o * total / (rows[a] * cols[b])).ln();
                }
            }
        }
    }
    let g2 = (2.0 * g2).max(0.0);
    let chi = ChiSquared::new(df as f64).expect("df > 0");
    CiResult::plain(chi.sf(g2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub n_permutations: usize,
    pub knn_k: usize,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self { n_permutations: 100, knn_k: 10, seed: 0 }
    }
}

/// Feature block for the k-NN predictor: z-scored continuous columns and
/// one-hot discrete columns scaled so distinct levels are at distance 1.
fn knn_features(data: &CiData, v: usize) -> Vec<Vec<f64>> {
    let col = data.column(v);
    match data.kinds()[v] {
        VarKind::Continuous => {
            let n = col.len() as f64;
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
            vec![col.iter().map(|x| (x - m) / sd).collect()]
        }
        VarKind::Discrete => {
            let (codes, r) = encode_discrete(col);
            let w = std::f64::consts::FRAC_1_SQRT_2;
            (0..r).map(|l| codes.iter().map(|&c| if c == l { w } else { 0.0 }).collect()).collect()
        }
    }
}

/// Response block and whether it is constant.
fn knn_response(data: &CiData, v: usize) -> (Vec<Vec<f64>>, bool) {
    let col = data.column(v);
    let constant = col.iter().all(|x| *x == col[0]);
    let block = match data.kinds()[v] {
        VarKind::Continuous => knn_features(data, v),
        VarKind::Discrete => {
            let (codes, r) = encode_discrete(col);
            (0..r).map(|l| codes.iter().map(|&c| f64::from(u8::from(c == l))).collect()).collect()
        }
    };
    (block, constant)
}

fn pairwise_sq(block: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for col in block {
        for a in 0..n {
            for b in (a + 1)..n {
                let diff = col[a] - col[b];
                d[a * n + b] += diff * diff;
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            d[a * n + b] = d[b * n + a];
        }
    }
    d
}

/// Leave-one-out k-NN loss (squared error over the response block).
fn loo_loss(dist: &[f64], response: &[Vec<f64>], n: usize, k: usize) -> f64 {
    let mut total = 0.0;
    let mut idx: Vec<usize> = Vec::with_capacity(n);
    for a in 0..n {
        idx.clear();
        idx.extend((0..n).filter(|&b| b != a));
        let row = &dist[a * n..(a + 1) * n];
        let cmp = |x: &usize, y: &usize| row[*x].total_cmp(&row[*y]).then(x.cmp(y));
        if k < idx.len() {
            idx.select_nth_unstable_by(k - 1, cmp);
        }
        let nbrs = &idx[..k];
        for col in response {
            let pred = nbrs.iter().map(|&b| col[b]).sum::<f64>() / k as f64;
            total += (col[a] - pred).powi(2);
        }
    }
    total / n as f64
}

/// Predictive permutation test with a k-nearest-neighbour predictor.
///
/// The response `j` is predicted from `S ∪ {i}` with leave-one-out k-NN. The
/// column of `i` is then permuted `n_permutations` times; the p-value is
/// `(1 + #{permuted loss <= observed loss}) / (n_permutations + 1)`.
pub fn predictive_permutation_test(
    data: &CiData,
    i: usize,
    j: usize,
    cond: &[usize],
    cfg: &PermutationConfig,
) -> Result<CiResult> {
    if cfg.n_permutations < 20 {
        return Err(CareError::InvalidArgument(format!(
            "at least 20 permutations required, got {}",
            cfg.n_permutations
        )));
    }
    if cfg.knn_k == 0 {
        return Err(CareError::InvalidArgument("knn_k must be at least 1".into()));
    }
    let n = data.n_rows();
    let (response, constant) = knn_response(data, j);
    if constant || n < 3 {
        return Ok(CiResult::flagged(1.0, CiFlag::Degenerate));
    }
    let k = cfg.knn_k.min(n - 1);
    let cond_block: Vec<Vec<f64>> = cond.iter().flat_map(|&s| knn_features(data, s)).collect();
    let base = pairwise_sq(&cond_block, n);
    let i_block = knn_features(data, i);

    let loss_with = |block: &[Vec<f64>]| {
        let mut d = pairwise_sq(block, n);
        for (x, b) in d.iter_mut().zip(&base) {
            *x += b;
        }
        loo_loss(&d, &response, n, k)
    };
    let observed = loss_with(&i_block);

    let (lo, hi) = ordered(i, j);
    let stream = cond.iter().fold(rng::mix(lo as u64, hi as u64), |acc, &s| rng::mix(acc, s as u64 + 1));
    let mut rng = rng::seeded(rng::mix(cfg.seed, stream));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut as_good = 0usize;
    for _ in 0..cfg.n_permutations {
        perm.shuffle(&mut rng);
        let permuted: Vec<Vec<f64>> = i_block.iter().map(|col| perm.iter().map(|&p| col[p]).collect()).collect();
        if loss_with(&permuted) <= observed {
            as_good += 1;
        }
    }
    Ok(CiResult::plain((1 + as_good) as f64 / (cfg.n_permutations + 1) as f64))
}

/// True iff `i` and `j` are d-separated by `cond` in `dag`.
///
/// Uses the moralized ancestral graph criterion: restrict to ancestors of
/// `{i, j} ∪ cond`, marry co-parents, drop directions, delete `cond`, and
/// check whether `i` can still reach `j`.
pub fn d_sep_oracle(dag: &Dag, i: usize, j: usize, cond: &[usize]) -> bool {
    if i == j {
        return false;
    }
    let seeds: Vec<usize> = [i, j].iter().chain(cond).copied().collect();
    let keep = dag.ancestral_closure(&seeds);
    let n = dag.len();
    let mut adj = vec![vec![false; n]; n];
    for v in (0..n).filter(|&v| keep[v]) {
        let ps = dag.parents(v);
        for (a, &p) in ps.iter().enumerate() {
            adj[p][v] = true;
            adj[v][p] = true;
            for &q in &ps[a + 1..] {
                adj[p][q] = true;
                adj[q][p] = true;
            }
        }
    }
    let mut blocked = vec![false; n];
    for &c in cond {
        blocked[c] = true;
    }
    if blocked[i] || blocked[j] {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![i];
    seen[i] = true;
    while let Some(v) = stack.pop() {
        if v == j {
            return false;
        }
        for w in 0..n {
            if adj[v][w] && keep[w] && !seen[w] && !blocked[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

pub struct FisherZTester<'a> {
    pub data: &'a CiData,
}

impl CiTester for FisherZTester<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> CiResult {
        fisher_z(self.data, i, j, cond)
    }
}

pub struct GSquaredTester<'a> {
    pub data: &'a CiData,
}

impl CiTester for GSquaredTester<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> CiResult {
        g_squared(self.data, i, j, cond)
    }
}

pub struct PermutationTester<'a> {
    pub data: &'a CiData,
    pub cfg: PermutationConfig,
}

impl CiTester for PermutationTester<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> CiResult {
        predictive_permutation_test(self.data, i, j, cond, &self.cfg).expect("configuration validated at construction")
    }
}

/// Picks Fisher z when every involved variable is continuous, G² when all
/// are discrete, and the permutation test otherwise.
pub struct AutoTester<'a> {
    data: &'a CiData,
    perm: PermutationConfig,
}

impl<'a> AutoTester<'a> {
    pub fn new(data: &'a CiData, perm: PermutationConfig) -> Result<Self> {
        if perm.n_permutations < 20 || perm.knn_k == 0 {
            return Err(CareError::InvalidArgument("invalid permutation test configuration".into()));
        }
        Ok(Self { data, perm })
    }
}

impl CiTester for AutoTester<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> CiResult {
        let kinds = self.data.kinds();
        let vars = [i, j];
        let all = || vars.iter().chain(cond).map(|&v| kinds[v]);
        if all().all(|k| k == VarKind::Continuous) {
            fisher_z(self.data, i, j, cond)
        } else if all().all(|k| k == VarKind::Discrete) {
            g_squared(self.data, i, j, cond)
        } else {
            predictive_permutation_test(self.data, i, j, cond, &self.perm).expect("validated")
        }
    }
}

/// Answers from d-separation in a known DAG: p = 1 if separated, else 0.
///
/// `observed[v]` is the DAG node for tester variable `v`; DAG nodes not
/// listed act as latent variables.
pub struct OracleTester {
    dag: Dag,
    observed: Vec<usize>,
}

impl OracleTester {
    pub fn new(dag: Dag, observed: Vec<usize>) -> Self {
        Self { dag, observed }
    }

    /// Observe the named nodes, in the given order.
    pub fn with_names(dag: Dag, names: &[&str]) -> Result<Self> {
        let observed = names
            .iter()
            .map(|n| dag.index(n).ok_or_else(|| CareError::UnknownVariable(n.to_string())))
            .collect::<Result<_>>()?;
        Ok(Self { dag, observed })
    }

    pub fn names(&self) -> Vec<String> {
        self.observed.iter().map(|&v| self.dag.names()[v].clone()).collect()
    }
}

impl CiTester for OracleTester {
    fn n_vars(&self) -> usize {
        self.observed.len()
    }

    fn test(&self, i: usize, j: usize, cond: &[usize]) -> CiResult {
        let cond: Vec<usize> = cond.iter().map(|&c| self.observed[c]).collect();
        let sep = d_sep_oracle(&self.dag, self.observed[i], self.observed[j], &cond);
        CiResult::plain(if sep { 1.0 } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::seeded(seed);
        (0..cols).map(|_| (0..n).map(|_| StandardNormal.sample(&mut r)).collect()).collect()
    }

    fn continuous(columns: Vec<Vec<f64>>) -> CiData {
        let k = columns.len();
        CiData::new((0..k).map(|c| format!("v{c}")).collect(), vec![VarKind::Continuous; k], columns).unwrap()
    }

    fn discrete(columns: Vec<Vec<f64>>) -> CiData {
        let k = columns.len();
        CiData::new((0..k).map(|c| format!("v{c}")).collect(), vec![VarKind::Discrete; k], columns).unwrap()
    }

    #[test]
    fn fisher_z_zero_correlation_gives_one() {
        // x and y are orthogonal and both centered.
        let x = vec![1.0, -1.0, 1.0, -1.0, 0.0];
        let y = vec![1.0, 1.0, -1.0, -1.0, 0.0];
        let d = continuous(vec![x, y]);
        let r = fisher_z(&d, 0, 1, &[]);
        assert!((r.p_value - 1.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn fisher_z_duplicate_is_dependent() {
        let c = normals(50, 1, 1).remove(0);
        let d = continuous(vec![c.clone(), c]);
        let r = fisher_z(&d, 0, 1, &[]);
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.flag, Some(CiFlag::Singular));
    }

    #[test]
    fn fisher_z_detects_chain_screening() {
        let mut cols = normals(2000, 3, 4);
        for i in 0..2000 {
            cols[1][i] += cols[0][i];
            cols[2][i] += cols[1][i];
        }
        let d = continuous(cols);
        assert!(fisher_z(&d, 0, 2, &[]).p_value < 1e-6);
        assert!(fisher_z(&d, 0, 2, &[1]).p_value > 1e-3);
        assert_eq!(fisher_z(&d, 0, 2, &[1]), fisher_z(&d, 2, 0, &[1]));
    }

    #[test]
    fn fisher_z_too_few_rows() {
        let d = continuous(normals(3, 2, 0));
        assert_eq!(fisher_z(&d, 0, 1, &[]).flag, Some(CiFlag::Untestable));
    }

    #[test]
    fn g_squared_cases() {
        let x: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let d = discrete(vec![x.clone(), x.clone(), vec![0.0; 100]]);
        assert!(g_squared(&d, 0, 1, &[]).p_value < 1e-6);
        assert_eq!(g_squared(&d, 2, 0, &[]).p_value, 1.0);
        assert_eq!(g_squared(&d, 0, 1, &[]), g_squared(&d, 1, 0, &[]));
    }

    #[test]
    fn g_squared_direct_value() {
        // 2x2 table [[30, 10], [10, 30]]: G² = 2 * sum O ln(O / E), E = 20.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, c) in [(0.0, 0.0, 30), (0.0, 1.0, 10), (1.0, 0.0, 10), (1.0, 1.0, 30)] {
            for _ in 0..c {
                a.push(x);
                b.push(y);
            }
        }
        let d = discrete(vec![a, b]);
        let g2 = 2.0 * (2.0 * 30.0 * (30.0f64 / 20.0).ln() + 2.0 * 10.0 * (10.0f64 / 20.0).ln());
        let expected = ChiSquared::new(1.0).unwrap().sf(g2);
        assert!((g_squared(&d, 0, 1, &[]).p_value - expected).abs() < 1e-14);
    }

    #[test]
    fn g_squared_untestable_when_sparse() {
        let d = discrete(vec![
            (0..12).map(|i| (i % 3) as f64).collect(),
            (0..12).map(|i| (i % 4) as f64).collect(),
            (0..12).map(|i| (i % 2) as f64).collect(),
        ]);
        let r = g_squared(&d, 0, 1, &[2]);
        assert_eq!(r.flag, Some(CiFlag::Untestable));
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn permutation_min_p_for_identity() {
        let x = normals(120, 1, 9).remove(0);
        let d = continuous(vec![x.clone(), x]);
        let cfg = PermutationConfig { n_permutations: 49, knn_k: 5, seed: 3 };
        let r = predictive_permutation_test(&d, 0, 1, &[], &cfg).unwrap();
        assert_eq!(r.p_value, 1.0 / 50.0);
        assert!(predictive_permutation_test(&d, 0, 1, &[], &PermutationConfig { n_permutations: 10, ..cfg }).is_err());
    }

    #[test]
    fn permutation_noise_rarely_rejects() {
        // Exact null: rejections at 0.1 are Binomial(100, <= 0.1).
        let mut rejected = 0;
        let trials = 100;
        for t in 0..trials {
            let d = continuous(normals(80, 3, 100 + t));
            let cfg = PermutationConfig { n_permutations: 50, knn_k: 10, seed: t };
            if predictive_permutation_test(&d, 0, 1, &[2], &cfg).unwrap().p_value <= 0.1 {
                rejected += 1;
            }
        }
        assert!(rejected <= 19, "{rejected}/{trials}");
    }

    #[test]
    fn permutation_constant_response() {
        let d = continuous(vec![normals(30, 1, 1).remove(0), vec![2.0; 30]]);
        let r = predictive_permutation_test(&d, 0, 1, &[], &PermutationConfig::default()).unwrap();
        assert_eq!(r.flag, Some(CiFlag::Degenerate));
    }

    #[test]
    fn permutation_handles_mixed_types() {
        let x = normals(100, 1, 2).remove(0);
        let y: Vec<f64> = x.iter().map(|v| f64::from(u8::from(*v > 0.0))).collect();
        let d = CiData::new(vec!["x".into(), "y".into()], vec![VarKind::Continuous, VarKind::Discrete], vec![x, y])
            .unwrap();
        let auto = AutoTester::new(&d, PermutationConfig { n_permutations: 30, knn_k: 5, seed: 0 }).unwrap();
        assert!(auto.test(0, 1, &[]).p_value <= 1.0 / 31.0 + 1e-12);
    }

    #[test]
    fn d_separation_textbook() {
        let chain = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        assert!(d_sep_oracle(&chain, 0, 2, &[1]));
        assert!(!d_sep_oracle(&chain, 0, 2, &[]));
        let collider = Dag::from_edges(&["A", "B", "C"], &[("A", "B"), ("C", "B")]).unwrap();
        assert!(d_sep_oracle(&collider, 0, 2, &[]));
        assert!(!d_sep_oracle(&collider, 0, 2, &[1]));
        let fork = Dag::from_edges(&["A", "B", "C", "D"], &[("A", "B"), ("C", "B"), ("B", "D")]).unwrap();
        assert!(!d_sep_oracle(&fork, 0, 2, &[3]));
    }

    #[test]
    fn oracle_tester_maps_observed_nodes() {
        let g = crate::synthgen::ground_truth_graph();
        let t = OracleTester::with_names(g, &["X1", "X2", "Xproxy", "Xspur", "Xnoise", "Y"]).unwrap();
        assert_eq!(t.n_vars(), 6);
        assert_eq!(t.test(0, 3, &[5]).p_value, 1.0);
        assert_eq!(t.test(0, 3, &[]).p_value, 0.0);
        assert_eq!(t.test(0, 1, &[]).p_value, 1.0);
        assert_eq!(t.test(0, 1, &[5]).p_value, 0.0);
    }
}
