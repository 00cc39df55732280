//! FCI structure learning and the robust-predictor mask.
//!
//! The search runs in three phases: a PC-style adjacency search (PC-stable:
//! removals are applied at the end of each conditioning-set size), collider
//! orientation, and a Possible-D-SEP re-test followed by orientation rules
//! R1–R4 run to a fixpoint. Conditioning sets are enumerated by ascending
//! size, lexicographically within a size, so runs with a deterministic tester
//! are reproducible.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::citest::{
    AutoTester, CiData, CiFlag, CiResult, CiTester, FisherZTester, GSquaredTester, PermutationConfig,
    PermutationTester, DEFAULT_ALPHA,
};
use crate::dataset::Dataset;
use crate::error::{CareError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMark {
    None,
    Tail,
    Arrow,
    Circle,
}

impl EdgeMark {
    fn symbol_left(self) -> &'static str {
        match self {
            EdgeMark::None => " ",
            EdgeMark::Tail => "-",
            EdgeMark::Arrow => "<",
            EdgeMark::Circle => "o",
        }
    }

    fn symbol_right(self) -> &'static str {
        match self {
            EdgeMark::None => " ",
            EdgeMark::Tail => "-",
            EdgeMark::Arrow => ">",
            EdgeMark::Circle => "o",
        }
    }
}

/// Partial ancestral graph. `mark(i, j)` is the mark at the `j` end of the
/// edge between `i` and `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pag {
    names: Vec<String>,
    marks: Vec<Vec<EdgeMark>>,
}

impl Pag {
    pub fn empty(names: Vec<String>) -> Self {
        let d = names.len();
        Self { names, marks: vec![vec![EdgeMark::None; d]; d] }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn mark(&self, i: usize, j: usize) -> EdgeMark {
        self.marks[i][j]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.marks[i][j] != EdgeMark::None
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.adjacent(i, j)).collect()
    }

    /// Add or re-mark the edge `i - j`: `at_i` at the `i` end, `at_j` at the `j` end.
    pub fn set_edge(&mut self, i: usize, j: usize, at_i: EdgeMark, at_j: EdgeMark) {
        assert_ne!(i, j, "self-edges are not allowed");
        assert_eq!(at_i == EdgeMark::None, at_j == EdgeMark::None, "both ends of an edge must be present or absent");
        self.marks[j][i] = at_i;
        self.marks[i][j] = at_j;
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.set_edge(i, j, EdgeMark::None, EdgeMark::None);
    }

    /// Change only the mark at the `j` end of an existing edge.
    fn orient(&mut self, i: usize, j: usize, at_j: EdgeMark) {
        debug_assert!(self.adjacent(i, j) && at_j != EdgeMark::None);
        self.marks[i][j] = at_j;
    }

    /// Edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.len();
        (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).filter(|&(i, j)| self.adjacent(i, j)).collect()
    }

    pub fn to_json(&self) -> PagJson {
        PagJson {
            variables: self.names.clone(),
            edges: self
                .edges()
                .into_iter()
                .map(|(i, j)| PagEdge {
                    from: self.names[i].clone(),
                    to: self.names[j].clone(),
                    mark_at_from: self.mark(j, i),
                    mark_at_to: self.mark(i, j),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PagJson) -> Result<Self> {
        let mut pag = Pag::empty(json.variables.clone());
        for e in &json.edges {
            let i = pag.index(&e.from).ok_or_else(|| CareError::UnknownVariable(e.from.clone()))?;
            let j = pag.index(&e.to).ok_or_else(|| CareError::UnknownVariable(e.to.clone()))?;
            if i == j || (e.mark_at_from == EdgeMark::None) != (e.mark_at_to == EdgeMark::None) {
                return Err(CareError::InvalidArgument(format!("invalid edge {} -- {}", e.from, e.to)));
            }
            pag.set_edge(i, j, e.mark_at_from, e.mark_at_to);
        }
        Ok(pag)
    }
}

impl fmt::Display for Pag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, j) in self.edges() {
            writeln!(
                f,
                "{} {}-{} {}",
                self.names[i],
                self.mark(j, i).symbol_left(),
                self.mark(i, j).symbol_right(),
                self.names[j]
            )?;
        }
        Ok(())
    }
}

/// Serialized PAG: one record per edge with both end marks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PagEdge {
    pub from: String,
    pub to: String,
    pub mark_at_from: EdgeMark,
    pub mark_at_to: EdgeMark,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PagJson {
    pub variables: Vec<String>,
    pub edges: Vec<PagEdge>,
}

/// Conditioning sets that separated non-adjacent pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepSets {
    map: BTreeMap<(usize, usize), Vec<usize>>,
}

impl SepSets {
    fn key(i: usize, j: usize) -> (usize, usize) {
        (i.min(j), i.max(j))
    }

    pub fn insert(&mut self, i: usize, j: usize, set: Vec<usize>) {
        self.map.insert(Self::key(i, j), set);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.map.get(&Self::key(i, j)).map(Vec::as_slice)
    }

    pub fn contains(&self, i: usize, j: usize, v: usize) -> bool {
        self.get(i, j).is_some_and(|s| s.contains(&v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Undirected adjacency structure from the adjacency search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    adj: Vec<Vec<bool>>,
}

impl Skeleton {
    pub fn complete(d: usize) -> Self {
        Self { adj: (0..d).map(|i| (0..d).map(|j| i != j).collect()).collect() }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i][j]
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.adj[i][j]).collect()
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        self.adj[i][j] = false;
        self.adj[j][i] = false;
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.len();
        (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).filter(|&(i, j)| self.adj[i][j]).collect()
    }
}

/// Lexicographic `k`-subsets of `items` (which should be sorted).
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] != pos + n - k {
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        if idx[pos] == pos + n - k {
            return out;
        }
        idx[pos] += 1;
        for q in (pos + 1)..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Whether a result licenses removing an edge. Results flagged untestable
/// carry no evidence either way and are skipped.
fn separates(r: &CiResult, alpha: f64) -> bool {
    r.flag != Some(CiFlag::Untestable) && r.p_value > alpha
}

fn first_separating_set(
    tester: &dyn CiTester,
    i: usize,
    j: usize,
    candidates: &[Vec<usize>],
    size: usize,
    alpha: f64,
) -> Option<Vec<usize>> {
    for pool in candidates {
        for set in combinations(pool, size) {
            if separates(&tester.test(i, j, &set), alpha) {
                return Some(set);
            }
        }
    }
    None
}

/// Adjacency search starting from the complete graph.
///
/// An edge is removed when some subset of the current neighbours of either
/// endpoint (sizes `0..=max_depth`) yields `p > alpha`; the separating set is
/// recorded.
pub fn learn_skeleton(tester: &dyn CiTester, alpha: f64, max_depth: usize) -> Result<(Skeleton, SepSets)> {
    check_alpha(alpha)?;
    let d = tester.n_vars();
    let mut skel = Skeleton::complete(d);
    let mut sepsets = SepSets::default();
    for size in 0..=max_depth {
        let snapshot = skel.clone();
        let work: Vec<(usize, usize, Vec<Vec<usize>>)> = snapshot
            .edges()
            .into_iter()
            .filter_map(|(i, j)| {
                let ni: Vec<usize> = snapshot.neighbors(i).into_iter().filter(|&v| v != j).collect();
                let nj: Vec<usize> = snapshot.neighbors(j).into_iter().filter(|&v| v != i).collect();
                let pools: Vec<Vec<usize>> = [ni, nj].into_iter().filter(|p| p.len() >= size).collect();
                (!pools.is_empty()).then_some((i, j, pools))
            })
            .collect();
        if work.is_empty() {
            break;
        }
        let removals: Vec<(usize, usize, Option<Vec<usize>>)> = work
            .into_par_iter()
            .map(|(i, j, pools)| {
                let found = first_separating_set(tester, i, j, &pools, size, alpha);
                (i, j, found)
            })
            .collect();
        for (i, j, found) in removals {
            if let Some(set) = found {
                skel.remove(i, j);
                sepsets.insert(i, j, set);
            }
        }
    }
    Ok((skel, sepsets))
}

/// Circle-mark every skeleton edge and orient unshielded colliders.
pub fn orient_v_structures(names: Vec<String>, skel: &Skeleton, sepsets: &SepSets) -> Pag {
    let mut pag = Pag::empty(names);
    for (i, j) in skel.edges() {
        pag.set_edge(i, j, EdgeMark::Circle, EdgeMark::Circle);
    }
    let d = skel.len();
    for k in 0..d {
        let nb = skel.neighbors(k);
        for (a, &i) in nb.iter().enumerate() {
            for &j in &nb[a + 1..] {
                if !skel.adjacent(i, j) && !sepsets.contains(i, j, k) {
                    pag.orient(i, k, EdgeMark::Arrow);
                    pag.orient(j, k, EdgeMark::Arrow);
                }
            }
        }
    }
    pag
}

/// Possible-D-SEP of `x`: nodes reachable by paths on which every inner node
/// is a collider or sits in a triangle with its path neighbours.
pub fn possible_d_sep(pag: &Pag, x: usize) -> Vec<usize> {
    let d = pag.len();
    let mut in_set = vec![false; d];
    let mut visited = vec![vec![false; d]; d];
    let mut queue = VecDeque::new();
    for v in pag.neighbors(x) {
        in_set[v] = true;
        visited[x][v] = true;
        queue.push_back((x, v));
    }
    while let Some((a, b)) = queue.pop_front() {
        for c in pag.neighbors(b) {
            if c == a || c == x || visited[b][c] {
                continue;
            }
            let collider = pag.mark(a, b) == EdgeMark::Arrow && pag.mark(c, b) == EdgeMark::Arrow;
            if collider || pag.adjacent(a, c) {
                visited[b][c] = true;
                in_set[c] = true;
                queue.push_back((b, c));
            }
        }
    }
    in_set[x] = false;
    (0..d).filter(|&v| in_set[v]).collect()
}

fn rule1(pag: &mut Pag) -> bool {
    let mut changed = false;
    let d = pag.len();
    for b in 0..d {
        for a in pag.neighbors(b) {
            if pag.mark(a, b) != EdgeMark::Arrow {
                continue;
            }
            for c in pag.neighbors(b) {
                if c != a && !pag.adjacent(a, c) && pag.mark(c, b) == EdgeMark::Circle {
                    pag.orient(c, b, EdgeMark::Tail);
                    pag.orient(b, c, EdgeMark::Arrow);
                    changed = true;
                }
            }
        }
    }
    changed
}

fn directed(pag: &Pag, a: usize, b: usize) -> bool {
    pag.mark(b, a) == EdgeMark::Tail && pag.mark(a, b) == EdgeMark::Arrow
}

fn rule2(pag: &mut Pag) -> bool {
    let mut changed = false;
    for (x, y) in pag.edges() {
        for (a, c) in [(x, y), (y, x)] {
            if pag.mark(a, c) != EdgeMark::Circle {
                continue;
            }
            let hit = pag.neighbors(a).into_iter().any(|b| {
                b != c
                    && pag.adjacent(b, c)
                    && ((directed(pag, a, b) && pag.mark(b, c) == EdgeMark::Arrow)
                        || (pag.mark(a, b) == EdgeMark::Arrow && directed(pag, b, c)))
            });
            if hit {
                pag.orient(a, c, EdgeMark::Arrow);
                changed = true;
            }
        }
    }
    changed
}

fn rule3(pag: &mut Pag) -> bool {
    let mut changed = false;
    let d = pag.len();
    for b in 0..d {
        let nb = pag.neighbors(b);
        for &theta in &nb {
            if pag.mark(theta, b) != EdgeMark::Circle {
                continue;
            }
            let hit = nb.iter().enumerate().any(|(k, &a)| {
                nb[k + 1..].iter().any(|&c| {
                    a != theta
                        && c != theta
                        && !pag.adjacent(a, c)
                        && pag.mark(a, b) == EdgeMark::Arrow
                        && pag.mark(c, b) == EdgeMark::Arrow
                        && pag.adjacent(a, theta)
                        && pag.adjacent(c, theta)
                        && pag.mark(a, theta) == EdgeMark::Circle
                        && pag.mark(c, theta) == EdgeMark::Circle
                })
            });
            if hit {
                pag.orient(theta, b, EdgeMark::Arrow);
                changed = true;
            }
        }
    }
    changed
}

/// Find the far endpoint θ of a discriminating path `<θ, ..., α, β, γ>`
/// for `β`, starting the backward search at `α`.
fn discriminating_start(pag: &Pag, alpha: usize, beta: usize, gamma: usize) -> Option<usize> {
    let d = pag.len();
    let mut visited = vec![false; d];
    visited[alpha] = true;
    visited[beta] = true;
    visited[gamma] = true;
    let mut queue = VecDeque::from([alpha]);
    while let Some(v) = queue.pop_front() {
        for w in pag.neighbors(v) {
            if visited[w] || pag.mark(w, v) != EdgeMark::Arrow {
                continue;
            }
            if !pag.adjacent(w, gamma) {
                return Some(w);
            }
            if directed(pag, w, gamma) && pag.mark(v, w) == EdgeMark::Arrow {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    None
}

fn rule4(pag: &mut Pag, sepsets: &SepSets) -> bool {
    let mut changed = false;
    let d = pag.len();
    for beta in 0..d {
        for gamma in pag.neighbors(beta) {
            if pag.mark(gamma, beta) != EdgeMark::Circle {
                continue;
            }
            for alpha in pag.neighbors(beta) {
                if alpha == gamma
                    || !pag.adjacent(alpha, gamma)
                    || pag.mark(beta, alpha) != EdgeMark::Arrow
                    || !directed(pag, alpha, gamma)
                {
                    continue;
                }
                let Some(theta) = discriminating_start(pag, alpha, beta, gamma) else {
                    continue;
                };
                if sepsets.contains(theta, gamma, beta) {
                    pag.orient(gamma, beta, EdgeMark::Tail);
                    pag.orient(beta, gamma, EdgeMark::Arrow);
                } else {
                    pag.orient(beta, alpha, EdgeMark::Arrow);
                    pag.orient(alpha, beta, EdgeMark::Arrow);
                    pag.orient(gamma, beta, EdgeMark::Arrow);
                    pag.orient(beta, gamma, EdgeMark::Arrow);
                }
                changed = true;
                break;
            }
        }
    }
    changed
}

/// Run R1–R4 until no rule changes a mark.
pub fn orient_rules(pag: &mut Pag, sepsets: &SepSets) {
    loop {
        let mut changed = rule1(pag);
        changed |= rule2(pag);
        changed |= rule3(pag);
        changed |= rule4(pag, sepsets);
        if !changed {
            break;
        }
    }
}

/// Possible-D-SEP re-testing, collider re-orientation, then R1–R4.
pub fn apply_fci_rules(
    pag: &Pag,
    sepsets: &SepSets,
    tester: &dyn CiTester,
    alpha: f64,
    max_depth: usize,
) -> Result<(Pag, SepSets)> {
    check_alpha(alpha)?;
    let mut sepsets = sepsets.clone();
    let pds: Vec<Vec<usize>> = (0..pag.len()).map(|x| possible_d_sep(pag, x)).collect();
    let mut skel =
        Skeleton { adj: (0..pag.len()).map(|i| (0..pag.len()).map(|j| pag.adjacent(i, j)).collect()).collect() };
    let mut removed = false;
    for (i, j) in pag.edges() {
        let pools: Vec<Vec<usize>> =
            [(i, j), (j, i)].iter().map(|&(a, b)| pds[a].iter().copied().filter(|&v| v != b).collect()).collect();
        let found = (1..=max_depth).find_map(|size| first_separating_set(tester, i, j, &pools, size, alpha));
        if let Some(set) = found {
            skel.remove(i, j);
            sepsets.insert(i, j, set);
            removed = true;
        }
    }
    let mut out = if removed { orient_v_structures(pag.names.clone(), &skel, &sepsets) } else { pag.clone() };
    orient_rules(&mut out, &sepsets);
    Ok((out, sepsets))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CareError::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FciConfig {
    pub alpha: f64,
    pub max_depth: usize,
}

impl Default for FciConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, max_depth: 3 }
    }
}

/// Full FCI: adjacency search, colliders, Possible-D-SEP and R1–R4.
pub fn run_fci(names: Vec<String>, tester: &dyn CiTester, cfg: &FciConfig) -> Result<Pag> {
    if names.len() != tester.n_vars() {
        return Err(CareError::Shape(format!("{} names for {} tester variables", names.len(), tester.n_vars())));
    }
    let (skel, sepsets) = learn_skeleton(tester, cfg.alpha, cfg.max_depth)?;
    let pag = orient_v_structures(names, &skel, &sepsets);
    Ok(apply_fci_rules(&pag, &sepsets, tester, cfg.alpha, cfg.max_depth)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterChoice {
    Auto,
    FisherZ,
    GSquared,
    Permutation,
}

impl FromStr for TesterChoice {
    type Err = CareError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "fisher_z" | "fisherz" | "fisher-z" => Ok(Self::FisherZ),
            "g_squared" | "gsq" | "g2" | "g-squared" => Ok(Self::GSquared),
            "permutation" | "ppcit" => Ok(Self::Permutation),
            other => Err(CareError::InvalidArgument(format!("unknown tester '{other}'"))),
        }
    }
}

/// Run FCI on the raw variables of `data` (features followed by the target).
pub fn run_fci_on_dataset(
    data: &Dataset,
    choice: TesterChoice,
    perm: PermutationConfig,
    cfg: &FciConfig,
) -> Result<Pag> {
    let ci = CiData::from_dataset(data);
    let names = ci.names().to_vec();
    match choice {
        TesterChoice::Auto => run_fci(names, &AutoTester::new(&ci, perm)?, cfg),
        TesterChoice::FisherZ => run_fci(names, &FisherZTester { data: &ci }, cfg),
        TesterChoice::GSquared => run_fci(names, &GSquaredTester { data: &ci }, cfg),
        TesterChoice::Permutation => {
            AutoTester::new(&ci, perm)?;
            run_fci(names, &PermutationTester { data: &ci, cfg: perm }, cfg)
        }
    }
}

/// Binary mask over the non-target variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalMask {
    pub names: Vec<String>,
    pub values: Vec<u8>,
}

impl CausalMask {
    pub fn all_ones(names: Vec<String>) -> Self {
        let values = vec![1; names.len()];
        Self { names, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u8> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i] == 1).collect()
    }

    /// `{name: 0/1}` in variable order.
    pub fn to_json_value(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> =
            self.names.iter().zip(&self.values).map(|(n, v)| (n.clone(), serde_json::Value::from(*v))).collect();
        serde_json::Value::Object(map)
    }

    /// Parse a `{name: 0/1}` object, ordering entries as in `names`.
    pub fn from_json_value(value: &serde_json::Value, names: &[String]) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| CareError::InvalidArgument("mask must be a JSON object".into()))?;
        let mut values = Vec::with_capacity(names.len());
        for n in names {
            let v = obj
                .get(n)
                .and_then(serde_json::Value::as_u64)
                .ok_or_else(|| CareError::InvalidArgument(format!("mask has no 0/1 entry for '{n}'")))?;
            if v > 1 {
                return Err(CareError::InvalidArgument(format!("mask entry for '{n}' must be 0 or 1")));
            }
            values.push(v as u8);
        }
        Ok(Self { names: names.to_vec(), values })
    }
}

/// `A_j = 1` iff `X_j` and the target are adjacent with an arrowhead at the
/// target end (any mark at the `X_j` end).
pub fn extract_mask(pag: &Pag, target: &str) -> Result<CausalMask> {
    let y = pag.index(target).ok_or_else(|| CareError::UnknownVariable(target.to_string()))?;
    let mut names = Vec::new();
    let mut values = Vec::new();
    for x in (0..pag.len()).filter(|&x| x != y) {
        names.push(pag.names[x].clone());
        let at_target = pag.mark(x, y);
        let at_feature = pag.mark(y, x);
        let robust =
            at_target == EdgeMark::Arrow && matches!(at_feature, EdgeMark::Tail | EdgeMark::Circle | EdgeMark::Arrow);
        values.push(u8::from(robust));
    }
    Ok(CausalMask { names, values })
}

impl fmt::Display for CausalMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.names.iter().zip(&self.values).map(|(n, v)| format!("{n}:{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
