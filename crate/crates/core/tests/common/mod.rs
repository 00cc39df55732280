//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's own numerics: the MLP forward pass,
//! Shapley values, d-separation, Bayesian-network marginals and the
//! goodness-of-fit statistics are all recomputed from their definitions.

#![allow(dead_code)]

use care_core::graph::Dag;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Flat-parameter model evaluated from the documented layout:
/// LR is `[w (p), b]`; MLP is `[W1 (h×p row-major), b1 (h), w2 (h), b2]`.
#[derive(Debug, Clone)]
pub struct RefModel {
    pub p: usize,
    /// 0 for logistic regression.
    pub h: usize,
    pub theta: Vec<f64>,
}

impl RefModel {
    pub fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        let (p, h) = (self.p, self.h);
        (0..h).map(|k| self.theta[h * p + k] + (0..p).map(|j| self.theta[k * p + j] * x[j]).sum::<f64>()).collect()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let (p, h) = (self.p, self.h);
        if h == 0 {
            return self.theta[p] + (0..p).map(|j| self.theta[j] * x[j]).sum::<f64>();
        }
        let z = self.pre_activations(x);
        self.theta[h * p + 2 * h] + (0..h).map(|k| self.theta[h * p + h + k] * z[k].max(0.0)).sum::<f64>()
    }

    /// Analytic d logit / d x for a fixed activation pattern.
    pub fn input_grad(&self, x: &[f64]) -> Vec<f64> {
        let (p, h) = (self.p, self.h);
        if h == 0 {
            return self.theta[..p].to_vec();
        }
        let z = self.pre_activations(x);
        (0..p)
            .map(|j| (0..h).filter(|&k| z[k] > 0.0).map(|k| self.theta[h * p + h + k] * self.theta[k * p + j]).sum())
            .collect()
    }

    /// Mean binary cross-entropy.
    pub fn bce(&self, xs: &[Vec<f64>], y: &[u8]) -> f64 {
        xs.iter()
            .zip(y)
            .map(|(x, &t)| {
                let z = self.logit(x);
                let p = 1.0 / (1.0 + (-z).exp());
                if t == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / xs.len() as f64
    }

    /// `(1/N) Σ_i Σ_j (1 − a_j) |x_ij ∂f/∂x_ij|`.
    pub fn penalty(&self, xs: &[Vec<f64>], mask: &[f64]) -> f64 {
        xs.iter()
            .map(|x| {
                let g = self.input_grad(x);
                (0..self.p).map(|j| (1.0 - mask[j]) * (x[j] * g[j]).abs()).sum::<f64>()
            })
            .sum::<f64>()
            / xs.len() as f64
    }

    /// Activation pattern plus attribution signs; the penalty is smooth in
    /// θ wherever this stays fixed.
    pub fn kink_signature(&self, xs: &[Vec<f64>]) -> Vec<i8> {
        let mut sig = Vec::new();
        for x in xs {
            if self.h > 0 {
                sig.extend(self.pre_activations(x).iter().map(|z| (*z > 0.0) as i8));
            }
            let g = self.input_grad(x);
            sig.extend((0..self.p).map(|j| (x[j] * g[j]).signum() as i8));
        }
        sig
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        Self { theta, ..self.clone() }
    }
}

/// Relative error with a small absolute floor for near-zero components.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Central difference of `f` along coordinate `k` of `v`.
pub fn central_diff(v: &[f64], k: usize, h: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut up = v.to_vec();
    let mut down = v.to_vec();
    up[k] += h;
    down[k] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

/// Shapley values by averaging marginal contributions over every ordering
/// of the players.
pub fn shapley_by_permutations(n_players: usize, value: impl Fn(&[bool]) -> f64) -> Vec<f64> {
    let mut phi = vec![0.0; n_players];
    let mut order: Vec<usize> = (0..n_players).collect();
    let mut count = 0usize;
    permute(&mut order, 0, &mut |perm| {
        let mut present = vec![false; n_players];
        let mut prev = value(&present);
        for &pl in perm {
            present[pl] = true;
            let cur = value(&present);
            phi[pl] += cur - prev;
            prev = cur;
        }
        count += 1;
    });
    phi.iter().map(|v| v / count as f64).collect()
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Two-sided Kolmogorov–Smirnov test of `samples` against U(0, 1).
/// Returns the asymptotic p-value.
pub fn ks_uniform_pvalue(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - u).max(u - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    kolmogorov_q(lambda)
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness-of-fit p-value of `counts` against `probs`.
/// Cells with zero probability must have zero count.
pub fn chi_square_gof_pvalue(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            assert_eq!(c, 0, "observed a zero-probability cell");
            continue;
        }
        let e = p * n as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
}

/// d-separation by enumerating every simple path in the skeleton and
/// checking whether some path is active given `cond`.
pub fn d_separated_by_paths(dag: &Dag, i: usize, j: usize, cond: &[usize]) -> bool {
    let n = dag.len();
    let mut adj = vec![Vec::new(); n];
    for (a, b) in dag.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let is_parent = |a: usize, b: usize| dag.parents(b).contains(&a);
    let descendants_or_self_in_cond = |v: usize| {
        let mut stack = vec![v];
        let mut seen = vec![false; n];
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            if cond.contains(&u) {
                return true;
            }
            stack.extend(dag.children(u));
        }
        false
    };
    let mut path = vec![i];
    let mut on_path = vec![false; n];
    on_path[i] = true;
    !find_active(i, j, &adj, &mut path, &mut on_path, &|p: &[usize]| {
        (1..p.len() - 1).all(|k| {
            let (a, v, b) = (p[k - 1], p[k], p[k + 1]);
            let collider = is_parent(a, v) && is_parent(b, v);
            if collider {
                descendants_or_self_in_cond(v)
            } else {
                !cond.contains(&v)
            }
        })
    })
}

fn find_active(
    cur: usize,
    target: usize,
    adj: &[Vec<usize>],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    active: &dyn Fn(&[usize]) -> bool,
) -> bool {
    if cur == target {
        return active(path);
    }
    for &next in &adj[cur] {
        if on_path[next] {
            continue;
        }
        on_path[next] = true;
        path.push(next);
        let found = find_active(next, target, adj, path, on_path, active);
        path.pop();
        on_path[next] = false;
        if found {
            return true;
        }
    }
    false
}

/// A small discrete network kept in plain vectors, used both to write BIF
/// text and to compute exact marginals by enumerating the joint.
#[derive(Debug, Clone)]
pub struct SmallNet {
    pub names: Vec<String>,
    pub cards: Vec<usize>,
    /// Parents listed in ascending index order; nodes are topologically sorted.
    pub parents: Vec<Vec<usize>>,
    /// `tables[v][config]` with `config` row-major over the parents (first
    /// parent slowest). Entries are integer weights summing to 1000.
    pub tables: Vec<Vec<Vec<u32>>>,
}

impl SmallNet {
    pub fn level_name(&self, v: usize, l: usize) -> String {
        format!("{}_l{l}", self.names[v].to_lowercase())
    }

    pub fn to_bif(&self) -> String {
        let mut s = String::from("network test {\n}\n");
        for v in 0..self.names.len() {
            let levels: Vec<String> = (0..self.cards[v]).map(|l| self.level_name(v, l)).collect();
            s += &format!(
                "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}\n",
                self.names[v],
                self.cards[v],
                levels.join(", ")
            );
        }
        for v in 0..self.names.len() {
            let fmt_row =
                |row: &[u32]| row.iter().map(|w| format!("{}", *w as f64 / 1000.0)).collect::<Vec<_>>().join(", ");
            if self.parents[v].is_empty() {
                s += &format!("probability ( {} ) {{\n  table {};\n}}\n", self.names[v], fmt_row(&self.tables[v][0]));
            } else {
                let pn: Vec<&str> = self.parents[v].iter().map(|&p| self.names[p].as_str()).collect();
                s += &format!("probability ( {} | {} ) {{\n", self.names[v], pn.join(", "));
                for (c, row) in self.tables[v].iter().enumerate() {
                    let assignment = self.decode_config(v, c);
                    let labels: Vec<String> =
                        self.parents[v].iter().zip(&assignment).map(|(&p, &l)| self.level_name(p, l)).collect();
                    s += &format!("  ({}) {};\n", labels.join(", "), fmt_row(row));
                }
                s += "}\n";
            }
        }
        s
    }

    fn decode_config(&self, v: usize, mut c: usize) -> Vec<usize> {
        let mut out = vec![0; self.parents[v].len()];
        for (k, &p) in self.parents[v].iter().enumerate().rev() {
            out[k] = c % self.cards[p];
            c /= self.cards[p];
        }
        out
    }

    fn encode_config(&self, v: usize, assignment: &[usize]) -> usize {
        self.parents[v].iter().fold(0, |acc, &p| acc * self.cards[p] + assignment[p])
    }

    /// Probability of every full assignment, enumerated in mixed radix with
    /// node 0 slowest.
    pub fn joint(&self) -> Vec<(Vec<usize>, f64)> {
        let n = self.names.len();
        let total: usize = self.cards.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut a = vec![0; n];
                for v in (0..n).rev() {
                    a[v] = idx % self.cards[v];
                    idx /= self.cards[v];
                }
                let p = (0..n).map(|v| self.tables[v][self.encode_config(v, &a)][a[v]] as f64 / 1000.0).product();
                (a, p)
            })
            .collect()
    }

    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut m: Vec<Vec<f64>> = self.cards.iter().map(|&c| vec![0.0; c]).collect();
        for (a, p) in self.joint() {
            for (v, &l) in a.iter().enumerate() {
                m[v][l] += p;
            }
        }
        m
    }
}

/// Random topologically ordered network with at most `max_parents` parents
/// per node and no zero probabilities.
pub fn random_small_net(n: usize, max_parents: usize, seed: u64) -> SmallNet {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let mut parents = Vec::new();
    let mut tables = Vec::new();
    for v in 0..n {
        let mut ps: Vec<usize> = (0..v).filter(|_| rng.random_bool(0.5)).collect();
        ps.truncate(max_parents);
        let configs: usize = ps.iter().map(|&p| cards[p]).product();
        let rows = (0..configs)
            .map(|_| {
                let mut w: Vec<u32> = (0..cards[v]).map(|_| rng.random_range(50..400)).collect();
                let rest: u32 = w[..cards[v] - 1].iter().sum();
                let last = cards[v] - 1;
                if rest >= 950 {
                    w.iter_mut().for_each(|x| *x = 1000 / cards[v] as u32);
                    w[last] = 1000 - (1000 / cards[v] as u32) * (cards[v] as u32 - 1);
                } else {
                    w[last] = 1000 - rest;
                }
                w
            })
            .collect();
        parents.push(ps);
        tables.push(rows);
    }
    SmallNet { names, cards, parents, tables }
}
