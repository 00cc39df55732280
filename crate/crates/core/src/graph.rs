//! Directed acyclic graphs over named nodes.

use serde::{Deserialize, Serialize};

use crate::error::{CareError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Build from `(from, to)` name pairs. Fails on unknown names or cycles.
    pub fn from_edges(names: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let idx = |n: &str| names.iter().position(|m| m == n).ok_or_else(|| CareError::UnknownVariable(n.to_string()));
        let mut parents = vec![Vec::new(); names.len()];
        for (a, b) in edges {
            let (a, b) = (idx(a)?, idx(b)?);
            if !parents[b].contains(&a) {
                parents[b].push(a);
            }
        }
        for p in &mut parents {
            p.sort_unstable();
        }
        Self::from_parents(names, parents)
    }

    pub fn from_parents(names: Vec<String>, parents: Vec<Vec<usize>>) -> Result<Self> {
        if names.len() != parents.len() {
            return Err(CareError::Shape("one parent list per node required".into()));
        }
        let dag = Self { names, parents };
        if dag.topological_order().is_none() {
            return Err(CareError::InvalidArgument("graph contains a directed cycle".into()));
        }
        Ok(dag)
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

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.parents[c].contains(&v)).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.parents[v].len() + self.children(v).len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> =
            self.parents.iter().enumerate().flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c))).collect();
        e.sort_unstable();
        e
    }

    /// Kahn's algorithm, ties broken by lowest index. `None` if cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        while order.len() < n {
            let next = (0..n).find(|&v| !done[v] && indeg[v] == 0)?;
            done[next] = true;
            order.push(next);
            for c in 0..n {
                if self.parents[c].contains(&next) {
                    indeg[c] -= 1;
                }
            }
        }
        Some(order)
    }

    /// `set` together with all of its ancestors.
    pub fn ancestral_closure(&self, set: &[usize]) -> Vec<bool> {
        let mut in_set = vec![false; self.len()];
        let mut stack: Vec<usize> = set.to_vec();
        while let Some(v) = stack.pop() {
            if !in_set[v] {
                in_set[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        in_set
    }
}
