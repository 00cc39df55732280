//! Discrete Bayesian networks: BIF parsing and ancestral sampling.
//!
//! Supported BIF subset: `network`, `variable` blocks with `type discrete`,
//! and `probability` blocks containing `table`, per-parent-configuration
//! rows, and `default` rows. `property` statements and comments are skipped.
//!
//! A conditional `table` lists one run of probabilities per child level, each
//! run spanning every parent configuration (last parent varying fastest).

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, Meta, Target};
use crate::error::{CareError, Result};
use crate::graph::Dag;
use crate::rng;

/// Tolerance on CPT row sums accepted from files. Accepted rows are renormalized.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnNode {
    pub name: String,
    pub levels: Vec<String>,
    pub parents: Vec<usize>,
    /// One distribution over `levels` per parent configuration, indexed in
    /// row-major order over the parents' levels.
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesNet {
    nodes: Vec<BnNode>,
    order: Vec<usize>,
}

impl BayesNet {
    pub fn new(nodes: Vec<BnNode>) -> Result<Self> {
        for node in &nodes {
            if node.levels.is_empty() {
                return Err(CareError::InvalidNetwork(format!("'{}' has no levels", node.name)));
            }
            if node.parents.iter().any(|&p| p >= nodes.len()) {
                return Err(CareError::InvalidNetwork(format!("'{}' has an invalid parent", node.name)));
            }
            let combos: usize = node.parents.iter().map(|&p| nodes[p].levels.len()).product();
            if node.cpt.len() != combos {
                return Err(CareError::InvalidNetwork(format!(
                    "'{}' has {} CPT rows, expected {combos}",
                    node.name,
                    node.cpt.len()
                )));
            }
            for row in &node.cpt {
                let sum: f64 = row.iter().sum();
                if row.len() != node.levels.len() || row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                    return Err(CareError::InvalidNetwork(format!("'{}' has an invalid probability row", node.name)));
                }
            }
        }
        let dag = Dag::from_parents(
            nodes.iter().map(|n| n.name.clone()).collect(),
            nodes.iter().map(|n| n.parents.clone()).collect(),
        )
        .map_err(|_| CareError::InvalidNetwork("parent structure contains a cycle".into()))?;
        let order = dag.topological_order().expect("checked acyclic");
        Ok(Self { nodes, order })
    }

    pub fn nodes(&self) -> &[BnNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// Row index into `nodes[v].cpt` for a full assignment of level indices.
    pub fn config_index(&self, v: usize, assignment: &[usize]) -> usize {
        self.nodes[v].parents.iter().fold(0, |acc, &p| acc * self.nodes[p].levels.len() + assignment[p])
    }

    pub fn to_dag(&self) -> Dag {
        Dag::from_parents(
            self.nodes.iter().map(|n| n.name.clone()).collect(),
            self.nodes.iter().map(|n| n.parents.clone()).collect(),
        )
        .expect("acyclic by construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Lexer {
    fn new(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut line = 1;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            match c {
                '\n' => {
                    line += 1;
                    i += 1;
                }
                c if c.is_whitespace() => i += 1,
                '/' if chars.get(i + 1) == Some(&'/') => {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                }
                '/' if chars.get(i + 1) == Some(&'*') => {
                    let start = line;
                    i += 2;
                    loop {
                        if i + 1 >= chars.len() {
                            return Err(CareError::BifSyntax { line: start, message: "unterminated comment".into() });
                        }
                        if chars[i] == '*' && chars[i + 1] == '/' {
                            i += 2;
                            break;
                        }
                        if chars[i] == '\n' {
                            line += 1;
                        }
                        i += 1;
                    }
                }
                '"' => {
                    let start = line;
                    let mut s = String::new();
                    i += 1;
                    while i < chars.len() && chars[i] != '"' {
                        if chars[i] == '\n' {
                            line += 1;
                        }
                        s.push(chars[i]);
                        i += 1;
                    }
                    if i >= chars.len() {
                        return Err(CareError::BifSyntax { line: start, message: "unterminated string".into() });
                    }
                    i += 1;
                    toks.push((Tok::Word(s), start));
                }
                '{' | '}' | '(' | ')' | '[' | ']' | ',' | ';' | '|' => {
                    toks.push((Tok::Punct(c), line));
                    i += 1;
                }
                _ => {
                    let mut s = String::new();
                    while i < chars.len() {
                        let c = chars[i];
                        if c.is_whitespace() || "{}()[],;|\"".contains(c) {
                            break;
                        }
                        s.push(c);
                        i += 1;
                    }
                    toks.push((Tok::Word(s), line));
                }
            }
        }
        Ok(Self { toks, pos: 0 })
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or_else(|| self.toks.last()).map_or(1, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(CareError::BifSyntax { line: self.line(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok> {
        match self.toks.get(self.pos) {
            Some((t, _)) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn word(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Word(w) => Ok(w),
            Tok::Punct(p) => {
                self.pos -= 1;
                self.err(format!("expected a name, found '{p}'"))
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.next()? {
            Tok::Punct(p) if p == c => Ok(()),
            other => {
                self.pos -= 1;
                self.err(format!("expected '{c}', found {}", describe(&other)))
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Skip a statement up to and including its terminating ';'.
    fn skip_statement(&mut self) -> Result<()> {
        loop {
            if let Tok::Punct(';') = self.next()? {
                return Ok(());
            }
        }
    }

    /// Skip a `{ ... }` block with nesting.
    fn skip_block(&mut self) -> Result<()> {
        self.expect('{')?;
        let mut depth = 1;
        while depth > 0 {
            match self.next()? {
                Tok::Punct('{') => depth += 1,
                Tok::Punct('}') => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    /// Comma-or-space separated list of words/numbers up to `;`.
    fn list_until_semicolon(&mut self) -> Result<Vec<(String, usize)>> {
        let mut out = Vec::new();
        loop {
            let line = self.line();
            match self.next()? {
                Tok::Punct(';') => return Ok(out),
                Tok::Punct(',') => {}
                Tok::Word(w) => out.push((w, line)),
                other => {
                    self.pos -= 1;
                    return self.err(format!("unexpected {}", describe(&other)));
                }
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Punct(p) => format!("'{p}'"),
    }
}

struct RawVariable {
    name: String,
    levels: Vec<String>,
    line: usize,
}

enum RawEntry {
    Table(Vec<f64>),
    Row(Vec<String>, Vec<f64>),
    Default(Vec<f64>),
}

struct RawProbability {
    child: String,
    parents: Vec<String>,
    entries: Vec<(RawEntry, usize)>,
    line: usize,
}

fn parse_variable(lx: &mut Lexer) -> Result<RawVariable> {
    let line = lx.line();
    let name = lx.word()?;
    lx.expect('{')?;
    let mut levels = None;
    loop {
        if lx.eat('}') {
            break;
        }
        let kw = lx.word()?;
        match kw.as_str() {
            "type" => {
                let t = lx.word()?;
                if t != "discrete" {
                    return lx.err(format!("variable '{name}': only discrete variables are supported, found '{t}'"));
                }
                lx.expect('[')?;
                let count_line = lx.line();
                let count: usize = lx
                    .word()?
                    .parse()
                    .map_err(|_| CareError::BifSyntax { line: count_line, message: "invalid level count".into() })?;
                lx.expect(']')?;
                lx.expect('{')?;
                let mut lv = Vec::new();
                loop {
                    match lx.next()? {
                        Tok::Punct('}') => break,
                        Tok::Punct(',') => {}
                        Tok::Word(w) => lv.push(w),
                        other => {
                            lx.pos -= 1;
                            return lx.err(format!("unexpected {} in level list", describe(&other)));
                        }
                    }
                }
                lx.expect(';')?;
                if lv.len() != count {
                    return Err(CareError::BifSyntax {
                        line: count_line,
                        message: format!("variable '{name}' declares {count} levels but lists {}", lv.len()),
                    });
                }
                let unique: BTreeSet<&String> = lv.iter().collect();
                if unique.len() != lv.len() || lv.is_empty() {
                    return Err(CareError::BifSyntax {
                        line: count_line,
                        message: format!("variable '{name}' has empty or duplicate levels"),
                    });
                }
                levels = Some(lv);
            }
            "property" => lx.skip_statement()?,
            other => return lx.err(format!("unexpected '{other}' in variable block")),
        }
    }
    match levels {
        Some(levels) => Ok(RawVariable { name, levels, line }),
        None => Err(CareError::BifSyntax { line, message: format!("variable '{name}' has no type declaration") }),
    }
}

fn parse_probability(lx: &mut Lexer) -> Result<RawProbability> {
    let line = lx.line();
    lx.expect('(')?;
    let child = lx.word()?;
    let mut parents = Vec::new();
    if lx.eat('|') {
        loop {
            match lx.next()? {
                Tok::Punct(')') => break,
                Tok::Punct(',') => {}
                Tok::Word(w) => parents.push(w),
                other => {
                    lx.pos -= 1;
                    return lx.err(format!("unexpected {} in parent list", describe(&other)));
                }
            }
        }
    } else {
        lx.expect(')')?;
    }
    lx.expect('{')?;
    let mut entries = Vec::new();
    loop {
        if lx.eat('}') {
            break;
        }
        let entry_line = lx.line();
        if lx.eat('(') {
            let mut cfg = Vec::new();
            loop {
                match lx.next()? {
                    Tok::Punct(')') => break,
                    Tok::Punct(',') => {}
                    Tok::Word(w) => cfg.push(w),
                    other => {
                        lx.pos -= 1;
                        return lx.err(format!("unexpected {} in configuration", describe(&other)));
                    }
                }
            }
            let probs = numbers(lx)?;
            entries.push((RawEntry::Row(cfg, probs), entry_line));
            continue;
        }
        let kw = lx.word()?;
        match kw.as_str() {
            "table" => entries.push((RawEntry::Table(numbers(lx)?), entry_line)),
            "default" => entries.push((RawEntry::Default(numbers(lx)?), entry_line)),
            "property" => lx.skip_statement()?,
            other => {
                lx.pos -= 1;
                return lx.err(format!("unexpected '{other}' in probability block"));
            }
        }
    }
    Ok(RawProbability { child, parents, entries, line })
}

fn numbers(lx: &mut Lexer) -> Result<Vec<f64>> {
    lx.list_until_semicolon()?
        .into_iter()
        .map(|(w, line)| {
            w.parse::<f64>()
                .map_err(|_| CareError::BifSyntax { line, message: format!("expected a probability, found '{w}'") })
        })
        .collect()
}

fn fmt_sum(s: f64) -> String {
    format!("{}", (s * 1e6).round() / 1e6)
}

fn check_row(child: &str, label: &str, row: &[f64], line: usize) -> Result<Vec<f64>> {
    if let Some(p) = row.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(CareError::InvalidNetwork(format!(
            "line {line}: CPT of '{child}' {label} has invalid probability {p}"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(CareError::InvalidNetwork(format!(
            "line {line}: CPT of '{child}' {label} row sums to {}",
            fmt_sum(sum)
        )));
    }
    Ok(row.iter().map(|p| p / sum).collect())
}

/// Parse BIF text into a validated network; node order is declaration order.
pub fn parse_bif(text: &str) -> Result<BayesNet> {
    let mut lx = Lexer::new(text)?;
    let mut vars: Vec<RawVariable> = Vec::new();
    let mut probs: Vec<RawProbability> = Vec::new();
    while lx.peek().is_some() {
        let kw = lx.word()?;
        match kw.as_str() {
            "network" => {
                while !matches!(lx.peek(), Some(Tok::Punct('{')) | None) {
                    lx.next()?;
                }
                lx.skip_block()?;
            }
            "variable" => vars.push(parse_variable(&mut lx)?),
            "probability" => probs.push(parse_probability(&mut lx)?),
            other => {
                lx.pos -= 1;
                return lx.err(format!("unexpected '{other}' at top level"));
            }
        }
    }

    let index = |name: &str, line: usize| {
        vars.iter()
            .position(|v| v.name == name)
            .ok_or_else(|| CareError::BifSyntax { line, message: format!("unknown variable '{name}'") })
    };
    for (a, v) in vars.iter().enumerate() {
        if vars[..a].iter().any(|w| w.name == v.name) {
            return Err(CareError::BifSyntax {
                line: v.line,
                message: format!("variable '{}' declared twice", v.name),
            });
        }
    }

    let mut nodes: Vec<Option<BnNode>> = vec![None; vars.len()];
    for p in &probs {
        let child = index(&p.child, p.line)?;
        if nodes[child].is_some() {
            return Err(CareError::BifSyntax {
                line: p.line,
                message: format!("duplicate probability block for '{}'", p.child),
            });
        }
        let parents: Vec<usize> = p.parents.iter().map(|n| index(n, p.line)).collect::<Result<_>>()?;
        let card = vars[child].levels.len();
        let parent_cards: Vec<usize> = parents.iter().map(|&q| vars[q].levels.len()).collect();
        let combos: usize = parent_cards.iter().product();
        let mut cpt: Vec<Option<Vec<f64>>> = vec![None; combos];
        let mut default: Option<Vec<f64>> = None;
        for (entry, line) in &p.entries {
            match entry {
                RawEntry::Table(values) => {
                    if values.len() != card * combos {
                        return Err(CareError::BifSyntax {
                            line: *line,
                            message: format!(
                                "table for '{}' has {} values, expected {}",
                                p.child,
                                values.len(),
                                card * combos
                            ),
                        });
                    }
                    for (c, slot) in cpt.iter_mut().enumerate() {
                        let row: Vec<f64> = (0..card).map(|l| values[l * combos + c]).collect();
                        *slot = Some(check_row(&p.child, &format!("configuration {c}"), &row, *line)?);
                    }
                }
                RawEntry::Row(cfg, values) => {
                    if cfg.len() != parents.len() {
                        return Err(CareError::BifSyntax {
                            line: *line,
                            message: format!(
                                "configuration for '{}' names {} parents, expected {}",
                                p.child,
                                cfg.len(),
                                parents.len()
                            ),
                        });
                    }
                    if values.len() != card {
                        return Err(CareError::BifSyntax {
                            line: *line,
                            message: format!("row for '{}' has {} values, expected {card}", p.child, values.len()),
                        });
                    }
                    let mut idx = 0;
                    for (level, &q) in cfg.iter().zip(&parents) {
                        let l = vars[q].levels.iter().position(|x| x == level).ok_or_else(|| CareError::BifSyntax {
                            line: *line,
                            message: format!("unknown level '{level}' of '{}'", vars[q].name),
                        })?;
                        idx = idx * vars[q].levels.len() + l;
                    }
                    let label = format!("({})", cfg.join(", "));
                    cpt[idx] = Some(check_row(&p.child, &label, values, *line)?);
                }
                RawEntry::Default(values) => {
                    if values.len() != card {
                        return Err(CareError::BifSyntax {
                            line: *line,
                            message: format!(
                                "default row for '{}' has {} values, expected {card}",
                                p.child,
                                values.len()
                            ),
                        });
                    }
                    default = Some(check_row(&p.child, "default", values, *line)?);
                }
            }
        }
        let mut rows = Vec::with_capacity(combos);
        for (c, row) in cpt.into_iter().enumerate() {
            match row.or_else(|| default.clone()) {
                Some(r) => rows.push(r),
                None => {
                    let mut labels = Vec::new();
                    let mut rem = c;
                    for (k, &q) in parents.iter().enumerate().rev() {
                        labels.push(vars[q].levels[rem % parent_cards[k]].clone());
                        rem /= parent_cards[k];
                    }
                    labels.reverse();
                    return Err(CareError::InvalidNetwork(format!(
                        "CPT of '{}' is missing parent configuration ({})",
                        p.child,
                        labels.join(", ")
                    )));
                }
            }
        }
        nodes[child] =
            Some(BnNode { name: vars[child].name.clone(), levels: vars[child].levels.clone(), parents, cpt: rows });
    }
    let nodes = nodes
        .into_iter()
        .zip(&vars)
        .map(|(n, v)| n.ok_or_else(|| CareError::InvalidNetwork(format!("no probability block for '{}'", v.name))))
        .collect::<Result<Vec<_>>>()?;
    BayesNet::new(nodes)
}

/// Draw `n` joint samples root-to-leaf. Every column is categorical and the
/// result carries no target yet.
pub fn ancestral_sample(net: &BayesNet, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(CareError::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut assignment = vec![0usize; net.len()];
    for _ in 0..n {
        for &v in net.topological_order() {
            let dist = &net.nodes[v].cpt[net.config_index(v, &assignment)];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut level = dist.len() - 1;
            for (l, &p) in dist.iter().enumerate() {
                acc += p;
                if u < acc {
                    level = l;
                    break;
                }
            }
            // Zero-probability trailing levels must never be chosen by rounding.
            while dist[level] == 0.0 && level > 0 {
                level -= 1;
            }
            assignment[v] = level;
        }
        rows.push(assignment.iter().map(|&l| l as f64).collect());
    }
    Dataset::new(
        net.nodes.iter().map(|n| n.name.clone()).collect(),
        net.nodes.iter().map(|n| ColumnKind::Categorical { levels: n.levels.clone() }).collect(),
        rows,
        None,
        Meta { seed, ..Meta::default() },
    )
}

/// Turn categorical `var` into the binary target: 1 iff its level is in
/// `positive_levels`. The variable is removed from the features.
pub fn binarize_target<S: AsRef<str>>(data: &Dataset, var: &str, positive_levels: &[S]) -> Result<Dataset> {
    let j = data.feature_index(var)?;
    let levels = match &data.kinds()[j] {
        ColumnKind::Categorical { levels } => levels.clone(),
        _ => {
            return Err(CareError::InvalidArgument(format!("variable '{var}' is not categorical")));
        }
    };
    let mut positive = vec![false; levels.len()];
    for l in positive_levels {
        let l = l.as_ref();
        let idx = levels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| CareError::InvalidArgument(format!("variable '{var}' has no level '{l}'")))?;
        positive[idx] = true;
    }
    let target: Vec<u8> = data.rows().iter().map(|r| u8::from(positive[r[j] as usize])).collect();
    let keep: Vec<usize> = (0..data.n_features()).filter(|&c| c != j).collect();
    let features = data.select_features(&keep);
    let (names, kinds, rows, _, meta) = features.into_parts();
    Dataset::new(names, kinds, rows, Some(Target { name: var.to_string(), values: target }), meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODE: &str = r#"
network toy {
  property "a network";
}
// comment
variable A {
  type discrete [ 2 ] { yes, no };
}
variable B {
  type discrete [ 3 ] { lo, mid, hi };
  property weight = 1 ;
}
probability ( A ) {
  table 0.3, 0.7;
}
/* block
   comment */
probability ( B | A ) {
  (yes) 0.1, 0.2, 0.7;
  (no) 0.5, 0.25, 0.25;
}
"#;

    #[test]
    fn parses_two_node_network() {
        let net = parse_bif(TWO_NODE).unwrap();
        assert_eq!(net.len(), 2);
        let b = &net.nodes()[1];
        assert_eq!(b.parents, vec![0]);
        assert_eq!(b.levels, vec!["lo", "mid", "hi"]);
        assert_eq!(b.cpt, vec![vec![0.1, 0.2, 0.7], vec![0.5, 0.25, 0.25]]);
        assert_eq!(net.nodes()[0].cpt, vec![vec![0.3, 0.7]]);
    }

    #[test]
    fn conditional_table_is_child_major() {
        let text = "variable A { type discrete [2] {a0, a1}; }\n\
                    variable B { type discrete [2] {b0, b1}; }\n\
                    probability (A) { table 0.5, 0.5; }\n\
                    probability (B | A) { table 0.9, 0.2, 0.1, 0.8; }";
        let net = parse_bif(text).unwrap();
        assert_eq!(net.nodes()[1].cpt, vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
    }

    #[test]
    fn default_row_fills_missing() {
        let text = "variable A { type discrete [2] {a0, a1}; }\n\
                    variable B { type discrete [2] {b0, b1}; }\n\
                    probability (A) { table 0.5, 0.5; }\n\
                    probability (B | A) { (a0) 0.9, 0.1; default 0.4, 0.6; }";
        let net = parse_bif(text).unwrap();
        assert_eq!(net.nodes()[1].cpt[1], vec![0.4, 0.6]);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let text = "variable A { type discrete [2] {a0, a1}; }\nprobability (A) { table 0.5, 0.6; }";
        let err = parse_bif(text).unwrap_err().to_string();
        assert!(err.contains("row sums to 1.1"), "{err}");
    }

    #[test]
    fn rejects_missing_configuration() {
        let text = "variable A { type discrete [2] {a0, a1}; }\n\
                    variable B { type discrete [2] {b0, b1}; }\n\
                    probability (A) { table 0.5, 0.5; }\n\
                    probability (B | A) { (a0) 0.9, 0.1; }";
        let err = parse_bif(text).unwrap_err().to_string();
        assert!(err.contains("missing parent configuration (a1)"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "variable A {\n type discrete [2] {a0, a1};\n}\nprobability (A) {\n table 0.5, zz;\n}";
        match parse_bif(text).unwrap_err() {
            CareError::BifSyntax { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("zz"));
            }
            e => panic!("unexpected {e}"),
        }
        match parse_bif("variable A {\n type continuous;\n}").unwrap_err() {
            CareError::BifSyntax { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(parse_bif("bogus"), Err(CareError::BifSyntax { line: 1, .. })));
    }

    #[test]
    fn rejects_cycles_and_unknowns() {
        let cyc = "variable A { type discrete [2] {a0, a1}; }\n\
                   variable B { type discrete [2] {b0, b1}; }\n\
                   probability (A | B) { (b0) 0.5, 0.5; (b1) 0.5, 0.5; }\n\
                   probability (B | A) { (a0) 0.5, 0.5; (a1) 0.5, 0.5; }";
        assert!(parse_bif(cyc).unwrap_err().to_string().contains("cycle"));
        let unk = "variable A { type discrete [2] {a0, a1}; }\nprobability (A | Z) { table 0.5, 0.5; }";
        assert!(parse_bif(unk).is_err());
        let missing = "variable A { type discrete [2] {a0, a1}; }";
        assert!(parse_bif(missing).is_err());
    }

    #[test]
    fn sample_frequency_matches_cpt() {
        let text = "variable A { type discrete [2] {a0, a1}; }\nprobability (A) { table 0.3, 0.7; }";
        let net = parse_bif(text).unwrap();
        let d = ancestral_sample(&net, 50_000, 5).unwrap();
        let zeros = d.column(0).iter().filter(|&&v| v == 0.0).count() as f64 / 50_000.0;
        assert!((zeros - 0.3).abs() < 0.01, "{zeros}");
        assert_eq!(d, ancestral_sample(&net, 50_000, 5).unwrap());
    }

    #[test]
    fn deterministic_chain() {
        let text = "variable A { type discrete [2] {a0, a1}; }\n\
                    variable B { type discrete [3] {b0, b1, b2}; }\n\
                    variable C { type discrete [2] {c0, c1}; }\n\
                    probability (A) { table 0, 1; }\n\
                    probability (B | A) { (a0) 1, 0, 0; (a1) 0, 0, 1; }\n\
                    probability (C | B) { (b0) 1, 0; (b1) 1, 0; (b2) 1, 0; }";
        let net = parse_bif(text).unwrap();
        let d = ancestral_sample(&net, 500, 1).unwrap();
        assert!(d.rows().iter().all(|r| r == &vec![1.0, 2.0, 0.0]));
        assert!(d.target().is_none());
        assert!(d.kinds().iter().all(|k| matches!(k, ColumnKind::Categorical { .. })));
    }

    #[test]
    fn binarize_cases() {
        let text = "variable BP { type discrete [3] {LOW, NORMAL, HIGH}; }\n\
                    variable X { type discrete [2] {x0, x1}; }\n\
                    probability (BP) { table 0.2, 0.5, 0.3; }\n\
                    probability (X | BP) { (LOW) 0.5, 0.5; (NORMAL) 0.5, 0.5; (HIGH) 0.1, 0.9; }";
        let net = parse_bif(text).unwrap();
        let d = ancestral_sample(&net, 200, 2).unwrap();
        let b = binarize_target(&d, "BP", &["HIGH"]).unwrap();
        assert_eq!(b.names(), &["X".to_string()]);
        for (r, t) in d.rows().iter().zip(b.target_values().unwrap()) {
            assert_eq!(*t == 1, r[0] == 2.0);
        }
        let all = binarize_target(&d, "BP", &["LOW", "NORMAL", "HIGH"]).unwrap();
        assert!(all.target_values().unwrap().iter().all(|&t| t == 1));
        let none = binarize_target(&d, "BP", &[] as &[&str]).unwrap();
        assert!(none.target_values().unwrap().iter().all(|&t| t == 0));
        assert!(binarize_target(&d, "BP", &["VERY_HIGH"]).is_err());
        assert!(binarize_target(&d, "Q", &["HIGH"]).is_err());
    }
}
