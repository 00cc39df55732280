//! Tabular data model shared by every stage of the pipeline.
//!
//! A [`Dataset`] holds raw feature values row-major: continuous cells as reals
//! and categorical cells as level indices stored in `f64`. The binary target
//! lives beside the features rather than among them. Models consume the
//! one-hot [`EncodedMatrix`]; structure learning consumes the raw values.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{CareError, Result};
use crate::rng;

/// Smallest standard deviation used when standardizing.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical { levels: Vec<String> },
    BinaryTarget,
}

impl ColumnKind {
    pub fn categorical<S: Into<String>>(levels: impl IntoIterator<Item = S>) -> Self {
        ColumnKind::Categorical { levels: levels.into_iter().map(Into::into).collect() }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, ColumnKind::Continuous)
    }

    /// Number of levels for categorical columns, 2 for the target, `None` for continuous.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            ColumnKind::Continuous => None,
            ColumnKind::Categorical { levels } => Some(levels.len()),
            ColumnKind::BinaryTarget => Some(2),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let ColumnKind::Categorical { levels } = self {
            if levels.is_empty() {
                return Err(CareError::Schema(format!("categorical column '{name}' has no levels")));
            }
            let unique: BTreeSet<&String> = levels.iter().collect();
            if unique.len() != levels.len() {
                return Err(CareError::Schema(format!("categorical column '{name}' has duplicate levels")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Test,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Meta {
    pub seed: u64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub values: Vec<u8>,
}

/// Column-typed feature table with an optional binary target.
///
/// The target is absent only for freshly sampled Bayesian-network tables that
/// have not yet been through [`crate::bayesnet::binarize_target`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    rows: Vec<Vec<f64>>,
    target: Option<Target>,
    meta: Meta,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        kinds: Vec<ColumnKind>,
        rows: Vec<Vec<f64>>,
        target: Option<Target>,
        meta: Meta,
    ) -> Result<Self> {
        if names.len() != kinds.len() {
            return Err(CareError::Schema(format!("{} names but {} column kinds", names.len(), kinds.len())));
        }
        if rows.is_empty() {
            return Err(CareError::Schema("dataset must have at least one row".into()));
        }
        for (name, kind) in names.iter().zip(&kinds) {
            if *kind == ColumnKind::BinaryTarget {
                return Err(CareError::Schema(format!("feature column '{name}' cannot have the target kind")));
            }
            kind.validate(name)?;
        }
        let d = names.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(CareError::Shape(format!("row {} has {} values, expected {d}", r + 1, row.len())));
            }
            for (c, (&v, kind)) in row.iter().zip(&kinds).enumerate() {
                let ok = match kind {
                    ColumnKind::Categorical { levels } => v >= 0.0 && v.fract() == 0.0 && (v as usize) < levels.len(),
                    _ => v.is_finite(),
                };
                if !ok {
                    return Err(CareError::Parse {
                        row: r + 1,
                        column: names[c].clone(),
                        message: format!("invalid cell value {v}"),
                    });
                }
            }
        }
        if let Some(t) = &target {
            if t.values.len() != rows.len() {
                return Err(CareError::Shape(format!("target has {} values for {} rows", t.values.len(), rows.len())));
            }
            if let Some(r) = t.values.iter().position(|&v| v > 1) {
                return Err(CareError::Parse {
                    row: r + 1,
                    column: t.name.clone(),
                    message: "non-binary target".into(),
                });
            }
        }
        Ok(Self { names, kinds, rows, target, meta })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn meta(&self) -> Meta {
        self.meta
    }

    pub fn with_meta(mut self, meta: Meta) -> Self {
        self.meta = meta;
        self
    }

    pub fn target(&self) -> Option<&Target> {
        self.target.as_ref()
    }

    pub fn target_values(&self) -> Result<&[u8]> {
        self.target
            .as_ref()
            .map(|t| t.values.as_slice())
            .ok_or_else(|| CareError::Schema("dataset has no target column".into()))
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target.as_ref().map(|t| t.name.as_str())
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| CareError::UnknownVariable(name.to_string()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Full CSV schema: feature kinds followed by the target.
    pub fn schema(&self) -> Vec<ColumnKind> {
        let mut kinds = self.kinds.clone();
        if self.target.is_some() {
            kinds.push(ColumnKind::BinaryTarget);
        }
        kinds
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let target = self
            .target
            .as_ref()
            .map(|t| Target { name: t.name.clone(), values: indices.iter().map(|&i| t.values[i]).collect() });
        Dataset { names: self.names.clone(), kinds: self.kinds.clone(), rows, target, meta: self.meta }
    }

    /// Keep only the given feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Dataset {
        Dataset {
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            kinds: columns.iter().map(|&c| self.kinds[c].clone()).collect(),
            rows: self.rows.iter().map(|r| columns.iter().map(|&c| r[c]).collect()).collect(),
            target: self.target.clone(),
            meta: self.meta,
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<String>, Vec<ColumnKind>, Vec<Vec<f64>>, Option<Target>, Meta) {
        (self.names, self.kinds, self.rows, self.target, self.meta)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Dataset = serde_json::from_str(text)?;
        let (names, kinds, rows, target, meta) = raw.into_parts();
        Dataset::new(names, kinds, rows, target, meta)
    }
}

/// Parse a CSV file whose columns follow `schema` in header order.
///
/// `target_name` must name the single column whose kind is
/// [`ColumnKind::BinaryTarget`].
pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnKind], target_name: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CareError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() != schema.len() {
        return Err(CareError::Schema(format!("header has {} columns but schema has {}", header.len(), schema.len())));
    }
    let target_col = header
        .iter()
        .position(|h| h == target_name)
        .ok_or_else(|| CareError::Schema(format!("target column '{target_name}' not found in header")))?;
    let n_targets = schema.iter().filter(|k| **k == ColumnKind::BinaryTarget).count();
    if n_targets != 1 || schema[target_col] != ColumnKind::BinaryTarget {
        return Err(CareError::Schema(format!(
            "schema must mark exactly one column, '{target_name}', as the binary target"
        )));
    }

    let mut rows = Vec::new();
    let mut target = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        if record.len() != schema.len() {
            return Err(CareError::Parse {
                row: row_no,
                column: String::from("*"),
                message: format!("expected {} fields, found {}", schema.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(schema.len() - 1);
        for (c, (cell, kind)) in record.iter().zip(schema).enumerate() {
            let cell = cell.trim();
            let err = |message: String| CareError::Parse { row: row_no, column: header[c].clone(), message };
            if cell.is_empty() {
                return Err(err("empty cell".into()));
            }
            match kind {
                ColumnKind::Continuous => {
                    let v: f64 = cell.parse().map_err(|_| err(format!("cannot parse '{cell}' as a number")))?;
                    if !v.is_finite() {
                        return Err(err(format!("non-finite value '{cell}'")));
                    }
                    row.push(v);
                }
                ColumnKind::Categorical { levels } => {
                    let idx = levels
                        .iter()
                        .position(|l| l == cell)
                        .ok_or_else(|| err(format!("unknown categorical level '{cell}'")))?;
                    row.push(idx as f64);
                }
                ColumnKind::BinaryTarget => {
                    let v = match cell.parse::<f64>() {
                        Ok(0.0) => 0,
                        Ok(1.0) => 1,
                        _ => {
                            return Err(err(format!("non-binary target at row {row_no}: '{cell}'")));
                        }
                    };
                    target.push(v);
                }
            }
        }
        rows.push(row);
    }

    let mut names = header.clone();
    names.remove(target_col);
    let mut kinds = schema.to_vec();
    kinds.remove(target_col);
    Dataset::new(names, kinds, rows, Some(Target { name: target_name.to_string(), values: target }), Meta::default())
}

/// Infer a schema from file contents: columns where every cell parses as a
/// finite number are continuous, the rest categorical with sorted levels.
pub fn infer_schema(path: impl AsRef<Path>, target_name: &str) -> Result<Vec<ColumnKind>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CareError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if !header.iter().any(|h| h == target_name) {
        return Err(CareError::Schema(format!("target column '{target_name}' not found in header")));
    }
    let mut numeric = vec![true; header.len()];
    let mut levels: Vec<BTreeSet<String>> = vec![BTreeSet::new(); header.len()];
    for record in reader.records() {
        let record = record?;
        for (c, cell) in record.iter().enumerate().take(header.len()) {
            let cell = cell.trim();
            if numeric[c] && !cell.parse::<f64>().map(f64::is_finite).unwrap_or(false) {
                numeric[c] = false;
            }
            levels[c].insert(cell.to_string());
        }
    }
    Ok(header
        .iter()
        .enumerate()
        .map(|(c, h)| {
            if h == target_name {
                ColumnKind::BinaryTarget
            } else if numeric[c] {
                ColumnKind::Continuous
            } else {
                ColumnKind::Categorical { levels: levels[c].iter().cloned().collect() }
            }
        })
        .collect())
}

/// [`load_csv`] with a schema from [`infer_schema`].
pub fn load_csv_inferred(path: impl AsRef<Path>, target_name: &str) -> Result<Dataset> {
    let schema = infer_schema(path.as_ref(), target_name)?;
    load_csv(path, &schema, target_name)
}

/// Write features followed by the target (if any) as a header + rows CSV.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CareError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = data.names.iter().map(String::as_str).collect();
    if let Some(t) = &data.target {
        header.push(&t.name);
    }
    writer.write_record(&header)?;
    for (r, row) in data.rows.iter().enumerate() {
        let mut fields: Vec<String> = row
            .iter()
            .zip(&data.kinds)
            .map(|(&v, kind)| match kind {
                ColumnKind::Categorical { levels } => levels[v as usize].clone(),
                _ => format!("{v}"),
            })
            .collect();
        if let Some(t) = &data.target {
            fields.push(t.values[r].to_string());
        }
        writer.write_record(&fields)?;
    }
    writer.flush().map_err(|e| CareError::io(path, e))?;
    Ok(())
}

/// Per-column z-score parameters for the continuous features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeStats {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Z-score the continuous columns, computing stats from `data` unless given.
///
/// Standard deviations use the `n - 1` denominator and are floored at
/// [`STD_FLOOR`].
pub fn standardize(data: &Dataset, stats: Option<&StandardizeStats>) -> Result<(Dataset, StandardizeStats)> {
    let continuous: Vec<usize> = (0..data.n_features()).filter(|&j| data.kinds[j].is_continuous()).collect();
    let stats = match stats {
        Some(s) => {
            if s.columns != continuous || s.mean.len() != continuous.len() || s.std.len() != continuous.len() {
                return Err(CareError::Shape(format!(
                    "standardization stats cover {} columns, data has {} continuous columns",
                    s.columns.len(),
                    continuous.len()
                )));
            }
            s.clone()
        }
        None => {
            let n = data.n_rows() as f64;
            let mut mean = Vec::with_capacity(continuous.len());
            let mut std = Vec::with_capacity(continuous.len());
            for &j in &continuous {
                let m = data.rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let ss: f64 = data.rows.iter().map(|r| (r[j] - m).powi(2)).sum();
                let sd = if data.n_rows() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
                mean.push(m);
                std.push(sd.max(STD_FLOOR));
            }
            StandardizeStats { columns: continuous.clone(), mean, std }
        }
    };
    let mut out = data.clone();
    for row in &mut out.rows {
        for (k, &j) in stats.columns.iter().enumerate() {
            row[j] = (row[j] - stats.mean[k]) / stats.std[k];
        }
    }
    Ok((out, stats))
}

/// Model-ready design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub values: DMatrix<f64>,
    /// Originating feature index for each encoded column.
    pub column_map: Vec<usize>,
    pub column_names: Vec<String>,
}

impl EncodedMatrix {
    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }
}

/// Copy continuous columns and expand each categorical column into one
/// indicator per level.
pub fn one_hot_encode(data: &Dataset) -> EncodedMatrix {
    let mut column_map = Vec::new();
    let mut column_names = Vec::new();
    for (j, (name, kind)) in data.names.iter().zip(&data.kinds).enumerate() {
        match kind {
            ColumnKind::Categorical { levels } => {
                for level in levels {
                    column_map.push(j);
                    column_names.push(format!("{name}={level}"));
                }
            }
            _ => {
                column_map.push(j);
                column_names.push(name.clone());
            }
        }
    }
    let p = column_map.len();
    let n = data.n_rows();
    let mut values = DMatrix::zeros(n, p);
    for (i, row) in data.rows.iter().enumerate() {
        let mut c = 0;
        for (j, kind) in data.kinds.iter().enumerate() {
            match kind {
                ColumnKind::Categorical { levels } => {
                    values[(i, c + row[j] as usize)] = 1.0;
                    c += levels.len();
                }
                _ => {
                    values[(i, c)] = row[j];
                    c += 1;
                }
            }
        }
    }
    EncodedMatrix { values, column_map, column_names }
}

/// Broadcast a per-variable 0/1 mask onto encoded columns.
pub fn broadcast_mask(mask: &[u8], column_map: &[usize]) -> Vec<f64> {
    column_map.iter().map(|&j| f64::from(mask[j])).collect()
}

/// Test-fold row indices for seeded k-fold cross validation.
///
/// Rows are shuffled once; the first `n % k` folds receive one extra row.
/// Within a fold, rows keep their shuffled order.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(CareError::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(CareError::InvalidArgument(format!("cannot split {n} rows into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Seeded k-fold split into `(train, test)` pairs.
pub fn kfold_split(data: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let folds = kfold_indices(data.n_rows(), k, seed)?;
    Ok((0..k)
        .map(|f| {
            let train: Vec<usize> =
                folds.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, idx)| idx.iter().copied()).collect();
            (data.select_rows(&train), data.select_rows(&folds[f]))
        })
        .collect())
}
