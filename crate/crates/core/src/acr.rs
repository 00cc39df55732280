//! Attribution-penalized training from a causal mask.
//!
//! `fit_acr` standardizes continuous features, one-hot encodes categorical
//! ones, broadcasts the per-variable mask onto the encoded columns and trains
//! with `λ · Ω` added to the cross-entropy. The preprocessing statistics are
//! kept with the model so held-out data goes through the same transform.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::attribution::AttributionMatrix;
use crate::dataset::{broadcast_mask, one_hot_encode, standardize, Dataset, StandardizeStats};
use crate::error::{CareError, Result};
use crate::fci::{extract_mask, CausalMask, Pag};
use crate::model::{train, ModelKind, ModelSpec, TrainConfig, TrainedModel, DEFAULT_HIDDEN};

/// `Ω = (1/N) Σ_i Σ_j |S_ij| (1 − A_j)` with `A` given per attribution column.
pub fn acr_penalty(s: &DMatrix<f64>, mask_cols: &[f64]) -> Result<f64> {
    if s.ncols() != mask_cols.len() {
        return Err(CareError::Shape(format!(
            "{} attribution columns but {} mask entries",
            s.ncols(),
            mask_cols.len()
        )));
    }
    if s.nrows() == 0 {
        return Ok(0.0);
    }
    let total: f64 =
        s.column_iter().zip(mask_cols).map(|(col, a)| (1.0 - a) * col.iter().map(|v| v.abs()).sum::<f64>()).sum();
    Ok(total / s.nrows() as f64)
}

/// [`acr_penalty`] for an attribution matrix and a per-variable mask.
pub fn acr_penalty_for(attrs: &AttributionMatrix, mask: &CausalMask) -> Result<f64> {
    if mask.len() != attrs.names.len() {
        return Err(CareError::Shape(format!(
            "mask covers {} variables, attributions {}",
            mask.len(),
            attrs.names.len()
        )));
    }
    acr_penalty(&attrs.values, &broadcast_mask(&mask.values, &attrs.column_map))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcrConfig {
    pub kind: ModelKind,
    pub hidden_dim: usize,
    pub seed: u64,
    pub lambda: f64,
    pub train: TrainConfig,
}

impl AcrConfig {
    /// Default training settings for `kind` with penalty weight `lambda`.
    pub fn new(kind: ModelKind, lambda: f64, seed: u64) -> Self {
        Self { kind, hidden_dim: DEFAULT_HIDDEN, seed, lambda, train: TrainConfig::for_kind(kind) }
    }
}

/// Encoded, standardized design matrix plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub x: DMatrix<f64>,
    pub y: Vec<u8>,
    pub column_map: Vec<usize>,
    pub column_names: Vec<String>,
    pub names: Vec<String>,
    pub stats: StandardizeStats,
}

/// Standardize (with `stats` if given, else fitted on `data`) and encode.
pub fn prepare(data: &Dataset, stats: Option<&StandardizeStats>) -> Result<Prepared> {
    let (scaled, stats) = standardize(data, stats)?;
    let enc = one_hot_encode(&scaled);
    Ok(Prepared {
        x: enc.values,
        y: data.target_values()?.to_vec(),
        column_map: enc.column_map,
        column_names: enc.column_names,
        names: data.names().to_vec(),
        stats,
    })
}

/// Reorder a mask to follow `names`; every name must be present.
pub fn align_mask(mask: &CausalMask, names: &[String]) -> Result<CausalMask> {
    let values = names
        .iter()
        .map(|n| mask.get(n).ok_or_else(|| CareError::UnknownVariable(format!("mask has no entry for '{n}'"))))
        .collect::<Result<Vec<u8>>>()?;
    if mask.len() != names.len() {
        return Err(CareError::Shape(format!("mask covers {} variables, data has {}", mask.len(), names.len())));
    }
    Ok(CausalMask { names: names.to_vec(), values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcrModel {
    pub model: TrainedModel,
    pub mask: CausalMask,
    pub lambda: f64,
    pub stats: StandardizeStats,
    pub column_map: Vec<usize>,
    pub column_names: Vec<String>,
}

impl AcrModel {
    /// Transform `data` exactly as the training data was transformed.
    pub fn prepare(&self, data: &Dataset) -> Result<Prepared> {
        if data.names() != self.mask.names.as_slice() {
            return Err(CareError::Schema("feature columns differ from the training data".into()));
        }
        let p = prepare(data, Some(&self.stats))?;
        if p.x.ncols() != self.column_map.len() {
            return Err(CareError::Schema("encoded width differs from the training data".into()));
        }
        Ok(p)
    }

    pub fn predict_proba(&self, data: &Dataset) -> Result<Vec<f64>> {
        let p = self.prepare(data)?;
        self.model.params.predict_proba(&p.x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Train with the attribution penalty for the variables the mask marks 0.
pub fn fit_acr(data: &Dataset, mask: &CausalMask, cfg: &AcrConfig) -> Result<AcrModel> {
    let mask = align_mask(mask, data.names())?;
    let prep = prepare(data, None)?;
    fit_prepared(&prep, &mask, cfg)
}

/// [`fit_acr`] with the mask read off a PAG.
pub fn fit_acr_from_pag(data: &Dataset, pag: &Pag, cfg: &AcrConfig) -> Result<AcrModel> {
    let target = data.target_name().ok_or_else(|| CareError::InvalidArgument("dataset has no target".into()))?;
    let mask = extract_mask(pag, target)?;
    fit_acr(data, &mask, cfg)
}

/// Train on already prepared data; `mask` must follow `prep.names`.
pub fn fit_prepared(prep: &Prepared, mask: &CausalMask, cfg: &AcrConfig) -> Result<AcrModel> {
    if mask.names != prep.names {
        return Err(CareError::Shape("mask does not follow the prepared variable order".into()));
    }
    let spec = ModelSpec {
        kind: cfg.kind,
        input_dim: prep.x.ncols(),
        hidden_dim: if cfg.kind == ModelKind::Mlp { cfg.hidden_dim } else { 0 },
        seed: cfg.seed,
    };
    let train_cfg = TrainConfig { lambda: cfg.lambda, ..cfg.train };
    let mask_cols = broadcast_mask(&mask.values, &prep.column_map);
    let model = train(&spec, &train_cfg, &prep.x, &prep.y, &mask_cols)?;
    Ok(AcrModel {
        model,
        mask: mask.clone(),
        lambda: cfg.lambda,
        stats: prep.stats.clone(),
        column_map: prep.column_map.clone(),
        column_names: prep.column_names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        let s = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 3.0]);
        assert_eq!(acr_penalty(&s, &[1.0, 0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(acr_penalty(&s, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 3.0, -1.0]);
        assert_eq!(acr_penalty(&s, &[0.0, 1.0]).unwrap(), 2.0);
        assert!(acr_penalty(&s, &[0.0]).is_err());
    }

    #[test]
    fn align_reorders() {
        let m = CausalMask { names: vec!["b".into(), "a".into()], values: vec![1, 0] };
        let a = align_mask(&m, &["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(a.values, vec![0, 1]);
        assert!(align_mask(&m, &["a".to_string(), "c".to_string()]).is_err());
        assert!(align_mask(&m, &["a".to_string()]).is_err());
    }
}
