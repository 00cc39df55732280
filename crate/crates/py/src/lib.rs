//! Python bindings: datasets, FCI masks, penalized training, importance
//! scores and the experiment runner.

use std::collections::BTreeMap;

use care_core::acr::{self, AcrConfig};
use care_core::attribution::{self, ImportanceScores};
use care_core::citest::{OracleTester, PermutationConfig};
use care_core::dataset::{self, ColumnKind, Meta, Mode, Target};
use care_core::fci::{self, FciConfig, TesterChoice};
use care_core::harness::{self, ExperimentConfig, ExperimentKind};
use care_core::model::ModelKind;
use care_core::{metrics, synthgen, CareError};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: CareError) -> PyErr {
    match err {
        CareError::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = CareError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn scores_to_map(s: &ImportanceScores) -> BTreeMap<String, f64> {
    s.names.iter().cloned().zip(s.scores.iter().copied()).collect()
}

/// Tabular data with named feature columns and an optional binary target.
#[pyclass(name = "Dataset", module = "care_py", frozen)]
pub struct PyDataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl PyDataset {
    /// All-continuous dataset from row-major values.
    #[new]
    #[pyo3(signature = (names, rows, target_name=None, target=None))]
    fn new(
        names: Vec<String>,
        rows: Vec<Vec<f64>>,
        target_name: Option<String>,
        target: Option<Vec<u8>>,
    ) -> PyResult<Self> {
        let target = match (target_name, target) {
            (Some(name), Some(values)) => Some(Target { name, values }),
            (None, None) => None,
            _ => return Err(PyValueError::new_err("target_name and target must be given together")),
        };
        let kinds = vec![ColumnKind::Continuous; names.len()];
        let inner = dataset::Dataset::new(names, kinds, rows, target, Meta::default()).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Benchmark data with causal, proxy, spurious and noise features.
    #[staticmethod]
    #[pyo3(signature = (n, seed, mode="train"))]
    fn synthetic(n: usize, seed: u64, mode: &str) -> PyResult<Self> {
        let mode = match mode {
            "train" => Mode::Train,
            "test" => Mode::Test,
            other => return Err(PyValueError::new_err(format!("mode must be 'train' or 'test', got '{other}'"))),
        };
        let inner = synthgen::generate(&synthgen::SynthConfig { n, mode, seed }).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Load a CSV, inferring continuous or categorical columns.
    #[staticmethod]
    fn from_csv(path: &str, target: &str) -> PyResult<Self> {
        Ok(Self { inner: dataset::load_csv_inferred(path, target).map_err(to_py)? })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        dataset::write_csv(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn target_name(&self) -> Option<String> {
        self.inner.target_name().map(str::to_string)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().to_vec()
    }

    fn target(&self) -> PyResult<Vec<u8>> {
        Ok(self.inner.target_values().map_err(to_py)?.to_vec())
    }

    fn select_rows(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.inner.n_rows()) {
            return Err(PyValueError::new_err(format!("row index {bad} out of range")));
        }
        Ok(Self { inner: self.inner.select_rows(&indices) })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: dataset::Dataset::from_json(text).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n_rows={}, features={:?})", self.inner.n_rows(), self.inner.names())
    }
}

/// Binary mask over the features: 1 keeps a feature, 0 penalizes it.
#[pyclass(name = "CausalMask", module = "care_py", frozen)]
pub struct PyCausalMask {
    inner: fci::CausalMask,
}

#[pymethods]
impl PyCausalMask {
    #[new]
    fn new(mask: BTreeMap<String, u8>, names: Vec<String>) -> PyResult<Self> {
        let value = serde_json::to_value(&mask).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: fci::CausalMask::from_json_value(&value, &names).map_err(to_py)? })
    }

    #[staticmethod]
    fn all_ones(names: Vec<String>) -> Self {
        Self { inner: fci::CausalMask::all_ones(names) }
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names.clone()
    }

    #[getter]
    fn values(&self) -> Vec<u8> {
        self.inner.values.clone()
    }

    fn to_dict(&self) -> BTreeMap<String, u8> {
        self.inner.names.iter().cloned().zip(self.inner.values.iter().copied()).collect()
    }

    fn __repr__(&self) -> String {
        format!("CausalMask({})", self.inner.to_json_value())
    }
}

/// Learn a PAG with FCI and return it as JSON.
#[pyfunction]
#[pyo3(signature = (data, tester="auto", alpha=0.1, max_depth=3, seed=0))]
fn learn_pag(
    py: Python<'_>,
    data: &PyDataset,
    tester: &str,
    alpha: f64,
    max_depth: usize,
    seed: u64,
) -> PyResult<String> {
    let choice: TesterChoice = parse(tester)?;
    let perm = PermutationConfig { seed, ..PermutationConfig::default() };
    let cfg = FciConfig { alpha, max_depth };
    let inner = &data.inner;
    let pag = py.detach(|| fci::run_fci_on_dataset(inner, choice, perm, &cfg)).map_err(to_py)?;
    serde_json::to_string_pretty(&pag.to_json()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Run FCI on `data` and read off the mask for its target.
#[pyfunction]
#[pyo3(signature = (data, tester="auto", alpha=0.1, max_depth=3, seed=0))]
fn fci_mask(
    py: Python<'_>,
    data: &PyDataset,
    tester: &str,
    alpha: f64,
    max_depth: usize,
    seed: u64,
) -> PyResult<PyCausalMask> {
    let target =
        data.inner.target_name().ok_or_else(|| PyValueError::new_err("dataset has no target column"))?.to_string();
    let choice: TesterChoice = parse(tester)?;
    let perm = PermutationConfig { seed, ..PermutationConfig::default() };
    let cfg = FciConfig { alpha, max_depth };
    let inner = &data.inner;
    let pag = py.detach(|| fci::run_fci_on_dataset(inner, choice, perm, &cfg)).map_err(to_py)?;
    Ok(PyCausalMask { inner: fci::extract_mask(&pag, &target).map_err(to_py)? })
}

/// Mask FCI recovers for the synthetic benchmark from exact d-separation.
#[pyfunction]
fn benchmark_oracle_mask() -> PyResult<PyCausalMask> {
    let observed = ["X1", "X2", "Xproxy", "Xspur", "Xnoise", "Y"];
    let tester = OracleTester::with_names(synthgen::ground_truth_graph(), &observed).map_err(to_py)?;
    let pag = fci::run_fci(tester.names(), &tester, &FciConfig::default()).map_err(to_py)?;
    Ok(PyCausalMask { inner: fci::extract_mask(&pag, "Y").map_err(to_py)? })
}

/// LR or MLP trained with the attribution penalty on masked-out features.
#[pyclass(name = "AcrModel", module = "care_py", frozen)]
pub struct PyAcrModel {
    inner: acr::AcrModel,
}

#[pymethods]
impl PyAcrModel {
    /// Fit on `data`; `mask=None` keeps every feature (plain training).
    #[staticmethod]
    #[pyo3(signature = (data, mask=None, kind="mlp", lam=1.0, seed=0, max_iters=None))]
    fn fit(
        py: Python<'_>,
        data: &PyDataset,
        mask: Option<&PyCausalMask>,
        kind: &str,
        lam: f64,
        seed: u64,
        max_iters: Option<usize>,
    ) -> PyResult<Self> {
        let mut cfg = AcrConfig::new(parse(kind)?, lam, seed);
        if let Some(m) = max_iters {
            cfg.train.max_iters = m;
        }
        let mask = mask.map_or_else(|| fci::CausalMask::all_ones(data.inner.names().to_vec()), |m| m.inner.clone());
        let inner = &data.inner;
        let model = py.detach(|| acr::fit_acr(inner, &mask, &cfg)).map_err(to_py)?;
        Ok(Self { inner: model })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.model.spec.kind {
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
        }
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn mask(&self) -> PyCausalMask {
        PyCausalMask { inner: self.inner.mask.clone() }
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.model.iterations()
    }

    #[getter]
    fn loss_curve(&self) -> Vec<f64> {
        self.inner.model.loss_curve.clone()
    }

    fn predict_proba(&self, data: &PyDataset) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&data.inner).map_err(to_py)
    }

    #[pyo3(signature = (data, threshold=0.5))]
    fn predict(&self, data: &PyDataset, threshold: f64) -> PyResult<Vec<u8>> {
        Ok(self.predict_proba(data)?.into_iter().map(|p| u8::from(p >= threshold)).collect())
    }

    /// Precision, recall and F1 of the positive class on `data`.
    #[pyo3(signature = (data, threshold=0.5))]
    fn evaluate(&self, data: &PyDataset, threshold: f64) -> PyResult<BTreeMap<String, f64>> {
        let probs = self.predict_proba(data)?;
        let y = data.inner.target_values().map_err(to_py)?;
        let r = metrics::classification_metrics(y, &probs, threshold).map_err(to_py)?;
        Ok(BTreeMap::from([("precision".into(), r.precision), ("recall".into(), r.recall), ("f1".into(), r.f1)]))
    }

    /// Max-normalized SHAP importance per feature, explaining the first
    /// rows of `data` against a k-means summary of `background`.
    #[pyo3(signature = (background, data, seed=0))]
    fn importance(
        &self,
        py: Python<'_>,
        background: &PyDataset,
        data: &PyDataset,
        seed: u64,
    ) -> PyResult<BTreeMap<String, f64>> {
        let bg = self.inner.prepare(&background.inner).map_err(to_py)?;
        let ex = self.inner.prepare(&data.inner).map_err(to_py)?;
        let params = &self.inner.model.params;
        let scores = py
            .detach(|| attribution::shap_importance(params, &bg.x, &ex.x, &bg.column_map, &bg.names, seed))
            .map_err(to_py)?;
        Ok(scores_to_map(&scores))
    }

    /// Max-normalized Grad x Input importance per feature.
    fn grad_x_input_importance(&self, data: &PyDataset) -> PyResult<BTreeMap<String, f64>> {
        let p = self.inner.prepare(&data.inner).map_err(to_py)?;
        let attrs =
            attribution::grad_x_input(&self.inner.model.params, &p.x, &p.column_map, &p.names).map_err(to_py)?;
        Ok(scores_to_map(&attribution::normalized_importance(&attrs, attribution::IMPORTANCE_SUBSET)))
    }

    /// Penalty value on `data` under `mask`, or the training mask if omitted.
    #[pyo3(signature = (data, mask=None))]
    fn penalty(&self, data: &PyDataset, mask: Option<&PyCausalMask>) -> PyResult<f64> {
        let p = self.inner.prepare(&data.inner).map_err(to_py)?;
        let attrs =
            attribution::grad_x_input(&self.inner.model.params, &p.x, &p.column_map, &p.names).map_err(to_py)?;
        let mask = match mask {
            Some(m) => acr::align_mask(&m.inner, &p.names).map_err(to_py)?,
            None => self.inner.mask.clone(),
        };
        acr::acr_penalty_for(&attrs, &mask).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: acr::AcrModel::from_json(text).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "AcrModel(kind='{}', lam={:e}, mask={})",
            self.kind(),
            self.inner.lambda,
            self.inner.mask.to_json_value()
        )
    }
}

/// Run an experiment and return its `results.json` text.
///
/// `overrides` is a JSON object whose keys replace fields of the default
/// configuration for `experiment`, e.g. `{"seeds": [0], "n_train": 500}`.
#[pyfunction]
#[pyo3(signature = (experiment, overrides=None, out_dir=None))]
fn run_experiment(
    py: Python<'_>,
    experiment: &str,
    overrides: Option<&str>,
    out_dir: Option<&str>,
) -> PyResult<String> {
    let kind: ExperimentKind = parse(experiment)?;
    let json_err = |e: serde_json::Error| PyValueError::new_err(e.to_string());
    let mut value = serde_json::to_value(ExperimentConfig::new(kind)).map_err(json_err)?;
    if let Some(text) = overrides {
        let patch: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
        let patch = patch.as_object().ok_or_else(|| PyValueError::new_err("overrides must be a JSON object"))?;
        let base = value.as_object_mut().expect("config serializes to an object");
        for (k, v) in patch {
            if !base.contains_key(k) {
                return Err(PyValueError::new_err(format!("unknown configuration field '{k}'")));
            }
            base.insert(k.clone(), v.clone());
        }
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(json_err)?;
    if cfg.experiment != kind {
        return Err(PyValueError::new_err("overrides may not change the experiment kind"));
    }
    let output = py.detach(|| harness::run(&cfg)).map_err(to_py)?;
    if let Some(dir) = out_dir {
        output.write(std::path::Path::new(dir)).map_err(to_py)?;
    }
    output.result.to_json().map_err(to_py)
}

#[pymodule]
fn care_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCausalMask>()?;
    m.add_class::<PyAcrModel>()?;
    m.add_function(wrap_pyfunction!(learn_pag, m)?)?;
    m.add_function(wrap_pyfunction!(fci_mask, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark_oracle_mask, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
