//! Experiment drivers: synthetic generalization, λ and sample-size sweeps,
//! ALARM scenarios and cross-validated runs on arbitrary CSV files.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]. Work is
//! fanned out over (replicate, model) cells with rayon and collected in a
//! fixed order, so `results.json` is byte-identical across runs and thread
//! counts. Wall-clock timings go to a separate `timing.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acr::{fit_prepared, prepare, AcrConfig, AcrModel, Prepared};
use crate::attribution::shap_importance;
use crate::bayesnet::{ancestral_sample, binarize_target, parse_bif};
use crate::citest::PermutationConfig;
use crate::dataset::{kfold_indices, load_csv_inferred, Dataset, Mode};
use crate::error::{CareError, Result};
use crate::fci::{extract_mask, run_fci_on_dataset, CausalMask, FciConfig, PagJson, TesterChoice};
use crate::metrics::{aggregate, classification_metrics, AggregateReport, MetricReport, DEFAULT_THRESHOLD};
use crate::model::{ModelKind, TrainConfig};
use crate::rng;
use crate::synthgen::{self, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SyntheticGeneralization,
    LambdaSweep,
    SampleSizeSweep,
    AlarmScenarios,
    CustomCsv,
}

impl std::str::FromStr for ExperimentKind {
    type Err = CareError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "synthetic_generalization" | "synthetic" => Ok(Self::SyntheticGeneralization),
            "lambda_sweep" => Ok(Self::LambdaSweep),
            "sample_size_sweep" => Ok(Self::SampleSizeSweep),
            "alarm_scenarios" | "alarm" => Ok(Self::AlarmScenarios),
            "custom_csv" => Ok(Self::CustomCsv),
            other => Err(CareError::InvalidArgument(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Models compared in every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Lr,
    Mlp,
    MlpWd,
    MlpWdEs,
    LrCausalFs,
    LrAcr,
    MlpAcr,
}

pub const WEIGHT_DECAY: f64 = 1e-5;

impl Baseline {
    pub const ALL: [Baseline; 7] = [
        Baseline::Lr,
        Baseline::Mlp,
        Baseline::MlpWd,
        Baseline::MlpWdEs,
        Baseline::LrCausalFs,
        Baseline::LrAcr,
        Baseline::MlpAcr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Baseline::Lr => "LR",
            Baseline::Mlp => "MLP",
            Baseline::MlpWd => "MLP+WD",
            Baseline::MlpWdEs => "MLP+WD+ES",
            Baseline::LrCausalFs => "LR w/ causal FS",
            Baseline::LrAcr => "LR w/ ACR",
            Baseline::MlpAcr => "MLP w/ ACR",
        }
    }

    fn kind(self) -> ModelKind {
        match self {
            Baseline::Lr | Baseline::LrCausalFs | Baseline::LrAcr => ModelKind::Lr,
            _ => ModelKind::Mlp,
        }
    }

    fn is_acr(self) -> bool {
        matches!(self, Baseline::LrAcr | Baseline::MlpAcr)
    }

    /// Stable stream id used to derive the model seed.
    fn stream(self) -> u64 {
        match self {
            Baseline::Lr => 1,
            Baseline::Mlp => 2,
            Baseline::MlpWd => 3,
            Baseline::MlpWdEs => 4,
            Baseline::LrCausalFs => 5,
            Baseline::LrAcr => 6,
            Baseline::MlpAcr => 7,
        }
    }

    fn train_config(self) -> TrainConfig {
        let mut cfg = TrainConfig::for_kind(self.kind());
        if matches!(self, Baseline::MlpWd | Baseline::MlpWdEs) {
            cfg.weight_decay = WEIGHT_DECAY;
        }
        if self == Baseline::MlpWdEs {
            cfg.early_stopping.enabled = true;
        }
        cfg
    }
}

impl std::str::FromStr for Baseline {
    type Err = CareError;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| {
                b.label().eq_ignore_ascii_case(s)
                    || serde_json::to_value(b).ok().and_then(|v| v.as_str().map(|x| x == s)) == Some(true)
            })
            .ok_or_else(|| CareError::InvalidArgument(format!("unknown model '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seeds: Vec<u64>,
    pub roster: Vec<Baseline>,
    /// Candidate penalty weights; the ACR models pick one by validation F1.
    pub acr_lambdas: Vec<f64>,
    /// Grid for the λ sweep.
    pub lambda_grid: Vec<f64>,
    /// Fixed penalty weight for the sample-size sweep.
    pub lambda: f64,
    pub sample_sizes: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub validation_fraction: f64,
    pub alpha: f64,
    pub max_depth: usize,
    pub tester: TesterChoice,
    pub permutation: PermutationConfig,
    pub folds: usize,
    /// ALARM: rows sampled per seed, penalty weight per scenario.
    pub alarm_rows: usize,
    pub alarm_scenarios: Vec<f64>,
    pub bif_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
    pub test_csv_path: Option<PathBuf>,
    pub target: Option<String>,
    pub top_k: usize,
}

pub const ACR_LAMBDAS: [f64; 3] = [1e-2, 1e-1, 1.0];
pub const LAMBDA_GRID: [f64; 7] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];
pub const SAMPLE_SIZES: [usize; 5] = [500, 1000, 1500, 2000, 2500];
pub const ALARM_TARGET: &str = "BP";
pub const ALARM_POSITIVE: &str = "HIGH";

impl ExperimentConfig {
    /// Defaults for `experiment`.
    pub fn new(experiment: ExperimentKind) -> Self {
        let sweep = matches!(experiment, ExperimentKind::LambdaSweep | ExperimentKind::SampleSizeSweep);
        let alarm = experiment == ExperimentKind::AlarmScenarios;
        Self {
            experiment,
            seeds: if alarm { vec![0] } else { vec![0, 1, 2] },
            roster: if sweep { vec![Baseline::MlpAcr] } else { Baseline::ALL.to_vec() },
            acr_lambdas: ACR_LAMBDAS.to_vec(),
            lambda_grid: LAMBDA_GRID.to_vec(),
            lambda: 1.0,
            sample_sizes: SAMPLE_SIZES.to_vec(),
            n_train: 1000,
            n_test: 1000,
            validation_fraction: 0.2,
            alpha: crate::citest::DEFAULT_ALPHA,
            max_depth: 3,
            tester: match experiment {
                ExperimentKind::AlarmScenarios | ExperimentKind::CustomCsv => TesterChoice::Auto,
                _ => TesterChoice::FisherZ,
            },
            permutation: PermutationConfig::default(),
            folds: 5,
            alarm_rows: 100,
            alarm_scenarios: vec![1.0, 1e-2],
            bif_path: None,
            csv_path: None,
            test_csv_path: None,
            target: None,
            top_k: 5,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CareError::InvalidArgument(m));
        if self.roster.is_empty() {
            return bad("model roster is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let lambdas = self.acr_lambdas.iter().chain(&self.lambda_grid).chain(&self.alarm_scenarios);
        if let Some(l) = lambdas.chain([&self.lambda]).find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return bad(format!("penalty weights must be finite and >= 0, got {l}"));
        }
        if self.acr_lambdas.is_empty() {
            return bad("acr_lambdas is empty".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// One train/test pair with its seeds.
#[derive(Debug, Clone)]
struct Replicate {
    label: String,
    seed: u64,
    fold: Option<usize>,
    train: Dataset,
    test: Dataset,
}

impl Replicate {
    fn base_seed(&self) -> u64 {
        match self.fold {
            None => self.seed,
            Some(f) => rng::mix(self.seed, 1000 + f as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
enum AcrLambda {
    Select,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub replicate: String,
    pub lambda: Option<f64>,
    /// Validation F1 per candidate λ when the weight was selected.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_f1: Option<BTreeMap<String, f64>>,
    pub train: MetricReport,
    pub test: MetricReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub importance: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features_used: Option<Vec<String>>,
    pub iterations: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub train: AggregateReport,
    pub test: AggregateReport,
    pub train_f1: String,
    pub test_f1: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: String,
    pub n_train: usize,
    pub n_test: usize,
    pub mask: BTreeMap<String, u8>,
    pub pag: PagJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    pub replicates: Vec<ReplicateRecord>,
    pub cells: Vec<CellResult>,
    pub summary: BTreeMap<String, ModelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub groups: Vec<GroupResult>,
    pub not_implemented: Vec<String>,
}

impl ExperimentResult {
    pub fn group(&self, label: &str) -> Option<&GroupResult> {
        self.groups.iter().find(|g| g.label == label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl GroupResult {
    pub fn cells_for(&self, model: &str) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.model == model).collect()
    }
}

/// Data-only table for one figure or table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub groups: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub result: ExperimentResult,
    pub tables: Vec<CsvTable>,
    pub timing: Timing,
}

impl ExperimentOutput {
    /// Write `results.json`, `timing.json` and the CSV tables into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CareError::io(dir, e))?;
        let results = dir.join("results.json");
        fs::write(&results, self.result.to_json()? + "\n").map_err(|e| CareError::io(&results, e))?;
        let timing = dir.join("timing.json");
        fs::write(&timing, serde_json::to_string_pretty(&self.timing)? + "\n")
            .map_err(|e| CareError::io(&timing, e))?;
        for t in &self.tables {
            let path = dir.join(&t.file_name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            w.flush().map_err(|e| CareError::io(&path, e))?;
        }
        Ok(())
    }
}

/// Run the experiment named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = match cfg.experiment {
        ExperimentKind::SyntheticGeneralization => run_synthetic_generalization(cfg)?,
        ExperimentKind::LambdaSweep => run_lambda_sweep(cfg)?,
        ExperimentKind::SampleSizeSweep => run_sample_size_sweep(cfg)?,
        ExperimentKind::AlarmScenarios => run_alarm_scenarios(cfg)?,
        ExperimentKind::CustomCsv => run_custom_csv(cfg)?,
    };
    out.timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

fn synthetic_replicates(seeds: &[u64], n_train: usize, n_test: usize) -> Result<Vec<Replicate>> {
    seeds
        .iter()
        .map(|&seed| {
            let train = synthgen::generate(&SynthConfig { n: n_train, mode: Mode::Train, seed })?;
            let test =
                synthgen::generate(&SynthConfig { n: n_test, mode: Mode::Test, seed: synthetic_test_seed(seed) })?;
            Ok(Replicate { label: format!("seed={seed}"), seed, fold: None, train, test })
        })
        .collect()
}

/// Seed of the test set paired with training seed `seed`.
pub fn synthetic_test_seed(seed: u64) -> u64 {
    rng::mix(seed, 1)
}

struct Learned {
    mask: CausalMask,
    pag: PagJson,
}

fn learn_masks(reps: &[Replicate], cfg: &ExperimentConfig) -> Result<Vec<Learned>> {
    let fci = FciConfig { alpha: cfg.alpha, max_depth: cfg.max_depth };
    reps.par_iter()
        .map(|r| {
            let target =
                r.train.target_name().ok_or_else(|| CareError::InvalidArgument("dataset has no target".into()))?;
            let pag = run_fci_on_dataset(&r.train, cfg.tester, cfg.permutation, &fci)?;
            Ok(Learned { mask: extract_mask(&pag, target)?, pag: pag.to_json() })
        })
        .collect()
}

fn mask_map(mask: &CausalMask) -> BTreeMap<String, u8> {
    mask.names.iter().cloned().zip(mask.values.iter().copied()).collect()
}

fn score(model: &AcrModel, prep: &Prepared) -> Result<MetricReport> {
    let prob = model.model.params.predict_proba(&prep.x)?;
    classification_metrics(&prep.y, &prob, DEFAULT_THRESHOLD)
}

fn lambda_key(l: f64) -> String {
    format!("{l:e}")
}

fn compute_importance(model: &AcrModel, train: &Prepared, test: &Prepared, seed: u64) -> Result<BTreeMap<String, f64>> {
    let imp =
        shap_importance(&model.model.params, &train.x, &test.x, &train.column_map, &train.names, rng::mix(seed, 77))?;
    Ok(imp.names.into_iter().zip(imp.scores).collect())
}

/// Train one roster entry on one replicate and score it.
fn run_cell(
    rep: &Replicate,
    mask: &CausalMask,
    entry: Baseline,
    lambda: AcrLambda,
    cfg: &ExperimentConfig,
) -> Result<Vec<CellResult>> {
    let seed = rng::mix(rep.base_seed(), entry.stream());
    if entry == Baseline::LrCausalFs {
        return Ok(vec![run_causal_fs(rep, mask, seed)?]);
    }
    let train = prepare(&rep.train, None)?;
    let test = prepare(&rep.test, Some(&train.stats))?;
    let mut acr_cfg = AcrConfig::new(entry.kind(), 0.0, seed);
    acr_cfg.train = entry.train_config();
    let fit_one = |label: String, mask: &CausalMask, l: Option<f64>| -> Result<CellResult> {
        let model = fit_prepared(&train, mask, &AcrConfig { lambda: l.unwrap_or(0.0), ..acr_cfg.clone() })?;
        let importance = if matches!(entry, Baseline::Lr | Baseline::MlpWdEs | Baseline::LrAcr | Baseline::MlpAcr) {
            Some(compute_importance(&model, &train, &test, seed)?)
        } else {
            None
        };
        Ok(CellResult {
            model: label,
            replicate: rep.label.clone(),
            lambda: l,
            validation_f1: None,
            train: score(&model, &train)?,
            test: score(&model, &test)?,
            importance,
            features_used: None,
            iterations: model.model.iterations(),
            stopped_early: model.model.stopped_early,
        })
    };
    if !entry.is_acr() {
        let ones = CausalMask::all_ones(train.names.clone());
        return Ok(vec![fit_one(entry.label().to_string(), &ones, None)?]);
    }
    match lambda {
        AcrLambda::Fixed(l) => Ok(vec![fit_one(entry.label().to_string(), mask, Some(l))?]),
        AcrLambda::Select => {
            // Every candidate is reported; the selected one is repeated under
            // the plain model label.
            let (chosen, validation) = select_lambda(rep, mask, &acr_cfg, cfg)?;
            let mut cells = Vec::with_capacity(cfg.acr_lambdas.len() + 1);
            let mut selected = None;
            for &l in &cfg.acr_lambdas {
                let cell = fit_one(candidate_label(entry, l), mask, Some(l))?;
                if l == chosen && selected.is_none() {
                    selected = Some(CellResult {
                        model: entry.label().to_string(),
                        validation_f1: Some(validation.clone()),
                        ..cell.clone()
                    });
                }
                cells.push(cell);
            }
            cells.insert(0, selected.expect("chosen from the candidate list"));
            Ok(cells)
        }
    }
}

/// Label of an ACR model trained at a fixed candidate weight.
pub fn candidate_label(entry: Baseline, lambda: f64) -> String {
    format!("{} [lambda={}]", entry.label(), lambda_key(lambda))
}

/// Pick the candidate λ with the best F1 on a held-out slice of the
/// training data (first candidate wins ties).
fn select_lambda(
    rep: &Replicate,
    mask: &CausalMask,
    base: &AcrConfig,
    cfg: &ExperimentConfig,
) -> Result<(f64, BTreeMap<String, f64>)> {
    let n = rep.train.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(rng::mix(base.seed, 0x5e1)));
    let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let (val_idx, fit_idx) = order.split_at(n_val);
    let fit = prepare(&rep.train.select_rows(fit_idx), None)?;
    let val = prepare(&rep.train.select_rows(val_idx), Some(&fit.stats))?;
    let mut scores = BTreeMap::new();
    let mut best: Option<(f64, f64)> = None;
    for &l in &cfg.acr_lambdas {
        let model = fit_prepared(&fit, mask, &AcrConfig { lambda: l, ..base.clone() })?;
        let f1 = score(&model, &val)?.f1;
        scores.insert(lambda_key(l), f1);
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((l, f1));
        }
    }
    Ok((best.expect("non-empty grid").0, scores))
}

/// LR on the masked-in variables only. With no variable selected the model
/// reduces to the constant training prevalence.
fn run_causal_fs(rep: &Replicate, mask: &CausalMask, seed: u64) -> Result<CellResult> {
    let keep = mask.selected();
    let used: Vec<String> = keep.iter().map(|&j| mask.names[j].clone()).collect();
    let label = Baseline::LrCausalFs.label().to_string();
    if keep.is_empty() {
        let y_train = rep.train.target_values()?;
        let prevalence = y_train.iter().map(|&v| f64::from(v)).sum::<f64>() / y_train.len() as f64;
        let y_test = rep.test.target_values()?;
        return Ok(CellResult {
            model: label,
            replicate: rep.label.clone(),
            lambda: None,
            validation_f1: None,
            train: classification_metrics(y_train, &vec![prevalence; y_train.len()], DEFAULT_THRESHOLD)?,
            test: classification_metrics(y_test, &vec![prevalence; y_test.len()], DEFAULT_THRESHOLD)?,
            importance: None,
            features_used: Some(used),
            iterations: 0,
            stopped_early: false,
        });
    }
    let train_ds = rep.train.select_features(&keep);
    let test_ds = rep.test.select_features(&keep);
    let train = prepare(&train_ds, None)?;
    let test = prepare(&test_ds, Some(&train.stats))?;
    let mut acr_cfg = AcrConfig::new(ModelKind::Lr, 0.0, seed);
    acr_cfg.train = Baseline::LrCausalFs.train_config();
    let model = fit_prepared(&train, &CausalMask::all_ones(train.names.clone()), &acr_cfg)?;
    Ok(CellResult {
        model: label,
        replicate: rep.label.clone(),
        lambda: None,
        validation_f1: None,
        train: score(&model, &train)?,
        test: score(&model, &test)?,
        importance: None,
        features_used: Some(used),
        iterations: model.model.iterations(),
        stopped_early: model.model.stopped_early,
    })
}

fn summarize(cells: &[CellResult]) -> Result<BTreeMap<String, ModelSummary>> {
    let mut by_model: BTreeMap<&str, Vec<&CellResult>> = BTreeMap::new();
    for c in cells {
        by_model.entry(c.model.as_str()).or_default().push(c);
    }
    let mut out = BTreeMap::new();
    for (label, mine) in by_model {
        let train = aggregate(&mine.iter().map(|c| c.train.clone()).collect::<Vec<_>>())?;
        let test = aggregate(&mine.iter().map(|c| c.test.clone()).collect::<Vec<_>>())?;
        out.insert(
            label.to_string(),
            ModelSummary { train_f1: train.f1.to_string(), test_f1: test.f1.to_string(), train, test },
        );
    }
    Ok(out)
}

/// Run every (replicate, roster entry) cell of one group.
fn run_group(
    label: String,
    reps: &[Replicate],
    learned: &[Learned],
    roster: &[Baseline],
    lambda: AcrLambda,
    cfg: &ExperimentConfig,
    timing: &mut Timing,
) -> Result<GroupResult> {
    let start = Instant::now();
    let jobs: Vec<(usize, Baseline)> = (0..reps.len()).flat_map(|r| roster.iter().map(move |&b| (r, b))).collect();
    let cells: Vec<Vec<CellResult>> = jobs
        .into_par_iter()
        .map(|(r, b)| run_cell(&reps[r], &learned[r].mask, b, lambda, cfg))
        .collect::<Result<_>>()?;
    let cells: Vec<CellResult> = cells.into_iter().flatten().collect();
    let summary = summarize(&cells)?;
    timing.groups.insert(label.clone(), start.elapsed().as_secs_f64());
    Ok(GroupResult {
        label,
        lambda: match lambda {
            AcrLambda::Fixed(l) => Some(l),
            AcrLambda::Select => None,
        },
        sample_size: None,
        replicates: reps
            .iter()
            .zip(learned)
            .map(|(r, l)| ReplicateRecord {
                replicate: r.label.clone(),
                n_train: r.train.n_rows(),
                n_test: r.test.n_rows(),
                mask: mask_map(&l.mask),
                pag: l.pag.clone(),
            })
            .collect(),
        cells,
        summary,
    })
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn summary_table(file_name: &str, groups: &[GroupResult]) -> CsvTable {
    let header = ["group", "model", "split", "metric", "median", "min", "max"];
    let mut rows = Vec::new();
    for g in groups {
        for (model, s) in &g.summary {
            for (split, agg) in [("train", &s.train), ("test", &s.test)] {
                for (metric, sm) in [("precision", agg.precision), ("recall", agg.recall), ("f1", agg.f1)] {
                    rows.push(vec![
                        g.label.clone(),
                        model.clone(),
                        split.to_string(),
                        metric.to_string(),
                        fmt(sm.median),
                        fmt(sm.min),
                        fmt(sm.max),
                    ]);
                }
            }
        }
    }
    CsvTable { file_name: file_name.into(), header: header.map(String::from).to_vec(), rows }
}

fn importance_table(file_name: &str, groups: &[GroupResult]) -> CsvTable {
    let header = ["group", "model", "replicate", "variable", "score"];
    let mut rows = Vec::new();
    for g in groups {
        for c in &g.cells {
            if let Some(imp) = &c.importance {
                for (v, s) in imp {
                    rows.push(vec![g.label.clone(), c.model.clone(), c.replicate.clone(), v.clone(), fmt(*s)]);
                }
            }
        }
    }
    CsvTable { file_name: file_name.into(), header: header.map(String::from).to_vec(), rows }
}

fn finish(cfg: &ExperimentConfig, groups: Vec<GroupResult>, tables: Vec<CsvTable>, timing: Timing) -> ExperimentOutput {
    ExperimentOutput {
        result: ExperimentResult {
            experiment: cfg.experiment,
            config: cfg.clone(),
            groups,
            not_implemented: vec!["CASTLE".into()],
        },
        tables,
        timing,
    }
}

/// Table I: every roster model on synthetic train/test pairs, one per seed.
pub fn run_synthetic_generalization(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let reps = synthetic_replicates(&cfg.seeds, cfg.n_train, cfg.n_test)?;
    let learned = learn_masks(&reps, cfg)?;
    let mut timing = Timing::default();
    let group = run_group("synthetic".into(), &reps, &learned, &cfg.roster, AcrLambda::Select, cfg, &mut timing)?;
    let groups = vec![group];
    let tables = vec![summary_table("table1_metrics.csv", &groups), importance_table("importance.csv", &groups)];
    Ok(finish(cfg, groups, tables, timing))
}

/// Figs. 3–4: MLP with the penalty at each λ of the grid.
pub fn run_lambda_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let reps = synthetic_replicates(&cfg.seeds, cfg.n_train, cfg.n_test)?;
    let learned = learn_masks(&reps, cfg)?;
    let mut timing = Timing::default();
    let groups = cfg
        .lambda_grid
        .iter()
        .map(|&l| {
            run_group(
                format!("lambda={}", lambda_key(l)),
                &reps,
                &learned,
                &cfg.roster,
                AcrLambda::Fixed(l),
                cfg,
                &mut timing,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut curve = Vec::new();
    let mut imp_rows = Vec::new();
    for g in &groups {
        let l = g.lambda.expect("fixed");
        for (model, s) in &g.summary {
            curve.push(vec![
                fmt(l),
                model.clone(),
                fmt(s.train.f1.median),
                fmt(s.test.f1.median),
                fmt(s.train.f1.median - s.test.f1.median),
            ]);
        }
        for entry in &cfg.roster {
            for (var, med) in median_importance(g, entry.label()) {
                imp_rows.push(vec![fmt(l), entry.label().to_string(), var, fmt(med)]);
            }
        }
    }
    let tables = vec![
        CsvTable {
            file_name: "lambda_f1.csv".into(),
            header: ["lambda", "model", "train_f1", "test_f1", "gap"].map(String::from).to_vec(),
            rows: curve,
        },
        CsvTable {
            file_name: "lambda_importance.csv".into(),
            header: ["lambda", "model", "variable", "median_score"].map(String::from).to_vec(),
            rows: imp_rows,
        },
        summary_table("lambda_metrics.csv", &groups),
    ];
    Ok(finish(cfg, groups, tables, timing))
}

/// Median importance per variable across a group's cells for `model`.
pub fn median_importance(g: &GroupResult, model: &str) -> BTreeMap<String, f64> {
    let mut per_var: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for c in g.cells_for(model) {
        if let Some(imp) = &c.importance {
            for (v, s) in imp {
                per_var.entry(v.clone()).or_default().push(*s);
            }
        }
    }
    per_var.into_iter().map(|(v, s)| (v, crate::metrics::Summary::of(&s).expect("non-empty").median)).collect()
}

/// Train/test F1 as the synthetic sample size grows (`n_train = n_test = N`).
pub fn run_sample_size_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut timing = Timing::default();
    let mut groups = Vec::new();
    for &n in &cfg.sample_sizes {
        let reps = synthetic_replicates(&cfg.seeds, n, n)?;
        let learned = learn_masks(&reps, cfg)?;
        let mut g =
            run_group(format!("n={n}"), &reps, &learned, &cfg.roster, AcrLambda::Fixed(cfg.lambda), cfg, &mut timing)?;
        g.sample_size = Some(n);
        groups.push(g);
    }
    let mut rows = Vec::new();
    for g in &groups {
        for (model, s) in &g.summary {
            rows.push(vec![
                g.sample_size.expect("set").to_string(),
                model.clone(),
                fmt(s.train.f1.median),
                fmt(s.test.f1.median),
                fmt(s.test.f1.min),
                fmt(s.test.f1.max),
            ]);
        }
    }
    let tables = vec![CsvTable {
        file_name: "sample_size_f1.csv".into(),
        header: ["n", "model", "train_f1", "test_f1", "test_f1_min", "test_f1_max"].map(String::from).to_vec(),
        rows,
    }];
    Ok(finish(cfg, groups, tables, timing))
}

fn fold_replicates(data: &Dataset, seed: u64, folds: usize, prefix: &str) -> Result<Vec<Replicate>> {
    let idx = kfold_indices(data.n_rows(), folds, seed)?;
    Ok((0..folds)
        .map(|f| {
            let train_idx: Vec<usize> =
                idx.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, v)| v.iter().copied()).collect();
            Replicate {
                label: format!("{prefix}seed={seed}/fold={f}"),
                seed,
                fold: Some(f),
                train: data.select_rows(&train_idx),
                test: data.select_rows(&idx[f]),
            }
        })
        .collect())
}

/// Fig. 5: ALARM with BP binarized, 5-fold CV, one group per penalty weight.
pub fn run_alarm_scenarios(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let path = cfg
        .bif_path
        .as_ref()
        .ok_or_else(|| CareError::InvalidArgument("the ALARM experiment needs a BIF file path".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CareError::io(path, e))?;
    let net = parse_bif(&text)?;
    let mut reps = Vec::new();
    for &seed in &cfg.seeds {
        let sample = ancestral_sample(&net, cfg.alarm_rows, rng::mix(seed, 0xa1a))?;
        let data = binarize_target(&sample, ALARM_TARGET, &[ALARM_POSITIVE])?;
        reps.extend(fold_replicates(&data, seed, cfg.folds, "")?);
    }
    let learned = learn_masks(&reps, cfg)?;
    let mut timing = Timing::default();
    let groups = cfg
        .alarm_scenarios
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            run_group(
                format!("scenario={}", k + 1),
                &reps,
                &learned,
                &cfg.roster,
                AcrLambda::Fixed(l),
                cfg,
                &mut timing,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut top_rows = Vec::new();
    for g in &groups {
        for entry in &cfg.roster {
            let med = median_importance(g, entry.label());
            for (rank, (var, s)) in top_k(&med, cfg.top_k).into_iter().enumerate() {
                top_rows.push(vec![g.label.clone(), entry.label().to_string(), (rank + 1).to_string(), var, fmt(s)]);
            }
        }
    }
    let tables = vec![
        summary_table("alarm_metrics.csv", &groups),
        CsvTable {
            file_name: "alarm_top_importance.csv".into(),
            header: ["scenario", "model", "rank", "variable", "median_score"].map(String::from).to_vec(),
            rows: top_rows,
        },
    ];
    Ok(finish(cfg, groups, tables, timing))
}

/// Highest-scoring variables, ties broken by name.
pub fn top_k(scores: &BTreeMap<String, f64>, k: usize) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = scores.iter().map(|(n, s)| (n.clone(), *s)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// Cross-validated roster on a user CSV, or a single train/test evaluation
/// when a separate test CSV is given.
pub fn run_custom_csv(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let path =
        cfg.csv_path.as_ref().ok_or_else(|| CareError::InvalidArgument("custom_csv needs an input CSV path".into()))?;
    let target =
        cfg.target.as_deref().ok_or_else(|| CareError::InvalidArgument("custom_csv needs a target column".into()))?;
    let data = load_csv_inferred(path, target)?;
    let reps = match &cfg.test_csv_path {
        Some(test_path) => {
            let test = load_csv_inferred(test_path, target)?;
            if test.names() != data.names() || test.kinds() != data.kinds() {
                return Err(CareError::Schema("test CSV columns differ from the training CSV".into()));
            }
            cfg.seeds
                .iter()
                .map(|&seed| Replicate {
                    label: format!("seed={seed}"),
                    seed,
                    fold: None,
                    train: data.clone(),
                    test: test.clone(),
                })
                .collect()
        }
        None => {
            let mut reps = Vec::new();
            for &seed in &cfg.seeds {
                reps.extend(fold_replicates(&data, seed, cfg.folds, "")?);
            }
            reps
        }
    };
    let learned = learn_masks(&reps, cfg)?;
    let mut timing = Timing::default();
    let group = run_group("custom".into(), &reps, &learned, &cfg.roster, AcrLambda::Select, cfg, &mut timing)?;
    let groups = vec![group];
    let tables = vec![summary_table("metrics.csv", &groups), importance_table("importance.csv", &groups)];
    Ok(finish(cfg, groups, tables, timing))
}
