//! Logistic regression and one-hidden-layer MLP classifiers with analytic
//! gradients, including the parameter gradient of an attribution penalty.
//!
//! Attributions are taken on the logit. The penalty
//! `Ω = (1/N) Σ_i Σ_j c_j |x_ij · ∂logit_i/∂x_ij|` is differentiated exactly
//! through the input gradient, holding ReLU activation patterns fixed and
//! using `sign(0) = 0` for the derivative of `|·|`.
//!
//! Parameters are stored flat. LR: `[w (p), b]`. MLP: `[W1 (h×p, row-major),
//! b1 (h), W2 (h), b2]`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CareError, Result};
use crate::rng;

pub const DEFAULT_HIDDEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lr,
    Mlp,
}

impl ModelKind {
    pub fn default_learning_rate(self) -> f64 {
        match self {
            ModelKind::Lr => 1e-2,
            ModelKind::Mlp => 1e-3,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = CareError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(Self::Lr),
            "mlp" => Ok(Self::Mlp),
            other => Err(CareError::InvalidArgument(format!("unknown model kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn lr(input_dim: usize, seed: u64) -> Self {
        Self { kind: ModelKind::Lr, input_dim, hidden_dim: 0, seed }
    }

    pub fn mlp(input_dim: usize, seed: u64) -> Self {
        Self { kind: ModelKind::Mlp, input_dim, hidden_dim: DEFAULT_HIDDEN, seed }
    }

    pub fn n_params(&self) -> usize {
        match self.kind {
            ModelKind::Lr => self.input_dim + 1,
            ModelKind::Mlp => self.hidden_dim * self.input_dim + 2 * self.hidden_dim + 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || (self.kind == ModelKind::Mlp && self.hidden_dim == 0) {
            return Err(CareError::InvalidArgument(format!("model dimensions must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub theta: Vec<f64>,
}

/// Borrowed MLP weights.
struct MlpView {
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DVector<f64>,
    b2: f64,
}

/// Per-row hidden state of an MLP forward pass.
struct MlpForward {
    /// ReLU activations, N×h.
    hidden: DMatrix<f64>,
    /// Activation indicators, N×h.
    active: DMatrix<f64>,
    logits: DVector<f64>,
}

/// Xavier-normal initialization with zero biases.
pub fn init(spec: &ModelSpec) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let mut theta = vec![0.0; spec.n_params()];
    let p = spec.input_dim;
    match spec.kind {
        ModelKind::Lr => {
            // Weight matrix is 1×p.
            let normal = xavier(p, 1);
            for w in &mut theta[..p] {
                *w = normal.sample(&mut rng);
            }
        }
        ModelKind::Mlp => {
            let h = spec.hidden_dim;
            let first = xavier(p, h);
            for w in &mut theta[..h * p] {
                *w = first.sample(&mut rng);
            }
            let second = xavier(h, 1);
            let off = h * p + h;
            for w in &mut theta[off..off + h] {
                *w = second.sample(&mut rng);
            }
        }
    }
    Ok(ModelParams { spec: *spec, theta })
}

fn xavier(fan_in: usize, fan_out: usize) -> Normal<f64> {
    Normal::new(0.0, (2.0 / (fan_in + fan_out) as f64).sqrt()).expect("positive std")
}

impl ModelParams {
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec: *spec, theta: vec![0.0; spec.n_params()] })
    }

    /// LR weights without the bias.
    pub fn lr_weights(&self) -> Option<&[f64]> {
        (self.spec.kind == ModelKind::Lr).then(|| &self.theta[..self.spec.input_dim])
    }

    fn mlp(&self) -> MlpView {
        let (p, h) = (self.spec.input_dim, self.spec.hidden_dim);
        let t = &self.theta;
        MlpView {
            w1: DMatrix::from_row_slice(h, p, &t[..h * p]),
            b1: DVector::from_column_slice(&t[h * p..h * p + h]),
            w2: DVector::from_column_slice(&t[h * p + h..h * p + 2 * h]),
            b2: t[h * p + 2 * h],
        }
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.spec.input_dim {
            return Err(CareError::Shape(format!("model expects {} columns, got {}", self.spec.input_dim, x.ncols())));
        }
        Ok(())
    }

    fn mlp_forward(&self, x: &DMatrix<f64>) -> MlpForward {
        let m = self.mlp();
        let mut pre = x * m.w1.transpose();
        for mut row in pre.row_iter_mut() {
            row += m.b1.transpose();
        }
        let active = pre.map(|z| if z > 0.0 { 1.0 } else { 0.0 });
        let hidden = pre.map(|z| z.max(0.0));
        let logits = (&hidden * &m.w2).add_scalar(m.b2);
        MlpForward { hidden, active, logits }
    }

    fn logits_unchecked(&self, x: &DMatrix<f64>) -> DVector<f64> {
        match self.spec.kind {
            ModelKind::Lr => {
                let p = self.spec.input_dim;
                let w = DVector::from_column_slice(&self.theta[..p]);
                (x * w).add_scalar(self.theta[p])
            }
            ModelKind::Mlp => self.mlp_forward(x).logits,
        }
    }

    pub fn forward_logit(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.check_input(x)?;
        Ok(self.logits_unchecked(x))
    }

    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.forward_logit(x)?.iter().map(|&z| sigmoid(z)).collect())
    }

    /// Mean binary cross-entropy and its parameter gradient.
    pub fn loss_and_grad(&self, x: &DMatrix<f64>, y: &[u8]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        check_labels(x, y)?;
        let n = x.nrows() as f64;
        let (logits, fwd) = match self.spec.kind {
            ModelKind::Lr => (self.logits_unchecked(x), None),
            ModelKind::Mlp => {
                let f = self.mlp_forward(x);
                (f.logits.clone(), Some(f))
            }
        };
        let mut loss = 0.0;
        let mut resid = DVector::zeros(logits.len());
        for (i, (&z, &yi)) in logits.iter().zip(y).enumerate() {
            let yf = f64::from(yi);
            loss += softplus(z) - yf * z;
            resid[i] = (sigmoid(z) - yf) / n;
        }
        loss /= n;
        let mut grad = vec![0.0; self.theta.len()];
        match fwd {
            None => {
                let p = self.spec.input_dim;
                let gw = x.transpose() * &resid;
                grad[..p].copy_from_slice(gw.as_slice());
                grad[p] = resid.sum();
            }
            Some(f) => {
                let (p, h) = (self.spec.input_dim, self.spec.hidden_dim);
                let m = self.mlp();
                let gw2 = f.hidden.transpose() * &resid;
                // dZ = (r W2ᵀ) ⊙ active
                let mut dz = &resid * m.w2.transpose();
                dz.component_mul_assign(&f.active);
                let gw1 = dz.transpose() * x;
                write_row_major(&mut grad[..h * p], &gw1);
                for k in 0..h {
                    grad[h * p + k] = dz.column(k).sum();
                }
                grad[h * p + h..h * p + 2 * h].copy_from_slice(gw2.as_slice());
                grad[h * p + 2 * h] = resid.sum();
            }
        }
        Ok((loss, grad))
    }

    /// `∂logit_i/∂x_ij` for every row.
    pub fn input_gradient(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        Ok(match self.spec.kind {
            ModelKind::Lr => {
                let p = self.spec.input_dim;
                DMatrix::from_fn(x.nrows(), p, |_, j| self.theta[j])
            }
            ModelKind::Mlp => {
                let m = self.mlp();
                let f = self.mlp_forward(x);
                let mut gated = f.active;
                for (k, mut col) in gated.column_iter_mut().enumerate() {
                    col *= m.w2[k];
                }
                gated * m.w1
            }
        })
    }

    /// Attribution penalty and its parameter gradient.
    ///
    /// `mask[j]` is the robust-feature indicator of encoded column `j`; columns
    /// with mask 1 are not penalized.
    pub fn penalty_value_and_param_grad(&self, x: &DMatrix<f64>, mask: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        let p = self.spec.input_dim;
        if mask.len() != p {
            return Err(CareError::Shape(format!("mask has {} entries for {p} columns", mask.len())));
        }
        let n = x.nrows();
        let nf = n as f64;
        let c: Vec<f64> = mask.iter().map(|a| 1.0 - a).collect();
        let mut grad = vec![0.0; self.theta.len()];
        if c.iter().all(|&v| v == 0.0) || n == 0 {
            return Ok((0.0, grad));
        }
        match self.spec.kind {
            ModelKind::Lr => {
                let mut omega = 0.0;
                for j in (0..p).filter(|&j| c[j] != 0.0) {
                    let w = self.theta[j];
                    let mut g = 0.0;
                    for i in 0..n {
                        let xij = x[(i, j)];
                        let s = xij * w;
                        omega += c[j] * s.abs();
                        g += c[j] * sign(s) * xij;
                    }
                    grad[j] = g / nf;
                }
                Ok((omega / nf, grad))
            }
            ModelKind::Mlp => {
                let h = self.spec.hidden_dim;
                let m = self.mlp();
                let f = self.mlp_forward(x);
                let mut gated = f.active.clone();
                for (k, mut col) in gated.column_iter_mut().enumerate() {
                    col *= m.w2[k];
                }
                let g = gated * &m.w1;
                let mut omega = 0.0;
                let mut d = DMatrix::zeros(n, p);
                for j in (0..p).filter(|&j| c[j] != 0.0) {
                    for i in 0..n {
                        let xij = x[(i, j)];
                        let s = xij * g[(i, j)];
                        omega += c[j] * s.abs();
                        d[(i, j)] = c[j] * sign(s) * xij;
                    }
                }
                // (Mᵀ D)_kj, h×p
                let md = f.active.transpose() * d;
                let mut gw1 = md.clone();
                for (k, mut row) in gw1.row_iter_mut().enumerate() {
                    row *= m.w2[k] / nf;
                }
                write_row_major(&mut grad[..h * p], &gw1);
                for k in 0..h {
                    grad[h * p + h + k] = m.w1.row(k).dot(&md.row(k)) / nf;
                }
                Ok((omega / nf, grad))
            }
        }
    }
}

fn write_row_major(dst: &mut [f64], m: &DMatrix<f64>) {
    let cols = m.ncols();
    for r in 0..m.nrows() {
        for c in 0..cols {
            dst[r * cols + c] = m[(r, c)];
        }
    }
}

fn check_labels(x: &DMatrix<f64>, y: &[u8]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(CareError::Shape(format!("{} labels for {} rows", y.len(), x.nrows())));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(CareError::InvalidArgument(format!("labels must be 0/1, found {bad}")));
    }
    Ok(())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One Adam update in place.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if theta.len() != grad.len() || state.m.len() != grad.len() {
        return Err(CareError::Shape("Adam state, parameters and gradient differ in length".into()));
    }
    state.t += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for k in 0..theta.len() {
        state.m[k] = ADAM_BETA1 * state.m[k] + (1.0 - ADAM_BETA1) * grad[k];
        state.v[k] = ADAM_BETA2 * state.v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
        let m_hat = state.m[k] / bc1;
        let v_hat = state.v[k] / bc2;
        theta[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStoppingConfig {
    pub enabled: bool,
    pub min_iters: usize,
    pub patience: usize,
    pub tol: f64,
}

impl Default for EarlyStoppingConfig {
    fn default() -> Self {
        Self { enabled: false, min_iters: 100, patience: 30, tol: 1e-5 }
    }
}

/// Stops once the monitored value has stayed within `tol` of a reference
/// value for `patience` consecutive iterations after `min_iters`. The
/// reference resets whenever the value moves by more than `tol`.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    cfg: EarlyStoppingConfig,
    reference: Option<f64>,
    unchanged: usize,
}

impl EarlyStopper {
    pub fn new(cfg: EarlyStoppingConfig) -> Self {
        Self { cfg, reference: None, unchanged: 0 }
    }

    /// Record the value at 1-based `iteration`; returns true to stop.
    pub fn observe(&mut self, iteration: usize, value: f64) -> bool {
        if !self.cfg.enabled {
            return false;
        }
        match self.reference {
            Some(r) if iteration > self.cfg.min_iters && (value - r).abs() <= self.cfg.tol => {
                self.unchanged += 1;
            }
            _ => {
                self.reference = Some(value);
                self.unchanged = 0;
            }
        }
        iteration > self.cfg.min_iters && self.unchanged >= self.cfg.patience
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub early_stopping: EarlyStoppingConfig,
    pub lambda: f64,
}

impl TrainConfig {
    /// Plain ERM defaults for a model kind.
    pub fn for_kind(kind: ModelKind) -> Self {
        Self {
            max_iters: 1000,
            learning_rate: kind.default_learning_rate(),
            weight_decay: 0.0,
            early_stopping: EarlyStoppingConfig::default(),
            lambda: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(CareError::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(CareError::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(CareError::InvalidArgument("learning rate must be > 0 and weight decay >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub config: TrainConfig,
    /// Total objective before each update.
    pub loss_curve: Vec<f64>,
    pub stopped_early: bool,
}

impl TrainedModel {
    pub fn iterations(&self) -> usize {
        self.loss_curve.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Full-batch Adam on `CE + λ·Ω (+ ½·wd·‖θ‖²)`.
///
/// `mask` is per encoded column. The penalty is skipped when `λ = 0` or the
/// mask is all ones, so those runs coincide with plain training.
pub fn train(spec: &ModelSpec, cfg: &TrainConfig, x: &DMatrix<f64>, y: &[u8], mask: &[f64]) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut params = init(spec)?;
    params.check_input(x)?;
    check_labels(x, y)?;
    if mask.len() != spec.input_dim {
        return Err(CareError::Shape(format!("mask has {} entries for {} columns", mask.len(), spec.input_dim)));
    }
    let penalize = cfg.lambda > 0.0 && mask.iter().any(|&a| a != 1.0);
    let mut adam = AdamState::new(params.theta.len());
    let mut stopper = EarlyStopper::new(cfg.early_stopping);
    let mut curve = Vec::with_capacity(cfg.max_iters);
    let mut stopped_early = false;
    for iteration in 1..=cfg.max_iters {
        let (mut objective, mut grad) = params.loss_and_grad(x, y)?;
        if penalize {
            let (omega, pg) = params.penalty_value_and_param_grad(x, mask)?;
            objective += cfg.lambda * omega;
            for (g, q) in grad.iter_mut().zip(&pg) {
                *g += cfg.lambda * q;
            }
        }
        if cfg.weight_decay > 0.0 {
            let sq: f64 = params.theta.iter().map(|t| t * t).sum();
            objective += 0.5 * cfg.weight_decay * sq;
            for (g, t) in grad.iter_mut().zip(&params.theta) {
                *g += cfg.weight_decay * t;
            }
        }
        if !objective.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(CareError::NonFinite { iteration, value: objective });
        }
        curve.push(objective);
        if stopper.observe(iteration, objective) {
            stopped_early = true;
            break;
        }
        adam_step(&mut adam, &mut params.theta, &grad, cfg.learning_rate)?;
    }
    Ok(TrainedModel { spec: *spec, params, config: *cfg, loss_curve: curve, stopped_early })
}
