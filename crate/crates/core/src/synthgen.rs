//! Synthetic benchmark with causal parents, a proxy, a spurious feature and noise.
//!
//! Columns are drawn whole, one after another, in the fixed order
//! X1, X2, Xnoise, Y, Xproxy, Xspur from a single ChaCha8 stream.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, Meta, Mode, Target};
use crate::error::{CareError, Result};
use crate::graph::Dag;
use crate::rng;

pub const FEATURES: [&str; 5] = ["X1", "X2", "Xproxy", "Xspur", "Xnoise"];
pub const TARGET: &str = "Y";

/// Standard deviation of the spurious feature in the test environment (variance 9).
pub const TEST_SPUR_STD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// P(Y = 1 | x1, x2).
pub fn label_probability(x1: f64, x2: f64) -> f64 {
    sigmoid(1.5 * x1 + 1.5 * x2 + 2.0 * x1 * x2)
}

pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.n == 0 {
        return Err(CareError::InvalidArgument("sample count must be at least 1".into()));
    }
    if cfg.mode == Mode::None {
        return Err(CareError::InvalidArgument("mode must be train or test".into()));
    }
    let n = cfg.n;
    let mut rng = rng::seeded(cfg.seed);
    let normal_column = |rng: &mut rng::CareRng| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(rng)).collect() };
    let x1 = normal_column(&mut rng);
    let x2 = normal_column(&mut rng);
    let noise = normal_column(&mut rng);
    let y: Vec<u8> = (0..n).map(|i| u8::from(rng.random::<f64>() < label_probability(x1[i], x2[i]))).collect();
    let mu = |label: u8| if label == 1 { 2.0 } else { -2.0 };
    let proxy: Vec<f64> = y.iter().map(|&l| Normal::new(mu(l), 1.0).unwrap().sample(&mut rng)).collect();
    let spur: Vec<f64> = match cfg.mode {
        Mode::Train => y.iter().map(|&l| Normal::new(mu(l), 1.0).unwrap().sample(&mut rng)).collect(),
        _ => {
            let d = Normal::new(0.0, TEST_SPUR_STD).unwrap();
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
    };
    let rows = (0..n).map(|i| vec![x1[i], x2[i], proxy[i], spur[i], noise[i]]).collect();
    Dataset::new(
        FEATURES.iter().map(|s| s.to_string()).collect(),
        vec![ColumnKind::Continuous; FEATURES.len()],
        rows,
        Some(Target { name: TARGET.into(), values: y }),
        Meta { seed: cfg.seed, mode: cfg.mode },
    )
}

/// The data-generating DAG, including the unobserved environment node `E`.
pub fn ground_truth_graph() -> Dag {
    Dag::from_edges(
        &["X1", "X2", "Xproxy", "Xspur", "Xnoise", "E", "Y"],
        &[("X1", "Y"), ("X2", "Y"), ("Y", "Xproxy"), ("Y", "Xspur"), ("E", "Xspur")],
    )
    .expect("fixed graph is acyclic")
}
