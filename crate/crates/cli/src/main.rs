use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use care_core::acr::{fit_acr, AcrConfig};
use care_core::bayesnet::{ancestral_sample, binarize_target, parse_bif};
use care_core::citest::PermutationConfig;
use care_core::dataset::{load_csv_inferred, write_csv, Mode};
use care_core::fci::{extract_mask, run_fci_on_dataset, CausalMask, FciConfig, TesterChoice};
use care_core::harness::{self, Baseline, ExperimentConfig, ExperimentKind};
use care_core::model::ModelKind;
use care_core::synthgen::{self, SynthConfig};

#[derive(Parser)]
#[command(name = "care-lab", version, about = "Causal-mask regularized training toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark as CSV.
    GenData {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value = "train")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample rows from a BIF network, optionally binarizing one variable.
    SampleBn {
        #[arg(long)]
        bif: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Variable to binarize as the target.
        #[arg(long)]
        target: String,
        /// Levels mapped to 1 (comma separated).
        #[arg(long, value_delimiter = ',')]
        positive: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a PAG with FCI and write the PAG and the robust-predictor mask.
    Fci {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value = "auto")]
        tester: String,
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        /// Output directory for pag.json and mask.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model with the attribution penalty.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        target: String,
        /// mask.json from the fci command; all variables kept if omitted.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value = "mlp")]
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write results.json, timing.json and CSV tables.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// synthetic_generalization, lambda_sweep, sample_size_sweep, alarm_scenarios or custom_csv.
    name: String,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Penalty weights the ACR models choose from.
    #[arg(long, value_delimiter = ',')]
    acr_lambdas: Option<Vec<f64>>,
    /// Penalty weight for the sample-size sweep.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    /// Comma-separated model labels or ids (e.g. mlp,mlp_acr).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    bif: Option<PathBuf>,
    #[arg(long = "csv")]
    csv: Option<PathBuf>,
    #[arg(long)]
    test_csv: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    tester: Option<String>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData { n, mode, seed, out } => {
            let mode = match mode.as_str() {
                "train" => Mode::Train,
                "test" => Mode::Test,
                other => bail!("mode must be train or test, got '{other}'"),
            };
            let data = synthgen::generate(&SynthConfig { n, mode, seed })?;
            write_csv(&data, &out)?;
            println!("wrote {} rows to {}", n, out.display());
        }
        Command::SampleBn { bif, n, seed, target, positive, out } => {
            let text = fs::read_to_string(&bif).with_context(|| format!("reading {}", bif.display()))?;
            let net = parse_bif(&text)?;
            if positive.is_empty() {
                bail!("--positive must list at least one level of '{target}'");
            }
            let data = binarize_target(&ancestral_sample(&net, n, seed)?, &target, &positive)?;
            write_csv(&data, &out)?;
            println!("wrote {} rows to {}", n, out.display());
        }
        Command::Fci { input, target, alpha, tester, max_depth, out } => {
            let data = load_csv_inferred(&input, &target)?;
            let choice: TesterChoice = tester.parse()?;
            let pag = run_fci_on_dataset(&data, choice, PermutationConfig::default(), &FciConfig { alpha, max_depth })?;
            let mask = extract_mask(&pag, &target)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("pag.json"), serde_json::to_string_pretty(&pag.to_json())? + "\n")?;
            fs::write(out.join("mask.json"), serde_json::to_string_pretty(&mask.to_json_value())? + "\n")?;
            print!("{pag}");
            println!("mask {mask}");
        }
        Command::Train { input, target, mask, lambda, model, seed, lr, max_iters, out } => {
            let data = load_csv_inferred(&input, &target)?;
            let mask = match mask {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    CausalMask::from_json_value(&serde_json::from_str(&text)?, data.names())?
                }
                None => CausalMask::all_ones(data.names().to_vec()),
            };
            let kind: ModelKind = model.parse()?;
            let mut cfg = AcrConfig::new(kind, lambda, seed);
            if let Some(lr) = lr {
                cfg.train.learning_rate = lr;
            }
            if let Some(m) = max_iters {
                cfg.train.max_iters = m;
            }
            let fitted = fit_acr(&data, &mask, &cfg)?;
            fs::write(&out, fitted.to_json()? + "\n").with_context(|| format!("writing {}", out.display()))?;
            println!(
                "trained {model} for {} iterations, final objective {:.6}",
                fitted.model.iterations(),
                fitted.model.loss_curve.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Experiment(args) => run_experiment(args)?,
    }
    Ok(())
}

fn run_experiment(a: ExperimentArgs) -> Result<()> {
    let kind: ExperimentKind = a.name.parse()?;
    let mut cfg = ExperimentConfig::new(kind);
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(g) = a.lambda_grid {
        cfg.lambda_grid = g;
    }
    if let Some(g) = a.acr_lambdas {
        cfg.acr_lambdas = g;
    }
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if let Some(s) = a.sample_sizes {
        cfg.sample_sizes = s;
    }
    if let Some(m) = a.models {
        cfg.roster = m.iter().map(|s| s.parse::<Baseline>()).collect::<std::result::Result<_, _>>()?;
    }
    if let Some(n) = a.n_train {
        cfg.n_train = n;
    }
    if let Some(n) = a.n_test {
        cfg.n_test = n;
    }
    if let Some(f) = a.folds {
        cfg.folds = f;
    }
    if let Some(t) = a.tester {
        cfg.tester = t.parse()?;
    }
    cfg.bif_path = a.bif;
    cfg.csv_path = a.csv;
    cfg.test_csv_path = a.test_csv;
    cfg.target = a.target;
    let out = harness::run(&cfg)?;
    out.write(&a.out)?;
    for g in &out.result.groups {
        println!("[{}]", g.label);
        for (model, s) in &g.summary {
            println!("  {model:<16} train F1 {}  test F1 {}", s.train_f1, s.test_f1);
        }
    }
    println!("wrote results to {} ({:.1}s)", a.out.display(), out.timing.total_seconds);
    Ok(())
}
