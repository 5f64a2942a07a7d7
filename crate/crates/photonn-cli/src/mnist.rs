//! `train-mnist`: train the digit classifier on Fourier-feature inputs.

use crate::config::FileConfig;
use crate::error::CliError;
use crate::util::{
    artifact, build_model, ensure_out_dir, write_confusion, write_history, write_json, Init,
};
use photonn::activation::EoActivation;
use photonn::data::{
    load_feature_cache, load_mnist_idx, mnist_feature_dataset, save_feature_cache, Dataset,
    LabeledExample, MnistSet, Target,
};
use photonn::training::{evaluate, train, TrainConfig};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(clap::Args, Debug)]
pub struct TrainMnistArgs {
    /// Number of mesh layers (1, 2, or 3).
    #[arg(long)]
    layers: Option<usize>,
    /// Number of Fourier-coefficient features (also the mesh dimension).
    #[arg(long)]
    n_features: Option<usize>,
    /// Drop all activations (linear network).
    #[arg(long)]
    linear: bool,
    /// Train each layer's activation gain g_φ alongside the mesh phases.
    #[arg(long)]
    train_gain: bool,
    /// Activation phase gain g_φ in units of π.
    #[arg(long)]
    g_phi_pi: Option<f64>,
    /// Activation bias phase φ_b in units of π.
    #[arg(long)]
    phi_b_pi: Option<f64>,
    /// Activation tap ratio α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Examples per optimizer step.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    step_size: Option<f64>,
    /// Mesh initialization scheme.
    #[arg(long, value_enum)]
    init: Option<Init>,
    /// Directory holding the four MNIST IDX files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Directory for cached feature files (reused when present; ignored
    /// when --limit-train/--limit-test subset the data).
    #[arg(long)]
    feature_cache: Option<PathBuf>,
    /// Use only the first K training examples (smoke runs).
    #[arg(long)]
    limit_train: Option<usize>,
    /// Use only the first K test examples (smoke runs).
    #[arg(long)]
    limit_test: Option<usize>,
    /// Fail (exit 3) unless final test accuracy meets `--check-accuracy`.
    #[arg(long)]
    check: bool,
    /// Minimum test accuracy for `--check` (fraction in [0, 1]). Defaults:
    /// 0.91 nonlinear, 0.83 linear, 0.92 for 3 layers with --train-gain.
    #[arg(long)]
    check_accuracy: Option<f64>,
}

#[derive(Serialize, Clone)]
struct ResolvedMnist {
    command: &'static str,
    seed: u64,
    out_dir: String,
    layers: usize,
    n_features: usize,
    linear: bool,
    train_gain: bool,
    g_phi_pi: f64,
    phi_b_pi: f64,
    alpha: f64,
    epochs: usize,
    batch_size: usize,
    step_size: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    loss: &'static str,
    checkpoint_best: bool,
    init: &'static str,
    keep_outputs: usize,
    data_dir: String,
    feature_cache: Option<String>,
    limit_train: Option<usize>,
    limit_test: Option<usize>,
    check: bool,
    check_accuracy: Option<f64>,
}

const KEYS: &[&str] = &[
    "layers",
    "n_features",
    "g_phi_pi",
    "phi_b_pi",
    "alpha",
    "epochs",
    "batch_size",
    "step_size",
    "init",
    "data_dir",
    "feature_cache",
    "check_accuracy",
];

/// The four files expected under `--data-dir`.
const IDX_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

pub fn run(
    args: &TrainMnistArgs,
    file: &FileConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let sec = file.section("train-mnist", KEYS)?;
    let layers = args.layers.or(sec.usize("layers")?).unwrap_or(2);
    let n_features = args.n_features.or(sec.usize("n_features")?).unwrap_or(16);
    let g_phi_pi = args.g_phi_pi.or(sec.f64("g_phi_pi")?).unwrap_or(0.05);
    let phi_b_pi = args.phi_b_pi.or(sec.f64("phi_b_pi")?).unwrap_or(1.0);
    let alpha = args.alpha.or(sec.f64("alpha")?).unwrap_or(0.1);
    let defaults = TrainConfig::mnist_defaults();
    let epochs = args.epochs.or(sec.usize("epochs")?).unwrap_or(defaults.epochs);
    let batch_size = args
        .batch_size
        .or(sec.usize("batch_size")?)
        .unwrap_or(defaults.batch_size);
    let step_size = args
        .step_size
        .or(sec.f64("step_size")?)
        .unwrap_or(defaults.step_size);
    let init = match (&args.init, sec.string("init")?) {
        (Some(i), _) => *i,
        (None, Some(text)) => Init::parse(&text)?,
        (None, None) => Init::Haar,
    };
    let data_dir = args
        .data_dir
        .clone()
        .or(sec.string("data_dir")?.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data/mnist"));
    let feature_cache = args
        .feature_cache
        .clone()
        .or(sec.string("feature_cache")?.map(PathBuf::from));
    let check_accuracy = args.check_accuracy.or(sec.f64("check_accuracy")?);

    if !(1..=3).contains(&layers) {
        return Err(CliError::Usage(format!(
            "layers must be 1, 2, or 3, got {layers}"
        )));
    }
    if n_features < 10 {
        return Err(CliError::Usage(format!(
            "n_features must be ≥ 10 so all ten digit ports exist, got {n_features}"
        )));
    }

    let resolved = ResolvedMnist {
        command: "train-mnist",
        seed,
        out_dir: out_dir.display().to_string(),
        layers,
        n_features,
        linear: args.linear,
        train_gain: args.train_gain,
        g_phi_pi,
        phi_b_pi,
        alpha,
        epochs,
        batch_size,
        step_size,
        beta1: defaults.beta1,
        beta2: defaults.beta2,
        epsilon: defaults.epsilon,
        loss: "cross-entropy",
        checkpoint_best: true,
        init: init.name(),
        keep_outputs: 10,
        data_dir: data_dir.display().to_string(),
        feature_cache: feature_cache.as_ref().map(|p| p.display().to_string()),
        limit_train: args.limit_train,
        limit_test: args.limit_test,
        check: args.check,
        check_accuracy,
    };

    ensure_out_dir(out_dir)?;
    write_json(&artifact(out_dir, "resolved_config.json"), &resolved)?;

    let (train_set, test_set) = load_datasets(&resolved, &data_dir, feature_cache.as_deref())?;

    let activation = if args.linear {
        None
    } else {
        Some(EoActivation::new(alpha, g_phi_pi * PI, phi_b_pi * PI)?)
    };
    let mut model = build_model(n_features, layers, activation, 10, init, seed)?;
    let mut tc = TrainConfig::mnist_defaults();
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.step_size = step_size;
    tc.seed = seed;
    tc.train_activation_gain = args.train_gain;

    let report = train(&mut model, &train_set, Some(&test_set), &tc)?;
    write_history(out_dir, &report.history)?;
    write_json(&artifact(out_dir, "model.json"), &model)?;

    let eval = evaluate(&model, &test_set)?;
    if let Some(confusion) = &eval.confusion {
        write_confusion(out_dir, confusion)?;
    }
    println!(
        "train-mnist: layers={layers} linear={} train_gain={} seed={seed} → \
         test accuracy {:.4} (mean CE loss {:.4})",
        args.linear, args.train_gain, eval.accuracy, eval.mean_loss
    );

    if args.check {
        let min = match check_accuracy {
            Some(v) => v,
            None if args.linear => 0.83,
            None if layers == 3 && args.train_gain => 0.92,
            None => 0.91,
        };
        if !(eval.accuracy >= min) {
            return Err(CliError::Check(format!(
                "test accuracy {:.4} is below the required {min:.4}",
                eval.accuracy
            )));
        }
    }
    Ok(())
}

/// Loads IDX files and produces featurized datasets, optionally via an
/// on-disk cache of the complex feature vectors.
fn load_datasets(
    cfg: &ResolvedMnist,
    data_dir: &Path,
    cache_dir: Option<&Path>,
) -> Result<(Dataset, Dataset), CliError> {
    let missing: Vec<String> = IDX_FILES
        .iter()
        .filter(|f| !data_dir.join(f).exists())
        .map(|f| data_dir.join(f).display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Data(format!(
            "missing MNIST IDX files: {}",
            missing.join(", ")
        )));
    }

    let mut train_raw = load_mnist_idx(
        data_dir.join(IDX_FILES[0]),
        data_dir.join(IDX_FILES[1]),
    )?;
    let mut test_raw = load_mnist_idx(
        data_dir.join(IDX_FILES[2]),
        data_dir.join(IDX_FILES[3]),
    )?;
    if let Some(k) = cfg.limit_train {
        train_raw.images.truncate(k);
        train_raw.labels.truncate(k);
    }
    if let Some(k) = cfg.limit_test {
        test_raw.images.truncate(k);
        test_raw.labels.truncate(k);
    }

    let limited = cfg.limit_train.is_some() || cfg.limit_test.is_some();
    let cache_dir = if limited { None } else { cache_dir };
    let n = cfg.n_features;

    let featurize = |raw: &MnistSet,
                     cache: Option<PathBuf>|
     -> Result<Dataset, CliError> {
        if let Some(path) = &cache {
            if path.exists() {
                let features = load_feature_cache(path)?;
                if features.len() != raw.labels.len()
                    || features.first().map(|f| f.len()) != Some(n)
                {
                    return Err(CliError::Data(format!(
                        "feature cache {} does not match the dataset \
                         (delete it to regenerate)",
                        path.display()
                    )));
                }
                return Ok(features
                    .into_iter()
                    .zip(&raw.labels)
                    .map(|(input, &label)| LabeledExample {
                        input,
                        target: Target::Class(label as usize),
                    })
                    .collect());
            }
        }
        let ds = mnist_feature_dataset(raw, n)?;
        if let Some(path) = &cache {
            let features: Vec<Vec<num_complex::Complex64>> =
                ds.iter().map(|ex| ex.input.clone()).collect();
            save_feature_cache(path, &features)?;
        }
        Ok(ds)
    };

    let (train_cache, test_cache) = match cache_dir {
        None => (None, None),
        Some(dir) => {
            ensure_out_dir(dir)?;
            (
                Some(dir.join(format!("train-features-n{n}.bin"))),
                Some(dir.join(format!("t10k-features-n{n}.bin"))),
            )
        }
    };
    Ok((
        featurize(&train_raw, train_cache)?,
        featurize(&test_raw, test_cache)?,
    ))
}
