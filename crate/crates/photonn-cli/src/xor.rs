//! `train-xor`: train the parity task, singly or as a gain/bias sweep.

use crate::config::{parse_f64_list, FileConfig};
use crate::error::CliError;
use crate::util::{
    artifact, build_model, ensure_out_dir, write_history, write_json, write_text, Init,
};
use photonn::activation::EoActivation;
use photonn::data::{xor_dataset, Target};
use photonn::network::OnnModel;
use photonn::training::{evaluate, train, TrainConfig};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

#[derive(clap::Args, Debug)]
pub struct TrainXorArgs {
    /// Number of input bits (also the mesh dimension).
    #[arg(long)]
    n: Option<usize>,
    /// Number of mesh layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Activation phase gain g_φ in units of π.
    #[arg(long)]
    g_phi_pi: Option<f64>,
    /// Activation bias phase φ_b in units of π.
    #[arg(long)]
    phi_b_pi: Option<f64>,
    /// Activation tap ratio α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Training epochs (each is one full-batch step).
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    step_size: Option<f64>,
    /// Mesh initialization scheme.
    #[arg(long, value_enum)]
    init: Option<Init>,
    /// Sweep g_φ × φ_b × seeds instead of a single run.
    #[arg(long)]
    sweep: bool,
    /// Sweep grid for g_φ, comma-separated, in units of π.
    #[arg(long)]
    sweep_g_phi_pi: Option<String>,
    /// Sweep values for φ_b, comma-separated, in units of π.
    #[arg(long)]
    sweep_phi_b_pi: Option<String>,
    /// Independent seeded runs per sweep point.
    #[arg(long)]
    sweep_seeds: Option<usize>,
    /// Fail (exit 3) unless the single run's final MSE is below the
    /// `--check-mse` threshold.
    #[arg(long)]
    check: bool,
    /// Threshold used by `--check`.
    #[arg(long)]
    check_mse: Option<f64>,
}

#[derive(Serialize, Clone)]
struct ResolvedXor {
    command: &'static str,
    seed: u64,
    out_dir: String,
    n: usize,
    layers: usize,
    g_phi_pi: f64,
    phi_b_pi: f64,
    alpha: f64,
    epochs: usize,
    step_size: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    batch_size: usize,
    loss: &'static str,
    init: &'static str,
    sweep: bool,
    sweep_g_phi_pi: Vec<f64>,
    sweep_phi_b_pi: Vec<f64>,
    sweep_seeds: usize,
    check: bool,
    check_mse: f64,
}

const KEYS: &[&str] = &[
    "n",
    "layers",
    "g_phi_pi",
    "phi_b_pi",
    "alpha",
    "epochs",
    "step_size",
    "init",
    "sweep_g_phi_pi",
    "sweep_phi_b_pi",
    "sweep_seeds",
    "check_mse",
];

pub fn run(
    args: &TrainXorArgs,
    file: &FileConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let sec = file.section("train-xor", KEYS)?;
    let n = args.n.or(sec.usize("n")?).unwrap_or(4);
    let layers = args.layers.or(sec.usize("layers")?).unwrap_or(2);
    let g_phi_pi = args.g_phi_pi.or(sec.f64("g_phi_pi")?).unwrap_or(1.75);
    let phi_b_pi = args.phi_b_pi.or(sec.f64("phi_b_pi")?).unwrap_or(1.0);
    let alpha = args.alpha.or(sec.f64("alpha")?).unwrap_or(0.1);
    let epochs = args.epochs.or(sec.usize("epochs")?).unwrap_or(5000);
    let step_size = args.step_size.or(sec.f64("step_size")?).unwrap_or(0.01);
    let init = match (&args.init, sec.string("init")?) {
        (Some(i), _) => *i,
        (None, Some(text)) => Init::parse(&text)?,
        (None, None) => Init::Haar,
    };
    let sweep_g = parse_f64_list(
        &args
            .sweep_g_phi_pi
            .clone()
            .or(sec.string("sweep_g_phi_pi")?)
            .unwrap_or_else(|| "0.25,0.5,0.75,1,1.25,1.5,1.75,2".into()),
        "sweep_g_phi_pi",
    )?;
    let sweep_b = parse_f64_list(
        &args
            .sweep_phi_b_pi
            .clone()
            .or(sec.string("sweep_phi_b_pi")?)
            .unwrap_or_else(|| "0,0.5,0.85,1".into()),
        "sweep_phi_b_pi",
    )?;
    let sweep_seeds = args
        .sweep_seeds
        .or(sec.usize("sweep_seeds")?)
        .unwrap_or(20);
    let check_mse = args.check_mse.or(sec.f64("check_mse")?).unwrap_or(1e-4);

    if layers == 0 {
        return Err(CliError::Usage("layers must be ≥ 1".into()));
    }
    if args.check && args.sweep {
        return Err(CliError::Usage(
            "--check applies to single runs, not --sweep".into(),
        ));
    }

    ensure_out_dir(out_dir)?;
    let resolved = ResolvedXor {
        command: "train-xor",
        seed,
        out_dir: out_dir.display().to_string(),
        n,
        layers,
        g_phi_pi,
        phi_b_pi,
        alpha,
        epochs,
        step_size,
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
        batch_size: 1 << n,
        loss: "mse",
        init: init.name(),
        sweep: args.sweep,
        sweep_g_phi_pi: sweep_g.clone(),
        sweep_phi_b_pi: sweep_b.clone(),
        sweep_seeds,
        check: args.check,
        check_mse,
    };
    write_json(&artifact(out_dir, "resolved_config.json"), &resolved)?;

    if args.sweep {
        run_sweep(&resolved, &sweep_g, &sweep_b, sweep_seeds, out_dir)
    } else {
        run_single(&resolved, out_dir)
    }
}

/// One complete training run; returns the trained model and its final MSE.
fn train_once(
    cfg: &ResolvedXor,
    seed: u64,
    record_history: bool,
    out_dir: &Path,
) -> Result<(OnnModel, f64), CliError> {
    let dataset = xor_dataset(cfg.n)?;
    let activation = Some(EoActivation::new(
        cfg.alpha,
        cfg.g_phi_pi * PI,
        cfg.phi_b_pi * PI,
    )?);
    let init = Init::parse(cfg.init)?;
    let mut model = build_model(cfg.n, cfg.layers, activation, 1, init, seed)?;
    let mut tc = TrainConfig::xor_defaults();
    tc.step_size = cfg.step_size;
    tc.epochs = cfg.epochs;
    tc.batch_size = dataset.len();
    tc.seed = seed;
    let report = train(&mut model, &dataset, None, &tc)?;
    if record_history {
        write_history(out_dir, &report.history)?;
    }
    let eval = evaluate(&model, &dataset)?;
    Ok((model, eval.mean_loss))
}

fn run_single(cfg: &ResolvedXor, out_dir: &Path) -> Result<(), CliError> {
    let (model, final_mse) = train_once(cfg, cfg.seed, true, out_dir)?;
    write_json(&artifact(out_dir, "model.json"), &model)?;
    write_learned_io(cfg.n, &model, out_dir)?;
    println!(
        "train-xor: n={} layers={} g_phi={}π phi_b={}π seed={} → final MSE {final_mse:.3e}",
        cfg.n, cfg.layers, cfg.g_phi_pi, cfg.phi_b_pi, cfg.seed
    );
    if cfg.check && !(final_mse < cfg.check_mse) {
        return Err(CliError::Check(format!(
            "final MSE {final_mse:.3e} is not below the required {:.3e}",
            cfg.check_mse
        )));
    }
    Ok(())
}

/// Predicted vs. target output amplitude for every input pattern.
fn write_learned_io(n: usize, model: &OnnModel, out_dir: &Path) -> Result<(), CliError> {
    let dataset = xor_dataset(n)?;
    let mut out = String::from("pattern,parity,target,prediction,abs_error\n");
    for (i, ex) in dataset.iter().enumerate() {
        let bits: String = (0..n)
            .map(|k| {
                if (i >> (n - 1 - k)) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        let target = match ex.target {
            Target::Value(v) => v,
            Target::Class(_) => unreachable!("parity dataset has value targets"),
        };
        let parity = (i.count_ones() % 2) as usize;
        let pred = model.forward(&ex.input)?.output()[0].norm();
        out.push_str(&format!(
            "{bits},{parity},{target},{pred},{}\n",
            (pred - target).abs()
        ));
    }
    write_text(&artifact(out_dir, "learned_io.csv"), &out)
}

fn run_sweep(
    cfg: &ResolvedXor,
    sweep_g: &[f64],
    sweep_b: &[f64],
    seeds: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let mut csv = String::from("g_phi_pi,phi_b_pi,seeds,mean_final_mse,min_final_mse,max_final_mse\n");
    for &b in sweep_b {
        for &g in sweep_g {
            let mut point = cfg.clone();
            point.g_phi_pi = g;
            point.phi_b_pi = b;
            let mut sum = 0.0;
            let mut min = f64::INFINITY;
            let mut max = 0.0_f64;
            for s in 0..seeds {
                point.seed = s as u64;
                let (_, mse) = train_once(&point, s as u64, false, out_dir)?;
                sum += mse;
                min = min.min(mse);
                max = max.max(mse);
            }
            let mean = sum / seeds as f64;
            csv.push_str(&format!("{g},{b},{seeds},{mean},{min},{max}\n"));
            println!(
                "train-xor sweep: g_phi={g}π phi_b={b}π → mean final MSE {mean:.3e} \
                 (min {min:.3e}, max {max:.3e})"
            );
        }
    }
    write_text(&artifact(out_dir, "sweep.csv"), &csv)
}
