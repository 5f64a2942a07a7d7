//! Report subcommands: `activation-curve`, `threshold-contour`,
//! `kerr-compare`. Each emits one CSV computed straight from the library.

use crate::config::{parse_f64_list, FileConfig};
use crate::error::CliError;
use crate::util::{artifact, ensure_out_dir, write_json, write_text};
use num_complex::Complex64;
use photonn::activation::EoActivation;
use photonn::perf::{
    gain_db_ohm, gamma_eo, gamma_kerr, threshold_contour, HardwareParams,
};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

// ---------------------------------------------------------------- curve --

#[derive(clap::Args, Debug)]
pub struct ActivationCurveArgs {
    /// Activation phase gain g_φ in units of π.
    #[arg(long)]
    g_phi_pi: Option<f64>,
    /// Bias phases φ_b to tabulate, comma-separated, in units of π.
    #[arg(long)]
    phi_b_pi: Option<String>,
    /// Activation tap ratio α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Largest normalized input amplitude |z|·√(g_φ/π) on the grid.
    #[arg(long)]
    z_norm_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Serialize)]
struct ResolvedCurve {
    command: &'static str,
    out_dir: String,
    g_phi_pi: f64,
    phi_b_pi: Vec<f64>,
    alpha: f64,
    z_norm_max: f64,
    points: usize,
}

const CURVE_KEYS: &[&str] = &["g_phi_pi", "phi_b_pi", "alpha", "z_norm_max", "points"];

pub fn run_curve(
    args: &ActivationCurveArgs,
    file: &FileConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let sec = file.section("activation-curve", CURVE_KEYS)?;
    let g_phi_pi = args.g_phi_pi.or(sec.f64("g_phi_pi")?).unwrap_or(0.05);
    let biases = parse_f64_list(
        &args
            .phi_b_pi
            .clone()
            .or(sec.string("phi_b_pi")?)
            .unwrap_or_else(|| "0,0.5,0.85,1".into()),
        "phi_b_pi",
    )?;
    let alpha = args.alpha.or(sec.f64("alpha")?).unwrap_or(0.1);
    let z_norm_max = args.z_norm_max.or(sec.f64("z_norm_max")?).unwrap_or(2.5);
    let points = args.points.or(sec.usize("points")?).unwrap_or(251);
    if !(z_norm_max > 0.0) || points < 2 {
        return Err(CliError::Usage(
            "activation-curve needs z_norm_max > 0 and points ≥ 2".into(),
        ));
    }

    ensure_out_dir(out_dir)?;
    let resolved = ResolvedCurve {
        command: "activation-curve",
        out_dir: out_dir.display().to_string(),
        g_phi_pi,
        phi_b_pi: biases.clone(),
        alpha,
        z_norm_max,
        points,
    };
    write_json(&artifact(out_dir, "resolved_config.json"), &resolved)?;

    let g = g_phi_pi * PI;
    let mut csv = String::from(
        "phi_b_pi,z_norm,in_amplitude,in_power_w,power_transmission,out_amplitude,\
         response_phase_rad\n",
    );
    for &b in &biases {
        let act = EoActivation::new(alpha, g, b * PI)?;
        for i in 0..points {
            let z_norm = z_norm_max * i as f64 / (points - 1) as f64;
            // |z| = z_norm·√(π/g_φ), so that z_norm = |z|·√(g_φ/π).
            let amp = z_norm * (PI / g).sqrt();
            let z = Complex64::new(amp, 0.0);
            let out = act.apply(z);
            let t = act.power_transmission(amp * amp)?;
            let phase = if amp > 0.0 { (out / z).arg() } else { out.arg() };
            csv.push_str(&format!(
                "{b},{z_norm},{amp},{},{t},{},{phase}\n",
                amp * amp,
                out.norm()
            ));
        }
    }
    write_text(&artifact(out_dir, "activation_curve.csv"), &csv)?;
    println!(
        "activation-curve: {} biases × {points} points → activation_curve.csv",
        biases.len()
    );
    Ok(())
}

// -------------------------------------------------------------- contour --

#[derive(clap::Args, Debug)]
pub struct ThresholdContourArgs {
    /// Threshold powers to contour, comma-separated, in mW.
    #[arg(long)]
    target_pth_mw: Option<String>,
    /// Smallest modulator V_π on the grid (volts).
    #[arg(long)]
    v_pi_min: Option<f64>,
    /// Largest modulator V_π on the grid (volts).
    #[arg(long)]
    v_pi_max: Option<f64>,
    /// Number of V_π grid points.
    #[arg(long)]
    v_pi_points: Option<usize>,
    /// Lower end of the gain search range (V/A).
    #[arg(long)]
    gain_min: Option<f64>,
    /// Upper end of the gain search range (V/A).
    #[arg(long)]
    gain_max: Option<f64>,
}

#[derive(Serialize)]
struct ResolvedContour {
    command: &'static str,
    out_dir: String,
    target_pth_mw: Vec<f64>,
    v_pi_min: f64,
    v_pi_max: f64,
    v_pi_points: usize,
    gain_min: f64,
    gain_max: f64,
    alpha: f64,
    responsivity: f64,
}

const CONTOUR_KEYS: &[&str] = &[
    "target_pth_mw",
    "v_pi_min",
    "v_pi_max",
    "v_pi_points",
    "gain_min",
    "gain_max",
];

pub fn run_contour(
    args: &ThresholdContourArgs,
    file: &FileConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let sec = file.section("threshold-contour", CONTOUR_KEYS)?;
    let targets_mw = parse_f64_list(
        &args
            .target_pth_mw
            .clone()
            .or(sec.string("target_pth_mw")?)
            .unwrap_or_else(|| "0.01,0.1,1".into()),
        "target_pth_mw",
    )?;
    let v_lo = args.v_pi_min.or(sec.f64("v_pi_min")?).unwrap_or(1.0);
    let v_hi = args.v_pi_max.or(sec.f64("v_pi_max")?).unwrap_or(10.0);
    let v_points = args.v_pi_points.or(sec.usize("v_pi_points")?).unwrap_or(19);
    let g_lo = args.gain_min.or(sec.f64("gain_min")?).unwrap_or(10.0);
    let g_hi = args.gain_max.or(sec.f64("gain_max")?).unwrap_or(1e8);
    if !(v_lo > 0.0) || !(v_hi > v_lo) || v_points < 2 {
        return Err(CliError::Usage(
            "threshold-contour needs 0 < v_pi_min < v_pi_max and v_pi_points ≥ 2".into(),
        ));
    }

    let hw = HardwareParams::default();
    ensure_out_dir(out_dir)?;
    let resolved = ResolvedContour {
        command: "threshold-contour",
        out_dir: out_dir.display().to_string(),
        target_pth_mw: targets_mw.clone(),
        v_pi_min: v_lo,
        v_pi_max: v_hi,
        v_pi_points: v_points,
        gain_min: g_lo,
        gain_max: g_hi,
        alpha: hw.alpha,
        responsivity: hw.responsivity,
    };
    write_json(&artifact(out_dir, "resolved_config.json"), &resolved)?;

    let v_grid: Vec<f64> = (0..v_points)
        .map(|i| v_lo + (v_hi - v_lo) * i as f64 / (v_points - 1) as f64)
        .collect();
    let mut csv = String::from("target_pth_w,v_pi_v,gain_v_per_a,gain_db_ohm\n");
    for &mw in &targets_mw {
        let watts = mw * 1e-3;
        let samples = threshold_contour(&hw, (g_lo, g_hi), &v_grid, watts)?;
        for s in samples {
            match s.gain {
                Some(g) => csv.push_str(&format!(
                    "{watts},{},{g},{}\n",
                    s.v_pi,
                    gain_db_ohm(g)
                )),
                None => csv.push_str(&format!("{watts},{},,\n", s.v_pi)),
            }
        }
    }
    write_text(&artifact(out_dir, "threshold_contour.csv"), &csv)?;
    println!(
        "threshold-contour: {} targets × {v_points} V_π points → threshold_contour.csv",
        targets_mw.len()
    );
    Ok(())
}

// ----------------------------------------------------------------- kerr --

#[derive(clap::Args, Debug)]
pub struct KerrCompareArgs {
    /// Tap ratios α to tabulate, comma-separated.
    #[arg(long)]
    alphas: Option<String>,
    /// Smallest gain on the grid (V/A).
    #[arg(long)]
    gain_min: Option<f64>,
    /// Largest gain on the grid (V/A).
    #[arg(long)]
    gain_max: Option<f64>,
    /// Number of (logarithmic) gain grid points.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Serialize)]
struct ResolvedKerr {
    command: &'static str,
    out_dir: String,
    alphas: Vec<f64>,
    gain_min: f64,
    gain_max: f64,
    points: usize,
    v_pi_l_v_m: f64,
    kerr_n2_m2_per_w: f64,
    kerr_mode_area_m2: f64,
    lambda0_m: f64,
}

const KERR_KEYS: &[&str] = &["alphas", "gain_min", "gain_max", "points"];

pub fn run_kerr(
    args: &KerrCompareArgs,
    file: &FileConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let sec = file.section("kerr-compare", KERR_KEYS)?;
    let alphas = parse_f64_list(
        &args
            .alphas
            .clone()
            .or(sec.string("alphas")?)
            .unwrap_or_else(|| "0.5,0.1,0.01".into()),
        "alphas",
    )?;
    let g_lo = args.gain_min.or(sec.f64("gain_min")?).unwrap_or(1e2);
    let g_hi = args.gain_max.or(sec.f64("gain_max")?).unwrap_or(1e7);
    let points = args.points.or(sec.usize("points")?).unwrap_or(101);
    if !(g_lo > 0.0) || !(g_hi > g_lo) || points < 2 {
        return Err(CliError::Usage(
            "kerr-compare needs 0 < gain_min < gain_max and points ≥ 2".into(),
        ));
    }

    let base = HardwareParams::default();
    ensure_out_dir(out_dir)?;
    let resolved = ResolvedKerr {
        command: "kerr-compare",
        out_dir: out_dir.display().to_string(),
        alphas: alphas.clone(),
        gain_min: g_lo,
        gain_max: g_hi,
        points,
        v_pi_l_v_m: base.v_pi_l,
        kerr_n2_m2_per_w: base.n2,
        kerr_mode_area_m2: base.mode_area,
        lambda0_m: base.lambda0,
    };
    write_json(&artifact(out_dir, "resolved_config.json"), &resolved)?;

    let kerr = gamma_kerr(&base)?;
    let mut header = String::from("gain_v_per_a,gain_db_ohm");
    for a in &alphas {
        header.push_str(&format!(",gamma_eo_alpha_{a}"));
    }
    header.push_str(",gamma_kerr\n");
    let mut csv = header;
    let log_step = (g_hi / g_lo).ln() / (points - 1) as f64;
    for i in 0..points {
        let g = g_lo * (log_step * i as f64).exp();
        csv.push_str(&format!("{g},{}", gain_db_ohm(g)));
        for &a in &alphas {
            let hw = HardwareParams {
                alpha: a,
                gain: g,
                ..base
            };
            csv.push_str(&format!(",{}", gamma_eo(&hw)?));
        }
        csv.push_str(&format!(",{kerr}\n"));
    }
    write_text(&artifact(out_dir, "kerr_compare.csv"), &csv)?;
    println!(
        "kerr-compare: {} tap ratios × {points} gain points → kerr_compare.csv",
        alphas.len()
    );
    Ok(())
}
