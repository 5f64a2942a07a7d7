//! `perf-table`: hardware figure-of-merit table over mesh sizes and depths.

use crate::config::{parse_usize_list, FileConfig};
use crate::error::CliError;
use crate::util::{artifact, ensure_out_dir, write_json, write_text};
use photonn::perf::{perf_report, HardwareParams};
use serde::Serialize;
use std::path::Path;

#[derive(clap::Args, Debug)]
pub struct PerfTableArgs {
    /// Mesh dimensions N to report, comma-separated.
    #[arg(long)]
    n_values: Option<String>,
    /// Layer counts L to report, comma-separated.
    #[arg(long)]
    layers_values: Option<String>,
}

#[derive(Serialize)]
struct ResolvedPerf {
    command: &'static str,
    out_dir: String,
    n_values: Vec<usize>,
    layers_values: Vec<usize>,
    hardware: HardwareParams,
}

const KEYS: &[&str] = &["n_values", "layers_values"];

pub fn run(args: &PerfTableArgs, file: &FileConfig, out_dir: &Path) -> Result<(), CliError> {
    let sec = file.section("perf-table", KEYS)?;
    let n_values = parse_usize_list(
        &args
            .n_values
            .clone()
            .or(sec.string("n_values")?)
            .unwrap_or_else(|| "4,10,100".into()),
        "n_values",
    )?;
    let layers_values = parse_usize_list(
        &args
            .layers_values
            .clone()
            .or(sec.string("layers_values")?)
            .unwrap_or_else(|| "1".into()),
        "layers_values",
    )?;

    let hw = HardwareParams::default();
    ensure_out_dir(out_dir)?;
    let resolved = ResolvedPerf {
        command: "perf-table",
        out_dir: out_dir.display().to_string(),
        n_values: n_values.clone(),
        layers_values: layers_values.clone(),
        hardware: hw.clone(),
    };
    write_json(&artifact(out_dir, "resolved_config.json"), &resolved)?;

    let mut csv =
        String::from("N,L,power_W,latency_s,footprint_m2,speed_mac_s,efficiency_J_mac\n");
    for &l in &layers_values {
        for &n in &n_values {
            let r = perf_report(n, l, &hw)?;
            csv.push_str(&format!(
                "{n},{l},{},{},{},{},{}\n",
                r.power_w.total(),
                r.latency_s.total(),
                r.footprint_m2.total(),
                r.speed_mac_per_s,
                r.efficiency_j_per_mac
            ));
        }
    }
    write_text(&artifact(out_dir, "perf_table.csv"), &csv)?;
    println!(
        "perf-table: {} sizes × {} depths → perf_table.csv",
        n_values.len(),
        layers_values.len()
    );
    Ok(())
}
