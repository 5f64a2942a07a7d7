//! Shared helpers: artifact writing, mesh initialization, model assembly.

use crate::error::CliError;
use photonn::activation::EoActivation;
use photonn::mesh::MeshParams;
use photonn::network::{Layer, OnnModel};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Mesh parameter initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// Program a Haar-random unitary onto each mesh (all ports mix; the
    /// default, and the initialization every training run should use).
    Haar,
    /// Draw every phase i.i.d. uniform on [0, 2π). Transmission then
    /// concentrates near the diagonal, which trains noticeably worse; kept
    /// for comparison experiments.
    Uniform,
}

impl Init {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "haar" => Ok(Init::Haar),
            "uniform" => Ok(Init::Uniform),
            other => Err(CliError::Usage(format!(
                "init: expected `haar` or `uniform`, got `{other}`"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Init::Haar => "haar",
            Init::Uniform => "uniform",
        }
    }
}

/// Draws one mesh according to the chosen initialization.
pub fn init_mesh(init: Init, n: usize, rng: &mut ChaCha8Rng) -> Result<MeshParams, CliError> {
    Ok(match init {
        Init::Haar => MeshParams::random_haar(n, rng)?,
        Init::Uniform => MeshParams::random(n, rng),
    })
}

/// Assembles an L-layer model with a fresh mesh per layer and the same
/// activation (or none) after every mesh, seeded deterministically.
pub fn build_model(
    n: usize,
    layers: usize,
    activation: Option<EoActivation>,
    keep_outputs: usize,
    init: Init,
    seed: u64,
) -> Result<OnnModel, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers: Result<Vec<Layer>, CliError> = (0..layers)
        .map(|_| {
            Ok(Layer {
                mesh: init_mesh(init, n, &mut rng)?,
                activation,
            })
        })
        .collect();
    Ok(OnnModel::new(layers?, keep_outputs)?)
}

/// Creates the output directory (and parents) if missing.
pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

/// Writes a text artifact, mapping I/O failures to data errors.
pub fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Writes a pretty-printed JSON artifact.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot serialize {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

/// Joins the out dir with a file name.
pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Writes `history.csv` into the out dir.
pub fn write_history(
    dir: &Path,
    history: &[photonn::training::EpochRecord],
) -> Result<(), CliError> {
    photonn::training::write_history_csv(artifact(dir, "history.csv"), history)
        .map_err(|e| CliError::Data(format!("cannot write history.csv: {e}")))
}

/// Writes a 10×10 confusion matrix (row-normalized percentages) as CSV with
/// a `true\predicted` header.
pub fn write_confusion(dir: &Path, confusion: &[[f64; 10]; 10]) -> Result<(), CliError> {
    let mut out = String::from("true_digit");
    for j in 0..10 {
        out.push_str(&format!(",pred_{j}"));
    }
    out.push('\n');
    for (i, row) in confusion.iter().enumerate() {
        out.push_str(&i.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_text(&artifact(dir, "confusion.csv"), &out)
}
