//! Feedforward model composition: unitary mesh layers, optional elementwise
//! electro-optic activations, an output drop-mask, intensity readout, and the
//! two loss functions used by the benchmark tasks.

use crate::activation::EoActivation;
use crate::mesh::{MeshError, MeshParams};
use crate::Complex64;
use serde::{Deserialize, Serialize};

/// Probability floor used when evaluating cross-entropy at a vanishing
/// predicted probability.
pub const PROB_FLOOR: f64 = 1e-12;

/// Errors produced by model construction and readout.
#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    /// Layer meshes disagree about the port dimension.
    #[error("layer {layer} has dimension {got}, expected {expected}")]
    MixedDimensions {
        layer: usize,
        expected: usize,
        got: usize,
    },
    /// The drop-mask size must satisfy 1 ≤ K ≤ N.
    #[error("keep_outputs = {keep} invalid for dimension {n}")]
    InvalidKeep { keep: usize, n: usize },
    /// A model needs at least one layer.
    #[error("model has no layers")]
    Empty,
    /// Input vector length does not match the model dimension.
    #[error(transparent)]
    Mesh(#[from] MeshError),
    /// All readout intensities are zero; no probability distribution exists.
    #[error("all output intensities are zero")]
    DegenerateIntensities,
}

/// One network layer: a unitary mesh optionally followed by an elementwise
/// electro-optic activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub mesh: MeshParams,
    pub activation: Option<EoActivation>,
}

/// A feedforward optical neural network: `L` layers over `N` ports, with the
/// first `keep_outputs` ports read out after the final layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OnnModelRepr", into = "OnnModelRepr")]
pub struct OnnModel {
    layers: Vec<Layer>,
    keep_outputs: usize,
}

impl OnnModel {
    /// Builds a model, validating that all meshes share one dimension and
    /// that the drop-mask keeps between 1 and N ports.
    pub fn new(layers: Vec<Layer>, keep_outputs: usize) -> Result<Self, NetworkError> {
        let n = layers.first().ok_or(NetworkError::Empty)?.mesh.n();
        for (i, layer) in layers.iter().enumerate() {
            if layer.mesh.n() != n {
                return Err(NetworkError::MixedDimensions {
                    layer: i,
                    expected: n,
                    got: layer.mesh.n(),
                });
            }
        }
        if keep_outputs == 0 || keep_outputs > n {
            return Err(NetworkError::InvalidKeep {
                keep: keep_outputs,
                n,
            });
        }
        Ok(Self {
            layers,
            keep_outputs,
        })
    }

    /// Port dimension N.
    pub fn n(&self) -> usize {
        self.layers[0].mesh.n()
    }

    /// Number of layers L.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Number of output ports kept by the drop-mask.
    pub fn keep_outputs(&self) -> usize {
        self.keep_outputs
    }

    /// Layer list.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable layer access for training updates.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Runs the network on one input vector, retaining every intermediate:
    /// the input `x0`, each pre-activation `z_i = W_i·x_{i−1}`, and each
    /// post-activation `x_i` (equal to `z_i` for layers without activation).
    pub fn forward(&self, x0: &[Complex64]) -> Result<ForwardTrace, NetworkError> {
        let mut x = x0.to_vec();
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.mesh.apply(&x)?;
            x = match &layer.activation {
                Some(act) => act.apply_vec(&z),
                None => z.clone(),
            };
            pre.push(z);
            post.push(x.clone());
        }
        Ok(ForwardTrace {
            input: x0.to_vec(),
            pre,
            post,
        })
    }
}

/// Serialized layout: a single document embedding every layer's mesh and
/// activation plus the drop-mask size.
#[derive(Serialize, Deserialize)]
struct OnnModelRepr {
    layers: Vec<Layer>,
    keep_outputs: usize,
}

impl From<OnnModel> for OnnModelRepr {
    fn from(m: OnnModel) -> Self {
        Self {
            layers: m.layers,
            keep_outputs: m.keep_outputs,
        }
    }
}

impl TryFrom<OnnModelRepr> for OnnModel {
    type Error = NetworkError;

    fn try_from(r: OnnModelRepr) -> Result<Self, NetworkError> {
        OnnModel::new(r.layers, r.keep_outputs)
    }
}

/// Every intermediate field vector from one forward pass; consumed by
/// reverse-mode gradient computation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Network input x₀.
    pub input: Vec<Complex64>,
    /// Pre-activation vectors z_i, one per layer.
    pub pre: Vec<Vec<Complex64>>,
    /// Post-activation vectors x_i, one per layer.
    pub post: Vec<Vec<Complex64>>,
}

impl ForwardTrace {
    /// Final network output x_L.
    pub fn output(&self) -> &[Complex64] {
        self.post.last().expect("trace has at least one layer")
    }
}

/// Intensities |x_L[j]|² of the first `keep` output ports (un-normalized).
pub fn output_intensities(trace: &ForwardTrace, keep: usize) -> Vec<f64> {
    trace.output()[..keep].iter().map(|z| z.norm_sqr()).collect()
}

/// Normalizes intensities by their sum, producing a probability
/// distribution without any exponential (the optical readout is already
/// non-negative).
pub fn softmaxless_probs(intensities: &[f64]) -> Result<Vec<f64>, NetworkError> {
    let total: f64 = intensities.iter().sum();
    if total <= 0.0 {
        return Err(NetworkError::DegenerateIntensities);
    }
    Ok(intensities.iter().map(|i| i / total).collect())
}

/// Mean squared error between real readout values and real targets.
pub fn mse_loss(outputs: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(outputs.len(), targets.len(), "length mismatch");
    let n = outputs.len().max(1);
    outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| (o - t) * (o - t))
        .sum::<f64>()
        / n as f64
}

/// Cross-entropy −log p at the true label, with the probability clamped to a
/// floor of 1e−12 to keep the loss finite.
pub fn cross_entropy_loss(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(PROB_FLOOR).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MziPhases;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_model(
        n: usize,
        l: usize,
        with_act: bool,
        rng: &mut ChaCha8Rng,
    ) -> OnnModel {
        let layers = (0..l)
            .map(|_| Layer {
                mesh: MeshParams::random(n, rng),
                activation: with_act
                    .then(|| EoActivation::new(0.1, 1.75 * PI, PI).unwrap()),
            })
            .collect();
        OnnModel::new(layers, 1).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Mesh whose unitary is exactly the identity: every block set to
    /// theta = phi = pi has transfer i·e^{iπ/2}·[[e^{iπ}, 0], [0, −1]] = I.
    fn identity_mesh(n: usize) -> MeshParams {
        let slots = crate::mesh::rectangular_layout(n).len();
        MeshParams::new(
            n,
            vec![MziPhases::new(PI, PI).unwrap(); slots],
            vec![0.0; n],
        )
        .unwrap()
    }

    #[test]
    fn identity_mesh_is_identity() {
        let m = identity_mesh(4);
        let u = m.unitary();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u[[i, j]] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let model = OnnModel::new(
            vec![Layer {
                mesh: identity_mesh(4),
                activation: None,
            }],
            4,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_vec(4, &mut rng);
        let trace = model.forward(&x).unwrap();
        for (a, b) in trace.output().iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn two_linear_layers_match_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = random_model(5, 2, false, &mut rng);
        let x = random_vec(5, &mut rng);
        let trace = model.forward(&x).unwrap();
        let u1 = model.layers()[0].mesh.unitary();
        let u2 = model.layers()[1].mesh.unitary();
        let dense = u2.dot(&u1).dot(&Array1::from_vec(x));
        for (a, b) in trace.output().iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_without_activations_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(4, 3, false, &mut rng);
        for _ in 0..20 {
            let x = random_vec(4, &mut rng);
            let y = random_vec(4, &mut rng);
            let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let b = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let combo: Vec<Complex64> = x
                .iter()
                .zip(&y)
                .map(|(xi, yi)| a * xi + b * yi)
                .collect();
            let fx = model.forward(&x).unwrap();
            let fy = model.forward(&y).unwrap();
            let fc = model.forward(&combo).unwrap();
            for j in 0..4 {
                let expect = a * fx.output()[j] + b * fy.output()[j];
                assert!((fc.output()[j] - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn unit_input_stays_within_unit_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let model = random_model(4, 3, true, &mut rng);
            let mut x = random_vec(4, &mut rng);
            let norm = crate::l2_norm(&x);
            x.iter_mut().for_each(|z| *z /= norm);
            let trace = model.forward(&x).unwrap();
            assert!(crate::l2_norm(trace.output()) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn norms_non_increasing_through_lossy_activations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let model = random_model(6, 4, true, &mut rng);
            let x = random_vec(6, &mut rng);
            let trace = model.forward(&x).unwrap();
            let mut prev = crate::l2_norm(&trace.input);
            for xi in &trace.post {
                let cur = crate::l2_norm(xi);
                assert!(cur <= prev + 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn readout_invariant_to_global_input_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = random_model(4, 2, true, &mut rng);
        let x = random_vec(4, &mut rng);
        let base = output_intensities(&model.forward(&x).unwrap(), 4);
        for _ in 0..10 {
            let psi = rng.random_range(0.0..std::f64::consts::TAU);
            let rot = Complex64::from_polar(1.0, psi);
            let xr: Vec<Complex64> = x.iter().map(|z| rot * z).collect();
            let got = output_intensities(&model.forward(&xr).unwrap(), 4);
            for (a, b) in base.iter().zip(&got) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn intensities_are_squared_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_model(4, 1, false, &mut rng);
        let x = random_vec(4, &mut rng);
        let trace = model.forward(&x).unwrap();
        let intensities = output_intensities(&trace, 3);
        assert_eq!(intensities.len(), 3);
        for (i, z) in intensities.iter().zip(trace.output()) {
            assert_abs_diff_eq!(*i, z.norm_sqr(), epsilon = 1e-15);
        }
    }

    #[test]
    fn probability_normalization() {
        let p = softmaxless_probs(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(p, vec![0.25, 0.25, 0.5]);
        let one_hot = softmaxless_probs(&[0.0, 3.5, 0.0]).unwrap();
        assert_eq!(one_hot, vec![0.0, 1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let i: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..5.0)).collect();
            let p = softmaxless_probs(&i).unwrap();
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        assert!(matches!(
            softmaxless_probs(&[0.0, 0.0]),
            Err(NetworkError::DegenerateIntensities)
        ));
    }

    #[test]
    fn loss_functions() {
        assert_eq!(mse_loss(&[0.2, 0.0], &[0.2, 0.0]), 0.0);
        assert_abs_diff_eq!(mse_loss(&[1.0, 0.0], &[0.0, 0.0]), 0.5, epsilon = 1e-15);
        let uniform = vec![0.1; 10];
        assert_abs_diff_eq!(
            cross_entropy_loss(&uniform, 3),
            10.0_f64.ln(),
            epsilon = 1e-12
        );
        // Vanishing probability at the label is clamped, not infinite.
        let degenerate = vec![0.0, 1.0];
        assert!(cross_entropy_loss(&degenerate, 0).is_finite());
        assert_abs_diff_eq!(
            cross_entropy_loss(&degenerate, 0),
            -PROB_FLOOR.ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn construction_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l4 = Layer {
            mesh: MeshParams::random(4, &mut rng),
            activation: None,
        };
        let l5 = Layer {
            mesh: MeshParams::random(5, &mut rng),
            activation: None,
        };
        assert!(matches!(
            OnnModel::new(vec![l4.clone(), l5], 1),
            Err(NetworkError::MixedDimensions { layer: 1, .. })
        ));
        assert!(matches!(
            OnnModel::new(vec![l4.clone()], 0),
            Err(NetworkError::InvalidKeep { .. })
        ));
        assert!(matches!(
            OnnModel::new(vec![l4], 5),
            Err(NetworkError::InvalidKeep { .. })
        ));
        assert!(matches!(OnnModel::new(vec![], 1), Err(NetworkError::Empty)));
    }

    #[test]
    fn model_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = random_model(4, 2, true, &mut rng);
        let json = serde_json::to_string_pretty(&model).unwrap();
        let back: OnnModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        // keep_outputs outside the port range is rejected on load.
        let bad = json.replace("\"keep_outputs\": 1", "\"keep_outputs\": 9");
        assert!(serde_json::from_str::<OnnModel>(&bad).is_err());
    }

    #[test]
    fn dimension_mismatch_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = random_model(4, 1, false, &mut rng);
        assert!(model.forward(&random_vec(3, &mut rng)).is_err());
    }
}
