//! Round-trip guarantees for everything the toolchain persists: model JSON,
//! mesh parameters inside it, and the binary feature cache.

use num_complex::Complex64;
use photonn::activation::EoActivation;
use photonn::data::{load_feature_cache, save_feature_cache};
use photonn::mesh::MeshParams;
use photonn::network::{Layer, OnnModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample_model(seed: u64) -> OnnModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let act = EoActivation::new(0.1, 0.05 * std::f64::consts::PI, std::f64::consts::PI).unwrap();
    let layers = vec![
        Layer {
            mesh: MeshParams::random_haar(6, &mut rng).unwrap(),
            activation: Some(act),
        },
        Layer {
            mesh: MeshParams::random(6, &mut rng),
            activation: None,
        },
    ];
    OnnModel::new(layers, 4).unwrap()
}

#[test]
fn model_json_round_trip_preserves_behavior_exactly() {
    let model = sample_model(7);
    let json = serde_json::to_string_pretty(&model).unwrap();
    let restored: OnnModel = serde_json::from_str(&json).unwrap();
    assert_eq!(restored, model);

    // Bit-exact parameters imply bit-exact forward passes.
    let x: Vec<Complex64> = (0..6)
        .map(|i| Complex64::new(0.1 * i as f64, -0.05 * i as f64))
        .collect();
    let a = model.forward(&x).unwrap();
    let b = restored.forward(&x).unwrap();
    for (za, zb) in a.output().iter().zip(b.output().iter()) {
        assert_eq!(za.re.to_bits(), zb.re.to_bits());
        assert_eq!(za.im.to_bits(), zb.im.to_bits());
    }

    // Serialization itself is stable: a second round trip gives the same bytes.
    let json2 = serde_json::to_string_pretty(&restored).unwrap();
    assert_eq!(json, json2);
}

#[test]
fn model_json_rejects_inconsistent_shapes() {
    let model = sample_model(11);
    let mut value: serde_json::Value = serde_json::to_value(&model).unwrap();
    // Claim a drop-mask wider than the port count.
    value["keep_outputs"] = serde_json::json!(99);
    assert!(serde_json::from_value::<OnnModel>(value).is_err());
}

#[test]
fn feature_cache_round_trip_is_bit_exact() {
    let features: Vec<Vec<Complex64>> = (0..5)
        .map(|i| {
            (0..3)
                .map(|j| Complex64::new(i as f64 + 0.25, j as f64 * std::f64::consts::PI))
                .collect()
        })
        .collect();
    let path = std::env::temp_dir().join("photonn-test-feature-cache.bin");
    save_feature_cache(&path, &features).unwrap();
    let restored = load_feature_cache(&path).unwrap();
    assert_eq!(restored, features);

    // Truncated files are rejected with a cache diagnostic.
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
    assert!(load_feature_cache(&path).is_err());
    let _ = std::fs::remove_file(&path);
}
