//! Benchmark datasets: the N-input parity (XOR) task, MNIST IDX ingestion,
//! Fourier-feature preprocessing, and a flat binary feature cache.

use crate::Complex64;
use rustfft::{Fft, FftPlanner};
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

/// Image edge length; MNIST images are 28×28 grayscale.
pub const IMAGE_SIDE: usize = 28;
/// Pixels per image.
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

/// Errors from dataset construction, file ingestion, and the feature cache.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: bad IDX magic, expected {expected:#010x}, got {got:#010x}")]
    BadMagic {
        path: String,
        expected: u32,
        got: u32,
    },
    #[error("{path}: file truncated, expected {expected} bytes, got {got}")]
    Truncated {
        path: String,
        expected: usize,
        got: usize,
    },
    #[error("{path}: expected 28x28 images, got {rows}x{cols}")]
    BadImageShape {
        path: String,
        rows: u32,
        cols: u32,
    },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("input count {0} out of range 1..=16")]
    BadInputCount(usize),
    #[error("feature count {0} exceeds {IMAGE_PIXELS}")]
    TooManyCoefficients(usize),
    #[error("expected {IMAGE_PIXELS} pixels, got {0}")]
    WrongImageSize(usize),
    #[error("feature cache {path}: {reason}")]
    BadCache { path: String, reason: String },
}

/// Supervised target: a real scalar level for the parity task, or a class
/// label 0–9 for digit classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Value(f64),
    Class(usize),
}

/// One training or test example — a complex input field and its target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub input: Vec<Complex64>,
    pub target: Target,
}

/// A dataset is an ordered list of examples.
pub type Dataset = Vec<LabeledExample>;

/// Builds the N-input XOR (odd-parity) dataset over all 2^n bit patterns,
/// enumerated in lexicographic order (bit 0 is the most significant).
///
/// Each bit pattern is encoded antipodally: bit b becomes (1 − 2b)/√n, so
/// every input has exactly unit L2 norm and the optical input power is the
/// same for all examples. The target is 0.2 for odd parity, 0.0 for even.
pub fn xor_dataset(n_inputs: usize) -> Result<Dataset, DataError> {
    if n_inputs == 0 || n_inputs > 16 {
        return Err(DataError::BadInputCount(n_inputs));
    }
    let scale = 1.0 / (n_inputs as f64).sqrt();
    let mut out = Vec::with_capacity(1usize << n_inputs);
    for pattern in 0..(1usize << n_inputs) {
        let mut input = Vec::with_capacity(n_inputs);
        let mut ones = 0u32;
        for k in 0..n_inputs {
            let bit = (pattern >> (n_inputs - 1 - k)) & 1;
            ones += bit as u32;
            let amp = if bit == 1 { -scale } else { scale };
            input.push(Complex64::new(amp, 0.0));
        }
        let target = if ones % 2 == 1 { 0.2 } else { 0.0 };
        out.push(LabeledExample {
            input,
            target: Target::Value(target),
        });
    }
    Ok(out)
}

/// MNIST images with pixel values scaled to [0, 1], plus their labels.
#[derive(Debug, Clone)]
pub struct MnistSet {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    Ok(buf)
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32, DataError> {
    let slice = bytes
        .get(offset..offset + 4)
        .ok_or_else(|| DataError::Truncated {
            path: path.display().to_string(),
            expected: offset + 4,
            got: bytes.len(),
        })?;
    Ok(u32::from_be_bytes(slice.try_into().unwrap()))
}

/// Loads an MNIST image/label pair of IDX files (big-endian headers, magic
/// 0x00000803 for images and 0x00000801 for labels), scaling pixels to
/// [0, 1] by dividing raw bytes by 255.
pub fn load_mnist_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<MnistSet, DataError> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();

    let bytes = read_file(images_path)?;
    let magic = be_u32(&bytes, 0, images_path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic {
            path: images_path.display().to_string(),
            expected: IDX_IMAGES_MAGIC,
            got: magic,
        });
    }
    let count = be_u32(&bytes, 4, images_path)? as usize;
    let rows = be_u32(&bytes, 8, images_path)?;
    let cols = be_u32(&bytes, 12, images_path)?;
    if rows != IMAGE_SIDE as u32 || cols != IMAGE_SIDE as u32 {
        return Err(DataError::BadImageShape {
            path: images_path.display().to_string(),
            rows,
            cols,
        });
    }
    let expected = 16 + count * IMAGE_PIXELS;
    if bytes.len() != expected {
        return Err(DataError::Truncated {
            path: images_path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    let images: Vec<Vec<f64>> = bytes[16..]
        .chunks_exact(IMAGE_PIXELS)
        .map(|chunk| chunk.iter().map(|&b| b as f64 / 255.0).collect())
        .collect();

    let bytes = read_file(labels_path)?;
    let magic = be_u32(&bytes, 0, labels_path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic {
            path: labels_path.display().to_string(),
            expected: IDX_LABELS_MAGIC,
            got: magic,
        });
    }
    let label_count = be_u32(&bytes, 4, labels_path)? as usize;
    let expected = 8 + label_count;
    if bytes.len() != expected {
        return Err(DataError::Truncated {
            path: labels_path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    let labels = bytes[8..].to_vec();
    if images.len() != labels.len() {
        return Err(DataError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(MnistSet { images, labels })
}

/// The centered frequency grid ordering used for coefficient selection:
/// all 784 integer frequency pairs (q_x, q_y) with q ∈ {−14, …, 13}, sorted
/// by q_x² + q_y² ascending with ties broken lexicographically by (q_x, q_y).
pub fn fourier_selection_order() -> Vec<(i32, i32)> {
    let half = IMAGE_SIDE as i32 / 2;
    let mut order: Vec<(i32, i32)> = (-half..half)
        .flat_map(|qx| (-half..half).map(move |qy| (qx, qy)))
        .collect();
    order.sort_by_key(|&(qx, qy)| (qx * qx + qy * qy, qx, qy));
    order
}

/// Reusable Fourier feature extractor: computes the unnormalized 2D
/// transform c(k_x, k_y) = Σ_{m,n} e^{+j(k_x m + k_y n)} g(m, n) on the
/// centered grid k = 2πq/28, keeps the `n_coeffs` lowest-|k| coefficients,
/// and L2-normalizes the truncated vector.
pub struct FourierFeaturizer {
    n_coeffs: usize,
    fft: Arc<dyn Fft<f64>>,
    /// Flattened map index (row-major over wrapped q_x, q_y) per kept slot.
    picks: Vec<usize>,
}

impl FourierFeaturizer {
    pub fn new(n_coeffs: usize) -> Result<Self, DataError> {
        if n_coeffs > IMAGE_PIXELS {
            return Err(DataError::TooManyCoefficients(n_coeffs));
        }
        let fft = FftPlanner::new().plan_fft_inverse(IMAGE_SIDE);
        let picks = fourier_selection_order()
            .into_iter()
            .take(n_coeffs)
            .map(|(qx, qy)| {
                let row = qx.rem_euclid(IMAGE_SIDE as i32) as usize;
                let col = qy.rem_euclid(IMAGE_SIDE as i32) as usize;
                row * IMAGE_SIDE + col
            })
            .collect();
        Ok(Self {
            n_coeffs,
            fft,
            picks,
        })
    }

    /// Number of coefficients kept per image.
    pub fn n_coeffs(&self) -> usize {
        self.n_coeffs
    }

    /// Extracts the feature vector for one 784-pixel image.
    pub fn features(&self, image: &[f64]) -> Result<Vec<Complex64>, DataError> {
        if image.len() != IMAGE_PIXELS {
            return Err(DataError::WrongImageSize(image.len()));
        }
        let mut map: Vec<Complex64> = image
            .iter()
            .map(|&g| Complex64::new(g, 0.0))
            .collect();
        // Transform the second index (columns) row by row, then the first
        // index (rows) column by column; the inverse FFT carries the e^{+jk·r}
        // kernel without any 1/N normalization.
        for row in map.chunks_exact_mut(IMAGE_SIDE) {
            self.fft.process(row);
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); IMAGE_SIDE];
        for col in 0..IMAGE_SIDE {
            for (r, slot) in scratch.iter_mut().enumerate() {
                *slot = map[r * IMAGE_SIDE + col];
            }
            self.fft.process(&mut scratch);
            for (r, &value) in scratch.iter().enumerate() {
                map[r * IMAGE_SIDE + col] = value;
            }
        }
        let mut kept: Vec<Complex64> = self.picks.iter().map(|&i| map[i]).collect();
        let norm = crate::l2_norm(&kept);
        if norm > 0.0 {
            kept.iter_mut().for_each(|z| *z /= norm);
        }
        Ok(kept)
    }
}

/// One-shot convenience wrapper around [`FourierFeaturizer`].
pub fn fourier_features(image: &[f64], n_coeffs: usize) -> Result<Vec<Complex64>, DataError> {
    FourierFeaturizer::new(n_coeffs)?.features(image)
}

/// Converts a loaded MNIST set into a labeled feature dataset.
pub fn mnist_feature_dataset(set: &MnistSet, n_coeffs: usize) -> Result<Dataset, DataError> {
    let featurizer = FourierFeaturizer::new(n_coeffs)?;
    set.images
        .iter()
        .zip(&set.labels)
        .map(|(image, &label)| {
            Ok(LabeledExample {
                input: featurizer.features(image)?,
                target: Target::Class(label as usize),
            })
        })
        .collect()
}

/// Writes feature vectors to a flat binary cache:
/// `[count: u32][dim: u32][re, im as f64]...`, all little-endian.
pub fn save_feature_cache(
    path: impl AsRef<Path>,
    features: &[Vec<Complex64>],
) -> Result<(), DataError> {
    let path = path.as_ref();
    let dim = features.first().map_or(0, Vec::len);
    if features.iter().any(|f| f.len() != dim) {
        return Err(DataError::BadCache {
            path: path.display().to_string(),
            reason: "inconsistent feature dimensions".into(),
        });
    }
    let mut buf = Vec::with_capacity(8 + features.len() * dim * 16);
    buf.extend_from_slice(&(features.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(dim as u32).to_le_bytes());
    for feature in features {
        for z in feature {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a feature cache written by [`save_feature_cache`].
pub fn load_feature_cache(path: impl AsRef<Path>) -> Result<Vec<Vec<Complex64>>, DataError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    if bytes.len() < 8 {
        return Err(DataError::BadCache {
            path: path.display().to_string(),
            reason: "missing header".into(),
        });
    }
    let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = 8 + count * dim * 16;
    if bytes.len() != expected {
        return Err(DataError::BadCache {
            path: path.display().to_string(),
            reason: format!("expected {expected} bytes, got {}", bytes.len()),
        });
    }
    let mut features = Vec::with_capacity(count);
    let mut offset = 8;
    for _ in 0..count {
        let mut feature = Vec::with_capacity(dim);
        for _ in 0..dim {
            let re = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[offset + 8..offset + 16].try_into().unwrap());
            feature.push(Complex64::new(re, im));
            offset += 16;
        }
        features.push(feature);
    }
    Ok(features)
}
