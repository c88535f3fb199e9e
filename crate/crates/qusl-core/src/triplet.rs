//! Triplet construction and amplitude embedding: Gaussian-perturbed positives,
//! feature interweaving of image pairs, and normalization into a state vector.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{resize, ImagePatch};

/// Gaussian perturbation settings. `sigma` is the noise level in intensity
/// units; the positive sample is the anchor plus per-pixel N(0, sigma^2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub sigma: f64,
    pub rng_seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            sigma: 5.0,
            rng_seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Anchor, positive and negative sample sharing one patch shape.
#[derive(Debug, Clone)]
pub struct Triplet {
    pub anchor: ImagePatch,
    pub positive: ImagePatch,
    pub negative: ImagePatch,
}

/// Unit-norm amplitude vector of length `2^qubits`; entries at and beyond
/// `payload_len` are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    amplitudes: Vec<f64>,
    qubits: usize,
    payload_len: usize,
}

impl EmbeddingVector {
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }
}

/// Add independent N(0, sigma^2) noise to every intensity, clamped to [0, 255].
pub fn perturb(anchor: &ImagePatch, cfg: &PerturbationConfig, rng: &mut impl Rng) -> ImagePatch {
    cfg.validate().expect("invalid perturbation config");
    if cfg.sigma == 0.0 {
        return anchor.clone();
    }
    let normal = Normal::new(0.0, cfg.sigma).expect("sigma validated above");
    let pixels = anchor
        .flat()
        .iter()
        .map(|&v| (v + normal.sample(rng)).clamp(0.0, 255.0))
        .collect();
    ImagePatch::new(anchor.width(), anchor.height(), pixels)
        .expect("clamped intensities are always valid")
}

/// Form an (anchor, positive, negative) triplet: the positive is a perturbed
/// copy of the anchor, the negative a uniformly random distinct dataset entry.
pub fn build_triplet(
    dataset: &[ImagePatch],
    anchor_idx: usize,
    cfg: &PerturbationConfig,
    rng: &mut impl Rng,
) -> Result<Triplet> {
    if anchor_idx >= dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "anchor index {anchor_idx} out of range for dataset of {}",
            dataset.len()
        )));
    }
    if dataset.len() < 2 {
        return Err(Error::InvalidArgument(
            "dataset must contain at least 2 patches to pick a distinct negative".into(),
        ));
    }
    let anchor = dataset[anchor_idx].clone();
    let positive = perturb(&anchor, cfg, rng);
    // Uniform over the indices other than the anchor.
    let mut negative_idx = rng.random_range(0..dataset.len() - 1);
    if negative_idx >= anchor_idx {
        negative_idx += 1;
    }
    Ok(Triplet {
        anchor,
        positive,
        negative: dataset[negative_idx].clone(),
    })
}

/// Element-wise alternation of two flattened patches: the first image lands on
/// even indices, the second on odd ones. Output length is `6 * w * h`.
pub fn interweave(first: &ImagePatch, second: &ImagePatch) -> Result<Vec<f64>> {
    if !first.same_shape(second) {
        return Err(Error::ShapeMismatch(format!(
            "interweave requires equal shapes, got {}x{} vs {}x{}",
            first.width(),
            first.height(),
            second.width(),
            second.height()
        )));
    }
    let a = first.flat();
    let b = second.flat();
    let mut out = Vec::with_capacity(2 * a.len());
    for (x, y) in a.iter().zip(b) {
        out.push(*x);
        out.push(*y);
    }
    Ok(out)
}

/// Zero-pad `raw` to length `2^qubits` and normalize to unit L2 norm.
pub fn embed(raw: &[f64], qubits: usize) -> Result<EmbeddingVector> {
    let capacity = 1usize << qubits;
    if raw.len() > capacity {
        return Err(Error::Capacity {
            needed: raw.len(),
            available: capacity,
        });
    }
    let norm_sq: f64 = raw.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let norm = norm_sq.sqrt();
    let mut amplitudes = vec![0.0; capacity];
    for (slot, &v) in amplitudes.iter_mut().zip(raw) {
        *slot = v / norm;
    }
    Ok(EmbeddingVector {
        amplitudes,
        qubits,
        payload_len: raw.len(),
    })
}

/// Downsample a patch so an interleaved pair fits `2^qubits` amplitudes.
///
/// A pair of `w x h` patches interleaves to `6 * w * h` values. If that
/// already fits, the patch passes through; otherwise it is resized to the
/// largest square side `m` with `6 * m^2 <= 2^qubits`.
pub fn fit_to_qubit_budget(patch: &ImagePatch, qubits: usize) -> Result<ImagePatch> {
    if qubits < 2 {
        return Err(Error::InvalidArgument(
            "qubit budget must be at least 2".into(),
        ));
    }
    let capacity = 1usize << qubits;
    if 6 * patch.width() * patch.height() <= capacity {
        return Ok(patch.clone());
    }
    let mut side = ((capacity as f64) / 6.0).sqrt().floor() as usize;
    while 6 * side * side > capacity {
        side -= 1;
    }
    while 6 * (side + 1) * (side + 1) <= capacity {
        side += 1;
    }
    if side == 0 {
        return Err(Error::Capacity {
            needed: 6,
            available: capacity,
        });
    }
    resize(patch, side, side)
}
