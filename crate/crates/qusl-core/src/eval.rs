//! Model evaluation: the two-mapping similarity score, Spearman rank
//! correlation against the classical Euclidean reference, a ladder-template
//! baseline circuit, and full similarity reports.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{CircuitGenome, VariationConfig};
use crate::image::{
    euclidean_distance_hist, euclidean_distance_pixels, histogram, ImagePatch,
};
use crate::qsim::{run_circuit, Gate, NoiseConfig};
use crate::rng::{derive, stage};
use crate::triplet::{embed, interweave};

/// How the four projection points of the two mappings are paired into a score.
///
/// With mapping 1 embedding interweave(img1, img2) and mapping 2 embedding
/// interweave(img2, img1), each run yields a first-slot point (qubits 0,1)
/// and a second-slot point (qubits 2,3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SsimMatching {
    /// Pair points by slot: first(1) vs first(2) plus second(1) vs second(2).
    #[default]
    Role,
    /// Pair points by image, which crosses slots after the swap; equal images
    /// make the image assignment ambiguous, so the cheaper consistent pairing
    /// counts.
    Identity,
}

/// Which classical distance the correlation is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DistanceMode {
    Histogram { bins_per_channel: usize },
    Pixels,
}

impl Default for DistanceMode {
    fn default() -> Self {
        DistanceMode::Histogram {
            bins_per_channel: 16,
        }
    }
}

/// Swap-consistency similarity score; 0 means maximal similarity.
pub fn similarity_score(
    genome: &CircuitGenome,
    img1: &ImagePatch,
    img2: &ImagePatch,
    matching: SsimMatching,
    noise: Option<&NoiseConfig>,
    rng: &mut impl Rng,
) -> Result<f64> {
    let qubits = genome.qubits();
    let state1 = run_circuit(genome, &embed(&interweave(img1, img2)?, qubits)?, noise, rng)?;
    let state2 = run_circuit(genome, &embed(&interweave(img2, img1)?, qubits)?, noise, rng)?;
    let (a1, p1) = state1.projection_points()?;
    let (a2, p2) = state2.projection_points()?;

    let slotwise = (a1.x - a2.x).abs() + (a1.y - a2.y).abs() + (p1.x - p2.x).abs()
        + (p1.y - p2.y).abs();
    Ok(match matching {
        SsimMatching::Role => slotwise,
        SsimMatching::Identity => {
            let crossed = (a1.x - p2.x).abs() + (a1.y - p2.y).abs() + (p1.x - a2.x).abs()
                + (p1.y - a2.y).abs();
            crossed.min(slotwise)
        }
    })
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!(
            "series lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "spearman needs at least 2 observations".into(),
        ));
    }
    for (name, series) in [("xs", xs), ("ys", ys)] {
        if series.windows(2).all(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "{name} is constant; rank correlation is undefined"
            )));
        }
    }

    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    Ok(pearson(&rx, &ry))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // 1-based positions start+1 ..= end share the average rank.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// One scored pair of a similarity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: usize,
    pub b: usize,
    pub s_sim: f64,
    pub ed: f64,
}

/// Paired (S_sim, Euclidean distance) series plus their rank correlation;
/// `rho` is None when either series is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub n_pairs: usize,
    pub distance_mode: DistanceMode,
    pub matching: SsimMatching,
    pub rho: Option<f64>,
    pub pairs: Vec<PairScore>,
}

impl SimilarityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Two-column CSV (ed, s_sim) for scatter plots.
    pub fn to_scatter_csv(&self) -> String {
        let mut out = String::from("ed,s_sim\n");
        for pair in &self.pairs {
            out.push_str(&format!("{},{}\n", pair.ed, pair.s_sim));
        }
        out
    }
}

/// Score `n_pairs` random distinct index pairs and correlate the quantum
/// similarity against the configured classical distance.
pub fn evaluate_model(
    genome: &CircuitGenome,
    dataset: &[ImagePatch],
    n_pairs: usize,
    distance_mode: DistanceMode,
    matching: SsimMatching,
    noise: Option<&NoiseConfig>,
    rng: &mut impl Rng,
) -> Result<SimilarityReport> {
    if dataset.len() < 2 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least 2 patches".into(),
        ));
    }
    if n_pairs < 2 {
        return Err(Error::InvalidArgument("n_pairs must be >= 2".into()));
    }

    let histograms = match distance_mode {
        DistanceMode::Histogram { bins_per_channel } => Some(
            dataset
                .iter()
                .map(|p| histogram(p, bins_per_channel))
                .collect::<Result<Vec<_>>>()?,
        ),
        DistanceMode::Pixels => None,
    };

    // Pair sampling stays on the caller's stream; per-pair noise trajectories
    // run on derived streams so parallel evaluation is deterministic.
    let noise_base: u64 = rng.random();
    let index_pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| {
            let a = rng.random_range(0..dataset.len());
            let mut b = rng.random_range(0..dataset.len() - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect();

    let pairs: Vec<PairScore> = index_pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mut pair_rng = derive(noise_base, &[stage::PAIR_EVAL, k as u64]);
            let s_sim = similarity_score(
                genome,
                &dataset[a],
                &dataset[b],
                matching,
                noise,
                &mut pair_rng,
            )?;
            let ed = match &histograms {
                Some(h) => euclidean_distance_hist(&h[a], &h[b])?,
                None => euclidean_distance_pixels(&dataset[a], &dataset[b])?,
            };
            Ok(PairScore { a, b, s_sim, ed })
        })
        .collect::<Result<_>>()?;

    let s_series: Vec<f64> = pairs.iter().map(|p| p.s_sim).collect();
    let e_series: Vec<f64> = pairs.iter().map(|p| p.ed).collect();
    let constant = |series: &[f64]| series.windows(2).all(|w| w[0] == w[1]);
    let rho = if constant(&s_series) || constant(&e_series) {
        None
    } else {
        Some(spearman(&s_series, &e_series)?)
    };

    Ok(SimilarityReport {
        n_pairs,
        distance_mode,
        matching,
        rho,
        pairs,
    })
}

/// Ladder-template baseline: per layer, RX/RY/RZ with random angles on every
/// qubit followed by a CNOT ladder (i -> i+1). CNOT count is layers * (q-1).
pub fn baseline_template(qubits: usize, layers: usize, rng: &mut impl Rng) -> Result<CircuitGenome> {
    if qubits < 2 {
        return Err(Error::InvalidArgument(
            "baseline template needs at least 2 qubits".into(),
        ));
    }
    if layers == 0 {
        return Err(Error::InvalidArgument("layers must be >= 1".into()));
    }
    let mut gates = Vec::with_capacity(layers * (4 * qubits - 1));
    for _ in 0..layers {
        for q in 0..qubits {
            gates.push(Gate::Rx {
                target: q,
                theta: rng.random_range(0.0..std::f64::consts::TAU),
            });
            gates.push(Gate::Ry {
                target: q,
                theta: rng.random_range(0.0..std::f64::consts::TAU),
            });
            gates.push(Gate::Rz {
                target: q,
                theta: rng.random_range(0.0..std::f64::consts::TAU),
            });
        }
        for q in 0..qubits - 1 {
            gates.push(Gate::Cnot {
                control: q,
                target: q + 1,
            });
        }
    }
    CircuitGenome::new(qubits, gates)
}

/// Random genome of an exact gate count, for like-for-like baselines.
pub fn random_genome_with_count(
    qubits: usize,
    gate_count: usize,
    rng: &mut impl Rng,
) -> CircuitGenome {
    let cfg = VariationConfig {
        min_init_gates: gate_count,
        max_init_gates: gate_count,
        max_gates: gate_count.max(1),
        ..VariationConfig::default()
    };
    crate::genome::random_genome(qubits, &cfg, rng)
}
