//! Shared helpers for integration tests: an independent dense-matrix
//! simulator oracle and the synthetic structured dataset.

// Each test binary compiles this module separately and uses a subset.
#![allow(dead_code)]

use num_complex::Complex64;
use qusl_core::genome::CircuitGenome;
use qusl_core::image::ImagePatch;
use qusl_core::qsim::Gate;
use qusl_core::rng::derive;
use rand::Rng;

pub type CMat = Vec<Vec<Complex64>>;

pub fn eye(n: usize) -> CMat {
    let mut m = vec![vec![Complex64::ZERO; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::ONE;
    }
    m
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![Complex64::ZERO; ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn single_qubit_matrix(gate: &Gate) -> CMat {
    let i = Complex64::new(0.0, 1.0);
    let r = |re: f64| Complex64::new(re, 0.0);
    match *gate {
        Gate::Rx { theta, .. } => {
            let h = theta / 2.0;
            vec![
                vec![r(h.cos()), -i * h.sin()],
                vec![-i * h.sin(), r(h.cos())],
            ]
        }
        Gate::Ry { theta, .. } => {
            let h = theta / 2.0;
            vec![vec![r(h.cos()), r(-h.sin())], vec![r(h.sin()), r(h.cos())]]
        }
        Gate::Rz { theta, .. } => {
            let h = theta / 2.0;
            vec![
                vec![(-i * h).exp(), r(0.0)],
                vec![r(0.0), (i * h).exp()],
            ]
        }
        Gate::H { .. } => {
            let f = r(std::f64::consts::FRAC_1_SQRT_2);
            vec![vec![f, f], vec![f, -f]]
        }
        Gate::Cnot { .. } => unreachable!("cnot is built as a permutation"),
    }
}

/// Full 2^q x 2^q matrix of one gate, qubit 0 = least-significant index bit.
#[allow(clippy::needless_range_loop)]
pub fn gate_matrix(gate: &Gate, qubits: usize) -> CMat {
    match *gate {
        Gate::Cnot { control, target } => {
            let dim = 1 << qubits;
            let mut m = vec![vec![Complex64::ZERO; dim]; dim];
            for col in 0..dim {
                let row = if col & (1 << control) != 0 {
                    col ^ (1 << target)
                } else {
                    col
                };
                m[row][col] = Complex64::ONE;
            }
            m
        }
        _ => {
            let t = gate.target();
            let u = single_qubit_matrix(gate);
            kron(&eye(1 << (qubits - 1 - t)), &kron(&u, &eye(1 << t)))
        }
    }
}

pub fn matvec(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Independent circuit execution through dense matrix products.
pub fn oracle_run(genome: &CircuitGenome, input: &[Complex64]) -> Vec<Complex64> {
    let mut state = input.to_vec();
    for gate in genome.gates() {
        state = matvec(&gate_matrix(gate, genome.qubits()), &state);
    }
    state
}

/// Structured synthetic dataset: patch k is 127 + scale * w_c(k) * base(i, j)
/// plus a little texture noise, where `base` is a fixed zero-mean unit-norm
/// plane and w(k) a unit vector of channel weights rotating with k. Every
/// patch carries the same raw energy, so similarity lives in the channel-mix
/// pattern rather than in brightness.
pub fn synthetic_dataset(count: usize, side: usize, seed: u64) -> Vec<ImagePatch> {
    const TAU: f64 = std::f64::consts::TAU;
    let mut rng = derive(seed, &[2000]);
    let n = side * side;

    let mut base: Vec<f64> = (0..n)
        .map(|idx| {
            let (i, j) = (idx / side, idx % side);
            (TAU * (i as f64 + 2.0 * j as f64) / side as f64).cos()
                + 0.6 * ((i + j) as f64 / (2 * side - 2) as f64 - 0.5)
        })
        .collect();
    let mean = base.iter().sum::<f64>() / n as f64;
    for v in base.iter_mut() {
        *v -= mean;
    }
    let norm = base.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in base.iter_mut() {
        *v /= norm;
    }
    let max_abs = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = 100.0 / max_abs;

    (0..count)
        .map(|k| {
            let tau = std::f64::consts::PI * k as f64 / count as f64;
            let w = [tau.cos(), tau.sin() * 0.8, tau.sin() * 0.6];
            let mut pixels = Vec::with_capacity(3 * n);
            for &wc in &w {
                for cell in &base {
                    let noise: f64 = rng.random_range(-2.0..2.0);
                    pixels.push((127.0 + scale * wc * cell + noise).clamp(0.0, 255.0));
                }
            }
            ImagePatch::new(side, side, pixels).unwrap()
        })
        .collect()
}

pub fn random_patch(rng: &mut impl Rng, side: usize) -> ImagePatch {
    let pixels = (0..3 * side * side)
        .map(|_| rng.random_range(0.0..=255.0))
        .collect();
    ImagePatch::new(side, side, pixels).unwrap()
}
