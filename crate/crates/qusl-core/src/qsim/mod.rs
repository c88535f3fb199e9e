//! Dense state-vector simulation over the gate set {RX, RY, RZ, H, CNOT},
//! single-qubit probability readout, Monte-Carlo Pauli noise and OpenQASM 2.0
//! import/export.
//!
//! Convention used everywhere: qubit 0 is the least-significant bit of the
//! amplitude index.

pub mod qasm;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::CircuitGenome;
use crate::triplet::EmbeddingVector;

/// One gate of the evolvable vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    Rx { target: usize, theta: f64 },
    Ry { target: usize, theta: f64 },
    Rz { target: usize, theta: f64 },
    H { target: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::H { target }
            | Gate::Cnot { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Gate::Rx { theta, .. } | Gate::Ry { theta, .. } | Gate::Rz { theta, .. } => {
                Some(theta)
            }
            _ => None,
        }
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// Qubits the gate acts on, in ascending order.
    pub fn touched(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Cnot { control, target } => {
                (control.min(target), Some(control.max(target)))
            }
            _ => (self.target(), None),
        }
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q >= qubits {
                Err(Error::QubitOutOfRange { qubit: q, qubits })
            } else {
                Ok(())
            }
        };
        check(self.target())?;
        if let Gate::Cnot { control, target } = *self {
            check(control)?;
            if control == target {
                return Err(Error::InvalidArgument(
                    "cnot control and target must differ".into(),
                ));
            }
        }
        if let Some(theta) = self.theta() {
            if !theta.is_finite() {
                return Err(Error::InvalidArgument("rotation angle must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Per-gate Monte-Carlo noise probabilities. After every gate, each touched
/// qubit independently suffers at most one of: bit flip (X), phase flip (Z),
/// or a depolarizing event that replaces its state with a uniformly random
/// Pauli frame (uniform over {I, X, Y, Z}, i.e. the maximally-mixed
/// replacement channel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub p_bitflip: f64,
    pub p_phaseflip: f64,
    pub p_depolarizing: f64,
}

impl NoiseConfig {
    pub fn new(p_bitflip: f64, p_phaseflip: f64, p_depolarizing: f64) -> Result<Self> {
        let cfg = Self {
            p_bitflip,
            p_phaseflip,
            p_depolarizing,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Equal split of a total composite degree across the three channels.
    pub fn composite(total: f64) -> Result<Self> {
        Self::new(total / 3.0, total / 3.0, total / 3.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_bitflip", self.p_bitflip),
            ("p_phaseflip", self.p_phaseflip),
            ("p_depolarizing", self.p_depolarizing),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        let sum = self.p_bitflip + self.p_phaseflip + self.p_depolarizing;
        if sum > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "noise probabilities sum to {sum} > 1"
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.p_bitflip == 0.0 && self.p_phaseflip == 0.0 && self.p_depolarizing == 0.0
    }
}

/// Shot budget for finite-shot readout experiments.
pub const DEFAULT_SHOTS: usize = 500;

/// 2D point of single-qubit |1> probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Dense complex state of `qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state |0...0>.
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << qubits];
        amps[0] = Complex64::ONE;
        Self { qubits, amps }
    }

    /// Initialize directly from an amplitude embedding.
    pub fn from_embedding(embedding: &EmbeddingVector) -> Self {
        Self {
            qubits: embedding.qubits(),
            amps: embedding
                .amplitudes()
                .iter()
                .map(|&re| Complex64::new(re, 0.0))
                .collect(),
        }
    }

    pub fn from_amplitudes(qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << qubits {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for {qubits} qubits",
                amps.len()
            )));
        }
        Ok(Self { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Apply a single unitary gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.qubits)?;
        match *gate {
            Gate::Rx { target, theta } => {
                let half = theta / 2.0;
                let (c, s) = (half.cos(), half.sin());
                self.apply_single(
                    target,
                    [
                        Complex64::new(c, 0.0),
                        Complex64::new(0.0, -s),
                        Complex64::new(0.0, -s),
                        Complex64::new(c, 0.0),
                    ],
                );
            }
            Gate::Ry { target, theta } => {
                let half = theta / 2.0;
                let (c, s) = (half.cos(), half.sin());
                self.apply_single(
                    target,
                    [
                        Complex64::new(c, 0.0),
                        Complex64::new(-s, 0.0),
                        Complex64::new(s, 0.0),
                        Complex64::new(c, 0.0),
                    ],
                );
            }
            Gate::Rz { target, theta } => {
                let half = theta / 2.0;
                let phase0 = Complex64::new(half.cos(), -half.sin());
                let phase1 = Complex64::new(half.cos(), half.sin());
                let step = 1usize << target;
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if i & step == 0 { phase0 } else { phase1 };
                }
            }
            Gate::H { target } => {
                let f = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_single(
                    target,
                    [
                        Complex64::new(f, 0.0),
                        Complex64::new(f, 0.0),
                        Complex64::new(f, 0.0),
                        Complex64::new(-f, 0.0),
                    ],
                );
            }
            Gate::Cnot { control, target } => {
                let cbit = 1usize << control;
                let tbit = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
        }
        Ok(())
    }

    /// 2x2 matrix action on `target`; matrix rows are [m00 m01; m10 m11].
    fn apply_single(&mut self, target: usize, m: [Complex64; 4]) {
        let step = 1usize << target;
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for low in base..base + step {
                let i0 = low;
                let i1 = low | step;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = m[0] * a0 + m[1] * a1;
                self.amps[i1] = m[2] * a0 + m[3] * a1;
            }
            base += step << 1;
        }
    }

    /// Apply a Pauli operator to one qubit (used by the noise channels).
    pub fn apply_pauli(&mut self, pauli: Pauli, qubit: usize) {
        let step = 1usize << qubit;
        match pauli {
            Pauli::X => {
                let len = self.amps.len();
                let mut base = 0;
                while base < len {
                    for low in base..base + step {
                        self.amps.swap(low, low | step);
                    }
                    base += step << 1;
                }
            }
            Pauli::Y => {
                let i = Complex64::new(0.0, 1.0);
                let len = self.amps.len();
                let mut base = 0;
                while base < len {
                    for low in base..base + step {
                        let a0 = self.amps[low];
                        let a1 = self.amps[low | step];
                        self.amps[low] = -i * a1;
                        self.amps[low | step] = i * a0;
                    }
                    base += step << 1;
                }
            }
            Pauli::Z => {
                for (idx, amp) in self.amps.iter_mut().enumerate() {
                    if idx & step != 0 {
                        *amp = -*amp;
                    }
                }
            }
        }
    }

    /// Marginal probability of reading |1> on `qubit`.
    pub fn qubit_one_probability(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                qubits: self.qubits,
            });
        }
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projection points from qubits (0,1) and (2,3).
    pub fn projection_points(&self) -> Result<(ProjectionPoint, ProjectionPoint)> {
        if self.qubits < 4 {
            return Err(Error::Capacity {
                needed: 4,
                available: self.qubits,
            });
        }
        Ok((
            ProjectionPoint {
                x: self.qubit_one_probability(0)?,
                y: self.qubit_one_probability(1)?,
            },
            ProjectionPoint {
                x: self.qubit_one_probability(2)?,
                y: self.qubit_one_probability(3)?,
            },
        ))
    }

    /// Finite-shot estimate of P(|1>) on one qubit. Training always uses the
    /// exact amplitudes; this mode exists for hardware-realism experiments
    /// (see [`DEFAULT_SHOTS`]).
    pub fn sampled_one_probability(
        &self,
        qubit: usize,
        shots: usize,
        rng: &mut impl Rng,
    ) -> Result<f64> {
        let exact = self.qubit_one_probability(qubit)?;
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        let ones = (0..shots).filter(|_| rng.random::<f64>() < exact).count();
        Ok(ones as f64 / shots as f64)
    }
}

fn apply_noise_to_qubit(
    state: &mut StateVector,
    noise: &NoiseConfig,
    qubit: usize,
    rng: &mut impl Rng,
) {
    let u: f64 = rng.random();
    if u < noise.p_bitflip {
        state.apply_pauli(Pauli::X, qubit);
    } else if u < noise.p_bitflip + noise.p_phaseflip {
        state.apply_pauli(Pauli::Z, qubit);
    } else if u < noise.p_bitflip + noise.p_phaseflip + noise.p_depolarizing {
        // Maximally-mixed replacement: uniform Pauli frame including identity,
        // so the trajectory average contracts expectations by exactly (1 - p).
        match rng.random_range(0..4u8) {
            0 => {}
            1 => state.apply_pauli(Pauli::X, qubit),
            2 => state.apply_pauli(Pauli::Y, qubit),
            _ => state.apply_pauli(Pauli::Z, qubit),
        }
    }
}

/// Run one circuit trajectory: gates in genome order, optionally followed by
/// per-qubit Monte-Carlo noise after each gate (ascending qubit order).
pub fn run_circuit(
    genome: &CircuitGenome,
    input: &EmbeddingVector,
    noise: Option<&NoiseConfig>,
    rng: &mut impl Rng,
) -> Result<StateVector> {
    if genome.qubits() != input.qubits() {
        return Err(Error::ShapeMismatch(format!(
            "genome has {} qubits, embedding has {}",
            genome.qubits(),
            input.qubits()
        )));
    }
    let mut state = StateVector::from_embedding(input);
    for gate in genome.gates() {
        state.apply_gate(gate)?;
        if let Some(noise) = noise {
            let (first, second) = gate.touched();
            apply_noise_to_qubit(&mut state, noise, first, rng);
            if let Some(second) = second {
                apply_noise_to_qubit(&mut state, noise, second, rng);
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{random_genome, CircuitGenome, VariationConfig};
    use crate::triplet::embed;

    const EPS: f64 = 1e-12;

    fn random_circuit(qubits: usize, gates: usize, rng: &mut impl Rng) -> CircuitGenome {
        let cfg = VariationConfig {
            min_init_gates: gates,
            max_init_gates: gates,
            max_gates: gates.max(1),
            ..VariationConfig::default()
        };
        random_genome(qubits, &cfg, rng)
    }

    fn assert_close(a: Complex64, b: Complex64) {
        assert!((a - b).norm() < EPS, "{a} != {b}");
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::H { target: 0 }).unwrap();
        let f = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(s.amplitudes()[0], Complex64::new(f, 0.0));
        assert_close(s.amplitudes()[1], Complex64::new(f, 0.0));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |01>: qubit 0 (control) is set.
        let amps = vec![
            Complex64::ZERO,
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ZERO,
        ];
        let mut s = StateVector::from_amplitudes(2, amps).unwrap();
        s.apply_gate(&Gate::Cnot {
            control: 0,
            target: 1,
        })
        .unwrap();
        assert_close(s.amplitudes()[3], Complex64::ONE);
        assert_close(s.amplitudes()[1], Complex64::ZERO);
    }

    #[test]
    fn rx_pi_on_zero() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::Rx {
            target: 0,
            theta: std::f64::consts::PI,
        })
        .unwrap();
        assert_close(s.amplitudes()[0], Complex64::ZERO);
        assert_close(s.amplitudes()[1], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn one_probability_basics() {
        let s = StateVector::zero(3);
        assert_eq!(s.qubit_one_probability(0).unwrap(), 0.0);
        assert_eq!(s.qubit_one_probability(2).unwrap(), 0.0);

        let mut s = StateVector::zero(3);
        s.apply_gate(&Gate::H { target: 0 }).unwrap();
        assert!((s.qubit_one_probability(0).unwrap() - 0.5).abs() < EPS);
        assert!(s.qubit_one_probability(1).unwrap() < EPS);
        assert!(s.qubit_one_probability(3).is_err());
    }

    #[test]
    fn one_probability_matches_enumeration() {
        let mut rng = crate::rng::derive(21, &[]);
        let genome = random_circuit(4, 24, &mut rng);
        let input = embed(&[1.0; 16], 4).unwrap();
        let state = run_circuit(&genome, &input, None, &mut rng).unwrap();

        for qubit in 0..4 {
            let brute: f64 = (0..16usize)
                .filter(|i| (i >> qubit) & 1 == 1)
                .map(|i| state.amplitudes()[i].norm_sqr())
                .sum();
            let got = state.qubit_one_probability(qubit).unwrap();
            assert!((got - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_points_basics() {
        let s = StateVector::zero(5);
        let (a, b) = s.projection_points().unwrap();
        assert_eq!((a.x, a.y, b.x, b.y), (0.0, 0.0, 0.0, 0.0));

        let mut s = StateVector::zero(4);
        for q in 0..4 {
            s.apply_gate(&Gate::H { target: q }).unwrap();
        }
        let (a, b) = s.projection_points().unwrap();
        for v in [a.x, a.y, b.x, b.y] {
            assert!((v - 0.5).abs() < EPS);
        }

        assert!(StateVector::zero(3).projection_points().is_err());
    }

    #[test]
    fn empty_genome_is_identity() {
        let genome = CircuitGenome::new(3, vec![]).unwrap();
        let input = embed(&[1.0, 2.0, 3.0], 3).unwrap();
        let mut rng = crate::rng::derive(22, &[]);
        let out = run_circuit(&genome, &input, None, &mut rng).unwrap();
        for (a, e) in out.amplitudes().iter().zip(input.amplitudes()) {
            assert_close(*a, Complex64::new(*e, 0.0));
        }
    }

    #[test]
    fn noiseless_run_preserves_norm() {
        let mut rng = crate::rng::derive(23, &[]);
        let genome = random_circuit(5, 120, &mut rng);
        let input = embed(&[0.25; 32], 5).unwrap();
        let out = run_circuit(&genome, &input, None, &mut rng).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rz_gates_commute() {
        let mut rng = crate::rng::derive(24, &[]);
        let input = embed(&[1.0, -2.0, 0.5, 3.0], 2).unwrap();
        let g1 = Gate::Rz {
            target: 0,
            theta: 0.7,
        };
        let g2 = Gate::Rz {
            target: 0,
            theta: -1.9,
        };
        let a = run_circuit(
            &CircuitGenome::new(2, vec![g1, g2]).unwrap(),
            &input,
            None,
            &mut rng,
        )
        .unwrap();
        let b = run_circuit(
            &CircuitGenome::new(2, vec![g2, g1]).unwrap(),
            &input,
            None,
            &mut rng,
        )
        .unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_is_bit_identical_to_noiseless() {
        let mut rng = crate::rng::derive(25, &[]);
        let genome = random_circuit(4, 40, &mut rng);
        let input = embed(&[1.0; 10], 4).unwrap();
        let silent = NoiseConfig::new(0.0, 0.0, 0.0).unwrap();

        let mut rng_a = crate::rng::derive(99, &[]);
        let mut rng_b = crate::rng::derive(99, &[]);
        let a = run_circuit(&genome, &input, None, &mut rng_a).unwrap();
        let b = run_circuit(&genome, &input, Some(&silent), &mut rng_b).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn noise_config_validation() {
        assert!(NoiseConfig::new(0.5, 0.4, 0.2).is_err());
        assert!(NoiseConfig::new(-0.1, 0.0, 0.0).is_err());
        assert!(NoiseConfig::new(0.015, 0.015, 0.015).is_ok());
        assert!(NoiseConfig::composite(0.045).unwrap().p_bitflip - 0.015 < EPS);
    }

    #[test]
    fn cnot_validation_rejects_self_loop() {
        assert!(Gate::Cnot {
            control: 1,
            target: 1
        }
        .validate(3)
        .is_err());
        assert!(Gate::H { target: 5 }.validate(3).is_err());
    }

    #[test]
    fn sampled_probability_converges() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::H { target: 0 }).unwrap();
        let mut rng = crate::rng::derive(26, &[]);
        let est = s.sampled_one_probability(0, 20_000, &mut rng).unwrap();
        assert!((est - 0.5).abs() < 0.02);
    }
}
