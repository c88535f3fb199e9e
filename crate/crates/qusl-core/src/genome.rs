//! Evolvable circuit genomes: random initialization, mutation, crossover,
//! resource metrics (depth, CNOT count), structural distance and motif scans.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::Gate;

const TAU: f64 = 2.0 * PI;

/// Ordered gate list over a fixed qubit register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGenome", into = "RawGenome")]
pub struct CircuitGenome {
    qubits: usize,
    gates: Vec<Gate>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawGenome {
    qubits: usize,
    gates: Vec<Gate>,
}

impl TryFrom<RawGenome> for CircuitGenome {
    type Error = Error;

    fn try_from(raw: RawGenome) -> Result<Self> {
        CircuitGenome::new(raw.qubits, raw.gates)
    }
}

impl From<CircuitGenome> for RawGenome {
    fn from(genome: CircuitGenome) -> Self {
        RawGenome {
            qubits: genome.qubits,
            gates: genome.gates,
        }
    }
}

impl CircuitGenome {
    pub fn new(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidArgument("qubit count must be positive".into()));
        }
        for gate in &gates {
            gate.validate(qubits)?;
        }
        Ok(Self { qubits, gates })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Probabilities and bounds for the variation operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationConfig {
    pub p_add: f64,
    pub p_remove: f64,
    pub p_kind_change: f64,
    pub p_rewire: f64,
    pub p_angle_jitter: f64,
    pub angle_jitter_sigma: f64,
    pub min_init_gates: usize,
    pub max_init_gates: usize,
    pub max_gates: usize,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            p_add: 0.30,
            p_remove: 0.30,
            p_kind_change: 0.15,
            p_rewire: 0.15,
            p_angle_jitter: 0.5,
            angle_jitter_sigma: 0.2,
            min_init_gates: 10,
            max_init_gates: 40,
            max_gates: 80,
        }
    }
}

impl VariationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_add", self.p_add),
            ("p_remove", self.p_remove),
            ("p_kind_change", self.p_kind_change),
            ("p_rewire", self.p_rewire),
            ("p_angle_jitter", self.p_angle_jitter),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.angle_jitter_sigma < 0.0 || !self.angle_jitter_sigma.is_finite() {
            return Err(Error::InvalidArgument(
                "angle_jitter_sigma must be finite and >= 0".into(),
            ));
        }
        if self.min_init_gates > self.max_init_gates || self.max_init_gates > self.max_gates {
            return Err(Error::InvalidArgument(
                "need min_init_gates <= max_init_gates <= max_gates".into(),
            ));
        }
        Ok(())
    }
}

fn random_gate(qubits: usize, rng: &mut impl Rng) -> Gate {
    let kind = rng.random_range(0..5u8);
    let target = rng.random_range(0..qubits);
    match kind {
        0 => Gate::Rx {
            target,
            theta: rng.random_range(0.0..TAU),
        },
        1 => Gate::Ry {
            target,
            theta: rng.random_range(0.0..TAU),
        },
        2 => Gate::Rz {
            target,
            theta: rng.random_range(0.0..TAU),
        },
        3 => Gate::H { target },
        _ => {
            let mut control = rng.random_range(0..qubits - 1);
            if control >= target {
                control += 1;
            }
            Gate::Cnot { control, target }
        }
    }
}

/// Uniformly random genome: gate count uniform in the init range, kinds
/// uniform over the five-gate vocabulary, angles uniform in [0, 2*pi).
pub fn random_genome(qubits: usize, cfg: &VariationConfig, rng: &mut impl Rng) -> CircuitGenome {
    assert!(qubits >= 2, "genomes need at least 2 qubits for CNOT");
    let count = rng.random_range(cfg.min_init_gates..=cfg.max_init_gates);
    let gates = (0..count).map(|_| random_gate(qubits, rng)).collect();
    CircuitGenome {
        qubits,
        gates,
    }
}

/// Apply the independent variation operators: insertion, deletion, kind
/// change, rewire, and per-gate Gaussian angle jitter.
pub fn mutate(genome: &CircuitGenome, cfg: &VariationConfig, rng: &mut impl Rng) -> CircuitGenome {
    let qubits = genome.qubits;
    let mut gates = genome.gates.clone();

    if rng.random::<f64>() < cfg.p_add && gates.len() < cfg.max_gates {
        let pos = rng.random_range(0..=gates.len());
        gates.insert(pos, random_gate(qubits, rng));
    }
    if rng.random::<f64>() < cfg.p_remove && !gates.is_empty() {
        let pos = rng.random_range(0..gates.len());
        gates.remove(pos);
    }
    if rng.random::<f64>() < cfg.p_kind_change && !gates.is_empty() {
        let pos = rng.random_range(0..gates.len());
        let target = gates[pos].target();
        gates[pos] = loop {
            let candidate = random_gate_with_target(qubits, target, rng);
            if std::mem::discriminant(&candidate) != std::mem::discriminant(&gates[pos]) {
                break candidate;
            }
        };
    }
    if rng.random::<f64>() < cfg.p_rewire && !gates.is_empty() {
        let pos = rng.random_range(0..gates.len());
        let target = rng.random_range(0..qubits);
        gates[pos] = match gates[pos] {
            Gate::Rx { theta, .. } => Gate::Rx { target, theta },
            Gate::Ry { theta, .. } => Gate::Ry { target, theta },
            Gate::Rz { theta, .. } => Gate::Rz { target, theta },
            Gate::H { .. } => Gate::H { target },
            Gate::Cnot { .. } => {
                let mut control = rng.random_range(0..qubits - 1);
                if control >= target {
                    control += 1;
                }
                Gate::Cnot { control, target }
            }
        };
    }
    if cfg.p_angle_jitter > 0.0 && cfg.angle_jitter_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.angle_jitter_sigma).expect("validated sigma");
        for gate in gates.iter_mut() {
            if rng.random::<f64>() < cfg.p_angle_jitter {
                match gate {
                    Gate::Rx { theta, .. } | Gate::Ry { theta, .. } | Gate::Rz { theta, .. } => {
                        *theta += normal.sample(rng);
                    }
                    _ => {}
                }
            }
        }
    }

    CircuitGenome { qubits, gates }
}

fn random_gate_with_target(qubits: usize, target: usize, rng: &mut impl Rng) -> Gate {
    let kind = rng.random_range(0..5u8);
    match kind {
        0 => Gate::Rx {
            target,
            theta: rng.random_range(0.0..TAU),
        },
        1 => Gate::Ry {
            target,
            theta: rng.random_range(0.0..TAU),
        },
        2 => Gate::Rz {
            target,
            theta: rng.random_range(0.0..TAU),
        },
        3 => Gate::H { target },
        _ => {
            let mut control = rng.random_range(0..qubits - 1);
            if control >= target {
                control += 1;
            }
            Gate::Cnot { control, target }
        }
    }
}

/// Single-point crossover at explicit cut points; offspring are truncated to
/// `max_gates`.
pub fn crossover_at(
    a: &CircuitGenome,
    b: &CircuitGenome,
    cut_a: usize,
    cut_b: usize,
    max_gates: usize,
) -> Result<(CircuitGenome, CircuitGenome)> {
    if a.qubits != b.qubits {
        return Err(Error::ShapeMismatch(format!(
            "crossover needs equal qubit counts, got {} vs {}",
            a.qubits, b.qubits
        )));
    }
    let mut child1: Vec<Gate> = a.gates[..cut_a.min(a.gates.len())].to_vec();
    child1.extend_from_slice(&b.gates[cut_b.min(b.gates.len())..]);
    child1.truncate(max_gates);

    let mut child2: Vec<Gate> = b.gates[..cut_b.min(b.gates.len())].to_vec();
    child2.extend_from_slice(&a.gates[cut_a.min(a.gates.len())..]);
    child2.truncate(max_gates);

    Ok((
        CircuitGenome {
            qubits: a.qubits,
            gates: child1,
        },
        CircuitGenome {
            qubits: a.qubits,
            gates: child2,
        },
    ))
}

/// Single-point crossover with independently drawn cut points.
pub fn crossover(
    a: &CircuitGenome,
    b: &CircuitGenome,
    cfg: &VariationConfig,
    rng: &mut impl Rng,
) -> Result<(CircuitGenome, CircuitGenome)> {
    let cut_a = rng.random_range(0..=a.gates.len());
    let cut_b = rng.random_range(0..=b.gates.len());
    crossover_at(a, b, cut_a, cut_b, cfg.max_gates)
}

/// Circuit depth: number of moments under earliest-possible greedy scheduling,
/// where gates conflict iff they share a qubit (CNOT occupies both).
pub fn depth(genome: &CircuitGenome) -> usize {
    let mut busy_until = vec![0usize; genome.qubits];
    let mut depth = 0;
    for gate in &genome.gates {
        let (first, second) = gate.touched();
        let mut moment = busy_until[first];
        if let Some(second) = second {
            moment = moment.max(busy_until[second]);
        }
        let moment = moment + 1;
        busy_until[first] = moment;
        if let Some(second) = second {
            busy_until[second] = moment;
        }
        depth = depth.max(moment);
    }
    depth
}

/// Number of CNOT gates.
pub fn cnot_count(genome: &CircuitGenome) -> usize {
    genome.gates.iter().filter(|g| g.is_cnot()).count()
}

#[derive(PartialEq, Eq, Hash, Clone, Copy)]
struct GateToken {
    kind: u8,
    target: usize,
    control: usize,
    angle_bucket: u8,
}

fn token(gate: &Gate) -> GateToken {
    let (kind, angle) = match gate {
        Gate::Rx { theta, .. } => (0u8, Some(*theta)),
        Gate::Ry { theta, .. } => (1, Some(*theta)),
        Gate::Rz { theta, .. } => (2, Some(*theta)),
        Gate::H { .. } => (3, None),
        Gate::Cnot { .. } => (4, None),
    };
    // 16 buckets of width pi/8 over [0, 2*pi).
    let angle_bucket = angle
        .map(|t| (((t.rem_euclid(TAU)) / (PI / 8.0)) as usize).min(15) as u8)
        .unwrap_or(0);
    GateToken {
        kind,
        target: gate.target(),
        control: gate.control().unwrap_or(usize::MAX),
        angle_bucket,
    }
}

/// Normalized Levenshtein distance over gate tokens, in [0, 1]. Angles are
/// bucketed (pi/8 wide) so parametric jitter does not register as structure.
pub fn structural_distance(a: &CircuitGenome, b: &CircuitGenome) -> Result<f64> {
    if a.qubits != b.qubits {
        return Err(Error::ShapeMismatch(format!(
            "structural distance needs equal qubit counts, got {} vs {}",
            a.qubits, b.qubits
        )));
    }
    let ta: Vec<GateToken> = a.gates.iter().map(token).collect();
    let tb: Vec<GateToken> = b.gates.iter().map(token).collect();
    let longest = ta.len().max(tb.len());
    if longest == 0 {
        return Ok(0.0);
    }

    // Standard two-row Levenshtein DP.
    let mut prev: Vec<usize> = (0..=tb.len()).collect();
    let mut curr = vec![0usize; tb.len() + 1];
    for (i, x) in ta.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in tb.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[tb.len()] as f64 / longest as f64)
}

/// Scan for recurring structure: contiguous CNOT-RX-RY-RZ chains in each
/// qubit's gate subsequence, and per-qubit CNOT fan-in (distinct controls).
pub fn motif_report(genome: &CircuitGenome) -> BTreeMap<String, usize> {
    let mut report = BTreeMap::new();

    let mut chains = 0usize;
    for qubit in 0..genome.qubits {
        let kinds: Vec<u8> = genome
            .gates
            .iter()
            .filter(|g| {
                let (first, second) = g.touched();
                first == qubit || second == Some(qubit)
            })
            .map(|g| match g {
                Gate::Cnot { .. } => 0u8,
                Gate::Rx { .. } => 1,
                Gate::Ry { .. } => 2,
                Gate::Rz { .. } => 3,
                Gate::H { .. } => 4,
            })
            .collect();
        chains += kinds.windows(4).filter(|w| w == &[0, 1, 2, 3]).count();
    }
    report.insert("chain_cnot_rx_ry_rz".to_string(), chains);

    for qubit in 0..genome.qubits {
        let mut controls: Vec<usize> = genome
            .gates
            .iter()
            .filter_map(|g| match *g {
                Gate::Cnot { control, target } if target == qubit => Some(control),
                _ => None,
            })
            .collect();
        controls.sort_unstable();
        controls.dedup();
        report.insert(format!("cnot_fanin_q{qubit:02}"), controls.len());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg_with_counts(min: usize, max: usize) -> VariationConfig {
        VariationConfig {
            min_init_gates: min,
            max_init_gates: max,
            ..VariationConfig::default()
        }
    }

    #[test]
    fn random_genome_empty_when_counts_zero() {
        let mut rng = crate::rng::derive(30, &[]);
        let g = random_genome(4, &cfg_with_counts(0, 0), &mut rng);
        assert_eq!(g.gate_count(), 0);
    }

    #[test]
    fn random_genome_kind_frequencies() {
        let mut rng = crate::rng::derive(31, &[]);
        let cfg = cfg_with_counts(25, 25);
        let mut counts = [0usize; 5];
        let mut total = 0usize;
        for _ in 0..10_000 {
            let g = random_genome(5, &cfg, &mut rng);
            for gate in g.gates() {
                let k = match gate {
                    Gate::Rx { .. } => 0,
                    Gate::Ry { .. } => 1,
                    Gate::Rz { .. } => 2,
                    Gate::H { .. } => 3,
                    Gate::Cnot { .. } => 4,
                };
                counts[k] += 1;
                total += 1;
            }
        }
        for &c in &counts {
            let freq = c as f64 / total as f64;
            assert!((freq - 0.2).abs() < 0.02, "kind frequency {freq}");
        }
    }

    #[test]
    fn random_genome_cnot_never_self_loops() {
        let mut rng = crate::rng::derive(32, &[]);
        let cfg = cfg_with_counts(5, 15);
        for _ in 0..10_000 {
            let g = random_genome(3, &cfg, &mut rng);
            for gate in g.gates() {
                if let Gate::Cnot { control, target } = gate {
                    assert_ne!(control, target);
                }
            }
        }
    }

    #[test]
    fn mutate_all_probs_zero_is_identity() {
        let mut rng = crate::rng::derive(33, &[]);
        let g = random_genome(4, &cfg_with_counts(10, 20), &mut rng);
        let cfg = VariationConfig {
            p_add: 0.0,
            p_remove: 0.0,
            p_kind_change: 0.0,
            p_rewire: 0.0,
            p_angle_jitter: 0.0,
            ..VariationConfig::default()
        };
        assert_eq!(mutate(&g, &cfg, &mut rng), g);
    }

    #[test]
    fn mutate_remove_only_empties_single_gate_genome() {
        let g = CircuitGenome::new(2, vec![Gate::H { target: 0 }]).unwrap();
        let cfg = VariationConfig {
            p_add: 0.0,
            p_remove: 1.0,
            p_kind_change: 0.0,
            p_rewire: 0.0,
            p_angle_jitter: 0.0,
            ..VariationConfig::default()
        };
        let mut rng = crate::rng::derive(34, &[]);
        assert_eq!(mutate(&g, &cfg, &mut rng).gate_count(), 0);
    }

    #[test]
    fn mutate_jitter_statistics() {
        let g = CircuitGenome::new(
            2,
            vec![Gate::Rx {
                target: 0,
                theta: 1.0,
            }],
        )
        .unwrap();
        let cfg = VariationConfig {
            p_add: 0.0,
            p_remove: 0.0,
            p_kind_change: 0.0,
            p_rewire: 0.0,
            p_angle_jitter: 1.0,
            angle_jitter_sigma: 0.1,
            ..VariationConfig::default()
        };
        let mut rng = crate::rng::derive(35, &[]);
        let mut jitters = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let m = mutate(&g, &cfg, &mut rng);
            jitters.push(m.gates()[0].theta().unwrap() - 1.0);
        }
        let n = jitters.len() as f64;
        let mean = jitters.iter().sum::<f64>() / n;
        let var = jitters.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        assert!((var.sqrt() - 0.1).abs() < 0.01, "std {}", var.sqrt());
    }

    #[test]
    fn crossover_reconstruction_at_recorded_cuts() {
        let mut rng = crate::rng::derive(36, &[]);
        let cfg = cfg_with_counts(5, 30);
        for _ in 0..200 {
            let a = random_genome(4, &cfg, &mut rng);
            let b = random_genome(4, &cfg, &mut rng);
            let cut_a = rng.random_range(0..=a.gate_count());
            let cut_b = rng.random_range(0..=b.gate_count());
            let (c1, c2) = crossover_at(&a, &b, cut_a, cut_b, usize::MAX).unwrap();

            let mut expect1 = a.gates()[..cut_a].to_vec();
            expect1.extend_from_slice(&b.gates()[cut_b..]);
            assert_eq!(c1.gates(), &expect1[..]);

            let mut expect2 = b.gates()[..cut_b].to_vec();
            expect2.extend_from_slice(&a.gates()[cut_a..]);
            assert_eq!(c2.gates(), &expect2[..]);
        }
    }

    #[test]
    fn crossover_empty_parents() {
        let a = CircuitGenome::new(3, vec![]).unwrap();
        let b = CircuitGenome::new(3, vec![]).unwrap();
        let mut rng = crate::rng::derive(37, &[]);
        let (c1, c2) = crossover(&a, &b, &VariationConfig::default(), &mut rng).unwrap();
        assert_eq!(c1.gate_count(), 0);
        assert_eq!(c2.gate_count(), 0);
    }

    #[test]
    fn crossover_with_self_at_equal_cuts_is_identity() {
        let mut rng = crate::rng::derive(38, &[]);
        let g = random_genome(4, &cfg_with_counts(10, 10), &mut rng);
        for cut in 0..=g.gate_count() {
            let (c1, c2) = crossover_at(&g, &g, cut, cut, usize::MAX).unwrap();
            assert_eq!(c1, g);
            assert_eq!(c2, g);
        }
    }

    #[test]
    fn depth_hand_scheduled() {
        assert_eq!(depth(&CircuitGenome::new(2, vec![]).unwrap()), 0);
        let g = CircuitGenome::new(
            2,
            vec![
                Gate::H { target: 0 },
                Gate::H { target: 1 },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
        )
        .unwrap();
        assert_eq!(depth(&g), 2);
    }

    #[test]
    fn depth_serial_chain_equals_gate_count() {
        let gates: Vec<Gate> = (0..17)
            .map(|k| Gate::Rx {
                target: 0,
                theta: k as f64,
            })
            .collect();
        let g = CircuitGenome::new(3, gates).unwrap();
        assert_eq!(depth(&g), 17);
    }

    /// Longest-path oracle on the qubit-conflict DAG.
    #[allow(clippy::needless_range_loop)]
    fn depth_oracle(genome: &CircuitGenome) -> usize {
        let n = genome.gate_count();
        let mut longest = vec![0usize; n];
        let mut best = 0;
        for i in 0..n {
            let (fi, si) = genome.gates()[i].touched();
            let mut extent = 0;
            for j in 0..i {
                let (fj, sj) = genome.gates()[j].touched();
                let conflict = fi == fj
                    || Some(fi) == sj
                    || si == Some(fj)
                    || (si.is_some() && si == sj);
                if conflict {
                    extent = extent.max(longest[j]);
                }
            }
            longest[i] = extent + 1;
            best = best.max(longest[i]);
        }
        best
    }

    #[test]
    fn depth_matches_dag_longest_path() {
        let mut rng = crate::rng::derive(39, &[]);
        let cfg = cfg_with_counts(0, 60);
        for _ in 0..300 {
            let g = random_genome(6, &cfg, &mut rng);
            assert_eq!(depth(&g), depth_oracle(&g));
        }
    }

    #[test]
    fn cnot_count_basics() {
        assert_eq!(cnot_count(&CircuitGenome::new(2, vec![]).unwrap()), 0);
        let g = CircuitGenome::new(
            3,
            (0..5)
                .map(|_| Gate::Cnot {
                    control: 0,
                    target: 1,
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(cnot_count(&g), 5);
    }

    #[test]
    fn structural_distance_extremes() {
        let mut rng = crate::rng::derive(40, &[]);
        let g = random_genome(4, &cfg_with_counts(10, 10), &mut rng);
        assert_eq!(structural_distance(&g, &g).unwrap(), 0.0);

        let empty = CircuitGenome::new(4, vec![]).unwrap();
        assert_eq!(structural_distance(&empty, &g).unwrap(), 1.0);
        assert_eq!(structural_distance(&empty, &empty).unwrap(), 0.0);
    }

    #[test]
    fn structural_distance_single_substitution() {
        let mut rng = crate::rng::derive(41, &[]);
        let g = random_genome(4, &cfg_with_counts(10, 10), &mut rng);
        let mut gates = g.gates().to_vec();
        // Replace one gate with a token that cannot collide.
        gates[4] = Gate::Cnot {
            control: 3,
            target: 0,
        };
        let h = CircuitGenome::new(4, gates).unwrap();
        let d = structural_distance(&g, &h).unwrap();
        if g.gates()[4] != h.gates()[4] {
            assert!((d - 0.1).abs() < 1e-12, "distance {d}");
        }
    }

    fn levenshtein_oracle(a: &[GateToken], b: &[GateToken]) -> usize {
        fn rec(
            a: &[GateToken],
            b: &[GateToken],
            i: usize,
            j: usize,
            memo: &mut std::collections::HashMap<(usize, usize), usize>,
        ) -> usize {
            if i == a.len() {
                return b.len() - j;
            }
            if j == b.len() {
                return a.len() - i;
            }
            if let Some(&v) = memo.get(&(i, j)) {
                return v;
            }
            let sub = rec(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
            let del = rec(a, b, i + 1, j, memo) + 1;
            let ins = rec(a, b, i, j + 1, memo) + 1;
            let v = sub.min(del).min(ins);
            memo.insert((i, j), v);
            v
        }
        rec(a, b, 0, 0, &mut std::collections::HashMap::new())
    }

    #[test]
    fn structural_distance_matches_levenshtein_oracle() {
        let mut rng = crate::rng::derive(42, &[]);
        let cfg = cfg_with_counts(0, 14);
        for _ in 0..100 {
            let a = random_genome(3, &cfg, &mut rng);
            let b = random_genome(3, &cfg, &mut rng);
            let ta: Vec<GateToken> = a.gates().iter().map(token).collect();
            let tb: Vec<GateToken> = b.gates().iter().map(token).collect();
            let longest = ta.len().max(tb.len());
            let expected = if longest == 0 {
                0.0
            } else {
                levenshtein_oracle(&ta, &tb) as f64 / longest as f64
            };
            assert_eq!(structural_distance(&a, &b).unwrap(), expected);
        }
    }

    #[test]
    fn structural_distance_pseudometric() {
        let mut rng = crate::rng::derive(43, &[]);
        let cfg = cfg_with_counts(0, 20);
        for _ in 0..100 {
            let a = random_genome(3, &cfg, &mut rng);
            let b = random_genome(3, &cfg, &mut rng);
            let c = random_genome(3, &cfg, &mut rng);
            let ab = structural_distance(&a, &b).unwrap();
            let ba = structural_distance(&b, &a).unwrap();
            assert_eq!(ab, ba);
            let bc = structural_distance(&b, &c).unwrap();
            let ac = structural_distance(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn motif_chain_definition() {
        let empty = CircuitGenome::new(4, vec![]).unwrap();
        assert!(motif_report(&empty).values().all(|&v| v == 0));

        let g = CircuitGenome::new(
            2,
            vec![
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::Rx {
                    target: 1,
                    theta: 0.1,
                },
                Gate::Ry {
                    target: 1,
                    theta: 0.2,
                },
                Gate::Rz {
                    target: 1,
                    theta: 0.3,
                },
            ],
        )
        .unwrap();
        let report = motif_report(&g);
        assert_eq!(report["chain_cnot_rx_ry_rz"], 1);
        assert_eq!(report["cnot_fanin_q01"], 1);
        assert_eq!(report["cnot_fanin_q00"], 0);
    }

    #[test]
    fn motif_matches_brute_force_scan() {
        let mut rng = crate::rng::derive(44, &[]);
        let cfg = cfg_with_counts(0, 40);
        for _ in 0..100 {
            let g = random_genome(4, &cfg, &mut rng);
            let report = motif_report(&g);

            // Quadratic rescan of the chain count.
            let mut chains = 0usize;
            for qubit in 0..4 {
                let seq: Vec<&Gate> = g
                    .gates()
                    .iter()
                    .filter(|gate| {
                        gate.target() == qubit || gate.control() == Some(qubit)
                    })
                    .collect();
                for w in 0..seq.len().saturating_sub(3) {
                    if matches!(seq[w], Gate::Cnot { .. })
                        && matches!(seq[w + 1], Gate::Rx { .. })
                        && matches!(seq[w + 2], Gate::Ry { .. })
                        && matches!(seq[w + 3], Gate::Rz { .. })
                    {
                        chains += 1;
                    }
                }
            }
            assert_eq!(report["chain_cnot_rx_ry_rz"], chains);

            for qubit in 0..4 {
                let mut controls: Vec<usize> = g
                    .gates()
                    .iter()
                    .filter_map(|gate| match *gate {
                        Gate::Cnot { control, target } if target == qubit => Some(control),
                        _ => None,
                    })
                    .collect();
                controls.sort_unstable();
                controls.dedup();
                assert_eq!(report[&format!("cnot_fanin_q{qubit:02}")], controls.len());
            }
        }
    }

    #[test]
    fn genome_json_round_trip() {
        let mut rng = crate::rng::derive(45, &[]);
        let g = random_genome(5, &cfg_with_counts(8, 8), &mut rng);
        let text = g.to_json();
        let back = CircuitGenome::from_json(&text).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn genome_json_rejects_invalid() {
        let bad = r#"{"qubits": 2, "gates": [{"kind": "cnot", "control": 1, "target": 1}]}"#;
        assert!(CircuitGenome::from_json(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn variation_preserves_invariants(seed in 0u64..10_000) {
            let mut rng = crate::rng::derive(seed, &[77]);
            let cfg = VariationConfig { max_gates: 30, min_init_gates: 0, max_init_gates: 25, ..VariationConfig::default() };
            let a = random_genome(4, &cfg, &mut rng);
            let b = random_genome(4, &cfg, &mut rng);
            let m = mutate(&a, &cfg, &mut rng);
            prop_assert!(m.gate_count() <= cfg.max_gates);
            for gate in m.gates() {
                prop_assert!(gate.validate(4).is_ok());
            }
            let (c1, c2) = crossover(&a, &b, &cfg, &mut rng).unwrap();
            for child in [&c1, &c2] {
                prop_assert!(child.gate_count() <= cfg.max_gates);
                for gate in child.gates() {
                    prop_assert!(gate.validate(4).is_ok());
                }
            }
        }

        #[test]
        fn depth_bounded_by_gate_count(seed in 0u64..5_000) {
            let mut rng = crate::rng::derive(seed, &[78]);
            let cfg = VariationConfig { min_init_gates: 0, max_init_gates: 40, ..VariationConfig::default() };
            let g = random_genome(5, &cfg, &mut rng);
            prop_assert!(depth(&g) <= g.gate_count());
        }

        #[test]
        fn cnot_count_invariant_under_jitter(seed in 0u64..2_000) {
            let mut rng = crate::rng::derive(seed, &[79]);
            let cfg = VariationConfig { min_init_gates: 5, max_init_gates: 30, ..VariationConfig::default() };
            let g = random_genome(4, &cfg, &mut rng);
            let jitter_only = VariationConfig {
                p_add: 0.0, p_remove: 0.0, p_kind_change: 0.0, p_rewire: 0.0,
                p_angle_jitter: 1.0, ..cfg
            };
            let m = mutate(&g, &jitter_only, &mut rng);
            prop_assert_eq!(cnot_count(&m), cnot_count(&g));
        }
    }
}
