//! OpenQASM 2.0 export for the evolved gate vocabulary, plus a parser for
//! exactly that subset so exports round-trip.

use crate::error::{Error, Result};
use crate::genome::CircuitGenome;
use crate::qsim::Gate;

/// Render a genome as OpenQASM 2.0. Angles carry 17 significant digits so
/// parsing recovers the exact f64.
pub fn export_qasm(genome: &CircuitGenome) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", genome.qubits()));
    for gate in genome.gates() {
        match *gate {
            Gate::Rx { target, theta } => {
                out.push_str(&format!("rx({theta:.16e}) q[{target}];\n"));
            }
            Gate::Ry { target, theta } => {
                out.push_str(&format!("ry({theta:.16e}) q[{target}];\n"));
            }
            Gate::Rz { target, theta } => {
                out.push_str(&format!("rz({theta:.16e}) q[{target}];\n"));
            }
            Gate::H { target } => {
                out.push_str(&format!("h q[{target}];\n"));
            }
            Gate::Cnot { control, target } => {
                out.push_str(&format!("cx q[{control}],q[{target}];\n"));
            }
        }
    }
    out
}

/// Parse the QASM subset emitted by [`export_qasm`].
pub fn parse_qasm_subset(text: &str) -> Result<CircuitGenome> {
    let mut qubits: Option<usize> = None;
    let mut gates = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let err = |msg: String| Error::QasmParse {
            line: line_no,
            msg,
        };

        if line == "OPENQASM 2.0;" || line.starts_with("include ") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("qreg ") {
            if qubits.is_some() {
                return Err(err("duplicate qreg declaration".into()));
            }
            let n = rest
                .strip_prefix("q[")
                .and_then(|s| s.strip_suffix("];"))
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| err(format!("malformed qreg statement {line:?}")))?;
            qubits = Some(n);
            continue;
        }

        let qubits = qubits.ok_or_else(|| err("gate before qreg declaration".into()))?;
        let gate = parse_gate_line(line).ok_or_else(|| err(format!("unknown statement {line:?}")))?;
        gate.validate(qubits).map_err(|e| Error::QasmParse {
            line: line_no,
            msg: e.to_string(),
        })?;
        gates.push(gate);
    }

    let qubits = qubits.ok_or(Error::QasmParse {
        line: text.lines().count().max(1),
        msg: "missing qreg declaration".into(),
    })?;
    CircuitGenome::new(qubits, gates)
}

fn parse_gate_line(line: &str) -> Option<Gate> {
    let line = line.strip_suffix(';')?;
    if let Some(rest) = line.strip_prefix("h ") {
        let target = parse_qubit(rest.trim())?;
        return Some(Gate::H { target });
    }
    if let Some(rest) = line.strip_prefix("cx ") {
        let (control, target) = rest.trim().split_once(',')?;
        return Some(Gate::Cnot {
            control: parse_qubit(control.trim())?,
            target: parse_qubit(target.trim())?,
        });
    }
    for (prefix, make) in [
        ("rx(", 0u8),
        ("ry(", 1),
        ("rz(", 2),
    ] {
        if let Some(rest) = line.strip_prefix(prefix) {
            let (angle, operand) = rest.split_once(')')?;
            let theta: f64 = angle.trim().parse().ok()?;
            let target = parse_qubit(operand.trim())?;
            return Some(match make {
                0 => Gate::Rx { target, theta },
                1 => Gate::Ry { target, theta },
                _ => Gate::Rz { target, theta },
            });
        }
    }
    None
}

fn parse_qubit(token: &str) -> Option<usize> {
    token
        .strip_prefix("q[")?
        .strip_suffix(']')?
        .parse::<usize>()
        .ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{random_genome, VariationConfig};
    use proptest::prelude::*;

    #[test]
    fn export_empty_genome_is_header_only() {
        let g = CircuitGenome::new(2, vec![]).unwrap();
        let text = export_qasm(&g);
        assert_eq!(
            text,
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n"
        );
    }

    #[test]
    fn export_single_h() {
        let g = CircuitGenome::new(1, vec![Gate::H { target: 0 }]).unwrap();
        let text = export_qasm(&g);
        assert_eq!(text.lines().filter(|l| *l == "h q[0];").count(), 1);
    }

    #[test]
    fn parse_header_only() {
        let g = parse_qasm_subset("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\n").unwrap();
        assert_eq!(g.qubits(), 3);
        assert_eq!(g.gate_count(), 0);
    }

    #[test]
    fn parse_single_gate() {
        let g = parse_qasm_subset("qreg q[1];\nh q[0];\n").unwrap();
        assert_eq!(g.gates(), &[Gate::H { target: 0 }]);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "OPENQASM 2.0;\nqreg q[2];\nh q[0];\nmeasure q -> c;\n";
        match parse_qasm_subset(text) {
            Err(Error::QasmParse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_gate_before_qreg() {
        assert!(matches!(
            parse_qasm_subset("h q[0];\n"),
            Err(Error::QasmParse { line: 1, .. })
        ));
    }

    #[test]
    fn thirty_gate_round_trip() {
        let mut rng = crate::rng::derive(50, &[]);
        let cfg = VariationConfig {
            min_init_gates: 30,
            max_init_gates: 30,
            ..VariationConfig::default()
        };
        let g = random_genome(5, &cfg, &mut rng);
        let back = parse_qasm_subset(&export_qasm(&g)).unwrap();
        assert_eq!(g, back);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn export_parse_round_trip(seed in 0u64..100_000) {
            let mut rng = crate::rng::derive(seed, &[51]);
            let cfg = VariationConfig {
                min_init_gates: 0,
                max_init_gates: 40,
                ..VariationConfig::default()
            };
            let g = random_genome(4, &cfg, &mut rng);
            let back = parse_qasm_subset(&export_qasm(&g)).unwrap();
            prop_assert_eq!(g, back);
        }
    }
}
