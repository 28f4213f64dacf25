use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CnfFormula;
use crate::statevec::{Bits, QuantumState, RegisterLayout, StateError};

pub const INPUTS_REGISTER: &str = "x";
pub const ANCILLA_REGISTER: &str = "anc";
pub const TARGET_REGISTER: &str = "y";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("input has {found} bits, circuit expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("gate {index} touches qubit {qubit} outside 0..{total}")]
    QubitOutOfRange {
        index: usize,
        qubit: usize,
        total: usize,
    },
    #[error("gate {index} repeats a qubit")]
    RepeatedOperand { index: usize },
    #[error("output qubit {0} is not the last qubit")]
    BadOutputQubit(usize),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
}

/// Classical reversible gates on global qubit indices (0 = first input).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub enum Gate {
    Not(usize),
    Cnot(usize, usize),
    Toffoli(usize, usize, usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GateRepr {
    One(String, usize),
    Two(String, usize, usize),
    Three(String, usize, usize, usize),
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        match g {
            Gate::Not(t) => GateRepr::One("NOT".into(), t),
            Gate::Cnot(c, t) => GateRepr::Two("CNOT".into(), c, t),
            Gate::Toffoli(a, b, t) => GateRepr::Three("TOFFOLI".into(), a, b, t),
        }
    }
}

impl TryFrom<GateRepr> for Gate {
    type Error = CircuitError;

    fn try_from(repr: GateRepr) -> Result<Self, CircuitError> {
        match repr {
            GateRepr::One(op, t) if op == "NOT" => Ok(Gate::Not(t)),
            GateRepr::Two(op, c, t) if op == "CNOT" => Ok(Gate::Cnot(c, t)),
            GateRepr::Three(op, a, b, t) if op == "TOFFOLI" => Ok(Gate::Toffoli(a, b, t)),
            GateRepr::One(op, ..) | GateRepr::Two(op, ..) | GateRepr::Three(op, ..) => {
                Err(CircuitError::UnknownGate(op))
            }
        }
    }
}

impl Gate {
    fn operands(&self) -> Vec<usize> {
        match *self {
            Gate::Not(t) => vec![t],
            Gate::Cnot(c, t) => vec![c, t],
            Gate::Toffoli(a, b, t) => vec![a, b, t],
        }
    }

    fn apply_bits(&self, bits: &mut [bool]) {
        match *self {
            Gate::Not(t) => bits[t] = !bits[t],
            Gate::Cnot(c, t) => bits[t] ^= bits[c],
            Gate::Toffoli(a, b, t) => bits[t] ^= bits[a] && bits[b],
        }
    }

    /// Applies the gate to a packed basis index where qubit `q` lives at `bit(q)`.
    fn apply(&self, state: u64, bit: impl Fn(usize) -> u32) -> u64 {
        let on = |q: usize| state >> bit(q) & 1 == 1;
        match *self {
            Gate::Not(t) => state ^ (1 << bit(t)),
            Gate::Cnot(c, t) if on(c) => state ^ (1 << bit(t)),
            Gate::Toffoli(a, b, t) if on(a) && on(b) => state ^ (1 << bit(t)),
            _ => state,
        }
    }
}

/// Qubits `0..n` are inputs, then ancillas, then the output qubit `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr", into = "CircuitRepr")]
pub struct ReversibleCircuit {
    num_input_qubits: usize,
    num_ancilla: usize,
    output_qubit: usize,
    gates: Vec<Gate>,
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    num_input_qubits: usize,
    num_ancilla: usize,
    output_qubit: usize,
    gates: Vec<Gate>,
}

impl From<ReversibleCircuit> for CircuitRepr {
    fn from(c: ReversibleCircuit) -> Self {
        CircuitRepr {
            num_input_qubits: c.num_input_qubits,
            num_ancilla: c.num_ancilla,
            output_qubit: c.output_qubit,
            gates: c.gates,
        }
    }
}

impl TryFrom<CircuitRepr> for ReversibleCircuit {
    type Error = CircuitError;

    fn try_from(r: CircuitRepr) -> Result<Self, CircuitError> {
        ReversibleCircuit::new(r.num_input_qubits, r.num_ancilla, r.gates).and_then(|c| {
            if c.output_qubit == r.output_qubit {
                Ok(c)
            } else {
                Err(CircuitError::BadOutputQubit(r.output_qubit))
            }
        })
    }
}

impl ReversibleCircuit {
    pub fn new(
        num_input_qubits: usize,
        num_ancilla: usize,
        gates: Vec<Gate>,
    ) -> Result<Self, CircuitError> {
        let total = num_input_qubits + num_ancilla + 1;
        for (index, gate) in gates.iter().enumerate() {
            let ops = gate.operands();
            if let Some(&qubit) = ops.iter().find(|&&q| q >= total) {
                return Err(CircuitError::QubitOutOfRange {
                    index,
                    qubit,
                    total,
                });
            }
            if (1..ops.len()).any(|i| ops[..i].contains(&ops[i])) {
                return Err(CircuitError::RepeatedOperand { index });
            }
        }
        Ok(Self {
            num_input_qubits,
            num_ancilla,
            output_qubit: total - 1,
            gates,
        })
    }

    pub fn num_input_qubits(&self) -> usize {
        self.num_input_qubits
    }

    pub fn num_ancilla(&self) -> usize {
        self.num_ancilla
    }

    pub fn output_qubit(&self) -> usize {
        self.output_qubit
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn total_qubits(&self) -> usize {
        self.num_input_qubits + self.num_ancilla + 1
    }

    /// Registers `x`, `anc` (omitted when empty) and `y`.
    pub fn layout(&self) -> Result<RegisterLayout, StateError> {
        let mut regs = vec![(INPUTS_REGISTER, self.num_input_qubits)];
        if self.num_ancilla > 0 {
            regs.push((ANCILLA_REGISTER, self.num_ancilla));
        }
        regs.push((TARGET_REGISTER, 1));
        RegisterLayout::new(regs)
    }

    fn bit_of(&self) -> impl Fn(usize) -> u32 {
        let total = self.total_qubits();
        move |q| (total - 1 - q) as u32
    }

    /// Image of a full basis index under the gate sequence. Only for
    /// circuits of at most 64 qubits.
    pub fn apply_to_index(&self, index: u64) -> u64 {
        assert!(
            self.total_qubits() <= 64,
            "packed indices need at most 64 qubits"
        );
        let bit = self.bit_of();
        self.gates.iter().fold(index, |s, g| g.apply(s, &bit))
    }

    /// Runs the gates in reverse order; the inverse of [`Self::apply_to_index`].
    pub fn apply_inverse_to_index(&self, index: u64) -> u64 {
        assert!(
            self.total_qubits() <= 64,
            "packed indices need at most 64 qubits"
        );
        let bit = self.bit_of();
        self.gates.iter().rev().fold(index, |s, g| g.apply(s, &bit))
    }

    /// The circuit as a basis permutation on a state over [`Self::layout`].
    pub fn apply_to_state(&self, state: QuantumState) -> Result<QuantumState, StateError> {
        if state.layout().total_qubits() != self.total_qubits() {
            return Err(StateError::WidthMismatch {
                expected: self.total_qubits(),
                found: state.layout().total_qubits(),
            });
        }
        Ok(state.apply_permutation(|i| self.apply_to_index(i as u64) as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalRecord {
    pub y: bool,
    /// Final ancilla values, in qubit order.
    pub ancillas: Vec<bool>,
}

impl EvalRecord {
    pub fn ancillas_clear(&self) -> bool {
        self.ancillas.iter().all(|a| !a)
    }
}

/// Classical run from `|input, 0…0, 0⟩`.
pub fn eval(circuit: &ReversibleCircuit, input: &Bits) -> Result<EvalRecord, CircuitError> {
    if input.width() != circuit.num_input_qubits {
        return Err(CircuitError::WidthMismatch {
            expected: circuit.num_input_qubits,
            found: input.width(),
        });
    }
    let n = circuit.num_input_qubits;
    let mut bits = vec![false; circuit.total_qubits()];
    for (q, slot) in bits[..n].iter_mut().enumerate() {
        *slot = input.value() >> (n - 1 - q) & 1 == 1;
    }
    for gate in &circuit.gates {
        gate.apply_bits(&mut bits);
    }
    let input_restored = (0..n).all(|q| bits[q] == (input.value() >> (n - 1 - q) & 1 == 1));
    debug_assert!(input_restored, "inputs must pass through unchanged");
    Ok(EvalRecord {
        y: bits[circuit.output_qubit],
        ancillas: bits[n..circuit.output_qubit].to_vec(),
    })
}

/// X on `target` controlled by all of `controls`, using a linear chain of
/// Toffolis through `scratch` (needs `controls.len() - 2` scratch qubits).
fn multi_controlled_not(
    gates: &mut Vec<Gate>,
    controls: &[usize],
    target: usize,
    scratch: &[usize],
) {
    match controls {
        [] => gates.push(Gate::Not(target)),
        [c] => gates.push(Gate::Cnot(*c, target)),
        [a, b] => gates.push(Gate::Toffoli(*a, *b, target)),
        _ => {
            let w = controls.len();
            let mut chain = vec![Gate::Toffoli(controls[0], controls[1], scratch[0])];
            for i in 2..w - 1 {
                chain.push(Gate::Toffoli(controls[i], scratch[i - 2], scratch[i - 1]));
            }
            gates.extend(&chain);
            gates.push(Gate::Toffoli(controls[w - 1], scratch[w - 3], target));
            gates.extend(chain.iter().rev());
        }
    }
}

/// Compiles `formula` into a network with `y ^= formula(x)`.
///
/// Each clause is computed into its own ancilla as `¬∧(¬lᵢ)`, the clause
/// ancillas are ANDed into `y`, then the clause gates are replayed in
/// reverse to return every ancilla to zero. Scratch qubits are shared and
/// restored inside each multi-controlled step.
pub fn compile(formula: &CnfFormula) -> ReversibleCircuit {
    let n = formula.num_vars();
    let clauses: Vec<Vec<i32>> = formula
        .clauses()
        .iter()
        .map(|c| normalize_clause(c))
        .collect();
    let m = clauses.len();
    let widest = clauses.iter().map(|c| c.len()).max().unwrap_or(0);
    let scratch_len = widest.saturating_sub(2).max(m.saturating_sub(2));
    let clause_qubit = |j: usize| n + j;
    let scratch: Vec<usize> = (n + m..n + m + scratch_len).collect();
    let y = n + m + scratch_len;

    let mut compute = Vec::new();
    for (j, clause) in clauses.iter().enumerate() {
        let target = clause_qubit(j);
        if clause.is_empty() {
            // tautology
            compute.push(Gate::Not(target));
            continue;
        }
        let controls: Vec<usize> = clause
            .iter()
            .map(|l| l.unsigned_abs() as usize - 1)
            .collect();
        let flips: Vec<Gate> = clause
            .iter()
            .filter(|l| **l > 0)
            .map(|l| Gate::Not(l.unsigned_abs() as usize - 1))
            .collect();
        compute.extend(&flips);
        multi_controlled_not(&mut compute, &controls, target, &scratch);
        compute.extend(&flips);
        compute.push(Gate::Not(target));
    }

    let mut gates = compute.clone();
    let clause_bits: Vec<usize> = (0..m).map(clause_qubit).collect();
    multi_controlled_not(&mut gates, &clause_bits, y, &scratch);
    gates.extend(compute.iter().rev());

    ReversibleCircuit::new(n, m + scratch_len, gates)
        .expect("compiler emits in-range distinct operands")
}

/// Drops repeated literals; a clause containing `v` and `¬v` becomes empty,
/// standing for the constant true.
fn normalize_clause(clause: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::new();
    for &l in clause {
        if out.contains(&-l) {
            return Vec::new();
        }
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}
