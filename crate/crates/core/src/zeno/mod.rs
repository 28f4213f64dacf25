//! Constrained-subspace testbed: a compiled CNF network, the span `H^c` of
//! its consistent basis states, and three ways of driving a π/2 rotation of
//! the output qubit `y` while (or without) confining the state to `H^c`.
//!
//! States live on the registers `x` (one qubit per variable) and `y`. The
//! compiler's ancillas start and end every classical evaluation at zero and
//! are never rotated, so they are factored out as a fixed `|0…0⟩`.
//!
//! Input constraints are unit literals that pin a variable; the function `f`
//! itself is compiled from the formula alone.

mod suite;

pub use suite::{default_suite, exhaustive_small_instances, random_single_solution};

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::satnet::{compile, eval, CnfError, CnfFormula, ReversibleCircuit};
use crate::statevec::{
    Bits, QuantumState, RegisterLayout, StateError, UnnormalizedState, MAX_QUBITS,
};

/// Norm below which a projected state is treated as annihilated.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Agreement required between the two constructions of `|φ⟩`.
pub const PHI_PATH_TOLERANCE: f64 = 1e-12;

pub const INPUT_REGISTER: &str = "x";
pub const TARGET_REGISTER: &str = "y";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZenoError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error("slice count must be at least 1")]
    ZeroSlices,
    #[error("constrained subspace is empty")]
    EmptySubspace,
    #[error("projection annihilated the state at step {step} (norm {norm:e})")]
    DegenerateDynamics { step: usize, norm: f64 },
    #[error("constraint literal {0} is out of range")]
    BadConstraint(i32),
    #[error("circuit left ancillas set or changed inputs for assignment {0:b}")]
    DirtyAncilla(u64),
    #[error("the two constructions of |phi> differ by {0:e}")]
    PathMismatch(f64),
    #[error("state layout does not match the subspace")]
    LayoutMismatch,
}

/// A formula, the unit literals constraining its inputs, and its network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZenoInstance {
    formula: CnfFormula,
    fixed: Vec<i32>,
    circuit: ReversibleCircuit,
}

impl ZenoInstance {
    pub fn new(formula: CnfFormula, fixed: Vec<i32>) -> Result<Self, ZenoError> {
        if formula.num_vars() + 1 > MAX_QUBITS {
            return Err(StateError::TooManyQubits(formula.num_vars() + 1).into());
        }
        if let Some(&bad) = fixed
            .iter()
            .find(|l| **l == 0 || l.unsigned_abs() as usize > formula.num_vars())
        {
            return Err(ZenoError::BadConstraint(bad));
        }
        let circuit = compile(&formula);
        Ok(Self {
            formula,
            fixed,
            circuit,
        })
    }

    pub fn unconstrained(formula: CnfFormula) -> Result<Self, ZenoError> {
        Self::new(formula, Vec::new())
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    pub fn fixed(&self) -> &[i32] {
        &self.fixed
    }

    pub fn circuit(&self) -> &ReversibleCircuit {
        &self.circuit
    }

    pub fn num_vars(&self) -> usize {
        self.formula.num_vars()
    }

    /// The formula with the input constraints appended as unit clauses.
    pub fn combined_formula(&self) -> CnfFormula {
        self.formula
            .with_clauses(self.fixed.iter().map(|l| vec![*l]))
            .expect("constraint literals were validated")
    }

    pub fn satisfies_constraints(&self, assignment: u64) -> bool {
        self.fixed
            .iter()
            .all(|&l| self.formula.literal_value(assignment, l))
    }

    /// Whether variable `var` (1-based) is pinned by some constraint.
    pub fn is_fixed(&self, var: usize) -> bool {
        self.fixed.iter().any(|l| l.unsigned_abs() as usize == var)
    }

    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::new([(INPUT_REGISTER, self.num_vars()), (TARGET_REGISTER, 1)])
            .expect("width checked in constructor")
    }

    /// Global index of `y`.
    pub fn target_qubit(&self) -> usize {
        self.num_vars()
    }

    /// `f(x)` from the network, checking that ancillas come back clean.
    fn network_value(&self, assignment: u64) -> Result<bool, ZenoError> {
        let rec = eval(&self.circuit, &Bits::new(assignment, self.num_vars())?)
            .expect("input width matches circuit");
        if !rec.ancillas_clear() {
            return Err(ZenoError::DirtyAncilla(assignment));
        }
        Ok(rec.y)
    }
}

/// Span of computational basis states, stored as sorted indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstrainedSubspace {
    layout: RegisterLayout,
    basis_indices: Vec<usize>,
    member: Vec<bool>,
}

impl ConstrainedSubspace {
    /// `H^c`: inputs satisfying the constraints, `y = f(inputs)`.
    pub fn from_instance(instance: &ZenoInstance) -> Result<Self, ZenoError> {
        let mut indices = Vec::new();
        for x in 0..1u64 << instance.num_vars() {
            if instance.satisfies_constraints(x) {
                let y = instance.network_value(x)?;
                indices.push(((x << 1) | u64::from(y)) as usize);
            }
        }
        Self::from_indices(instance.layout(), indices)
    }

    /// Arbitrary basis span, e.g. for control experiments.
    pub fn from_indices(
        layout: RegisterLayout,
        mut indices: Vec<usize>,
    ) -> Result<Self, ZenoError> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(ZenoError::EmptySubspace);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= layout.dim()) {
            return Err(StateError::LengthMismatch {
                expected: layout.dim(),
                found: bad,
            }
            .into());
        }
        let mut member = vec![false; layout.dim()];
        for &i in &indices {
            member[i] = true;
        }
        Ok(Self {
            layout,
            basis_indices: indices,
            member,
        })
    }

    pub fn basis_indices(&self) -> &[usize] {
        &self.basis_indices
    }

    pub fn contains(&self, index: usize) -> bool {
        self.member.get(index).copied().unwrap_or(false)
    }

    pub fn dim(&self) -> usize {
        self.basis_indices.len()
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }
}

/// Zeroes every amplitude outside the subspace.
pub fn projector_apply(
    state: &QuantumState,
    subspace: &ConstrainedSubspace,
) -> Result<UnnormalizedState, ZenoError> {
    if state.layout() != subspace.layout() {
        return Err(ZenoError::LayoutMismatch);
    }
    let amplitudes = state
        .amplitudes()
        .iter()
        .zip(&subspace.member)
        .map(|(a, inside)| {
            if *inside {
                *a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(UnnormalizedState::new(state.layout().clone(), amplitudes))
}

fn complement_apply(state: &QuantumState, subspace: &ConstrainedSubspace) -> UnnormalizedState {
    let amplitudes = state
        .amplitudes()
        .iter()
        .zip(&subspace.member)
        .map(|(a, inside)| {
            if *inside {
                Complex64::new(0.0, 0.0)
            } else {
                *a
            }
        })
        .collect();
    UnnormalizedState::new(state.layout().clone(), amplitudes)
}

/// Hadamards on the free inputs, pinned inputs set, `y = 0`; then the
/// network applied as a basis permutation on the ancilla-clean sector.
pub fn prepare_phi_via_circuit(instance: &ZenoInstance) -> Result<QuantumState, ZenoError> {
    let n = instance.num_vars();
    let mut pinned = 0u64;
    for &l in instance.fixed() {
        if l > 0 {
            pinned |= 1 << (n - l.unsigned_abs() as usize);
        }
    }
    if !instance.satisfies_constraints(pinned) {
        return Err(ZenoError::EmptySubspace);
    }
    let layout = instance.layout();
    let mut state = QuantumState::prepare_basis(layout, &Bits::new(pinned << 1, n + 1)?)?;
    for var in (1..=n).filter(|v| !instance.is_fixed(*v)) {
        state = hadamard_on_qubit(state, var - 1)?;
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        if *amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let x = (idx >> 1) as u64;
        let y = (idx & 1) as u64 ^ u64::from(instance.network_value(x)?);
        amplitudes[((x << 1) | y) as usize] += amp;
    }
    Ok(QuantumState::from_amplitudes(
        instance.layout(),
        amplitudes,
    )?)
}

fn hadamard_on_qubit(state: QuantumState, qubit: usize) -> Result<QuantumState, StateError> {
    let bit = state.layout().qubit_bit(qubit)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = state.amplitudes().to_vec();
    let m = 1usize << bit;
    for i in 0..amps.len() {
        if i & m == 0 {
            let (a, b) = (amps[i], amps[i | m]);
            amps[i] = (a + b) * s;
            amps[i | m] = (a - b) * s;
        }
    }
    Ok(QuantumState::from_parts(state.layout().clone(), amps))
}

/// Equal superposition over the basis of `subspace`.
pub fn prepare_phi_via_enumeration(subspace: &ConstrainedSubspace) -> QuantumState {
    let amp = Complex64::new(1.0 / (subspace.dim() as f64).sqrt(), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); subspace.layout().dim()];
    for &i in subspace.basis_indices() {
        amplitudes[i] = amp;
    }
    QuantumState::from_parts(subspace.layout().clone(), amplitudes)
}

/// `|φ⟩`, built through the network and by enumeration of `H^c`; the two
/// must agree to [`PHI_PATH_TOLERANCE`].
pub fn prepare_phi(instance: &ZenoInstance) -> Result<QuantumState, ZenoError> {
    let subspace = ConstrainedSubspace::from_instance(instance)?;
    let by_circuit = prepare_phi_via_circuit(instance)?;
    let by_enumeration = prepare_phi_via_enumeration(&subspace);
    let gap = by_circuit.distance(&by_enumeration)?;
    if gap > PHI_PATH_TOLERANCE {
        return Err(ZenoError::PathMismatch(gap));
    }
    Ok(by_circuit)
}

/// Mass on basis states `|x, y=1⟩` with `x` satisfying `formula`.
pub fn solution_overlap(state: &QuantumState, formula: &CnfFormula) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx & 1 == 1 && formula.evaluate((idx >> 1) as u64))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZenoMode {
    Frequent,
    Projected,
    Unitary,
}

/// One row of a trace. Step 0 is the initial state.
///
/// * frequent: `survival_probability` is the product of the Born
///   probabilities of passing each `H^c` check so far;
///   `fidelity_with_initial` is that product times the fidelity of the
///   passing branch, i.e. the probability of still finding `|φ⟩`;
///   `solution_overlap` is taken on the passing branch.
/// * projected: product of retained squared norms; fidelity and overlap of
///   the renormalized state.
/// * unitary: mass inside `H^c`; fidelity and overlap of the rotated state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZenoSample {
    pub step: usize,
    pub survival_probability: f64,
    pub fidelity_with_initial: f64,
    pub solution_overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoTrace {
    pub mode: ZenoMode,
    pub slices: usize,
    pub samples: Vec<ZenoSample>,
    pub final_state: QuantumState,
    /// Frequent mode only: the step at which the `H^c` check failed.
    pub terminated_at: Option<usize>,
}

impl ZenoTrace {
    pub fn last(&self) -> &ZenoSample {
        self.samples.last().expect("traces start with step 0")
    }
}

/// Initial state, constraint subspace and the solution set to report on.
#[derive(Debug, Clone)]
pub struct ZenoTestbed {
    phi: QuantumState,
    subspace: ConstrainedSubspace,
    target_qubit: usize,
    solution: Vec<bool>,
}

impl ZenoTestbed {
    pub fn from_instance(instance: &ZenoInstance) -> Result<Self, ZenoError> {
        let phi = prepare_phi(instance)?;
        let subspace = ConstrainedSubspace::from_instance(instance)?;
        let combined = instance.combined_formula();
        let solution = (0..phi.amplitudes().len())
            .map(|idx| idx & 1 == 1 && combined.evaluate((idx >> 1) as u64))
            .collect();
        Ok(Self {
            phi,
            subspace,
            target_qubit: instance.target_qubit(),
            solution,
        })
    }

    /// Free-form testbed; `solution_indices` are the basis states counted by
    /// `solution_overlap`.
    pub fn custom(
        phi: QuantumState,
        subspace: ConstrainedSubspace,
        target_qubit: usize,
        solution_indices: &[usize],
    ) -> Result<Self, ZenoError> {
        if phi.layout() != subspace.layout() {
            return Err(ZenoError::LayoutMismatch);
        }
        phi.layout().qubit_bit(target_qubit)?;
        let mut solution = vec![false; phi.amplitudes().len()];
        for &i in solution_indices {
            *solution.get_mut(i).ok_or(ZenoError::LayoutMismatch)? = true;
        }
        Ok(Self {
            phi,
            subspace,
            target_qubit,
            solution,
        })
    }

    pub fn phi(&self) -> &QuantumState {
        &self.phi
    }

    pub fn subspace(&self) -> &ConstrainedSubspace {
        &self.subspace
    }

    pub fn target_qubit(&self) -> usize {
        self.target_qubit
    }

    fn overlap(&self, state: &QuantumState) -> f64 {
        state
            .amplitudes()
            .iter()
            .zip(&self.solution)
            .filter(|(_, s)| **s)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    fn fidelity(&self, state: &QuantumState) -> f64 {
        crate::statevec::inner(self.phi.amplitudes(), state.amplitudes()).norm_sqr()
    }

    fn initial_sample(&self) -> ZenoSample {
        ZenoSample {
            step: 0,
            survival_probability: 1.0,
            fidelity_with_initial: 1.0,
            solution_overlap: self.overlap(&self.phi),
        }
    }

    fn rotate(&self, state: QuantumState, slices: usize) -> Result<QuantumState, ZenoError> {
        Ok(state.apply_rotation(self.target_qubit, FRAC_PI_2 / slices as f64)?)
    }

    /// Rotation slices each followed by a Born-sampled "inside `H^c`?"
    /// measurement. A failed check ends the trajectory.
    pub fn run_frequent<R: Rng + ?Sized>(
        &self,
        slices: usize,
        rng: &mut R,
    ) -> Result<ZenoTrace, ZenoError> {
        if slices == 0 {
            return Err(ZenoError::ZeroSlices);
        }
        let mut state = self.phi.clone();
        let mut survival = 1.0;
        let mut samples = vec![self.initial_sample()];
        let mut terminated_at = None;
        for step in 1..=slices {
            let rotated = self.rotate(state, slices)?;
            let projected = projector_apply(&rotated, &self.subspace)?;
            let p = projected.norm_sqr().clamp(0.0, 1.0);
            survival *= p;
            let passing = if p > 0.0 {
                Some(projected.normalize()?)
            } else {
                None
            };
            let (fidelity, overlap) = passing.as_ref().map_or((0.0, 0.0), |s| {
                (survival * self.fidelity(s), self.overlap(s))
            });
            samples.push(ZenoSample {
                step,
                survival_probability: survival,
                fidelity_with_initial: fidelity.clamp(0.0, 1.0),
                solution_overlap: overlap.clamp(0.0, 1.0),
            });
            match passing {
                Some(s) if rng.random::<f64>() < p => state = s,
                _ => {
                    terminated_at = Some(step);
                    state = complement_apply(&rotated, &self.subspace).normalize()?;
                    break;
                }
            }
        }
        Ok(ZenoTrace {
            mode: ZenoMode::Frequent,
            slices,
            samples,
            final_state: state,
            terminated_at,
        })
    }

    /// States `ψ_0 = φ, ψ_j = normalize(P R(π/2k) ψ_{j−1})` for `j = 1..=k`.
    pub fn projected_states(&self, slices: usize) -> Result<Vec<QuantumState>, ZenoError> {
        Ok(self.projected_run(slices)?.1)
    }

    fn projected_run(&self, slices: usize) -> Result<(Vec<f64>, Vec<QuantumState>), ZenoError> {
        if slices == 0 {
            return Err(ZenoError::ZeroSlices);
        }
        let mut retained = Vec::with_capacity(slices);
        let mut states = Vec::with_capacity(slices + 1);
        states.push(self.phi.clone());
        for step in 1..=slices {
            let rotated = self.rotate(states[step - 1].clone(), slices)?;
            let projected = projector_apply(&rotated, &self.subspace)?;
            let norm = projected.norm_sqr().sqrt();
            if norm < DEGENERATE_NORM {
                return Err(ZenoError::DegenerateDynamics { step, norm });
            }
            retained.push(projected.norm_sqr());
            states.push(projected.normalize()?);
        }
        Ok((retained, states))
    }

    /// Deterministic project-and-renormalize slicing.
    pub fn run_projected(&self, slices: usize) -> Result<ZenoTrace, ZenoError> {
        let (retained, states) = self.projected_run(slices)?;
        let mut survival = 1.0;
        let mut samples = vec![self.initial_sample()];
        for (step, (kept, state)) in retained.iter().zip(&states[1..]).enumerate() {
            survival *= kept.clamp(0.0, 1.0);
            samples.push(ZenoSample {
                step: step + 1,
                survival_probability: survival,
                fidelity_with_initial: self.fidelity(state).clamp(0.0, 1.0),
                solution_overlap: self.overlap(state).clamp(0.0, 1.0),
            });
        }
        Ok(ZenoTrace {
            mode: ZenoMode::Projected,
            slices,
            samples,
            final_state: states.into_iter().last().expect("at least one state"),
            terminated_at: None,
        })
    }

    /// Bare rotation in `slices` steps, no measurement.
    pub fn run_unitary(&self, slices: usize) -> Result<ZenoTrace, ZenoError> {
        if slices == 0 {
            return Err(ZenoError::ZeroSlices);
        }
        let mut state = self.phi.clone();
        let mut samples = vec![self.initial_sample()];
        for step in 1..=slices {
            state = self.rotate(state, slices)?;
            samples.push(ZenoSample {
                step,
                survival_probability: projector_apply(&state, &self.subspace)?
                    .norm_sqr()
                    .clamp(0.0, 1.0),
                fidelity_with_initial: self.fidelity(&state).clamp(0.0, 1.0),
                solution_overlap: self.overlap(&state).clamp(0.0, 1.0),
            });
        }
        Ok(ZenoTrace {
            mode: ZenoMode::Unitary,
            slices,
            samples,
            final_state: state,
            terminated_at: None,
        })
    }
}

/// Largest distance between a `k`-slice run and a `2k`-slice run at equal
/// rotation angle (`coarse[j]` against `fine[2j]`).
pub fn slicing_distance(coarse: &[QuantumState], fine: &[QuantumState]) -> f64 {
    assert_eq!(
        fine.len(),
        2 * coarse.len() - 1,
        "fine run must have twice the slices"
    );
    coarse
        .iter()
        .enumerate()
        .map(|(j, s)| crate::statevec::distance(s.amplitudes(), fine[2 * j].amplitudes()))
        .fold(0.0, f64::max)
}

/// Per-step mean over trajectories that reached the step.
pub fn ensemble_mean(traces: &[ZenoTrace]) -> Vec<ZenoSample> {
    let longest = traces.iter().map(|t| t.samples.len()).max().unwrap_or(0);
    (0..longest)
        .map(|step| {
            let rows: Vec<&ZenoSample> =
                traces.iter().filter_map(|t| t.samples.get(step)).collect();
            let count = rows.len() as f64;
            let mean = |f: fn(&ZenoSample) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / count;
            ZenoSample {
                step,
                survival_probability: mean(|r| r.survival_probability),
                fidelity_with_initial: mean(|r| r.fidelity_with_initial),
                solution_overlap: mean(|r| r.solution_overlap),
            }
        })
        .collect()
}
