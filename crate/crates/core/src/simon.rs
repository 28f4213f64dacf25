//! Simon's period finding driven through explicit measurements, plus the
//! GF(2) post-processing that turns sampled `z` values into `r`.
//!
//! "Step d" is the measurement of the output register between the oracle
//! and the second Hadamard; `skip_step_d` leaves it out.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::measure::{
    backdated_run, backdated_state, collapse, exact_distribution, measure, MeasureError,
};
use crate::oracle::PeriodicOracle;
use crate::statevec::{
    Bits, QuantumState, RegisterLayout, StateError, INPUT_REGISTER, OUTPUT_REGISTER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimonError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("sample budget {max_samples} is below the input width {n}")]
    BudgetTooSmall { n: usize, max_samples: usize },
    #[error("period not identified after {samples_used} samples (rank {rank} of {needed})")]
    BudgetExceeded {
        samples_used: usize,
        z_samples: Vec<u64>,
        rank: usize,
        needed: usize,
        system: Gf2System,
    },
}

impl From<StateError> for SimonError {
    fn from(e: StateError) -> Self {
        SimonError::Measure(e.into())
    }
}

/// Parity of the bitwise AND: the mod-2 inner product `a·b`.
pub fn dot(a: u64, b: u64) -> u32 {
    (a & b).count_ones() & 1
}

pub fn default_max_samples(n: usize) -> usize {
    20 * n
}

pub fn simon_layout(n: usize) -> Result<RegisterLayout, StateError> {
    RegisterLayout::new([(INPUT_REGISTER, n), (OUTPUT_REGISTER, n)])
}

/// `|φ(t₁)⟩ = (1/√N) Σₓ |x⟩ₐ|0⟩_b`.
pub fn state_t1(n: usize) -> Result<QuantumState, StateError> {
    let start = QuantumState::prepare_basis(simon_layout(n)?, &Bits::zeros(2 * n))?;
    start.apply_hadamard(INPUT_REGISTER)
}

/// `|φ(t₂)⟩ = (1/√N) Σₓ |x⟩ₐ|f(x)⟩_b`.
pub fn state_t2(oracle: &PeriodicOracle) -> Result<QuantumState, StateError> {
    state_t1(oracle.n())?.apply_oracle(oracle)
}

/// Instant at which a forward/backward pair is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineTime {
    /// After the input Hadamards, before the oracle.
    T1,
    /// After the oracle.
    T2,
}

/// Forward state `φ(t)` and the backward state selected by output `f̄`.
pub fn wave_pair_states(
    oracle: &PeriodicOracle,
    f_bar: &Bits,
    time: PipelineTime,
) -> Result<(QuantumState, QuantumState), SimonError> {
    Ok(match time {
        PipelineTime::T1 => (state_t1(oracle.n())?, backdated_state(oracle, f_bar)?),
        PipelineTime::T2 => (state_t2(oracle)?, backdated_run(oracle, f_bar)?),
    })
}

/// Prepare, query, optionally measure `b` ("step d"), Hadamard `a`, measure
/// `a`. Returns the measured `z`.
pub fn run_once<R: Rng + ?Sized>(
    oracle: &PeriodicOracle,
    rng: &mut R,
    skip_step_d: bool,
) -> Result<u64, SimonError> {
    sample_from(&state_t2(oracle)?, oracle.r(), rng, skip_step_d)
}

fn sample_from<R: Rng + ?Sized>(
    phi_t2: &QuantumState,
    r: u64,
    rng: &mut R,
    skip_step_d: bool,
) -> Result<u64, SimonError> {
    let state = if skip_step_d {
        phi_t2.clone()
    } else {
        measure(phi_t2, OUTPUT_REGISTER, rng)?.post_state
    };
    let state = state.apply_hadamard(INPUT_REGISTER)?;
    let z = measure(&state, INPUT_REGISTER, rng)?.outcome.value();
    debug_assert_eq!(dot(z, r), 0, "z = {z:b} not orthogonal to r");
    Ok(z)
}

/// Distribution of `z` given that the output register was found in `f̄`.
pub fn z_distribution_given(oracle: &PeriodicOracle, f_bar: &Bits) -> Result<Vec<f64>, SimonError> {
    let collapsed = collapse(&state_t2(oracle)?, OUTPUT_REGISTER, f_bar)?.post_state;
    let after = collapsed.apply_hadamard(INPUT_REGISTER)?;
    Ok(exact_distribution(&after, INPUT_REGISTER)?)
}

/// Exact distribution of the final `z` measurement.
///
/// With the `b` measurement the result is the Born-weighted mixture over outcomes `f̄`;
/// without it the entangled state goes straight through the second Hadamard.
pub fn z_distribution(oracle: &PeriodicOracle, skip_step_d: bool) -> Result<Vec<f64>, SimonError> {
    let phi_t2 = state_t2(oracle)?;
    if skip_step_d {
        let after = phi_t2.apply_hadamard(INPUT_REGISTER)?;
        return Ok(exact_distribution(&after, INPUT_REGISTER)?);
    }
    let n = oracle.n();
    let f_probs = exact_distribution(&phi_t2, OUTPUT_REGISTER)?;
    let mut total = vec![0.0; 1 << n];
    for (value, p) in f_probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let f_bar = Bits::new(value as u64, n)?;
        let after = collapse(&phi_t2, OUTPUT_REGISTER, &f_bar)?
            .post_state
            .apply_hadamard(INPUT_REGISTER)?;
        for (slot, q) in total
            .iter_mut()
            .zip(exact_distribution(&after, INPUT_REGISTER)?)
        {
            *slot += p * q;
        }
    }
    Ok(total)
}

/// Homogeneous linear system `z⁽ⁱ⁾·r = 0` over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2System {
    n: usize,
    rows: Vec<u64>,
}

impl Gf2System {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            rows: Vec::new(),
        }
    }

    pub fn with_rows(n: usize, rows: impl IntoIterator<Item = u64>) -> Self {
        let mut system = Self::new(n);
        for row in rows {
            system.push(row);
        }
        system
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Adds a row unless it is already present.
    pub fn push(&mut self, row: u64) -> bool {
        debug_assert!(self.n >= 64 || row >> self.n == 0);
        if self.rows.contains(&row) {
            return false;
        }
        self.rows.push(row);
        true
    }

    /// Reduced row-echelon basis of the row space, pivots descending.
    fn echelon(&self) -> Vec<(usize, u64)> {
        let mut basis: Vec<(usize, u64)> = Vec::new();
        for &row in &self.rows {
            let mut v = row;
            for &(pivot, b) in &basis {
                if v >> pivot & 1 == 1 {
                    v ^= b;
                }
            }
            if v == 0 {
                continue;
            }
            let pivot = 63 - v.leading_zeros() as usize;
            for (_, b) in basis.iter_mut() {
                if *b >> pivot & 1 == 1 {
                    *b ^= v;
                }
            }
            basis.push((pivot, v));
            basis.sort_unstable_by_key(|(p, _)| std::cmp::Reverse(*p));
        }
        basis
    }

    pub fn rank(&self) -> usize {
        self.echelon().len()
    }
}

/// Every nonzero `r'` with `z·r' = 0` for all rows, ascending.
pub fn gf2_solve(system: &Gf2System) -> Vec<u64> {
    let basis = system.echelon();
    let pivots: Vec<usize> = basis.iter().map(|(p, _)| *p).collect();
    let free: Vec<usize> = (0..system.n).filter(|c| !pivots.contains(c)).collect();
    // one null-space generator per free column
    let generators: Vec<u64> = free
        .iter()
        .map(|&col| {
            let mut v = 1u64 << col;
            for &(pivot, row) in &basis {
                if row >> col & 1 == 1 {
                    v |= 1u64 << pivot;
                }
            }
            v
        })
        .collect();
    let mut solutions: Vec<u64> = (1u64..1 << generators.len())
        .map(|combo| {
            generators
                .iter()
                .enumerate()
                .filter(|(i, _)| combo >> i & 1 == 1)
                .fold(0, |acc, (_, g)| acc ^ g)
        })
        .collect();
    solutions.sort_unstable();
    solutions
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimonRunReport {
    pub recovered_r: u64,
    pub samples_used: usize,
    pub z_samples: Vec<u64>,
    #[serde(skip)]
    pub skip_step_d: bool,
}

/// Repeats [`run_once`] until the null space of the collected constraints is
/// a single nonzero vector.
pub fn recover_period<R: Rng + ?Sized>(
    oracle: &PeriodicOracle,
    rng: &mut R,
    max_samples: usize,
    skip_step_d: bool,
) -> Result<SimonRunReport, SimonError> {
    let n = oracle.n();
    if max_samples < n {
        return Err(SimonError::BudgetTooSmall { n, max_samples });
    }
    let phi_t2 = state_t2(oracle)?;
    let mut system = Gf2System::new(n);
    let mut z_samples = Vec::new();
    let mut rank = 0;
    while rank < n - 1 {
        if z_samples.len() == max_samples {
            return Err(SimonError::BudgetExceeded {
                samples_used: z_samples.len(),
                z_samples,
                rank,
                needed: n - 1,
                system,
            });
        }
        let z = sample_from(&phi_t2, oracle.r(), rng, skip_step_d)?;
        z_samples.push(z);
        if system.push(z) {
            rank = system.rank();
        }
    }
    let candidates = gf2_solve(&system);
    debug_assert_eq!(candidates.len(), 1);
    Ok(SimonRunReport {
        recovered_r: candidates[0],
        samples_used: z_samples.len(),
        z_samples,
        skip_step_d,
    })
}
