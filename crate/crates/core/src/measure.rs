//! Born-rule measurement with collapse, post-selection and back-dated collapse.
//!
//! Random draws come from `ChaCha8Rng`. A run seeded with `seed` gives its
//! `i`-th independent stream to `stream_rng(seed, i)`; the streams share the
//! key and differ only in the ChaCha stream id, so trials reproduce
//! regardless of how they are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::oracle::{brute_force_reverse, PeriodicOracle};
use crate::statevec::{
    Bits, QuantumState, RegisterLayout, StateError, INPUT_REGISTER, OUTPUT_REGISTER,
};
use num_complex::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("outcome {outcome} on register `{register}` has zero probability")]
    ZeroProbability { register: String, outcome: String },
    #[error("value {0} is not in the image of the oracle")]
    NotInImage(String),
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub register: String,
    pub outcome: Bits,
    pub probability: f64,
    pub post_state: QuantumState,
}

/// Outcome probabilities for `register`, indexed by outcome value.
pub fn exact_distribution(state: &QuantumState, register: &str) -> Result<Vec<f64>, StateError> {
    let reg = state.layout().register(register)?;
    let mut probs = vec![0.0; reg.dim()];
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        probs[reg.extract(idx)] += amp.norm_sqr();
    }
    Ok(probs)
}

/// Projects `register` onto `outcome` and renormalizes.
pub fn collapse(
    state: &QuantumState,
    register: &str,
    outcome: &Bits,
) -> Result<MeasurementRecord, MeasureError> {
    let reg = state.layout().register(register)?;
    if outcome.width() != reg.width() {
        return Err(StateError::WidthMismatch {
            expected: reg.width(),
            found: outcome.width(),
        }
        .into());
    }
    let target = outcome.value() as usize;
    let probability = state.partial_inner(register, outcome)?.norm_sqr();
    if probability == 0.0 {
        return Err(MeasureError::ZeroProbability {
            register: register.to_string(),
            outcome: outcome.to_string(),
        });
    }
    let inv = 1.0 / probability.sqrt();
    let amplitudes = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            if reg.extract(idx) == target {
                a * inv
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(MeasurementRecord {
        register: register.to_string(),
        outcome: *outcome,
        probability,
        post_state: QuantumState::from_parts(state.layout().clone(), amplitudes),
    })
}

/// Samples an outcome of `register` from the Born distribution and collapses.
pub fn measure<R: Rng + ?Sized>(
    state: &QuantumState,
    register: &str,
    rng: &mut R,
) -> Result<MeasurementRecord, MeasureError> {
    let probs = exact_distribution(state, register)?;
    let width = state.layout().register(register)?.width();
    let outcome = sample_index(&probs, rng.random::<f64>());
    collapse(state, register, &Bits::new(outcome as u64, width)?)
}

/// Inverse-CDF lookup; rounding slack at the top falls on the last
/// outcome with nonzero weight.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc && *p > 0.0 {
            return i;
        }
    }
    probs
        .iter()
        .rposition(|p| *p > 0.0)
        .expect("distribution has positive mass")
}

/// `√(N/2) · ⟨f̄|_b |φ(t₂)⟩`: the input-register state selected jointly by the
/// prepared state and the output value `f̄`.
pub fn selected_input_state(
    state_t2: &QuantumState,
    f_bar: &Bits,
) -> Result<QuantumState, MeasureError> {
    let big_n = state_t2.layout().register(INPUT_REGISTER)?.dim() as f64;
    let contracted = state_t2.partial_inner(OUTPUT_REGISTER, f_bar)?;
    if contracted.norm_sqr() == 0.0 {
        return Err(MeasureError::NotInImage(f_bar.to_string()));
    }
    Ok(contracted.scale_to_state((big_n / 2.0).sqrt())?)
}

/// `(|x̄⟩+|x̄⊕r⟩)ₐ|0⟩_b/√2`, built from the classical preimages of `f̄`.
pub fn backdated_state(
    oracle: &PeriodicOracle,
    f_bar: &Bits,
) -> Result<QuantumState, MeasureError> {
    let (x0, x1) = brute_force_reverse(oracle, f_bar)
        .ok_or_else(|| MeasureError::NotInImage(f_bar.to_string()))?;
    let n = oracle.n();
    let layout = RegisterLayout::new([(INPUT_REGISTER, n), (OUTPUT_REGISTER, n)])?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
    let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amplitudes[(x0 as usize) << n] = half;
    amplitudes[(x1 as usize) << n] = half;
    Ok(QuantumState::from_amplitudes(layout, amplitudes)?)
}

/// [`backdated_state`] run forward through the oracle.
pub fn backdated_run(oracle: &PeriodicOracle, f_bar: &Bits) -> Result<QuantumState, MeasureError> {
    Ok(backdated_state(oracle, f_bar)?.apply_oracle(oracle)?)
}
