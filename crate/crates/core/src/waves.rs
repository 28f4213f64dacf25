//! Retarded/advanced decomposition of a forward state `φ` and a backward
//! state `β` under a gauge phase `δ`:
//!
//! ```text
//! ψ± = ±½ [φ ± e^{iδ} β],   φ = ψ₊ − ψ₋,   β = e^{−iδ}(ψ₊ + ψ₋)
//! ```

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::statevec::{distance, QuantumState, RegisterLayout};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("forward and backward states have different layouts")]
    LayoutMismatch,
    #[error("averaging grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePair {
    layout: RegisterLayout,
    psi_plus: Vec<Complex64>,
    psi_minus: Vec<Complex64>,
    delta: f64,
}

impl WavePair {
    pub fn psi_plus(&self) -> &[Complex64] {
        &self.psi_plus
    }

    pub fn psi_minus(&self) -> &[Complex64] {
        &self.psi_minus
    }

    pub fn wave(&self, which: Wave) -> &[Complex64] {
        match which {
            Wave::Plus => &self.psi_plus,
            Wave::Minus => &self.psi_minus,
        }
    }

    /// Gauge phase, reduced to `[0, 2π)`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }
}

pub fn decompose(
    phi: &QuantumState,
    beta: &QuantumState,
    delta: f64,
) -> Result<WavePair, WaveError> {
    if phi.layout() != beta.layout() {
        return Err(WaveError::LayoutMismatch);
    }
    let phase = Complex64::from_polar(1.0, delta);
    let dim = phi.amplitudes().len();
    let (mut plus, mut minus) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
    for (p, b) in phi.amplitudes().iter().zip(beta.amplitudes()) {
        let eb = phase * b;
        plus.push((p + eb) * 0.5);
        minus.push(-(p - eb) * 0.5);
    }
    Ok(WavePair {
        layout: phi.layout().clone(),
        psi_plus: plus,
        psi_minus: minus,
        delta: delta.rem_euclid(TAU),
    })
}

/// Recovers `(φ, β)` from a decomposed pair.
pub fn reconstruct(pair: &WavePair) -> (QuantumState, QuantumState) {
    let back = Complex64::from_polar(1.0, -pair.delta);
    let phi = pair
        .psi_plus
        .iter()
        .zip(&pair.psi_minus)
        .map(|(p, m)| p - m)
        .collect();
    let beta = pair
        .psi_plus
        .iter()
        .zip(&pair.psi_minus)
        .map(|(p, m)| back * (p + m))
        .collect();
    (
        QuantumState::from_parts(pair.layout.clone(), phi),
        QuantumState::from_parts(pair.layout.clone(), beta),
    )
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "density matrices of different size");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Rows of `[re, im]` pairs, for JSON output.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect()
    }

    fn add_outer(&mut self, v: &[Complex64], weight: f64) {
        for (i, vi) in v.iter().enumerate() {
            if *vi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &mut self.entries[i * self.dim..(i + 1) * self.dim];
            for (slot, vj) in row.iter_mut().zip(v) {
                *slot += vi * vj.conj() * weight;
            }
        }
    }
}

/// `(1/K) Σ_k ψ(δ_k) ψ(δ_k)†` over the uniform grid `δ_k = 2πk/K`.
pub fn delta_averaged_density(
    phi: &QuantumState,
    beta: &QuantumState,
    which: Wave,
    grid: usize,
) -> Result<DensityMatrix, WaveError> {
    if grid < 2 {
        return Err(WaveError::GridTooSmall(grid));
    }
    let mut rho = DensityMatrix::zeros(phi.amplitudes().len());
    let weight = 1.0 / grid as f64;
    for k in 0..grid {
        let pair = decompose(phi, beta, TAU * k as f64 / grid as f64)?;
        rho.add_outer(pair.wave(which), weight);
    }
    Ok(rho)
}

/// `‖ψ±‖² = ¼(2 ± 2 Re(e^{iδ}⟨φ|β⟩))`.
pub fn wave_norm_sqr_closed_form(
    phi: &QuantumState,
    beta: &QuantumState,
    delta: f64,
    which: Wave,
) -> f64 {
    let overlap = Complex64::from_polar(1.0, delta)
        * crate::statevec::inner(phi.amplitudes(), beta.amplitudes());
    let sign = match which {
        Wave::Plus => 1.0,
        Wave::Minus => -1.0,
    };
    0.25 * (2.0 + sign * 2.0 * overlap.re)
}

/// Largest Euclidean distance between the reconstruction and the inputs.
pub fn round_trip_error(
    phi: &QuantumState,
    beta: &QuantumState,
    delta: f64,
) -> Result<f64, WaveError> {
    let (p, b) = reconstruct(&decompose(phi, beta, delta)?);
    Ok(distance(p.amplitudes(), phi.amplitudes()).max(distance(b.amplitudes(), beta.amplitudes())))
}
