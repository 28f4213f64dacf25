//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::FRAC_1_SQRT_2;

use collapse_lab::satnet::CnfFormula;
use collapse_lab::statevec::{QuantumState, RegisterLayout};
use collapse_lab::zeno::{ConstrainedSubspace, ZenoInstance, ZenoTestbed};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// `exp(θ · P A P) φ`, where `A` generates the rotation of the qubit at
/// `bit` (`A|0⟩ = |1⟩`, `A|1⟩ = −|0⟩`) and `P` projects onto `indices`.
/// Built by diagonalizing the Hermitian matrix `i·PAP` on the subspace.
pub fn projected_generator_evolution(
    phi: &[Complex64],
    indices: &[usize],
    bit: usize,
    angle: f64,
) -> Vec<Complex64> {
    let d = indices.len();
    let position = |idx: usize| indices.iter().position(|&i| i == idx);
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for (col, &idx) in indices.iter().enumerate() {
        let partner = idx ^ (1 << bit);
        let sign = if idx & (1 << bit) == 0 { 1.0 } else { -1.0 };
        if let Some(row) = position(partner) {
            h[(row, col)] = Complex64::new(0.0, sign);
        }
    }
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors;
    let phase = DMatrix::from_diagonal(&DVector::from_iterator(
        d,
        eig.eigenvalues
            .iter()
            .map(|e| Complex64::from_polar(1.0, -angle * e)),
    ));
    let u = &v * phase * v.adjoint();
    let restricted = DVector::from_iterator(d, indices.iter().map(|&i| phi[i]));
    let evolved = u * restricted;
    let mut out = vec![Complex64::new(0.0, 0.0); phi.len()];
    for (k, &i) in indices.iter().enumerate() {
        out[i] = evolved[k];
    }
    out
}

/// `|x, y⟩` indices with `x` meeting the pinned literals and `y` the formula
/// value, by direct clause evaluation.
pub fn brute_force_consistent(instance: &ZenoInstance) -> Vec<usize> {
    let formula: &CnfFormula = instance.formula();
    (0..1u64 << instance.num_vars())
        .filter(|&x| {
            instance
                .fixed()
                .iter()
                .all(|&l| formula.literal_value(x, l))
        })
        .map(|x| ((x << 1) | u64::from(formula.evaluate(x))) as usize)
        .collect()
}

pub fn normalize(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|a| a / n).collect()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// A subspace with genuine projected dynamics: on `x = 0` both `y` values are
/// allowed, on `x = 1` only `y = 1`. Starts in `(|0,0⟩ + |1,1⟩)/√2`.
pub fn control_testbed() -> ZenoTestbed {
    let layout = RegisterLayout::new([("x", 1), ("y", 1)]).unwrap();
    let sub = ConstrainedSubspace::from_indices(layout.clone(), vec![0b00, 0b01, 0b11]).unwrap();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let phi = QuantumState::from_amplitudes(layout, vec![h, zero, zero, h]).unwrap();
    ZenoTestbed::custom(phi, sub, 1, &[0b01, 0b11]).unwrap()
}
