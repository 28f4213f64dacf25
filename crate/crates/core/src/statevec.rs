//! Dense complex state vectors over named multi-qubit registers.
//!
//! Basis indices follow the register order of the layout: the first register
//! occupies the most significant bits and, within a register, the first qubit
//! is the most significant. `|x⟩ₐ|y⟩_b` therefore has index `x·2^|b| + y`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of a normalized state's squared norm from one.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Hard cap on the dense representation.
pub const MAX_QUBITS: usize = 26;

/// Input register of the two-register Simon layout.
pub const INPUT_REGISTER: &str = "a";
/// Output register of the two-register Simon layout.
pub const OUTPUT_REGISTER: &str = "b";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("register `{0}` has zero width")]
    ZeroWidth(String),
    #[error("duplicate register name `{0}`")]
    DuplicateRegister(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("bit string has {found} bits, expected {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("amplitude vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("squared norm {0} is not within 1e-10 of 1")]
    NotNormalized(f64),
    #[error("qubit index {index} out of range for {total} qubits")]
    QubitOutOfRange { index: usize, total: usize },
    #[error("{0} qubits exceeds the dense limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("invalid bit string `{0}`")]
    InvalidBits(String),
    #[error("value {value} does not fit in {width} bits")]
    ValueOverflow { value: u64, width: usize },
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("layouts differ")]
    LayoutMismatch,
}

pub type Result<T, E = StateError> = std::result::Result<T, E>;

/// A fixed-width bit string. The first character of the textual form is
/// the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    value: u64,
    width: usize,
}

impl Bits {
    pub fn new(value: u64, width: usize) -> Result<Self> {
        if width > 64 || (width < 64 && value >> width != 0) {
            return Err(StateError::ValueOverflow { value, width });
        }
        Ok(Self { value, width })
    }

    pub fn zeros(width: usize) -> Self {
        Self { value: 0, width }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

impl FromStr for Bits {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 64 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(StateError::InvalidBits(s.to_string()));
        }
        let value =
            u64::from_str_radix(s, 2).map_err(|_| StateError::InvalidBits(s.to_string()))?;
        Ok(Self {
            value,
            width: s.len(),
        })
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width == 0 {
            return Ok(());
        }
        write!(f, "{:0width$b}", self.value, width = self.width)
    }
}

/// One named register and its position inside a layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    name: String,
    width: usize,
    shift: usize,
}

impl Register {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Bit offset of the register's least significant qubit.
    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Number of basis values, `2^width`.
    pub fn dim(&self) -> usize {
        1 << self.width
    }

    fn mask(&self) -> usize {
        self.dim() - 1
    }

    /// Value held by this register in basis index `index`.
    pub fn extract(&self, index: usize) -> usize {
        (index >> self.shift) & self.mask()
    }

    /// Replace this register's value inside `index`.
    pub fn replace(&self, index: usize, value: usize) -> usize {
        (index & !(self.mask() << self.shift)) | ((value & self.mask()) << self.shift)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    total_qubits: usize,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let named: Vec<(String, usize)> =
            registers.into_iter().map(|(n, w)| (n.into(), w)).collect();
        for (i, (name, width)) in named.iter().enumerate() {
            if *width == 0 {
                return Err(StateError::ZeroWidth(name.clone()));
            }
            if named[..i].iter().any(|(other, _)| other == name) {
                return Err(StateError::DuplicateRegister(name.clone()));
            }
        }
        let total_qubits: usize = named.iter().map(|(_, w)| w).sum();
        if total_qubits > MAX_QUBITS {
            return Err(StateError::TooManyQubits(total_qubits));
        }
        let mut shift = total_qubits;
        let registers = named
            .into_iter()
            .map(|(name, width)| {
                shift -= width;
                Register { name, width, shift }
            })
            .collect();
        Ok(Self {
            registers,
            total_qubits,
        })
    }

    pub fn single(name: &str, width: usize) -> Result<Self> {
        Self::new([(name, width)])
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    /// Dimension of the full Hilbert space.
    pub fn dim(&self) -> usize {
        1 << self.total_qubits
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| StateError::UnknownRegister(name.to_string()))
    }

    /// The layout left over after contracting away register `name`.
    pub fn without(&self, name: &str) -> Result<Self> {
        self.register(name)?;
        Self::new(
            self.registers
                .iter()
                .filter(|r| r.name != name)
                .map(|r| (r.name.clone(), r.width)),
        )
    }

    /// Bit position (in a basis index) of global qubit `qubit`, counted from
    /// the most significant qubit.
    pub fn qubit_bit(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.total_qubits {
            return Err(StateError::QubitOutOfRange {
                index: qubit,
                total: self.total_qubits,
            });
        }
        Ok(self.total_qubits - 1 - qubit)
    }
}

/// A classical function evaluated by an oracle on basis values.
pub trait BooleanFunction {
    fn input_width(&self) -> usize;
    fn output_width(&self) -> usize;
    fn eval(&self, x: u64) -> u64;
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(StateError::LengthMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Skips the norm check; for callers whose construction is norm-preserving.
    pub(crate) fn from_parts(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.dim());
        Self { layout, amplitudes }
    }

    /// Computational basis state given as one bit string over all qubits.
    pub fn prepare_basis(layout: RegisterLayout, bits: &Bits) -> Result<Self> {
        if bits.width() != layout.total_qubits() {
            return Err(StateError::WidthMismatch {
                expected: layout.total_qubits(),
                found: bits.width(),
            });
        }
        Ok(Self::basis(layout, bits.value() as usize))
    }

    pub(crate) fn basis(layout: RegisterLayout, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(StateError::LayoutMismatch);
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Euclidean distance between amplitude vectors (phase sensitive).
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout {
            return Err(StateError::LayoutMismatch);
        }
        Ok(distance(&self.amplitudes, &other.amplitudes))
    }

    /// Walsh–Hadamard transform on every qubit of `register`.
    pub fn apply_hadamard(mut self, register: &str) -> Result<Self> {
        let reg = self.layout.register(register)?.clone();
        let scale = (0.5f64).sqrt();
        let slices = self.layout.dim() >> reg.width;
        let lo_mask = (1usize << reg.shift) - 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); reg.dim()];
        for slice in 0..slices {
            let base = ((slice & !lo_mask) << reg.width) | (slice & lo_mask);
            let mut any = false;
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = self.amplitudes[base | (k << reg.shift)];
                any |= *slot != Complex64::new(0.0, 0.0);
            }
            // H acting on an all-zero slice leaves it zero
            if !any {
                continue;
            }
            let mut half = 1;
            while half < buf.len() {
                for block in (0..buf.len()).step_by(2 * half) {
                    for i in block..block + half {
                        let (u, v) = (buf[i], buf[i + half]);
                        buf[i] = (u + v) * scale;
                        buf[i + half] = (u - v) * scale;
                    }
                }
                half *= 2;
            }
            for (k, amp) in buf.iter().enumerate() {
                self.amplitudes[base | (k << reg.shift)] = *amp;
            }
        }
        Ok(self)
    }

    /// `|x⟩_in|y⟩_out → |x⟩_in|y ⊕ f(x)⟩_out`.
    pub fn apply_function<F: BooleanFunction + ?Sized>(
        self,
        f: &F,
        input: &str,
        output: &str,
    ) -> Result<Self> {
        let inp = self.layout.register(input)?.clone();
        let out = self.layout.register(output)?.clone();
        if inp.width != f.input_width() {
            return Err(StateError::WidthMismatch {
                expected: f.input_width(),
                found: inp.width,
            });
        }
        if out.width != f.output_width() {
            return Err(StateError::WidthMismatch {
                expected: f.output_width(),
                found: out.width,
            });
        }
        Ok(self.apply_permutation(|idx| {
            let x = inp.extract(idx);
            let y = out.extract(idx) ^ f.eval(x as u64) as usize;
            out.replace(idx, y)
        }))
    }

    /// Oracle step on the standard `a`/`b` registers.
    pub fn apply_oracle<F: BooleanFunction + ?Sized>(self, f: &F) -> Result<Self> {
        self.apply_function(f, INPUT_REGISTER, OUTPUT_REGISTER)
    }

    /// Moves the amplitude of basis index `i` to `perm(i)`. `perm` must be a
    /// bijection on `0..dim`.
    pub fn apply_permutation(self, perm: impl Fn(usize) -> usize) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            if *amp != Complex64::new(0.0, 0.0) {
                out[perm(idx)] = *amp;
            }
        }
        Self {
            layout: self.layout,
            amplitudes: out,
        }
    }

    /// Real rotation `|0⟩ → cos θ|0⟩ + sin θ|1⟩`, `|1⟩ → −sin θ|0⟩ + cos θ|1⟩`.
    pub fn apply_rotation(mut self, qubit: usize, angle: f64) -> Result<Self> {
        let bit = self.layout.qubit_bit(qubit)?;
        rotate_in_place(&mut self.amplitudes, bit, angle);
        Ok(self)
    }

    /// Contracts `register` against the bra `⟨value|`.
    pub fn partial_inner(&self, register: &str, value: &Bits) -> Result<UnnormalizedState> {
        let reg = self.layout.register(register)?;
        if value.width() != reg.width {
            return Err(StateError::WidthMismatch {
                expected: reg.width,
                found: value.width(),
            });
        }
        let rest = self.layout.without(register)?;
        let lo_mask = (1usize << reg.shift) - 1;
        let fixed = (value.value() as usize) << reg.shift;
        let amplitudes: Vec<Complex64> = (0..rest.dim())
            .map(|r| self.amplitudes[((r & !lo_mask) << reg.width) | fixed | (r & lo_mask)])
            .collect();
        Ok(UnnormalizedState::new(rest, amplitudes))
    }

    pub fn to_dump(&self) -> StateDump {
        StateDump::new(&self.layout, &self.amplitudes)
    }

    pub fn from_dump(dump: &StateDump) -> Result<Self> {
        let (layout, amplitudes) = dump.parts()?;
        Self::from_amplitudes(layout, amplitudes)
    }
}

/// A vector that need not have unit norm, e.g. a contraction or projection.
#[derive(Debug, Clone, PartialEq)]
pub struct UnnormalizedState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
    norm_sqr: f64,
}

impl UnnormalizedState {
    pub(crate) fn new(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Self {
        let norm_sqr = norm_sqr(&amplitudes);
        debug_assert!(norm_sqr <= 1.0 + NORM_TOLERANCE);
        Self {
            layout,
            amplitudes,
            norm_sqr,
        }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn normalize(self) -> Result<QuantumState> {
        if self.norm_sqr == 0.0 {
            return Err(StateError::ZeroNorm);
        }
        let inv = 1.0 / self.norm_sqr.sqrt();
        let amplitudes = self.amplitudes.into_iter().map(|a| a * inv).collect();
        Ok(QuantumState::from_parts(self.layout, amplitudes))
    }

    /// Multiplies by a real factor and checks that the result is normalized.
    pub fn scale_to_state(self, factor: f64) -> Result<QuantumState> {
        let amplitudes = self.amplitudes.into_iter().map(|a| a * factor).collect();
        QuantumState::from_amplitudes(self.layout, amplitudes)
    }
}

/// JSON debug dump: layout plus `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    pub layout: Vec<RegisterDump>,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterDump {
    pub name: String,
    pub width: usize,
}

impl StateDump {
    fn new(layout: &RegisterLayout, amplitudes: &[Complex64]) -> Self {
        Self {
            layout: layout
                .registers()
                .iter()
                .map(|r| RegisterDump {
                    name: r.name.clone(),
                    width: r.width,
                })
                .collect(),
            amplitudes: amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    fn parts(&self) -> Result<(RegisterLayout, Vec<Complex64>)> {
        let layout = RegisterLayout::new(self.layout.iter().map(|r| (r.name.clone(), r.width)))?;
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        Ok((layout, amplitudes))
    }
}

pub(crate) fn rotate_in_place(amplitudes: &mut [Complex64], bit: usize, angle: f64) {
    let (s, c) = angle.sin_cos();
    let m = 1usize << bit;
    for idx in 0..amplitudes.len() {
        if idx & m != 0 {
            continue;
        }
        let (a0, a1) = (amplitudes[idx], amplitudes[idx | m]);
        amplitudes[idx] = a0 * c - a1 * s;
        amplitudes[idx | m] = a0 * s + a1 * c;
    }
}

pub(crate) fn norm_sqr(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
