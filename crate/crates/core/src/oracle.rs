//! Two-to-one functions with a hidden XOR period, `f(x) = f(x ⊕ r)`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::stream_rng;
use crate::statevec::{Bits, BooleanFunction};

pub const MAX_ORACLE_WIDTH: usize = 16;

/// RNG stream used for the image shuffle in [`random_periodic`].
const TABLE_STREAM: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("period must be nonzero")]
    ZeroPeriod,
    #[error("period {r:#b} does not fit in {n} bits")]
    PeriodTooWide { n: usize, r: u64 },
    #[error("input width {0} outside 1..={MAX_ORACLE_WIDTH}")]
    BadWidth(usize),
    #[error("table has {found} entries, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("table[{x}] != table[{x} ^ r]")]
    NotPeriodic { x: u64 },
    #[error("value {value} has more than two preimages")]
    NotTwoToOne { value: u64 },
    #[error("table value {value} does not fit in {n} bits")]
    ValueTooWide { n: usize, value: u64 },
}

/// `f: Bⁿ → Bⁿ`, 2-to-1 with period `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OracleRepr", into = "OracleRepr")]
pub struct PeriodicOracle {
    n: usize,
    r: u64,
    table: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct OracleRepr {
    n: usize,
    r: u64,
    table: Vec<u64>,
}

impl TryFrom<OracleRepr> for PeriodicOracle {
    type Error = OracleError;

    fn try_from(repr: OracleRepr) -> Result<Self, OracleError> {
        PeriodicOracle::from_table(repr.n, repr.r, repr.table)
    }
}

impl From<PeriodicOracle> for OracleRepr {
    fn from(o: PeriodicOracle) -> Self {
        OracleRepr {
            n: o.n,
            r: o.r,
            table: o.table,
        }
    }
}

fn check_shape(n: usize, r: u64) -> Result<(), OracleError> {
    if n == 0 || n > MAX_ORACLE_WIDTH {
        return Err(OracleError::BadWidth(n));
    }
    if r == 0 {
        return Err(OracleError::ZeroPeriod);
    }
    if r >> n != 0 {
        return Err(OracleError::PeriodTooWide { n, r });
    }
    Ok(())
}

impl PeriodicOracle {
    /// Builds an oracle from an explicit table, checking every invariant.
    pub fn from_table(n: usize, r: u64, table: Vec<u64>) -> Result<Self, OracleError> {
        check_shape(n, r)?;
        let oracle = Self { n, r, table };
        oracle.validate()?;
        Ok(oracle)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        check_shape(self.n, self.r)?;
        let size = 1usize << self.n;
        if self.table.len() != size {
            return Err(OracleError::TableLength {
                expected: size,
                found: self.table.len(),
            });
        }
        let mut count = vec![0u8; size];
        for x in 0..size as u64 {
            let v = self.table[x as usize];
            if v >> self.n != 0 {
                return Err(OracleError::ValueTooWide {
                    n: self.n,
                    value: v,
                });
            }
            if self.table[(x ^ self.r) as usize] != v {
                return Err(OracleError::NotPeriodic { x });
            }
            count[v as usize] += 1;
            if count[v as usize] > 2 {
                return Err(OracleError::NotTwoToOne { value: v });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    /// `N = 2ⁿ`.
    pub fn domain_size(&self) -> usize {
        1 << self.n
    }

    /// Image values in ascending order.
    pub fn image(&self) -> Vec<u64> {
        let mut image = self.table.clone();
        image.sort_unstable();
        image.dedup();
        image
    }
}

impl BooleanFunction for PeriodicOracle {
    fn input_width(&self) -> usize {
        self.n
    }

    fn output_width(&self) -> usize {
        self.n
    }

    fn eval(&self, x: u64) -> u64 {
        self.table[x as usize]
    }
}

/// Seeded random 2-to-1 oracle with period `r`. Each coset `{x, x⊕r}` gets
/// a distinct value taken from a shuffle of all `2ⁿ` outputs.
pub fn random_periodic(n: usize, r: u64, seed: u64) -> Result<PeriodicOracle, OracleError> {
    check_shape(n, r)?;
    let size = 1usize << n;
    let mut values: Vec<u64> = (0..size as u64).collect();
    values.shuffle(&mut stream_rng(seed, TABLE_STREAM));
    let mut table = vec![0u64; size];
    let mut next = values.into_iter();
    for x in 0..size as u64 {
        let partner = x ^ r;
        if x < partner {
            let v = next.next().expect("2^(n-1) cosets need at most 2^n values");
            table[x as usize] = v;
            table[partner as usize] = v;
        }
    }
    PeriodicOracle::from_table(n, r, table)
}

/// Exhaustive preimage search: `(x̄, x̄ ⊕ r)` in ascending order.
pub fn brute_force_reverse(oracle: &PeriodicOracle, value: &Bits) -> Option<(u64, u64)> {
    if value.width() != oracle.n {
        return None;
    }
    let mut hits =
        (0..oracle.domain_size() as u64).filter(|&x| oracle.table[x as usize] == value.value());
    let first = hits.next()?;
    let second = hits.next()?;
    Some((first, second))
}

/// Recovers `r` by scanning for a collision with `f(0)`.
pub fn brute_force_period(oracle: &PeriodicOracle) -> u64 {
    let target = oracle.table[0];
    (1..oracle.domain_size() as u64)
        .find(|&x| oracle.table[x as usize] == target)
        .expect("a valid oracle has a partner for 0")
}
