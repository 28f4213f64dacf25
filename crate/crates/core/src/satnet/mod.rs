//! CNF instances, their compilation to reversible Toffoli networks, and a
//! brute-force satisfiability oracle.
//!
//! Assignments are packed into a `u64` with variable 1 in the most
//! significant of the `num_vars` bits, matching the input register order.

mod circuit;
mod dimacs;

pub use circuit::{compile, eval, EvalRecord, Gate, ReversibleCircuit};
pub use dimacs::{parse_dimacs, to_dimacs, ParseError};

use thiserror::Error;

pub const MAX_BRUTE_FORCE_VARS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("formula needs at least one variable")]
    NoVariables,
    #[error("{0} variables exceeds the supported 63")]
    TooWide(usize),
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} references variable {literal} outside 1..={num_vars}")]
    LiteralOutOfRange {
        clause: usize,
        literal: i32,
        num_vars: usize,
    },
    #[error("{0} variables is too many for exhaustive enumeration (limit {MAX_BRUTE_FORCE_VARS})")]
    TooManyVariables(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, CnfError> {
        if num_vars == 0 {
            return Err(CnfError::NoVariables);
        }
        if num_vars > 63 {
            return Err(CnfError::TooWide(num_vars));
        }
        for (i, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(CnfError::EmptyClause { clause: i });
            }
            if let Some(&literal) = clause
                .iter()
                .find(|l| **l == 0 || l.unsigned_abs() as usize > num_vars)
            {
                return Err(CnfError::LiteralOutOfRange {
                    clause: i,
                    literal,
                    num_vars,
                });
            }
        }
        Ok(Self { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Truth value of `literal` under a packed assignment.
    pub fn literal_value(&self, assignment: u64, literal: i32) -> bool {
        let var = literal.unsigned_abs() as usize;
        let bit = assignment >> (self.num_vars - var) & 1 == 1;
        bit == (literal > 0)
    }

    pub fn evaluate(&self, assignment: u64) -> bool {
        self.clauses
            .iter()
            .all(|clause| clause.iter().any(|&l| self.literal_value(assignment, l)))
    }

    /// This formula with extra clauses appended.
    pub fn with_clauses(
        &self,
        extra: impl IntoIterator<Item = Vec<i32>>,
    ) -> Result<Self, CnfError> {
        let mut clauses = self.clauses.clone();
        clauses.extend(extra);
        Self::new(self.num_vars, clauses)
    }
}

/// All satisfying assignments, ascending.
pub fn brute_force_sat(formula: &CnfFormula) -> Result<Vec<u64>, CnfError> {
    if formula.num_vars > MAX_BRUTE_FORCE_VARS {
        return Err(CnfError::TooManyVariables(formula.num_vars));
    }
    Ok((0..1u64 << formula.num_vars)
        .filter(|&a| formula.evaluate(a))
        .collect())
}
