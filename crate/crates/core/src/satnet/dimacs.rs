//! DIMACS CNF reader.
//!
//! Accepts `c` comment lines, one `p cnf V C` header, and clauses as
//! whitespace-separated literals terminated by `0`. A clause may span lines.
//! A line starting with `%` ends the input (SATLIB convention).

use thiserror::Error;

use super::{CnfError, CnfFormula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: clause before `p cnf` header")]
    MissingHeader { line: usize },
    #[error("no `p cnf` header found")]
    NoHeader,
    #[error("line {line}: second header contradicts the first")]
    DuplicateHeader { line: usize },
    #[error("line {line}: malformed header `{text}`")]
    BadHeader { line: usize, text: String },
    #[error("line {line}: invalid token `{token}`")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal {literal} outside 1..={num_vars}")]
    LiteralOutOfRange {
        line: usize,
        literal: i64,
        num_vars: usize,
    },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("line {line}: clause not terminated by 0")]
    UnterminatedClause { line: usize },
    #[error("line {line}: header declares {expected} clauses, found {found}")]
    ClauseCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {source}")]
    Formula { line: usize, source: CnfError },
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut clause_start = 0;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            let parsed = parse_header(trimmed).ok_or_else(|| ParseError::BadHeader {
                line,
                text: trimmed.to_string(),
            })?;
            match header {
                Some(existing) if existing != parsed => {
                    return Err(ParseError::DuplicateHeader { line })
                }
                _ => header = Some(parsed),
            }
            continue;
        }
        let (num_vars, _) = header.ok_or(ParseError::MissingHeader { line })?;
        for token in trimmed.split_whitespace() {
            let literal: i64 = token.parse().map_err(|_| ParseError::BadToken {
                line,
                token: token.to_string(),
            })?;
            if literal == 0 {
                if current.is_empty() {
                    return Err(ParseError::EmptyClause { line });
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if literal.unsigned_abs() as usize > num_vars {
                return Err(ParseError::LiteralOutOfRange {
                    line,
                    literal,
                    num_vars,
                });
            }
            if current.is_empty() {
                clause_start = line;
            }
            current.push(literal as i32);
        }
    }

    let (num_vars, expected) = header.ok_or(ParseError::NoHeader)?;
    if !current.is_empty() {
        return Err(ParseError::UnterminatedClause { line: clause_start });
    }
    if clauses.len() != expected {
        return Err(ParseError::ClauseCount {
            line: last_line,
            expected,
            found: clauses.len(),
        });
    }
    CnfFormula::new(num_vars, clauses).map_err(|source| ParseError::Formula { line: 1, source })
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split_whitespace();
    if parts.next()? != "p" || parts.next()? != "cnf" {
        return None;
    }
    let vars = parts.next()?.parse().ok()?;
    let clauses = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((vars, clauses))
}

/// Writes a formula in the format [`parse_dimacs`] reads.
pub fn to_dimacs(formula: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", formula.num_vars(), formula.clauses().len());
    for clause in formula.clauses() {
        for lit in clause {
            out.push_str(&lit.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}
