use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A violated metric property, with the witness indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostViolation {
    NotSquare { row: usize, len: usize, expected: usize },
    NotFinite { i: usize, j: usize },
    Negative { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    ZeroOffDiagonal { i: usize, j: usize },
    Asymmetric { i: usize, j: usize, cij: f64, cji: f64 },
    Triangle { i: usize, j: usize, k: usize, cik: f64, via: f64 },
}

impl fmt::Display for CostViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostViolation::NotSquare { row, len, expected } => {
                write!(f, "row {row} has {len} entries, expected {expected}")
            }
            CostViolation::NotFinite { i, j } => write!(f, "c[{i}][{j}] is not finite"),
            CostViolation::Negative { i, j, value } => write!(f, "c[{i}][{j}] = {value} < 0"),
            CostViolation::NonzeroDiagonal { i, value } => write!(f, "c[{i}][{i}] = {value} != 0"),
            CostViolation::ZeroOffDiagonal { i, j } => {
                write!(f, "c[{i}][{j}] = 0 for distinct points")
            }
            CostViolation::Asymmetric { i, j, cij, cji } => {
                write!(f, "c[{i}][{j}] = {cij} but c[{j}][{i}] = {cji}")
            }
            CostViolation::Triangle { i, j, k, cik, via } => {
                write!(f, "triangle violation at ({i},{j},{k}): c[{i}][{k}] = {cik} > c[{i}][{j}] + c[{j}][{k}] = {via}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid cost matrix: {}", join(.0))]
    InvalidCost(Vec<CostViolation>),
    #[error("not Lipschitz: g[{i}] - g[{j}] exceeds b*c[{i}][{j}] by {excess:e}")]
    NotLipschitz { i: usize, j: usize, excess: f64 },
    #[error("measure charges point {0} where the reference measure has no mass")]
    NotAbsolutelyContinuous(usize),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error("Jacobian [(P-I), 1] has rank {rank} < {n}: P has more than one recurrent class")]
    RankDeficient { rank: usize, n: usize },
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("f is not in R(Γ,p): potential violates g[{i}] - g[{j}] <= b*c by {excess:e}")]
    NotInRiskRange { i: usize, j: usize, excess: f64 },
    #[error("support of size {size} exceeds oracle limit {max}")]
    SupportTooLarge { size: usize, max: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

fn join(v: &[CostViolation]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
