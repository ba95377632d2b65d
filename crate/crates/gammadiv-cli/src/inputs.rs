use std::fmt;
use std::path::Path;

use gammadiv::{
    merge_supports, validate_cost, CostMatrix, LocatedMeasure, Merged, Metric, Point, PointSet, SignedMeasure,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Failure with its exit code: 2 for I/O and parsing, 3 for validation.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl From<gammadiv::Error> for CliError {
    fn from(e: gammadiv::Error) -> Self {
        match e {
            gammadiv::Error::Parse(e) => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Cost as resolved from the command line or the measure files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostInput {
    Metric { metric: Metric, scale_b: f64 },
    Table { points: Vec<Point>, matrix: Vec<Vec<f64>>, scale_b: f64 },
}

/// `{ "points": [...], "matrix": [[...]] }`
#[derive(Debug, Clone, Deserialize)]
pub struct CostTable {
    pub points: Vec<Point>,
    pub matrix: Vec<Vec<f64>>,
}

impl CostInput {
    /// `--cost euclidean|manhattan|<file>`, else a cost embedded in ν's or
    /// μ's file, else Euclidean. `--scale-b` overrides any embedded scale.
    pub fn resolve(
        flag: Option<&str>,
        scale: Option<f64>,
        files: &[&LocatedMeasure],
    ) -> Result<CostInput, CliError> {
        let embedded = files.iter().find_map(|m| m.cost.as_ref().map(|c| (*m, c)));
        let scale_b = scale.or(embedded.and_then(|(_, c)| c.scale_b)).unwrap_or(1.0);
        if let Some(flag) = flag {
            return Ok(match flag.parse::<Metric>() {
                Ok(metric) => CostInput::Metric { metric, scale_b },
                Err(_) => {
                    let t: CostTable = read_json(Path::new(flag))?;
                    CostInput::Table { points: t.points, matrix: t.matrix, scale_b }
                }
            });
        }
        Ok(match embedded {
            Some((m, spec)) => match &spec.matrix {
                Some(matrix) => CostInput::Table { points: m.points.clone(), matrix: matrix.clone(), scale_b },
                None => CostInput::Metric { metric: spec.metric.unwrap_or(Metric::Euclidean), scale_b },
            },
            None => CostInput::Metric { metric: Metric::Euclidean, scale_b },
        })
    }

    pub fn build(&self, points: &PointSet) -> Result<CostMatrix, CliError> {
        match self {
            CostInput::Metric { metric, scale_b } => Ok(CostMatrix::from_metric(points, *metric, *scale_b)?),
            CostInput::Table { points: table_points, matrix, scale_b } => {
                let table = PointSet::new(table_points.clone())?;
                if matrix.len() != table.len() {
                    return Err(CliError::Invalid(format!(
                        "cost table has {} points but {} rows",
                        table.len(),
                        matrix.len()
                    )));
                }
                let idx = points
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        table.index_of(p).ok_or_else(|| CliError::Invalid(format!("point {k} ({p:?}) missing from cost table")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let sub: Vec<Vec<f64>> = idx
                    .iter()
                    .map(|&i| idx.iter().map(|&j| matrix[i].get(j).copied().unwrap_or(f64::NAN)).collect())
                    .collect();
                Ok(validate_cost(&sub, *scale_b)?)
            }
        }
    }
}

/// Everything a two-measure command reads, in a form the report embeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInputs {
    pub mu: LocatedMeasure,
    pub nu: LocatedMeasure,
    pub cost: CostInput,
}

pub struct Problem {
    pub merged: Merged,
    pub cost: CostMatrix,
}

impl ProblemInputs {
    pub fn load(mu: &Path, nu: &Path, cost: Option<&str>, scale: Option<f64>) -> Result<Self, CliError> {
        let mu: LocatedMeasure = read_json(mu)?;
        let nu: LocatedMeasure = read_json(nu)?;
        let cost = CostInput::resolve(cost, scale, &[&nu, &mu])?;
        Ok(Self { mu, nu, cost })
    }

    pub fn with_scale(&self, b: f64) -> Self {
        let mut out = self.clone();
        match &mut out.cost {
            CostInput::Metric { scale_b, .. } | CostInput::Table { scale_b, .. } => *scale_b = b,
        }
        out
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let merged = merge_supports(&self.mu, &self.nu)?;
        let cost = self.cost.build(&merged.points)?;
        Ok(Problem { merged, cost })
    }
}

/// Direction ρ given on located points; every point must be in the merged set.
pub fn place_direction(rho: &LocatedMeasure, points: &PointSet) -> Result<SignedMeasure, CliError> {
    if rho.points.len() != rho.weights.len() {
        return Err(CliError::Invalid("rho: points and weights differ in length".into()));
    }
    let mut w = vec![0.0; points.len()];
    for (p, x) in rho.points.iter().zip(&rho.weights) {
        let i = points
            .index_of(p)
            .ok_or_else(|| CliError::Invalid(format!("rho point {p:?} is not in the support of mu or nu")))?;
        w[i] += x;
    }
    Ok(SignedMeasure::new(w)?)
}
