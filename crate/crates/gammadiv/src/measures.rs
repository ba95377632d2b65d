//! Finite point sets, probability weights on them, metric ground costs, and
//! the Lipschitz class `b·Lip(c)`.
//!
//! Measures are weight vectors indexed by a shared [`PointSet`]; the support is
//! the set of indices with positive weight. Files carry their own coordinates
//! and are brought onto a common point set by [`merge_supports`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{CostViolation, Error, Result};

const MAX_REPORTED_VIOLATIONS: usize = 64;

/// A point: coordinates in ℝ^d, or an abstract label when the cost is explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Coords(Vec<f64>),
    Scalar(f64),
    Label(String),
}

impl Point {
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(v) => Some(v),
            Point::Scalar(x) => Some(std::slice::from_ref(x)),
            Point::Label(_) => None,
        }
    }

    /// Equality used for deduplication: exact coordinates, `-0.0 == 0.0`.
    pub fn same_as(&self, other: &Point) -> bool {
        self.key() == other.key()
    }

    fn key(&self) -> PointKey {
        match self.coords() {
            // +0.0 folds -0.0 onto 0.0 so they dedup together
            Some(c) => PointKey::Coords(c.iter().map(|x| (x + 0.0).to_bits()).collect()),
            None => match self {
                Point::Label(s) => PointKey::Label(s.clone()),
                _ => unreachable!(),
            },
        }
    }
}

#[derive(Hash, PartialEq, Eq)]
enum PointKey {
    Coords(Vec<u64>),
    Label(String),
}

/// Pairwise distinct points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(points.len());
        let mut dim = None;
        for (i, p) in points.iter().enumerate() {
            if let Some(c) = p.coords() {
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!("point {i} has non-finite coordinates")));
                }
                if *dim.get_or_insert(c.len()) != c.len() {
                    return Err(Error::InvalidInput(format!("point {i} has inconsistent dimension")));
                }
            }
            if let Some(j) = seen.insert(p.key(), i) {
                return Err(Error::InvalidInput(format!("points {j} and {i} coincide")));
            }
        }
        Ok(Self { points })
    }

    pub fn from_coords(coords: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(coords.into_iter().map(Point::Coords).collect())
    }

    /// Points `x_1..x_n` on the real line.
    pub fn from_line(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Point::Coords(vec![x])).collect())
    }

    /// `n` abstract labels `"0".."n-1"`; usable only with an explicit cost matrix.
    pub fn labels(n: usize) -> Self {
        Self { points: (0..n).map(|i| Point::Label(i.to_string())).collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.points.iter().position(|q| q.same_as(p))
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.points[i].coords()
    }

    /// Coordinates of 1-D points, if every point is one.
    pub fn line_coords(&self) -> Option<Vec<f64>> {
        self.points
            .iter()
            .map(|p| match p.coords() {
                Some([x]) => Some(*x),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Metric::Manhattan => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            _ => Err(Error::InvalidInput(format!("unknown metric {s:?}"))),
        }
    }
}

/// Metric ground cost `c` on a point set together with the scale `b`, so that
/// the admissible class is `Γ = b·Lip(c)` and the effective cost is `b·c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
    scale: f64,
    max_entry: f64,
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("scale b must be positive and finite, got {scale}")))
    }
}

/// Validates a square matrix as a metric and wraps it with scale `b`.
///
/// All violated constraints are reported (up to 64), each with witness indices.
/// Comparisons allow a relative slack of 1e-12 for rounding in computed distances.
pub fn validate_cost(entries: &[Vec<f64>], scale: f64) -> Result<CostMatrix> {
    check_scale(scale)?;
    let n = entries.len();
    let mut bad = Vec::new();
    for (row, r) in entries.iter().enumerate() {
        if r.len() != n {
            bad.push(CostViolation::NotSquare { row, len: r.len(), expected: n });
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidCost(bad));
    }
    let max_entry = entries.iter().flatten().fold(0.0f64, |m, &x| if x.is_finite() { m.max(x) } else { m });
    let slack = 1e-12 * max_entry.max(1.0);
    let push = |v: CostViolation, bad: &mut Vec<CostViolation>| {
        if bad.len() < MAX_REPORTED_VIOLATIONS {
            bad.push(v);
        }
    };
    for i in 0..n {
        for j in 0..n {
            let c = entries[i][j];
            if !c.is_finite() {
                push(CostViolation::NotFinite { i, j }, &mut bad);
            } else if c < 0.0 {
                push(CostViolation::Negative { i, j, value: c }, &mut bad);
            } else if i == j && c != 0.0 {
                push(CostViolation::NonzeroDiagonal { i, value: c }, &mut bad);
            } else if i != j && c == 0.0 {
                push(CostViolation::ZeroOffDiagonal { i, j }, &mut bad);
            }
            if i < j && (c - entries[j][i]).abs() > slack {
                push(CostViolation::Asymmetric { i, j, cij: c, cji: entries[j][i] }, &mut bad);
            }
        }
    }
    if bad.is_empty() {
        'outer: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let via = entries[i][j] + entries[j][k];
                    if entries[i][k] > via + slack {
                        push(CostViolation::Triangle { i, j, k, cik: entries[i][k], via }, &mut bad);
                        if bad.len() >= MAX_REPORTED_VIOLATIONS {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidCost(bad));
    }
    Ok(CostMatrix { n, entries: entries.concat(), scale, max_entry })
}

impl CostMatrix {
    /// Distance matrix of a coordinate point set. Metric properties hold by
    /// construction, so only positivity off the diagonal is checked.
    pub fn from_metric(points: &PointSet, metric: Metric, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        let n = points.len();
        let coords: Vec<&[f64]> = (0..n)
            .map(|i| {
                points
                    .coords(i)
                    .ok_or_else(|| Error::InvalidInput("metric costs need coordinate points".into()))
            })
            .collect::<Result<_>>()?;
        let mut entries = vec![0.0; n * n];
        let mut max_entry = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = metric.distance(coords[i], coords[j]);
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::InvalidCost(vec![CostViolation::ZeroOffDiagonal { i, j }]));
                }
                entries[i * n + j] = d;
                entries[j * n + i] = d;
                max_entry = max_entry.max(d);
            }
        }
        Ok(Self { n, entries, scale, max_entry })
    }

    /// Same ground cost with a different scale `b`.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self { scale, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unscaled ground cost `c(i,j)`.
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Effective cost `b·c(i,j)`.
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.scale * self.entries[i * self.n + j]
    }

    pub fn max_cost(&self) -> f64 {
        self.max_entry
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }
}

fn clamp_and_normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w.iter_mut().filter(|x| **x < 1e-15).for_each(|x| *x = 0.0);
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Probability weights on the points of a [`PointSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Weights must be nonnegative and sum to 1 within 1e-6; they are
    /// renormalized, and entries below 1e-15 are dropped.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let s = Self::check_masses(&weights)?;
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidMeasure(format!("weights sum to {s}, not 1")));
        }
        Ok(Self { weights: clamp_and_normalize(weights) })
    }

    /// Normalizes arbitrary nonnegative masses with positive total.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        Self::check_masses(&masses)?;
        Ok(Self { weights: clamp_and_normalize(masses) })
    }

    /// Weights already summing to 1; tiny entries are kept as they are.
    pub(crate) fn from_normalized(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    fn check_masses(w: &[f64]) -> Result<f64> {
        if w.is_empty() {
            return Err(Error::InvalidMeasure("no points".into()));
        }
        if let Some(i) = w.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {i} = {} is negative or not finite", w[i])));
        }
        let s: f64 = w.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidMeasure("total mass is zero".into()));
        }
        Ok(s)
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// First point charged by `self` but not by `reference`, if any.
    pub fn not_abs_cont_at(&self, reference: &DiscreteMeasure) -> Option<usize> {
        (0..self.len()).find(|&i| self.weights[i] > 0.0 && reference.weights[i] == 0.0)
    }

    pub fn total_variation(&self, other: &DiscreteMeasure) -> f64 {
        0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// `Σ f_i w_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).filter(|(w, _)| **w > 0.0).map(|(w, x)| w * x).sum()
    }

    /// `(1−t)·self + t·other`.
    pub fn mix(&self, other: &DiscreteMeasure, t: f64) -> DiscreteMeasure {
        let w = self.weights.iter().zip(&other.weights).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        DiscreteMeasure { weights: w }
    }
}

/// Weights of either sign; directions of perturbation have total mass 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedMeasure {
    weights: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPerturbation("non-finite weight".into()));
        }
        Ok(Self { weights })
    }

    pub fn zero(n: usize) -> Self {
        Self { weights: vec![0.0; n] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn negated(&self) -> Self {
        Self { weights: self.weights.iter().map(|x| -x).collect() }
    }
}

/// One value per point; a member of `b·Lip(c)` when it passes [`LipschitzFunction::check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LipschitzFunction {
    values: Vec<f64>,
}

impl LipschitzFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|x| x + c).collect() }
    }

    /// Largest `g_i − g_j − b·c_ij` over all pairs, with its indices.
    pub fn max_violation(&self, cost: &CostMatrix) -> (usize, usize, f64) {
        let n = self.values.len();
        let mut worst = (0, 0, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let e = self.values[i] - self.values[j] - cost.w(i, j);
                if e > worst.2 {
                    worst = (i, j, e);
                }
            }
        }
        worst
    }

    /// Checks `g_i − g_j ≤ b·c_ij` for all pairs, allowing rounding slack
    /// of 1e-10 relative to the largest effective cost.
    pub fn check(&self, cost: &CostMatrix) -> Result<()> {
        if self.values.len() != cost.len() {
            return Err(Error::SizeMismatch { expected: cost.len(), got: self.values.len() });
        }
        let slack = 1e-10 * (cost.scale() * cost.max_cost()).max(1.0);
        let (i, j, excess) = self.max_violation(cost);
        if excess > slack {
            return Err(Error::NotLipschitz { i, j, excess });
        }
        Ok(())
    }
}

/// Maximal `b·Lip(c)` extension `ĝ(x) = min_{y ∈ reference} g(y) + b·c(x,y)`.
///
/// Only `values[y]` for `y` in `reference` are read. The result agrees with `g`
/// on the reference set when `g` is already Lipschitz there, and otherwise
/// tightens it.
pub fn project_lipschitz(values: &[f64], reference: &[usize], cost: &CostMatrix) -> Result<LipschitzFunction> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("empty reference set".into()));
    }
    if values.len() != cost.len() {
        return Err(Error::SizeMismatch { expected: cost.len(), got: values.len() });
    }
    let out = (0..cost.len())
        .map(|x| reference.iter().map(|&y| values[y] + cost.w(x, y)).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(LipschitzFunction { values: out })
}

/// Ground cost description as it appears in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_b: Option<f64>,
}

impl CostSpec {
    pub fn metric(metric: Metric, scale_b: f64) -> Self {
        Self { metric: Some(metric), matrix: None, scale_b: Some(scale_b) }
    }

    /// Builds the cost on `points`; an explicit matrix must index them in order.
    pub fn build(&self, points: &PointSet) -> Result<CostMatrix> {
        let scale = self.scale_b.unwrap_or(1.0);
        match (&self.matrix, self.metric) {
            (Some(_), Some(_)) => Err(Error::InvalidInput("give either metric or matrix, not both".into())),
            (Some(m), None) => {
                if m.len() != points.len() {
                    return Err(Error::SizeMismatch { expected: points.len(), got: m.len() });
                }
                validate_cost(m, scale)
            }
            (None, metric) => CostMatrix::from_metric(points, metric.unwrap_or(Metric::Euclidean), scale),
        }
    }
}

/// A measure carrying its own points, as read from a file:
/// `{ "points": [[x,...],...], "weights": [w,...], "cost": {...} }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
}

impl LocatedMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Self {
        Self { points, weights, cost: None }
    }

    pub fn on_line(xs: &[f64], weights: Vec<f64>) -> Self {
        Self::new(xs.iter().map(|&x| Point::Coords(vec![x])).collect(), weights)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Result of [`merge_supports`].
#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub points: PointSet,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

/// Union of the two point lists, ν's points first and then μ-only points, with
/// both measures re-expressed on it. Repeated coordinates collapse to one
/// point carrying the summed weight.
pub fn merge_supports(mu: &LocatedMeasure, nu: &LocatedMeasure) -> Result<Merged> {
    for (name, m) in [("mu", mu), ("nu", nu)] {
        if m.points.len() != m.weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{name}: {} points but {} weights",
                m.points.len(),
                m.weights.len()
            )));
        }
    }
    let mut index: HashMap<PointKey, usize> = HashMap::new();
    let mut points = Vec::new();
    let mut place = |p: &Point| -> usize {
        *index.entry(p.key()).or_insert_with(|| {
            points.push(p.clone());
            points.len() - 1
        })
    };
    let nu_idx: Vec<usize> = nu.points.iter().map(&mut place).collect();
    let mu_idx: Vec<usize> = mu.points.iter().map(&mut place).collect();
    let points = PointSet::new(points)?;
    let spread = |idx: &[usize], w: &[f64]| {
        let mut out = vec![0.0; points.len()];
        for (&i, &x) in idx.iter().zip(w) {
            out[i] += x;
        }
        out
    };
    let mu_w = DiscreteMeasure::new(spread(&mu_idx, &mu.weights))?;
    let nu_w = DiscreteMeasure::new(spread(&nu_idx, &nu.weights))?;
    Ok(Merged { points, mu: mu_w, nu: nu_w })
}
