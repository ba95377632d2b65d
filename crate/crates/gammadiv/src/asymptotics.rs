//! Behaviour of `G_{bΓ₀}` as the scale moves: `G → R` as `b → ∞`,
//! `G_{δΓ₀}/δ → W` as `δ → 0`, the large-b expansion for finite supports,
//! and the Dirac-versus-uniform example with its closed form.
//!
//! Sweeps take the ground cost from the given matrix and replace its scale.
//! Since `Γ_b ⊂ Γ_{b'}` for `b < b'`, a lower bound at `b` is also one at `b'`;
//! sweep values carry the running maximum forward, which keeps them exactly
//! monotone, and are clipped by the known upper limit.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::divergences::{relative_entropy, transport_cost};
use crate::error::{Error, Result};
use crate::gamma_core::{gamma_divergence, GammaSolution, SolverOptions};
use crate::measures::{CostMatrix, DiscreteMeasure, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// `b → ∞`, reference `R(μ‖ν)`.
    ToEntropy,
    /// `δ → 0`, reference `W(μ,ν)`, values reported as `G/δ`.
    ToTransport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSweep {
    pub mode: SweepMode,
    /// Increasing.
    pub scales: Vec<f64>,
    /// `G` at each scale; nondecreasing.
    pub values: Vec<f64>,
    /// `values` for the entropy sweep, `values/δ` for the transport sweep.
    pub normalized: Vec<f64>,
    /// `R(μ‖ν)` (possibly infinite) or `W(μ,ν)` with unit scale.
    pub reference: f64,
    pub gaps: Vec<f64>,
    pub certified: bool,
}

impl ScaleSweep {
    /// `scale,value,reference` rows, the value column being `normalized`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scale,value,reference\n");
        for (x, v) in self.scales.iter().zip(&self.normalized) {
            writeln!(s, "{x},{v},{}", self.reference).unwrap();
        }
        s
    }
}

fn sorted_scales(scales: &[f64]) -> Result<Vec<f64>> {
    if scales.is_empty() || scales.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidInput("scales must be positive and finite".into()));
    }
    let mut s = scales.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    Ok(s)
}

fn solve_all(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    scales: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<GammaSolution>> {
    crate::par_map(scales, |&b| gamma_divergence(mu, nu, &cost.with_scale(b)?, opts)).into_iter().collect()
}

fn running_max(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    v.map(|x| {
        best = best.max(x);
        best
    })
    .collect()
}

/// `G_{bΓ₀}(μ‖ν)` over increasing `b`, against `R(μ‖ν)`.
pub fn entropy_limit_sweep(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    scales: &[f64],
    opts: &SolverOptions,
) -> Result<ScaleSweep> {
    let scales = sorted_scales(scales)?;
    let sols = solve_all(mu, nu, cost, &scales, opts)?;
    let reference = relative_entropy(mu, nu);
    let values = running_max(sols.iter().map(|s| s.value.min(reference)));
    Ok(ScaleSweep {
        mode: SweepMode::ToEntropy,
        normalized: values.clone(),
        values,
        scales,
        reference,
        gaps: sols.iter().map(|s| s.duality_gap).collect(),
        certified: sols.iter().all(|s| s.certified),
    })
}

/// `G_{δΓ₀}(μ‖ν)/δ` over `δ ∈ (0,1]`, against `W(μ,ν)`.
pub fn transport_limit_sweep(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    deltas: &[f64],
    opts: &SolverOptions,
) -> Result<ScaleSweep> {
    let scales = sorted_scales(deltas)?;
    if scales.iter().any(|&d| d > 1.0) {
        return Err(Error::InvalidInput("delta must lie in (0, 1]".into()));
    }
    let sols = solve_all(mu, nu, cost, &scales, opts)?;
    let reference = transport_cost(mu, nu, &cost.with_scale(1.0)?)?.value;
    let values = running_max(sols.iter().zip(&scales).map(|(s, d)| s.value.min(d * reference)));
    let normalized = values.iter().zip(&scales).map(|(v, d)| (v / d).min(reference)).collect();
    Ok(ScaleSweep {
        mode: SweepMode::ToTransport,
        normalized,
        values,
        scales,
        reference,
        gaps: sols.iter().map(|s| s.duality_gap).collect(),
        certified: sols.iter().all(|s| s.certified),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// Each μ-atom's mass moved to its nearest ν-atom.
    pub gamma_star_limit: DiscreteMeasure,
    /// `W(μ,γ*)` with unit scale: the coefficient of `b`.
    pub leading: f64,
    /// `R(γ*‖ν)`.
    pub constant: f64,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    /// `G_b − b·leading − constant`, nonpositive.
    pub remainders: Vec<f64>,
    /// μ-atoms whose nearest ν-atom is not unique (resolved to the lowest index).
    pub ties: Vec<usize>,
    pub warnings: Vec<String>,
    pub certified: bool,
}

/// Nearest-neighbour aggregation of μ onto supp(ν) and the resulting
/// `G_b = b·W(μ,γ*) + R(γ*‖ν) + o(1)` expansion.
pub fn discrete_expansion(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    scales: &[f64],
    opts: &SolverOptions,
) -> Result<ExpansionReport> {
    let cols = nu.support();
    if cols.is_empty() {
        return Err(Error::InvalidInput("empty support for nu".into()));
    }
    let scales = sorted_scales(scales)?;
    let mut limit = vec![0.0; nu.len()];
    let mut leading = 0.0;
    let mut ties = Vec::new();
    let mut warnings = Vec::new();
    for i in mu.support() {
        let mut best = cols[0];
        for &j in &cols[1..] {
            if cost.c(i, j) < cost.c(i, best) {
                best = j;
            }
        }
        let d = cost.c(i, best);
        let tied: Vec<usize> =
            cols.iter().copied().filter(|&j| j != best && (cost.c(i, j) - d).abs() <= 1e-12 * d.max(1.0)).collect();
        if !tied.is_empty() {
            warnings.push(format!("point {i}: nearest atoms {best} and {tied:?} tie; using {best}"));
            ties.push(i);
        }
        limit[best] += mu.weights()[i];
        leading += mu.weights()[i] * d;
    }
    let gamma_star_limit = DiscreteMeasure::from_normalized(limit);
    let constant = relative_entropy(&gamma_star_limit, nu);
    let sols = solve_all(mu, nu, cost, &scales, opts)?;
    // γ* is feasible at every scale, so b·leading + constant bounds G from above
    let values: Vec<f64> = sols.iter().zip(&scales).map(|(s, b)| s.value.min(b * leading + constant)).collect();
    let remainders = values.iter().zip(&scales).map(|(v, b)| v - (b * leading + constant)).collect();
    Ok(ExpansionReport {
        gamma_star_limit,
        leading,
        constant,
        values,
        remainders,
        scales,
        ties,
        warnings,
        certified: sols.iter().all(|s| s.certified),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub b: f64,
    pub n: usize,
    /// G on the n-point grid.
    pub value: f64,
    /// `log(b/(1−e^{−b}))`, the continuum value.
    pub closed_form: f64,
    /// `−log(mean_k e^{−b x_k})`, the exact grid value.
    pub grid_exact: f64,
    pub difference: f64,
    /// `W(δ₀, grid)` with unit cost, ≈ 1/2.
    pub transport: f64,
    /// `b·W`, the transport bound `G ≤ b/2`.
    pub scaled_transport: f64,
    pub duality_gap: f64,
    pub certified: bool,
    pub solution: GammaSolution,
}

/// The points of the example: grid midpoints `(k−0.5)/n`, then the origin.
pub fn scaling_grid(n: usize) -> (PointSet, DiscreteMeasure, DiscreteMeasure) {
    let mut xs: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
    xs.push(0.0);
    let points = PointSet::from_line(&xs).expect("distinct grid");
    let mut w = vec![1.0 / n as f64; n];
    w.push(0.0);
    let nu = DiscreteMeasure::from_normalized(w);
    (points, DiscreteMeasure::dirac(n + 1, n), nu)
}

/// `log(b/(1−e^{−b}))`.
pub fn scaling_closed_form(b: f64) -> f64 {
    b.ln() - (-(-b).exp_m1()).ln()
}

/// G between δ₀ and the n-point uniform grid on [0,1] with cost `b|x−y|`.
pub fn scaling_example(b: f64, n: usize, opts: &SolverOptions) -> Result<ScalingReport> {
    if n < 100 {
        return Err(Error::InvalidInput("grid needs at least 100 points".into()));
    }
    let (points, mu, nu) = scaling_grid(n);
    let unit = CostMatrix::from_metric(&points, crate::measures::Metric::Euclidean, 1.0)?;
    let cost = unit.with_scale(b)?;
    let sol = gamma_divergence(&mu, &nu, &cost, opts)?;
    let transport = transport_cost(&mu, &nu, &unit)?.value;
    let closed_form = scaling_closed_form(b);
    let exps: Vec<f64> = (0..n).map(|k| -b * unit.c(n, k)).collect();
    let grid_exact = -crate::log_sum_exp_weighted(&exps, &nu.weights()[..n]);
    Ok(ScalingReport {
        b,
        n,
        value: sol.value,
        closed_form,
        grid_exact,
        difference: sol.value - closed_form,
        transport,
        scaled_transport: b * transport,
        duality_gap: sol.duality_gap,
        certified: sol.certified,
        solution: sol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Metric;

    fn two_points(c01: f64) -> CostMatrix {
        CostMatrix::from_metric(&PointSet::from_line(&[0.0, c01]).unwrap(), Metric::Euclidean, 1.0).unwrap()
    }

    #[test]
    fn entropy_sweep_rises_to_entropy() {
        let mu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.25, 0.75]).unwrap();
        let s = entropy_limit_sweep(&mu, &nu, &two_points(1.0), &[100.0, 1.0, 10.0], &SolverOptions::default()).unwrap();
        assert_eq!(s.scales, vec![1.0, 10.0, 100.0]);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.values.iter().all(|&v| v <= s.reference));
        assert!((s.values[2] - 0.143841).abs() < 1e-3);
        assert!(s.to_csv().starts_with("scale,value,reference\n1,"));
    }

    #[test]
    fn singular_entropy_sweep_diverges() {
        let mu = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.0, 1.0]).unwrap();
        let s = entropy_limit_sweep(&mu, &nu, &two_points(1.0), &[1.0, 100.0], &SolverOptions::default()).unwrap();
        assert!(s.reference.is_infinite());
        assert!(s.values[1] > s.values[0] + 1.0);
    }

    #[test]
    fn transport_ratio_approaches_distance() {
        let mu = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.0, 1.0]).unwrap();
        let s = transport_limit_sweep(&mu, &nu, &two_points(1.0), &[1e-3, 0.1, 1.0], &SolverOptions::default()).unwrap();
        assert_eq!(s.reference, 1.0);
        assert!(s.normalized.iter().all(|&r| r <= 1.0));
        assert!((s.normalized[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dirac_between_two_atoms() {
        let pts = PointSet::from_line(&[0.0, 1.0, 0.4]).unwrap();
        let c = CostMatrix::from_metric(&pts, Metric::Euclidean, 1.0).unwrap();
        let mu = DiscreteMeasure::dirac(3, 2);
        let nu = DiscreteMeasure::new(vec![0.5, 0.5, 0.0]).unwrap();
        let e = discrete_expansion(&mu, &nu, &c, &[10.0, 100.0], &SolverOptions::with_tol(1e-10)).unwrap();
        assert_eq!(e.gamma_star_limit.weights(), &[1.0, 0.0, 0.0]);
        assert!((e.leading - 0.4).abs() < 1e-15);
        assert!((e.constant - 2f64.ln()).abs() < 1e-15);
        assert!(e.remainders.iter().all(|&r| r <= 1e-12));
        assert!(e.remainders[1] >= -1e-2, "{:?}", e.remainders);
        assert!(e.ties.is_empty());
    }

    #[test]
    fn ties_are_flagged() {
        let pts = PointSet::from_line(&[0.0, 1.0, 0.5]).unwrap();
        let c = CostMatrix::from_metric(&pts, Metric::Euclidean, 1.0).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.5, 0.0]).unwrap();
        let e = discrete_expansion(&DiscreteMeasure::dirac(3, 2), &nu, &c, &[1.0], &SolverOptions::default()).unwrap();
        assert_eq!(e.ties, vec![2]);
        assert_eq!(e.gamma_star_limit.weights()[0], 1.0);
    }

    #[test]
    fn closed_form_values() {
        assert!((scaling_closed_form(10.0) - 2.302630).abs() < 1e-6);
        assert!((scaling_closed_form(1.0) - 0.458675).abs() < 1e-6);
    }

    #[test]
    fn scaling_example_b10() {
        let r = scaling_example(10.0, 1000, &SolverOptions::default()).unwrap();
        assert!(r.certified);
        assert!(r.difference.abs() < 1e-2);
        assert!((r.value - r.grid_exact).abs() < 1e-9);
        assert!(r.value <= r.scaled_transport);
        assert!(scaling_example(1.0, 10, &SolverOptions::default()).is_err());
    }
}
