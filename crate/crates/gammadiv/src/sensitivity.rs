//! First variation of `μ ↦ G(μ‖ν)`: the one-sided derivative along a
//! zero-mass direction ρ is `∫ g* dρ`, with g* the normalized potential
//! extended off the supports by its maximal Lipschitz extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma_core::{gamma_divergence, SolverOptions};
use crate::measures::{CostMatrix, DiscreteMeasure, SignedMeasure};

/// Step of the one-sided difference quotient.
pub const FD_EPSILON: f64 = 1e-4;
/// Solver tolerance used for both solves of the quotient.
pub const FD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    /// `Σ g*·ρ`.
    pub analytic: f64,
    /// `(G(μ+ερ‖ν) − G(μ‖ν))/ε`.
    pub finite_diff: f64,
    pub epsilon: f64,
    pub discrepancy: f64,
    /// `discrepancy / max(1, |analytic|)`.
    pub relative_discrepancy: f64,
    pub value: f64,
    pub perturbed_value: f64,
    pub duality_gap: f64,
    pub certified: bool,
}

/// Largest ε with `μ + ερ ≥ 0` (infinite when ρ has no negative part).
pub fn max_feasible_step(mu: &DiscreteMeasure, rho: &SignedMeasure) -> f64 {
    mu.weights()
        .iter()
        .zip(rho.weights())
        .filter(|(_, r)| **r < 0.0)
        .map(|(m, r)| m / -r)
        .fold(f64::INFINITY, f64::min)
}

/// `μ + ερ` with rounding negatives clipped.
pub fn perturb(mu: &DiscreteMeasure, rho: &SignedMeasure, eps: f64) -> DiscreteMeasure {
    let w: Vec<f64> = mu.weights().iter().zip(rho.weights()).map(|(m, r)| (m + eps * r).max(0.0)).collect();
    let s: f64 = w.iter().sum();
    DiscreteMeasure::from_normalized(w.into_iter().map(|x| x / s).collect())
}

/// Analytic directional derivative of `G(·‖ν)` at μ along ρ, next to its
/// one-sided finite difference at ε = 1e-4.
///
/// ρ must have zero total mass and be negative only where μ is positive
/// enough that `μ + 1e-4·ρ` stays a probability measure.
pub fn directional_derivative(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    rho: &SignedMeasure,
    opts: &SolverOptions,
) -> Result<DerivativeReport> {
    if rho.len() != cost.len() {
        return Err(Error::SizeMismatch { expected: cost.len(), got: rho.len() });
    }
    let abs_mass: f64 = rho.weights().iter().map(|x| x.abs()).sum();
    if rho.total_mass().abs() > 1e-12 * abs_mass.max(1.0) {
        return Err(Error::InvalidPerturbation(format!("total mass {:e} is not zero", rho.total_mass())));
    }
    let max_eps = max_feasible_step(mu, rho);
    if max_eps < FD_EPSILON {
        return Err(Error::InvalidPerturbation(format!(
            "mu + eps*rho leaves the simplex for eps > {max_eps:e}"
        )));
    }
    let opts = SolverOptions { tol: opts.tol.min(FD_TOL), ..*opts };
    let base = gamma_divergence(mu, nu, cost, &opts)?;
    let analytic: f64 = base.g_star.values().iter().zip(rho.weights()).map(|(g, r)| g * r).sum();
    let moved = gamma_divergence(&perturb(mu, rho, FD_EPSILON), nu, cost, &opts)?;
    let finite_diff = (moved.value - base.value) / FD_EPSILON;
    let discrepancy = (analytic - finite_diff).abs();
    Ok(DerivativeReport {
        analytic,
        finite_diff,
        epsilon: FD_EPSILON,
        discrepancy,
        relative_discrepancy: discrepancy / analytic.abs().max(1.0),
        value: base.value,
        perturbed_value: moved.value,
        duality_gap: base.duality_gap.max(moved.duality_gap),
        certified: base.certified && moved.certified,
    })
}
