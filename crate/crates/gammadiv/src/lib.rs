//! Γ-divergence between finitely supported probability measures.
//!
//! With Γ = b·Lip(c) the divergence
//!
//! ```text
//! G(μ‖ν) = sup_{g ∈ Γ} ∫g dμ − log ∫e^g dν = inf_γ { b·W_c(μ,γ) + R(γ‖ν) }
//! ```
//!
//! is the inf-convolution of the transport cost and relative entropy. The crate
//! computes it exactly on finite supports together with the optimizer γ*, the
//! Lipschitz potential g*, and a duality-gap certificate; plus directional
//! derivatives, scale limits, and ergodic performance bounds for Markov chains.
//!
//! ```
//! use gammadiv::{gamma_divergence, CostMatrix, DiscreteMeasure, Metric, PointSet, SolverOptions};
//!
//! let points = PointSet::from_coords(vec![vec![0.0], vec![1.0]]).unwrap();
//! let cost = CostMatrix::from_metric(&points, Metric::Euclidean, 2.0).unwrap();
//! let mu = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
//! let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
//! let sol = gamma_divergence(&mu, &nu, &cost, &SolverOptions::default()).unwrap();
//! assert!(sol.certified);
//! assert!(sol.value < 2f64.ln());
//! ```

pub mod asymptotics;
pub mod divergences;
mod error;
mod forest;
pub mod gamma_core;
pub mod markov_uq;
pub mod measures;
pub mod oracle;
pub mod sensitivity;
mod simplex;

pub use asymptotics::{
    discrete_expansion, entropy_limit_sweep, scaling_example, transport_limit_sweep,
    ExpansionReport, ScaleSweep, ScalingReport, SweepMode,
};
pub use divergences::{relative_entropy, transport_cost, TransportPlan, TransportSolution};
pub use error::{CostViolation, Error, Result};
pub use gamma_core::{
    dual_eval, duality_formula_check, gamma_divergence, verify_optimality, DualityReport,
    GammaSolution, Method, OptimalityReport, SolverOptions,
};
pub use markov_uq::{
    ergodic_bound, gaussian_kmax, gaussian_risk_coeffs, in_gaussian_risk_range, risk_map,
    solve_membership, uq_bound, ErgodicReport, FiniteKernel, GaussianAR1, Membership,
    QuadraticFunction,
};
pub use measures::{
    merge_supports, project_lipschitz, validate_cost, CostMatrix, CostSpec, DiscreteMeasure,
    LipschitzFunction, LocatedMeasure, Merged, Metric, Point, PointSet, SignedMeasure,
};
pub use oracle::{oracle_gamma, oracle_w1_line, OracleConfig, OracleValue};
pub use sensitivity::{directional_derivative, DerivativeReport};

/// Numerically stable `log Σ_k w_k e^{x_k}` over entries with `w_k > 0`.
///
/// Returns `-inf` when no weight is positive.
pub fn log_sum_exp_weighted(x: &[f64], w: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (xi, wi) in x.iter().zip(w) {
        if *wi > 0.0 {
            m = m.max(*xi + wi.ln());
        }
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = x
        .iter()
        .zip(w)
        .filter(|(_, wi)| **wi > 0.0)
        .map(|(xi, wi)| (*xi + wi.ln() - m).exp())
        .sum();
    m + s.ln()
}

/// Order-preserving map, parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}
