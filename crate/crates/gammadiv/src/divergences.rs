//! Relative entropy and the exact discrete Kantorovich cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{project_lipschitz, CostMatrix, DiscreteMeasure, LipschitzFunction};
use crate::simplex::transport_simplex;

/// `R(μ‖ν) = Σ μ_i log(μ_i/ν_i)`, `+∞` when μ charges a point ν does not.
pub fn relative_entropy(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let mut r = 0.0;
    for (&m, &n) in mu.weights().iter().zip(nu.weights()) {
        if m > 0.0 {
            if n == 0.0 {
                return f64::INFINITY;
            }
            r += m * (m.ln() - n.ln());
        }
    }
    r
}

/// Sparse plan between two measures on one point set: `(from, to, mass)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for &(i, _, x) in &self.entries {
            s[i] += x;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for &(_, j, x) in &self.entries {
            s[j] += x;
        }
        s
    }

    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.entries.iter().map(|&(i, j, x)| cost.w(i, j) * x).sum()
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for &(i, j, x) in &self.entries {
            d[i][j] += x;
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSolution {
    /// `W = min_π Σ b·c_ij π_ij`.
    pub value: f64,
    pub plan: TransportPlan,
    /// Kantorovich potential φ with `φ_i − φ_j = b·c_ij` on the plan's support, `φ_0 = 0`.
    pub potential: LipschitzFunction,
    pub pivots: usize,
}

/// Optimal transport between `mu` and `gamma` for the cost `b·c`.
pub fn transport_cost(mu: &DiscreteMeasure, gamma: &DiscreteMeasure, cost: &CostMatrix) -> Result<TransportSolution> {
    let n = cost.len();
    for m in [mu, gamma] {
        if m.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: m.len() });
        }
    }
    let rows = mu.support();
    let cols = gamma.support();
    let a: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| gamma.weights()[j]).collect();
    let lp = transport_simplex(&a, &b, |i, j| cost.w(rows[i], cols[j]));

    let mut entries: Vec<(usize, usize, f64)> = lp
        .basis
        .iter()
        .filter(|c| c.2 > 0.0)
        .map(|&(i, j, x)| (rows[i], cols[j], x))
        .collect();
    entries.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let plan = TransportPlan { n, entries };
    let value = plan.cost(cost);

    // -v is a column potential; its c-transform is 1-Lipschitz and optimal.
    let mut psi = vec![0.0; n];
    for (jj, &j) in cols.iter().enumerate() {
        psi[j] = -lp.v[jj];
    }
    let phi = project_lipschitz(&psi, &cols, cost)?;
    let potential = phi.shifted(-phi.values()[0]);
    Ok(TransportSolution { value, plan, potential, pivots: lp.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Metric, PointSet};

    fn line_cost(xs: &[f64], b: f64) -> CostMatrix {
        CostMatrix::from_metric(&PointSet::from_line(xs).unwrap(), Metric::Euclidean, b).unwrap()
    }

    #[test]
    fn entropy_values() {
        let nu = DiscreteMeasure::new(vec![0.25, 0.75]).unwrap();
        let mu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let expect = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((relative_entropy(&mu, &nu) - expect).abs() < 1e-15);
        assert!((expect - 0.143841).abs() < 1e-6);
        assert_eq!(relative_entropy(&nu, &nu), 0.0);
        let p = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        let q = DiscreteMeasure::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(relative_entropy(&p, &q), f64::INFINITY);
        assert!(relative_entropy(&q, &nu).is_finite());
    }

    #[test]
    fn two_point_line() {
        let c = line_cost(&[0.0, 1.0], 1.0);
        let mu = DiscreteMeasure::dirac(2, 0);
        let g = DiscreteMeasure::dirac(2, 1);
        let s = transport_cost(&mu, &g, &c).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.plan.dense(), vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(s.potential.values(), &[0.0, -1.0]);
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let c = line_cost(&[0.0, 0.3, 1.0], 2.0);
        let mu = DiscreteMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let s = transport_cost(&mu, &mu, &c).unwrap();
        assert_eq!(s.value, 0.0);
        for &(i, j, _) in &s.plan.entries {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn dirac_to_grid_is_half() {
        let n = 1000;
        let mut xs: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        xs.push(0.0);
        let c = line_cost(&xs, 1.0);
        let mut nu = vec![1.0 / n as f64; n];
        nu.push(0.0);
        let s = transport_cost(&DiscreteMeasure::dirac(n + 1, n), &DiscreteMeasure::new(nu).unwrap(), &c).unwrap();
        assert!((s.value - 0.5).abs() < 1e-3);
    }

    #[test]
    fn dual_matches_primal_and_slackness() {
        let c = line_cost(&[0.0, 0.2, 0.5, 0.9], 1.5);
        let mu = DiscreteMeasure::new(vec![0.4, 0.0, 0.1, 0.5]).unwrap();
        let g = DiscreteMeasure::new(vec![0.1, 0.6, 0.3, 0.0]).unwrap();
        let s = transport_cost(&mu, &g, &c).unwrap();
        let phi = s.potential.values();
        let dual = mu.integrate(phi) - g.integrate(phi);
        assert!((dual - s.value).abs() < 1e-12);
        assert!(s.potential.check(&c).is_ok());
        for &(i, j, x) in &s.plan.entries {
            if x > 1e-12 {
                assert!((phi[i] - phi[j] - c.w(i, j)).abs() < 1e-12);
            }
        }
        assert_eq!(phi[0], 0.0);
    }
}
