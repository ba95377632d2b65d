//! Brute-force reference values for small instances.

use serde::{Deserialize, Serialize};

use crate::divergences::{relative_entropy, transport_cost};
use crate::error::{Error, Result};
use crate::measures::{CostMatrix, DiscreteMeasure, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Simplex grid step, in (0, 0.1].
    pub grid_resolution: f64,
    /// Largest supp(ν) searched, at most 4.
    pub max_support: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_resolution: 1e-3, max_support: 3 }
    }
}

impl OracleConfig {
    /// 1e-3 for two atoms, 1e-2 for three, 0.05 for four.
    pub fn for_support(k: usize) -> Self {
        let grid_resolution = match k {
            0..=2 => 1e-3,
            3 => 1e-2,
            _ => 5e-2,
        };
        Self { grid_resolution, max_support: k.clamp(3, 4) }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.grid_resolution > 0.0 && self.grid_resolution <= 0.1) {
            return Err(Error::InvalidInput(format!("grid resolution {} not in (0, 0.1]", self.grid_resolution)));
        }
        if self.max_support > 4 {
            return Err(Error::InvalidInput("oracle max_support is at most 4".into()));
        }
        Ok((1.0 / self.grid_resolution).round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    /// Smallest `b·W(μ,γ) + R(γ‖ν)` over grid points γ.
    pub value: f64,
    /// `value` exceeds the true infimum by at most this much.
    pub error_bound: f64,
    /// Local Lipschitz modulus used for the bound.
    pub modulus: f64,
    pub argmin: DiscreteMeasure,
    pub evaluations: usize,
}

/// Integer compositions of `steps` into `k` nonnegative parts.
fn compositions(k: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=left {
            cur.push(x);
            rec(k - 1, left - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, steps, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// All probability vectors of length `n` with entries in multiples of `1/steps`.
pub(crate) fn simplex_grid(n: usize, steps: usize) -> impl Iterator<Item = Vec<f64>> {
    compositions(n, steps).into_iter().map(move |c| c.iter().map(|&x| x as f64 / steps as f64).collect())
}

/// Minimizes `b·W(μ,γ) + R(γ‖ν)` over γ on a simplex grid of supp(ν).
///
/// The error bound is `½·L·(k−1)·h` for grid step `h` and `k = |supp ν|`,
/// where `L = b·max c + osc log(γ/ν)` is the oscillation of the objective's
/// gradient over the grid cells next to the minimizer (γ floored at `h/10`
/// inside the logarithm). Objective values themselves use `0·log 0 = 0`.
pub fn oracle_gamma(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostMatrix, cfg: &OracleConfig) -> Result<OracleValue> {
    let steps = cfg.steps()?;
    let cols = nu.support();
    let k = cols.len();
    if k > cfg.max_support {
        return Err(Error::SupportTooLarge { size: k, max: cfg.max_support });
    }
    let embed = |comp: &[usize]| {
        let mut w = vec![0.0; nu.len()];
        for (&j, &x) in cols.iter().zip(comp) {
            w[j] = x as f64 / steps as f64;
        }
        DiscreteMeasure::from_normalized(w)
    };
    let grid = compositions(k, steps);
    let eval = |comp: &Vec<usize>| -> Result<f64> {
        let g = embed(comp);
        Ok(transport_cost(mu, &g, cost)?.value + relative_entropy(&g, nu))
    };
    let values: Vec<f64> = crate::par_map(&grid, eval).into_iter().collect::<Result<_>>()?;
    let best = (0..values.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });

    let h = 1.0 / steps as f64;
    let mut cmax = 0.0f64;
    for &a in &cols {
        for &b in &cols {
            cmax = cmax.max(cost.w(a, b));
        }
    }
    let mut osc = 0.0f64;
    for comp in grid.iter().filter(|c| c.iter().zip(&grid[best]).all(|(a, b)| a.abs_diff(*b) <= 2)) {
        let logs: Vec<f64> = comp
            .iter()
            .zip(&cols)
            .map(|(&x, &j)| ((x as f64 * h).max(h / 10.0) / nu.weights()[j]).ln())
            .collect();
        let hi = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lo = logs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        osc = osc.max(hi - lo);
    }
    let modulus = cmax + osc;
    Ok(OracleValue {
        value: values[best],
        error_bound: 0.5 * modulus * (k.max(1) - 1) as f64 * h,
        modulus,
        argmin: embed(&grid[best]),
        evaluations: grid.len(),
    })
}

/// `b·∫|F_μ − F_γ|` for measures on real points, by sorting breakpoints.
pub fn oracle_w1_line(mu: &DiscreteMeasure, gamma: &DiscreteMeasure, points: &PointSet, scale: f64) -> Result<f64> {
    let xs = points.line_coords().ok_or_else(|| Error::InvalidInput("oracle_w1_line needs 1-D points".into()))?;
    if mu.len() != xs.len() || gamma.len() != xs.len() {
        return Err(Error::SizeMismatch { expected: xs.len(), got: mu.len().min(gamma.len()) });
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut diff = 0.0;
    let mut total = 0.0;
    for w in order.windows(2) {
        diff += mu.weights()[w[0]] - gamma.weights()[w[0]];
        total += diff.abs() * (xs[w[1]] - xs[w[0]]);
    }
    Ok(scale * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Metric;

    #[test]
    fn grid_sizes() {
        assert_eq!(compositions(2, 10).len(), 11);
        assert_eq!(compositions(3, 100).len(), 5151);
        assert!(simplex_grid(3, 7).all(|v| (v.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn equal_two_point_measures() {
        let c = CostMatrix::from_metric(&PointSet::from_line(&[0.0, 1.0]).unwrap(), Metric::Euclidean, 1.0).unwrap();
        let nu = DiscreteMeasure::new(vec![0.3, 0.7]).unwrap();
        let o = oracle_gamma(&nu, &nu, &c, &OracleConfig::default()).unwrap();
        assert!(o.value.abs() < 1e-12);
    }

    #[test]
    fn large_scale_approaches_entropy() {
        let c = CostMatrix::from_metric(&PointSet::from_line(&[0.0, 1.0]).unwrap(), Metric::Euclidean, 100.0).unwrap();
        let mu = DiscreteMeasure::new(vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let o = oracle_gamma(&mu, &nu, &c, &OracleConfig::default()).unwrap();
        assert!((o.value - 2f64.ln()).abs() < 1e-9, "{}", o.value);
    }

    #[test]
    fn oversized_support_rejected() {
        let pts = PointSet::from_line(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = CostMatrix::from_metric(&pts, Metric::Euclidean, 1.0).unwrap();
        let nu = DiscreteMeasure::uniform(4);
        assert!(matches!(
            oracle_gamma(&nu, &nu, &c, &OracleConfig::default()),
            Err(Error::SupportTooLarge { size: 4, max: 3 })
        ));
    }

    #[test]
    fn w1_line_examples() {
        let pts = PointSet::from_line(&[0.0, 1.0]).unwrap();
        let a = DiscreteMeasure::dirac(2, 0);
        let b = DiscreteMeasure::dirac(2, 1);
        assert_eq!(oracle_w1_line(&a, &b, &pts, 2.0).unwrap(), 2.0);
        assert_eq!(oracle_w1_line(&a, &a, &pts, 1.0).unwrap(), 0.0);

        let n = 1000;
        let mut xs: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        xs.push(0.0);
        let pts = PointSet::from_line(&xs).unwrap();
        let mut w = vec![1.0 / n as f64; n];
        w.push(0.0);
        let v = oracle_w1_line(&DiscreteMeasure::dirac(n + 1, n), &DiscreteMeasure::new(w).unwrap(), &pts, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-3);
        let pts2 = PointSet::from_coords(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(oracle_w1_line(&a, &b, &pts2, 1.0).is_err());
    }
}
