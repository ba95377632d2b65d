//! Performance bounds for Markov chains under model misspecification.
//!
//! A cost `f` lies in `R(Γ,p)` when `f(x) = −log Σ_y e^{−g(y)} p(x,y) − g(x) + a`
//! for some `g ∈ Γ`. Then for any kernel `q` and stationary `π_q`,
//!
//! ```text
//! ∫ f dπ_q ≤ ∫ G_Γ(q(x,·)‖p(x,·)) π_q(dx) + a,
//! ```
//!
//! with no absolute continuity of `q(x,·)` with respect to `p(x,·)` needed.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma_core::{dual_eval, gamma_divergence, SolverOptions};
use crate::log_sum_exp_weighted;
use crate::measures::{CostMatrix, CostSpec, DiscreteMeasure, LipschitzFunction, Point, PointSet};

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000_000;

/// Row-stochastic matrix on a finite state space with a ground cost.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel {
    states: PointSet,
    p: Vec<Vec<f64>>,
    cost: CostMatrix,
}

impl FiniteKernel {
    pub fn new(states: PointSet, p: Vec<Vec<f64>>, cost: CostMatrix) -> Result<Self> {
        let n = states.len();
        if cost.len() != n || p.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: if p.len() != n { p.len() } else { cost.len() } });
        }
        for (x, row) in p.iter().enumerate() {
            if row.len() != n {
                return Err(Error::SizeMismatch { expected: n, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput(format!("row {x} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("row {x} sums to {s}")));
            }
        }
        Ok(Self { states, p, cost })
    }

    /// Same states and cost, different transition matrix.
    pub fn with_matrix(&self, p: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.states.clone(), p, self.cost.clone())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn states(&self) -> &PointSet {
        &self.states
    }

    pub fn row(&self, x: usize) -> DiscreteMeasure {
        DiscreteMeasure::from_normalized(self.p[x].clone())
    }
}

/// `{ "states": [...], "P": [[...]], "cost": {...} }`, optionally with `"Q"`
/// and `"f"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub states: Vec<Point>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    /// Alternative kernel on the same states.
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    /// Cost function on the states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    pub cost: CostSpec,
}

impl KernelFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn kernel(&self) -> Result<FiniteKernel> {
        let states = PointSet::new(self.states.clone())?;
        let cost = self.cost.build(&states)?;
        FiniteKernel::new(states, self.p.clone(), cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UqBound {
    /// `∫ g dμ`.
    pub lhs: f64,
    /// `G(μ‖ν) + log ∫ e^g dν`, using the certified upper bound on G.
    pub rhs: f64,
    pub divergence: f64,
    pub log_moment: f64,
}

/// `∫ g dμ ≤ G_Γ(μ‖ν) + log ∫ e^g dν` for `g ∈ Γ`.
pub fn uq_bound(
    g: &LipschitzFunction,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostMatrix,
    opts: &SolverOptions,
) -> Result<UqBound> {
    g.check(cost)?;
    let sol = gamma_divergence(mu, nu, cost, opts)?;
    let log_moment = log_sum_exp_weighted(g.values(), nu.weights());
    debug_assert!((mu.integrate(g.values()) - dual_eval(g, mu, nu) - log_moment).abs() < 1e-9);
    Ok(UqBound { lhs: mu.integrate(g.values()), rhs: sol.primal + log_moment, divergence: sol.value, log_moment })
}

/// `f(x) = −log Σ_y e^{−g(y)} P(x,y) − g(x) + a`.
pub fn risk_map(p: &FiniteKernel, g: &[f64], a: f64) -> Vec<f64> {
    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
    p.p.iter().zip(g).map(|(row, gx)| -log_sum_exp_weighted(&neg, row) - gx + a).collect()
}

/// Numerical rank of `[(P−I), 1]`.
pub fn jacobian_rank(p: &FiniteKernel) -> usize {
    let n = p.len();
    let j = DMatrix::from_fn(n, n + 1, |x, y| {
        if y == n {
            1.0
        } else {
            p.p[x][y] - if x == y { 1.0 } else { 0.0 }
        }
    });
    let sv = j.svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > 1e-10 * top.max(1.0)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    /// Potential with `g[0] = 0`.
    pub g: Vec<f64>,
    pub a: f64,
    /// `max_x |risk_map(P,g,a)(x) − f(x)|`.
    pub residual: f64,
    pub iterations: usize,
    /// Whether `g ∈ b·Lip(c)`, i.e. `f ∈ R(Γ,p)`.
    pub in_gamma: bool,
    /// Worst `g_i − g_j − b·c_ij` and its indices.
    pub worst_pair: (usize, usize, f64),
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// Solves `f = risk_map(P, g, a)` for `(g, a)` by damped Newton with `g[0]`
/// pinned to 0, then checks whether `g` is in Γ.
pub fn solve_membership(p: &FiniteKernel, f: &[f64]) -> Result<Membership> {
    let n = p.len();
    if f.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: f.len() });
    }
    let rank = jacobian_rank(p);
    if rank < n {
        return Err(Error::RankDeficient { rank, n });
    }
    let mut g = vec![0.0; n];
    let mut a = f.iter().sum::<f64>() / n as f64;
    let resid = |g: &[f64], a: f64| -> Vec<f64> { risk_map(p, g, a).iter().zip(f).map(|(x, y)| x - y).collect() };
    let mut r = resid(&g, a);
    let mut norm = max_abs(&r);
    let mut iterations = 0;
    while iterations < NEWTON_MAX_ITER && norm > 1e-14 * (1.0 + max_abs(f)) {
        iterations += 1;
        let jac = DMatrix::from_fn(n, n, |x, k| {
            if k == n - 1 {
                return 1.0;
            }
            let y = k + 1;
            let z: Vec<f64> = g.iter().map(|v| -v).collect();
            let lse = log_sum_exp_weighted(&z, &p.p[x]);
            let q = if p.p[x][y] > 0.0 { (p.p[x][y].ln() - g[y] - lse).exp() } else { 0.0 };
            q - if x == y { 1.0 } else { 0.0 }
        });
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let Some(step) = jac.lu().solve(&rhs) else { break };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let mut g2 = g.clone();
            for y in 1..n {
                g2[y] += t * step[y - 1];
            }
            let a2 = a + t * step[n - 1];
            let r2 = resid(&g2, a2);
            let n2 = max_abs(&r2);
            if n2 < norm {
                (g, a, r, norm) = (g2, a2, r2, n2);
                accepted = true;
                break;
            }
            t /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    if !(norm <= NEWTON_TOL) {
        return Err(Error::NoConvergence { iterations, residual: norm });
    }
    let gf = LipschitzFunction::new(g.clone());
    let worst_pair = gf.max_violation(&p.cost);
    let in_gamma = gf.check(&p.cost).is_ok();
    Ok(Membership { g, a, residual: norm, iterations, in_gamma, worst_pair })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBound {
    /// States of a closed communicating class of Q.
    pub states: Vec<usize>,
    /// Stationary distribution supported on the class.
    pub stationary: Vec<f64>,
    /// `Σ f π_q`.
    pub lhs: f64,
    /// `Σ G_x π_q + a`.
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub membership: Membership,
    /// Certified upper bounds on `G_Γ(q(x,·)‖p(x,·))` per state.
    pub divergences: Vec<f64>,
    /// Per-state `R(q(x,·)‖p(x,·))`, infinite where q leaves p's support.
    pub relative_entropies: Vec<f64>,
    pub classes: Vec<ClassBound>,
    pub holds: bool,
    pub certified: bool,
}

/// Closed strongly connected components of the positive-entry graph.
pub fn closed_classes(q: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = q.len();
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for x in 0..n {
        for y in 0..n {
            if q[x][y] > 0.0 {
                graph.add_edge(nodes[x], nodes[y], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|i| i.index()).collect();
            v.sort_unstable();
            v
        })
        .filter(|c| c.iter().all(|&x| (0..n).all(|y| q[x][y] == 0.0 || c.binary_search(&y).is_ok())))
        .collect();
    classes.sort();
    classes
}

/// Stationary distribution of `q` restricted to a closed class, by power
/// iteration on the lazy chain `(I + q)/2` (same fixed points, aperiodic).
pub fn stationary(q: &[Vec<f64>], class: &[usize]) -> Vec<f64> {
    let n = q.len();
    let mut pi = vec![0.0; n];
    for &x in class {
        pi[x] = 1.0 / class.len() as f64;
    }
    for _ in 0..POWER_MAX_ITER {
        let mut next = vec![0.0; n];
        for &x in class {
            next[x] += 0.5 * pi[x];
            for &y in class {
                next[y] += 0.5 * pi[x] * q[x][y];
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff <= POWER_TOL {
            break;
        }
    }
    pi
}

/// Checks the ergodic bound for every stationary distribution of `q`.
///
/// `f` must lie in `R(Γ,p)`; otherwise [`Error::NotInRiskRange`] is returned.
pub fn ergodic_bound(p: &FiniteKernel, q: &FiniteKernel, f: &[f64], opts: &SolverOptions) -> Result<ErgodicReport> {
    if q.len() != p.len() {
        return Err(Error::SizeMismatch { expected: p.len(), got: q.len() });
    }
    let membership = solve_membership(p, f)?;
    if !membership.in_gamma {
        let (i, j, excess) = membership.worst_pair;
        return Err(Error::NotInRiskRange { i, j, excess });
    }
    let states: Vec<usize> = (0..p.len()).collect();
    let sols = crate::par_map(&states, |&x| gamma_divergence(&q.row(x), &p.row(x), &p.cost, opts));
    let sols: Vec<_> = sols.into_iter().collect::<Result<_>>()?;
    let divergences: Vec<f64> = sols.iter().map(|s| s.primal).collect();
    let relative_entropies =
        states.iter().map(|&x| crate::divergences::relative_entropy(&q.row(x), &p.row(x))).collect();
    let classes: Vec<ClassBound> = closed_classes(&q.p)
        .into_iter()
        .map(|class| {
            let pi = stationary(&q.p, &class);
            let lhs: f64 = pi.iter().zip(f).map(|(a, b)| a * b).sum();
            let rhs: f64 = pi.iter().zip(&divergences).map(|(a, b)| a * b).sum::<f64>() + membership.a;
            ClassBound { states: class, stationary: pi, lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs + 1e-8 }
        })
        .collect();
    Ok(ErgodicReport {
        holds: classes.iter().all(|c| c.holds),
        certified: sols.iter().all(|s| s.certified),
        membership,
        divergences,
        relative_entropies,
        classes,
    })
}

/// `p(x,·) = N(αx, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianAR1 {
    alpha: f64,
    sigma: f64,
}

impl GaussianAR1 {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("need 0 < alpha < 1 and sigma > 0, got {alpha}, {sigma}")));
        }
        Ok(Self { alpha, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `k(b) = b(1 − α²/(1−2bσ²))`, the x² coefficient of the risk map image.
    pub fn k(&self, b: f64) -> f64 {
        b * (1.0 - self.alpha * self.alpha / (1.0 - 2.0 * b * self.sigma * self.sigma))
    }
}

/// Coefficients `(b, c, d)`: the cost `b x² + c x + d`, or, for potentials,
/// `g(x) = −b x² − c x − d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFunction {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl QuadraticFunction {
    pub fn new(b: f64, c: f64, d: f64) -> Self {
        Self { b, c, d }
    }

    pub fn eval_cost(&self, x: f64) -> f64 {
        (self.b * x + self.c) * x + self.d
    }

    pub fn eval_potential(&self, x: f64) -> f64 {
        -self.eval_cost(x)
    }
}

/// Image of the potential `g = −b x² − c x − d` under the risk map of the
/// Gaussian kernel. Valid iff `1 − 2bσ² > 0`; otherwise the integral diverges
/// and the coefficients are NaN.
///
/// With `D = 1 − 2bσ²` the image is
/// `b(1 − α²/D) x² + c(1 − α/D) x + a + ½ log D − c²σ²/(2D)`.
pub fn gaussian_risk_coeffs(model: &GaussianAR1, g: &QuadraticFunction, a: f64) -> (QuadraticFunction, bool) {
    let (al, s2) = (model.alpha, model.sigma * model.sigma);
    let den = 1.0 - 2.0 * g.b * s2;
    if !(den > 0.0) {
        return (QuadraticFunction::new(f64::NAN, f64::NAN, f64::NAN), false);
    }
    let f = QuadraticFunction {
        b: g.b * (1.0 - al * al / den),
        c: g.c * (1.0 - al / den),
        d: a + 0.5 * den.ln() - g.c * g.c * s2 / (2.0 * den),
    };
    (f, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMax {
    pub b_star: f64,
    pub k_star: f64,
    /// Maximizer found by golden-section search on (0, 1/(2σ²)).
    pub search_b: f64,
    pub search_k: f64,
}

/// Maximum of `k(b)`: `b* = (1−α)/(2σ²)`, `k* = (1−α)²/(2σ²)`, with a
/// golden-section cross-check.
pub fn gaussian_kmax(model: &GaussianAR1) -> KMax {
    let two_s2 = 2.0 * model.sigma * model.sigma;
    let b_star = (1.0 - model.alpha) / two_s2;
    let k_star = (1.0 - model.alpha).powi(2) / two_s2;
    let (search_b, search_k) = golden_max(|b| model.k(b), 0.0, 1.0 / two_s2);
    KMax { b_star, k_star, search_b, search_k }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let b = 0.5 * (lo + hi);
    (b, f(b))
}

/// Whether the cost `b x² + c x + d` lies in `R(Γ,p)` for the Gaussian kernel
/// with Γ all quadratics: `b < k*`, or `b = k*` with no linear term.
pub fn in_gaussian_risk_range(model: &GaussianAR1, f: &QuadraticFunction) -> bool {
    let k_star = gaussian_kmax(model).k_star;
    let tol = 1e-12 * k_star;
    f.b < k_star - tol || ((f.b - k_star).abs() <= tol && f.c.abs() <= 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Metric;

    fn kernel(p: Vec<Vec<f64>>, b: f64) -> FiniteKernel {
        let n = p.len();
        let states = PointSet::from_line(&(0..n).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        let cost = CostMatrix::from_metric(&states, Metric::Euclidean, b).unwrap();
        FiniteKernel::new(states, p, cost).unwrap()
    }

    #[test]
    fn uq_bound_is_tight_at_the_optimizer() {
        let states = PointSet::from_line(&[0.0, 0.3, 1.0, 1.5]).unwrap();
        let c = CostMatrix::from_metric(&states, Metric::Euclidean, 2.0).unwrap();
        let mu = DiscreteMeasure::new(vec![0.1, 0.0, 0.6, 0.3]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.4, 0.4, 0.2, 0.0]).unwrap();
        let o = SolverOptions::default();
        let zero = uq_bound(&LipschitzFunction::constant(4, 0.0), &mu, &nu, &c, &o).unwrap();
        assert_eq!(zero.lhs, 0.0);
        assert!(zero.rhs >= 0.0);
        let star = gamma_divergence(&mu, &nu, &c, &o).unwrap().g_star;
        let tight = uq_bound(&star, &mu, &nu, &c, &o).unwrap();
        assert!(tight.lhs <= tight.rhs && tight.rhs - tight.lhs <= 1e-8);
        let other = LipschitzFunction::new(vec![0.0, 0.6, -0.4, -1.0]);
        let b = uq_bound(&other, &mu, &nu, &c, &o).unwrap();
        assert!(b.lhs <= b.rhs + 1e-9);
    }

    #[test]
    fn kernel_file_round_trip() {
        let json = r#"{"states": [0, 1], "P": [[0.5, 0.5], [1, 0]], "Q": [[1, 0], [1, 0]], "cost": {"metric": "euclidean"}}"#;
        let file = KernelFile::from_json(json).unwrap();
        let k = file.kernel().unwrap();
        assert_eq!(k.len(), 2);
        assert!(k.with_matrix(file.q.clone().unwrap()).is_ok());
        assert!(file.f.is_none());
    }

    #[test]
    fn risk_map_examples() {
        let p = kernel(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 1.0);
        assert_eq!(risk_map(&p, &[0.0, 0.0], 0.7), vec![0.7, 0.7]);
        let f = risk_map(&p, &[0.0, 2f64.ln()], 0.0);
        assert!((f[0] + 0.75f64.ln()).abs() < 1e-15);
        assert!(risk_map(&p, &[0.0, 0.0], 0.7).iter().all(|v| (v - 0.7).abs() < 1e-15));
        let id = kernel(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0);
        let f = risk_map(&id, &[0.3, -1.2], 0.5);
        assert!(f.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn membership_round_trip() {
        let p = kernel(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]], 1.0);
        let g0 = [0.4, -0.1, 0.3];
        let f = risk_map(&p, &g0, 0.25);
        let m = solve_membership(&p, &f).unwrap();
        for x in 0..3 {
            assert!((m.g[x] - (g0[x] - g0[0])).abs() < 1e-9);
        }
        assert!((m.a - 0.25).abs() < 1e-9);
        assert!(m.in_gamma);

        let constant = solve_membership(&p, &[1.5; 3]).unwrap();
        assert!(constant.g.iter().all(|v| v.abs() < 1e-12));
        assert!((constant.a - 1.5).abs() < 1e-12);
    }

    #[test]
    fn steep_cost_is_outside() {
        let p = kernel(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]], 1.0);
        let f: Vec<f64> = (0..3).map(|x| 100.0 * p.cost().c(x, 0)).collect();
        let m = solve_membership(&p, &f).unwrap();
        assert!(!m.in_gamma);
        let q = p.clone();
        assert!(matches!(ergodic_bound(&p, &q, &f, &SolverOptions::default()), Err(Error::NotInRiskRange { .. })));
    }

    #[test]
    fn two_recurrent_classes_are_rank_deficient() {
        let p = kernel(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 0.5]], 1.0);
        assert_eq!(jacobian_rank(&p), 2);
        assert!(matches!(solve_membership(&p, &[0.0; 3]), Err(Error::RankDeficient { rank: 2, n: 3 })));
        let transient = kernel(vec![vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 0.5]], 1.0);
        assert_eq!(jacobian_rank(&transient), 3);
    }

    #[test]
    fn classes_and_stationary() {
        let q = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.5]];
        assert_eq!(closed_classes(&q), vec![vec![0, 1]]);
        let pi = stationary(&q, &[0, 1]);
        assert!((pi[0] - 0.5).abs() < 1e-12 && pi[2] == 0.0);
        let two = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(closed_classes(&two), vec![vec![0], vec![1]]);
    }

    #[test]
    fn same_kernel_bound_has_no_divergence() {
        let p = kernel(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]], 1.0);
        let f = risk_map(&p, &[0.0, 0.2, -0.3], 0.1);
        let r = ergodic_bound(&p, &p, &f, &SolverOptions::default()).unwrap();
        assert!(r.divergences.iter().all(|&g| g < 1e-9));
        assert!(r.holds);
        assert!(r.classes[0].lhs <= 0.1 + 1e-9);
    }

    #[test]
    fn support_shift_keeps_bound_finite() {
        let p = kernel(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]], 1.0);
        let q = p.with_matrix(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]).unwrap();
        let f = risk_map(&p, &[0.0, 0.3, -0.2], 0.0);
        let r = ergodic_bound(&p, &q, &f, &SolverOptions::default()).unwrap();
        assert!(r.relative_entropies.iter().all(|x| x.is_infinite()));
        assert!(r.divergences.iter().all(|x| x.is_finite()));
        assert!(r.holds, "{:?}", r.classes);
    }

    #[test]
    fn gaussian_coefficients() {
        let m = GaussianAR1::new(0.5, 1.0).unwrap();
        let (f, ok) = gaussian_risk_coeffs(&m, &QuadraticFunction::new(0.0, 0.0, 0.3), 0.7);
        assert!(ok);
        assert_eq!((f.b, f.c, f.d), (0.0, 0.0, 0.7));
        let (f, ok) = gaussian_risk_coeffs(&m, &QuadraticFunction::new(0.1, 0.0, 0.0), 0.0);
        assert!(ok);
        assert!((f.b - 0.06875).abs() < 1e-15);
        let (_, ok) = gaussian_risk_coeffs(&m, &QuadraticFunction::new(0.5, 0.0, 0.0), 0.0);
        assert!(!ok);
    }

    #[test]
    fn gaussian_kmax_examples() {
        let k = gaussian_kmax(&GaussianAR1::new(0.5, 1.0).unwrap());
        assert_eq!((k.b_star, k.k_star), (0.25, 0.125));
        assert!((k.search_b - 0.25).abs() < 1e-8 && (k.search_k - 0.125).abs() < 1e-12);
        let k = gaussian_kmax(&GaussianAR1::new(0.9, 2.0).unwrap());
        assert!((k.b_star - 0.0125).abs() < 1e-15 && (k.k_star - 0.00125).abs() < 1e-15);
        assert!((k.search_b - 0.0125).abs() < 1e-8);
        let near_one = gaussian_kmax(&GaussianAR1::new(1.0 - 1e-6, 1.0).unwrap());
        assert!(near_one.k_star < 1e-11);
        let m = GaussianAR1::new(0.5, 1.0).unwrap();
        assert!(m.k((1.0 - 1e-6) / 2.0) < -1e3);
    }

    #[test]
    fn gaussian_range_predicate() {
        let m = GaussianAR1::new(0.5, 1.0).unwrap();
        assert!(in_gaussian_risk_range(&m, &QuadraticFunction::new(0.1, 5.0, 1.0)));
        assert!(in_gaussian_risk_range(&m, &QuadraticFunction::new(0.125, 0.0, -2.0)));
        assert!(!in_gaussian_risk_range(&m, &QuadraticFunction::new(0.125, 0.1, 0.0)));
        assert!(!in_gaussian_risk_range(&m, &QuadraticFunction::new(0.2, 0.0, 0.0)));
        assert!(GaussianAR1::new(1.0, 1.0).is_err());
    }
}
