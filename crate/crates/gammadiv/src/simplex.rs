//! Transportation simplex on the bipartite graph rows × columns.
//!
//! North-west-corner start, Bland's rule for entering and leaving cells.

use std::collections::VecDeque;

pub(crate) struct LpSolution {
    /// Basic cells `(row, col, flow)`; degenerate cells carry zero flow.
    pub basis: Vec<(usize, usize, f64)>,
    /// Row and column duals with `u_i + v_j = w_ij` on basic cells.
    pub v: Vec<f64>,
    pub pivots: usize,
}

/// Minimizes `Σ w(i,j) x_ij` subject to row sums `a` and column sums `b`.
///
/// `a` and `b` must be positive with equal totals (up to rounding).
pub(crate) fn transport_simplex(a: &[f64], b: &[f64], w: impl Fn(usize, usize) -> f64) -> LpSolution {
    let (m, k) = (a.len(), b.len());
    let mut basis = north_west_corner(a, b);
    let mut wmax = 0.0f64;
    for i in 0..m {
        for j in 0..k {
            wmax = wmax.max(w(i, j).abs());
        }
    }
    let eps = 1e-11 * wmax.max(1.0);
    let max_pivots = 50 * m * k + 1000;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; k];
    let mut pivots = 0;
    loop {
        let adj = adjacency(&basis, m, k);
        potentials(&basis, &adj, m, &w, &mut u, &mut v);
        if pivots >= max_pivots {
            break;
        }
        let Some((ei, ej)) = entering(m, k, &u, &v, &w, eps) else { break };
        let path = tree_path(&basis, &adj, m, ei, m + ej);
        // walking from column ej back to row ei, the first, third, ... edges lose flow
        let mut leave = None::<(usize, f64)>;
        for &e in path.iter().step_by(2) {
            let (i, j, x) = basis[e];
            let better = match leave {
                None => true,
                Some((l, lx)) => x < lx || (x == lx && (i, j) < (basis[l].0, basis[l].1)),
            };
            if better {
                leave = Some((e, x));
            }
        }
        let (l, theta) = leave.expect("cycle has a decreasing edge");
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[e].2 -= theta;
            } else {
                basis[e].2 += theta;
            }
        }
        basis[l] = (ei, ej, theta);
        pivots += 1;
    }
    LpSolution { basis, v, pivots }
}

fn north_west_corner(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let (m, k) = (a.len(), b.len());
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut basis = Vec::with_capacity(m + k - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let last = i == m - 1 && j == k - 1;
        let x = if last { ra[i].max(0.0) } else { ra[i].min(rb[j]).max(0.0) };
        basis.push((i, j, x));
        if last {
            break;
        }
        ra[i] -= x;
        rb[j] -= x;
        if j == k - 1 || (i < m - 1 && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

fn adjacency(basis: &[(usize, usize, f64)], m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m + k];
    for (e, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push(e);
        adj[m + j].push(e);
    }
    adj
}

fn other(basis: &[(usize, usize, f64)], m: usize, e: usize, node: usize) -> usize {
    let (i, j, _) = basis[e];
    if node == i {
        m + j
    } else {
        i
    }
}

fn potentials(
    basis: &[(usize, usize, f64)],
    adj: &[Vec<usize>],
    m: usize,
    w: &impl Fn(usize, usize) -> f64,
    u: &mut [f64],
    v: &mut [f64],
) {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &e in &adj[node] {
            let next = other(basis, m, e, node);
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let (i, j, _) = basis[e];
            if next < m {
                u[i] = w(i, j) - v[j];
            } else {
                v[j] = w(i, j) - u[i];
            }
            queue.push_back(next);
        }
    }
}

fn entering(
    m: usize,
    k: usize,
    u: &[f64],
    v: &[f64],
    w: &impl Fn(usize, usize) -> f64,
    eps: f64,
) -> Option<(usize, usize)> {
    for i in 0..m {
        for j in 0..k {
            if w(i, j) - u[i] - v[j] < -eps {
                return Some((i, j));
            }
        }
    }
    None
}

/// Basis edges on the tree path from `from` to `to`, in walking order.
fn tree_path(basis: &[(usize, usize, f64)], adj: &[Vec<usize>], m: usize, to: usize, from: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([to]);
    seen[to] = true;
    while let Some(node) = queue.pop_front() {
        if node == from {
            break;
        }
        for &e in &adj[node] {
            let next = other(basis, m, e, node);
            if !seen[next] {
                seen[next] = true;
                parent[next] = e;
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = from;
    while node != to {
        let e = parent[node];
        path.push(e);
        node = other(basis, m, e, node);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nw_corner_is_spanning() {
        let b = north_west_corner(&[0.5, 0.5], &[0.25, 0.25, 0.5]);
        assert_eq!(b.len(), 4);
        let total: f64 = b.iter().map(|c| c.2).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solves_small_assignment() {
        // identity is optimal for costs |i-j|
        let a = [1.0 / 3.0; 3];
        let sol = transport_simplex(&a, &a, |i, j| (i as f64 - j as f64).abs());
        let cost: f64 = sol.basis.iter().map(|&(i, j, x)| x * (i as f64 - j as f64).abs()).sum();
        assert!(cost.abs() < 1e-15);
    }

    #[test]
    fn reversed_order_needs_pivots() {
        let a = [0.5, 0.5];
        let sol = transport_simplex(&a, &a, |i, j| if i == j { 1.0 } else { 0.0 });
        let cost: f64 = sol.basis.iter().map(|&(i, j, x)| x * if i == j { 1.0 } else { 0.0 }).sum();
        assert!(cost.abs() < 1e-15);
        assert!(sol.pivots > 0);
    }

    #[test]
    fn potentials_close_the_gap() {
        let a = [0.2, 0.3, 0.5];
        let b = [0.6, 0.1, 0.3];
        let w = |i: usize, j: usize| ((i as f64) - 2.0 * j as f64).abs();
        let sol = transport_simplex(&a, &b, w);
        let primal: f64 = sol.basis.iter().map(|&(i, j, x)| x * w(i, j)).sum();
        // row potentials as c-transforms of the column potentials
        let u: Vec<f64> = (0..3).map(|i| (0..3).map(|j| w(i, j) - sol.v[j]).fold(f64::INFINITY, f64::min)).collect();
        let dual: f64 = a.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>()
            + b.iter().zip(&sol.v).map(|(x, y)| x * y).sum::<f64>();
        assert!((primal - dual).abs() < 1e-12);
    }
}
