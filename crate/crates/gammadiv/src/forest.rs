//! Exact finish for the semi-coupling program on a support forest.
//!
//! Rows are the atoms of μ, columns the atoms of ν, `w` the effective cost.
//! For a spanning forest of the bipartite graph the optimality conditions
//! determine everything: potentials satisfy `f_i − g_j = w_ij` along tree edges,
//! each tree gets the constant that balances its μ-mass against
//! `Σ ν_j e^{g_j}`, and flows follow by peeling leaves. The forest is optimal
//! when all flows are nonnegative and every reduced cost `w_ij + g_j − f_i`
//! is nonnegative; otherwise one edge is added or removed and the forest is
//! solved again.

use std::collections::{HashMap, VecDeque};

use crate::log_sum_exp_weighted;

pub(crate) struct ForestSolution {
    /// Column potentials `g_j = log(γ_j/ν_j)`.
    pub g: Vec<f64>,
    pub pivots: usize,
}

struct Forest {
    m: usize,
    adj: Vec<Vec<usize>>,
}

impl Forest {
    fn add(&mut self, i: usize, j: usize) {
        let c = self.m + j;
        self.adj[i].push(c);
        self.adj[c].push(i);
    }

    fn remove(&mut self, i: usize, j: usize) {
        let c = self.m + j;
        self.adj[i].retain(|&x| x != c);
        self.adj[c].retain(|&x| x != i);
    }

    /// Tree path from node `s` to node `t` as a node sequence.
    fn path(&self, s: usize, t: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; self.adj.len()];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &v in &self.adj[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut p = vec![t];
        while *p.last().unwrap() != s {
            p.push(prev[*p.last().unwrap()]);
        }
        p.reverse();
        p
    }
}

/// Initial forest from a positive plan given as `log π` (row-major m×n):
/// each row's heaviest edge first, then edges carrying at least 30% of their
/// row or column mass, heaviest first, skipping any that would close a cycle.
fn initial_forest(log_pi: &[f64], m: usize, n: usize, mu: &[f64]) -> Forest {
    let mut log_col = vec![f64::NEG_INFINITY; n];
    for j in 0..n {
        let col: Vec<f64> = (0..m).map(|i| log_pi[i * n + j]).collect();
        log_col[j] = log_sum_exp_weighted(&col, &vec![1.0; m]);
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..m {
        let row = &log_pi[i * n..(i + 1) * n];
        let best = (0..n).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        edges.push((f64::INFINITY, i, best));
    }
    let threshold = 0.3f64.ln();
    let mut rest = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let lp = log_pi[i * n + j];
            let score = (lp - log_col[j]).max(lp - mu[i].ln());
            if score >= threshold {
                rest.push((score, i, j));
            }
        }
    }
    rest.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    edges.extend(rest);

    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut forest = Forest { m, adj: vec![Vec::new(); m + n] };
    for (_, i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a != b {
            parent[a] = b;
            forest.add(i, j);
        }
    }
    forest
}

/// Runs the pivoting loop from the plan `log_pi`. Returns `None` if
/// `max_pivots` is reached before the optimality conditions hold.
pub(crate) fn solve(
    w: &[f64],
    m: usize,
    n: usize,
    mu: &[f64],
    nu: &[f64],
    log_pi: &[f64],
    max_pivots: usize,
) -> Option<ForestSolution> {
    let mut forest = initial_forest(log_pi, m, n, mu);
    let wmax = w.iter().fold(1.0f64, |a, &b| a.max(b));
    let rc_tol = -1e-12 * wmax;
    let flow_tol = -1e-13;
    let log_nu: Vec<f64> = nu.iter().map(|x| x.ln()).collect();
    let mut pivots = 0;

    while pivots <= max_pivots {
        let (pot, comp, lone) = potentials(&forest, w, m, n, mu, &log_nu);
        let f = &pot[..m];
        let g = &pot[m..];
        if !lone.is_empty() {
            for j in lone {
                let i = (0..m).fold(0, |b, i| if f[i] - w[i * n + j] > f[b] - w[b * n + j] { i } else { b });
                forest.add(i, j);
            }
            pivots += 1;
            continue;
        }
        let gamma: Vec<f64> = (0..n).map(|j| nu[j] * g[j].exp()).collect();
        let flows = leaf_flows(&forest, m, mu, &gamma);

        let (mut bi, mut bj, mut brc) = (0, 0, f64::INFINITY);
        for i in 0..m {
            for j in 0..n {
                let rc = w[i * n + j] + g[j] - f[i];
                if rc < brc {
                    (bi, bj, brc) = (i, j, rc);
                }
            }
        }
        if brc < rc_tol {
            if comp[bi] != comp[m + bj] {
                forest.add(bi, bj);
            } else {
                // adding (bi,bj) closes a cycle; edges walked from a column to a
                // row lose flow, and the smallest of them leaves
                let p = forest.path(m + bj, bi);
                let mut leave: Option<(f64, usize, usize)> = None;
                for pair in p.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    if a >= m && b < m {
                        let x = flows.get(&(b, a - m)).copied().unwrap_or(0.0);
                        if leave.is_none_or(|l| x < l.0) {
                            leave = Some((x, b, a - m));
                        }
                    }
                }
                let (_, li, lj) = leave?;
                forest.remove(li, lj);
                forest.add(bi, bj);
            }
            pivots += 1;
            continue;
        }
        let worst = flows
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
            .map(|(&k, &x)| (k, x));
        if let Some(((i, j), x)) = worst {
            if x < flow_tol {
                forest.remove(i, j);
                pivots += 1;
                continue;
            }
        }
        return Some(ForestSolution { g: g.to_vec(), pivots });
    }
    None
}

/// Node potentials (rows then columns), component labels, and the columns
/// that sit alone in a component without rows.
fn potentials(
    forest: &Forest,
    w: &[f64],
    m: usize,
    n: usize,
    mu: &[f64],
    log_nu: &[f64],
) -> (Vec<f64>, Vec<usize>, Vec<usize>) {
    let total = m + n;
    let mut pot = vec![0.0; total];
    let mut comp = vec![usize::MAX; total];
    let mut lone = Vec::new();
    let mut order = Vec::new();
    for root in 0..total {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = root;
        order.clear();
        order.push(root);
        comp[root] = id;
        pot[root] = 0.0;
        let mut k = 0;
        while k < order.len() {
            let u = order[k];
            k += 1;
            for &v in &forest.adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    pot[v] = if v < m { pot[u] + w[v * n + (u - m)] } else { pot[u] - w[u * n + (v - m)] };
                    order.push(v);
                }
            }
        }
        let mass: f64 = order.iter().filter(|&&u| u < m).map(|&u| mu[u]).sum();
        if mass == 0.0 {
            lone.extend(order.iter().filter(|&&u| u >= m).map(|&u| u - m));
            continue;
        }
        let (gs, ls): (Vec<f64>, Vec<f64>) =
            order.iter().filter(|&&u| u >= m).map(|&u| (pot[u], log_nu[u - m])).unzip();
        let lse = log_sum_exp_weighted(
            &gs.iter().zip(&ls).map(|(a, b)| a + b).collect::<Vec<_>>(),
            &vec![1.0; gs.len()],
        );
        let shift = mass.ln() - lse;
        for &u in &order {
            pot[u] += shift;
        }
    }
    (pot, comp, lone)
}

/// Edge flows of each tree given row supplies `mu` and column demands `gamma`.
fn leaf_flows(forest: &Forest, m: usize, mu: &[f64], gamma: &[f64]) -> HashMap<(usize, usize), f64> {
    let mut supply: Vec<f64> = mu.iter().copied().chain(gamma.iter().map(|x| -x)).collect();
    let mut deg: Vec<usize> = forest.adj.iter().map(|a| a.len()).collect();
    let mut alive = vec![true; supply.len()];
    let mut flows = HashMap::new();
    let mut leaves: Vec<usize> = (0..supply.len()).filter(|&u| deg[u] == 1).collect();
    while let Some(u) = leaves.pop() {
        if !alive[u] || deg[u] != 1 {
            continue;
        }
        let v = *forest.adj[u].iter().find(|&&v| alive[v]).expect("leaf has a live neighbour");
        let x = supply[u];
        if u < m {
            flows.insert((u, v - m), x);
        } else {
            flows.insert((v, u - m), -x);
        }
        supply[v] += x;
        supply[u] = 0.0;
        alive[u] = false;
        deg[v] -= 1;
        if deg[v] == 1 {
            leaves.push(v);
        }
    }
    flows
}
