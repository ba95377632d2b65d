#![allow(dead_code)]

use gammadiv::{CostMatrix, DiscreteMeasure, FiniteKernel, LipschitzFunction, Metric, PointSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointSet {
    let coords = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    PointSet::from_coords(coords).unwrap()
}

pub fn line(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
    points(rng, n, 1)
}

/// Random probability vector; each entry is zero with probability `zero_prob`
/// but at least one entry stays positive.
pub fn measure(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> DiscreteMeasure {
    let mut w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(zero_prob) { 0.0 } else { rng.gen_range(0.05..1.0) }).collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..n)] = 1.0;
    }
    DiscreteMeasure::from_masses(w).unwrap()
}

pub fn cost(points: &PointSet, b: f64) -> CostMatrix {
    CostMatrix::from_metric(points, Metric::Euclidean, b).unwrap()
}

/// Random 2-D instance on n points with scale in [0.5, 5].
pub fn instance(rng: &mut ChaCha8Rng, n: usize) -> (CostMatrix, DiscreteMeasure, DiscreteMeasure) {
    let pts = points(rng, n, 2);
    let b = rng.gen_range(0.5..5.0);
    (cost(&pts, b), measure(rng, n, 0.3), measure(rng, n, 0.3))
}

/// Feasible potential: random values tightened onto b·Lip(c).
pub fn feasible_g(rng: &mut ChaCha8Rng, cost: &CostMatrix, spread: f64) -> LipschitzFunction {
    let raw: Vec<f64> = (0..cost.len()).map(|_| rng.gen_range(-spread..spread)).collect();
    let all: Vec<usize> = (0..cost.len()).collect();
    gammadiv::project_lipschitz(&raw, &all, cost).unwrap()
}

/// Random kernel with strictly positive entries on `keep` fraction of each row
/// (the diagonal-successor entry is always kept so the chain is irreducible).
pub fn kernel_matrix(rng: &mut ChaCha8Rng, n: usize, keep: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            let mut row: Vec<f64> =
                (0..n).map(|y| if y == (x + 1) % n || rng.gen_bool(keep) { rng.gen_range(0.05..1.0) } else { 0.0 }).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            let s: f64 = row.iter().sum();
            row[(x + 1) % n] += 1.0 - s;
            row
        })
        .collect()
}

pub fn kernel(rng: &mut ChaCha8Rng, n: usize, b: f64, keep: f64) -> FiniteKernel {
    let pts = line(rng, n);
    let c = cost(&pts, b);
    FiniteKernel::new(pts, kernel_matrix(rng, n, keep), c).unwrap()
}
