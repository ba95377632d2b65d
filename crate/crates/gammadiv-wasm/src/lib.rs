//! Browser bindings for three demo operations. Each export is a thin wrapper
//! over a plain function that is tested natively.

use gammadiv::{
    gamma_divergence, gaussian_kmax, relative_entropy, scaling_example, transport_cost, CostMatrix,
    DiscreteMeasure, GaussianAR1, Metric, PointSet, SolverOptions,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct ScalingPoint {
    pub b: f64,
    pub value: f64,
    pub closed_form: f64,
    pub transport_bound: f64,
    pub certified: bool,
}

/// G(δ₀ ‖ uniform grid on [0,1]) for `steps` scales in (0, b_max], next to
/// the continuum value log(b/(1−e^{−b})).
pub fn scaling_curve(b_max: f64, steps: usize, n: usize) -> Result<Vec<ScalingPoint>, String> {
    if !(b_max > 0.0) || steps == 0 {
        return Err("need b_max > 0 and at least one step".into());
    }
    let opts = SolverOptions::default();
    (1..=steps)
        .map(|k| {
            let b = b_max * k as f64 / steps as f64;
            let r = scaling_example(b, n, &opts).map_err(|e| e.to_string())?;
            Ok(ScalingPoint {
                b,
                value: r.value,
                closed_form: r.closed_form,
                transport_bound: r.scaled_transport,
                certified: r.certified,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSolution {
    pub value: f64,
    pub primal: f64,
    pub certified: bool,
    /// b·W(μ,ν); the divergence never exceeds it.
    pub transport: f64,
    /// R(μ‖ν), `None` when μ is not absolutely continuous.
    pub entropy: Option<f64>,
    pub gamma_star: Vec<f64>,
    pub g_star: Vec<f64>,
}

/// Solves on points of the real line with cost b|x−y|. Masses are normalized.
pub fn solve_line(xs: &[f64], mu: &[f64], nu: &[f64], b: f64) -> Result<LineSolution, String> {
    let err = |e: gammadiv::Error| e.to_string();
    if xs.len() != mu.len() || xs.len() != nu.len() {
        return Err("points, mu and nu differ in length".into());
    }
    let points = PointSet::from_coords(xs.iter().map(|&x| vec![x]).collect()).map_err(err)?;
    let cost = CostMatrix::from_metric(&points, Metric::Euclidean, b).map_err(err)?;
    let mu = DiscreteMeasure::from_masses(mu.to_vec()).map_err(err)?;
    let nu = DiscreteMeasure::from_masses(nu.to_vec()).map_err(err)?;
    let sol = gamma_divergence(&mu, &nu, &cost, &SolverOptions::default()).map_err(err)?;
    let r = relative_entropy(&mu, &nu);
    Ok(LineSolution {
        value: sol.value,
        primal: sol.primal,
        certified: sol.certified,
        transport: transport_cost(&mu, &nu, &cost).map_err(err)?.value,
        entropy: r.is_finite().then_some(r),
        gamma_star: sol.gamma_star.weights().to_vec(),
        g_star: sol.g_star.values().to_vec(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianCurve {
    pub b: Vec<f64>,
    pub k: Vec<f64>,
    pub b_star: f64,
    pub k_star: f64,
}

/// k(b) for the kernel N(αx, σ²) on b ∈ (0, 1/(2σ²)), where quadratic costs
/// up to k(b) stay in the risk range.
pub fn gaussian_curve(alpha: f64, sigma: f64, steps: usize) -> Result<GaussianCurve, String> {
    let model = GaussianAR1::new(alpha, sigma).map_err(|e| e.to_string())?;
    let top = 1.0 / (2.0 * sigma * sigma);
    let b: Vec<f64> = (0..steps).map(|i| top * i as f64 / steps as f64).collect();
    let k = b.iter().map(|&b| model.k(b)).collect();
    let m = gaussian_kmax(&model);
    Ok(GaussianCurve { b, k, b_star: m.b_star, k_star: m.k_star })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<JsValue, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_wasm_bindgen::to_value(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = scalingCurve)]
pub fn scaling_curve_js(b_max: f64, steps: usize, n: usize) -> Result<JsValue, JsError> {
    to_js(scaling_curve(b_max, steps, n))
}

#[wasm_bindgen(js_name = solveLine)]
pub fn solve_line_js(xs: &[f64], mu: &[f64], nu: &[f64], b: f64) -> Result<JsValue, JsError> {
    to_js(solve_line(xs, mu, nu, b))
}

#[wasm_bindgen(js_name = gaussianCurve)]
pub fn gaussian_curve_js(alpha: f64, sigma: f64, steps: usize) -> Result<JsValue, JsError> {
    to_js(gaussian_curve(alpha, sigma, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_tracks_closed_form() {
        let c = scaling_curve(4.0, 4, 400).unwrap();
        assert_eq!(c.len(), 4);
        for p in &c {
            assert!(p.certified);
            assert!((p.value - p.closed_form).abs() < 1e-2, "{p:?}");
            assert!(p.value <= p.transport_bound + 1e-9);
        }
    }

    #[test]
    fn line_solution_sits_below_both_bounds() {
        let xs = [0.0, 0.5, 1.0];
        let s = solve_line(&xs, &[2.0, 1.0, 1.0], &[1.0, 1.0, 2.0], 3.0).unwrap();
        assert!(s.certified);
        assert!(s.value <= s.transport + 1e-12);
        assert!(s.value <= s.entropy.unwrap() + 1e-12);
        assert!((s.gamma_star.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert!(s.g_star[i] - s.g_star[j] <= 3.0 * (xs[i] - xs[j]).abs() + 1e-9);
            }
        }
    }

    #[test]
    fn disjoint_supports_have_no_entropy() {
        let s = solve_line(&[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(s.entropy, None);
        assert!((s.transport - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(solve_line(&[0.0], &[1.0, 0.0], &[1.0], 1.0).is_err());
        assert!(solve_line(&[0.0, 1.0], &[0.0, 0.0], &[1.0, 1.0], 1.0).is_err());
        assert!(scaling_curve(0.0, 3, 200).is_err());
    }

    #[test]
    fn gaussian_peak() {
        let g = gaussian_curve(0.5, 1.0, 50).unwrap();
        assert_eq!((g.b_star, g.k_star), (0.25, 0.125));
        let best = g.k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(best <= g.k_star + 1e-12 && best > g.k_star - 1e-3);
    }
}
