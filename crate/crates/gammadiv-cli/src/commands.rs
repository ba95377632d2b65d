use std::path::Path;

use gammadiv::asymptotics::{discrete_expansion, entropy_limit_sweep, transport_limit_sweep};
use gammadiv::markov_uq::KernelFile;
use gammadiv::{
    directional_derivative, ergodic_bound, gamma_divergence, gaussian_kmax, gaussian_risk_coeffs, in_gaussian_risk_range,
    relative_entropy, solve_membership, transport_cost, FiniteKernel, GaussianAR1, LocatedMeasure, QuadraticFunction,
    SolverOptions,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::inputs::{place_direction, read_json, CliError, ProblemInputs};
use crate::report::{Certificate, Config, RunReport};

/// What `compute` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum What {
    Gamma,
    Entropy,
    Transport,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Entropy,
    Transport,
    Expansion,
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

pub fn compute(cmd: Vec<String>, cfg: Config, opts: &SolverOptions, inputs: ProblemInputs, what: What) -> Result<RunReport, CliError> {
    let echo = json!({ "problem": &inputs, "what": what });
    let p = inputs.problem()?;
    let (mu, nu, cost) = (&p.merged.mu, &p.merged.nu, &p.cost);
    let mut result = serde_json::Map::new();
    result.insert("points".into(), to_value(&p.merged.points));
    result.insert("mu".into(), to_value(mu));
    result.insert("nu".into(), to_value(nu));
    let mut certs = Vec::new();
    let mut gamma = None;
    if matches!(what, What::Gamma | What::All) {
        let sol = gamma_divergence(mu, nu, cost, opts)?;
        certs.push(Certificate::new("gamma", &sol, mu, nu, cost, cfg.tol)?);
        result.insert(
            "gamma".into(),
            json!({
                "value": sol.value,
                "primal": sol.primal,
                "duality_gap": sol.duality_gap,
                "certified": sol.certified,
                "transport_part": sol.transport_part,
                "entropy_part": sol.entropy_part,
                "gamma_star": sol.gamma_star,
                "g_star": sol.g_star,
                "plan": sol.plan.entries,
                "iterations": sol.iterations,
            }),
        );
        gamma = Some(sol);
    }
    let re = relative_entropy(mu, nu);
    if matches!(what, What::Entropy | What::All) {
        // infinity has no JSON form; report it as null with an explicit flag
        result.insert(
            "entropy".into(),
            json!({ "value": re.is_finite().then_some(re), "absolutely_continuous": re.is_finite() }),
        );
    }
    let mut transport_value = None;
    if matches!(what, What::Transport | What::All) {
        let ot = transport_cost(mu, nu, cost)?;
        let primal = ot.plan.cost(cost);
        let dual = mu.integrate(ot.potential.values()) - nu.integrate(ot.potential.values());
        result.insert(
            "transport".into(),
            json!({
                "value": ot.value,
                "dual": dual,
                "duality_gap": (primal - dual).abs(),
                "plan": ot.plan.entries,
                "potential": ot.potential,
                "pivots": ot.pivots,
            }),
        );
        transport_value = Some(ot.value);
    }
    if let (Some(sol), Some(w)) = (&gamma, transport_value) {
        let bound = w.min(re);
        result.insert("inequality".into(), json!({ "min_r_w": bound, "holds": sol.value <= bound + 1e-9 }));
    }
    Ok(RunReport::new(cmd, cfg, echo, Value::Object(result)).with_certificates(cost, certs))
}

fn default_scales(kind: SweepKind) -> Vec<f64> {
    match kind {
        SweepKind::Entropy => (0..=12).map(|k| 10f64.powf(-1.0 + k as f64 / 3.0)).collect(),
        SweepKind::Transport => (0..=8).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect(),
        SweepKind::Expansion => vec![1.0, 3.0, 10.0, 30.0, 100.0],
    }
}

/// Returns the CSV text and whether every solve was certified.
pub fn sweep(opts: &SolverOptions, inputs: ProblemInputs, kind: SweepKind, scales: Option<Vec<f64>>) -> Result<(String, bool), CliError> {
    let p = inputs.with_scale(1.0).problem()?;
    let (mu, nu, cost) = (&p.merged.mu, &p.merged.nu, &p.cost);
    let scales = scales.unwrap_or_else(|| default_scales(kind));
    Ok(match kind {
        SweepKind::Entropy => {
            let s = entropy_limit_sweep(mu, nu, cost, &scales, opts)?;
            (s.to_csv(), s.certified)
        }
        SweepKind::Transport => {
            let s = transport_limit_sweep(mu, nu, cost, &scales, opts)?;
            (s.to_csv(), s.certified)
        }
        SweepKind::Expansion => {
            let e = discrete_expansion(mu, nu, cost, &scales, opts)?;
            for w in &e.warnings {
                eprintln!("warning: {w}");
            }
            let mut csv = String::from("scale,value,leading,constant,remainder\n");
            for ((b, v), r) in e.scales.iter().zip(&e.values).zip(&e.remainders) {
                csv.push_str(&format!("{b},{v},{},{},{r}\n", e.leading, e.constant));
            }
            (csv, e.certified)
        }
    })
}

pub fn derivative(cmd: Vec<String>, cfg: Config, opts: &SolverOptions, inputs: ProblemInputs, rho_path: &Path) -> Result<RunReport, CliError> {
    let rho_file: LocatedMeasure = read_json(rho_path)?;
    let echo = json!({ "problem": &inputs, "rho": &rho_file });
    let p = inputs.problem()?;
    let rho = place_direction(&rho_file, &p.merged.points)?;
    let (mu, nu, cost) = (&p.merged.mu, &p.merged.nu, &p.cost);
    let rep = directional_derivative(mu, nu, cost, &rho, opts)?;
    let tight = SolverOptions { tol: opts.tol.min(gammadiv::sensitivity::FD_TOL), ..*opts };
    let base = gamma_divergence(mu, nu, cost, &tight)?;
    let cert = Certificate::new("base", &base, mu, nu, cost, cfg.tol)?;
    let mut report = RunReport::new(cmd, cfg, echo, json!({ "points": p.merged.points, "rho": rho, "derivative": rep }))
        .with_certificates(cost, vec![cert]);
    report.certified &= rep.certified;
    Ok(report)
}

fn kernel_inputs(path: &Path) -> Result<(KernelFile, FiniteKernel), CliError> {
    let file: KernelFile = read_json(path)?;
    let k = file.kernel()?;
    Ok((file, k))
}

fn need<T: Clone>(x: &Option<T>, name: &str) -> Result<T, CliError> {
    x.clone().ok_or_else(|| CliError::Invalid(format!("kernel file has no \"{name}\"")))
}

pub fn ergodic(cmd: Vec<String>, cfg: Config, opts: &SolverOptions, path: &Path) -> Result<RunReport, CliError> {
    let (file, p) = kernel_inputs(path)?;
    let q = p.with_matrix(need(&file.q, "Q")?)?;
    let f = need(&file.f, "f")?;
    let rep = ergodic_bound(&p, &q, &f, opts)?;
    let mut certs = Vec::new();
    for x in 0..p.len() {
        let (qx, px) = (q.row(x), p.row(x));
        let sol = gamma_divergence(&qx, &px, p.cost(), opts)?;
        certs.push(Certificate::new(format!("state {x}"), &sol, &qx, &px, p.cost(), cfg.tol)?);
    }
    let entropies: Vec<Option<f64>> = rep.relative_entropies.iter().map(|r| r.is_finite().then_some(*r)).collect();
    let result = json!({
        "membership": rep.membership,
        "divergences": rep.divergences,
        "relative_entropies": entropies,
        "classes": rep.classes,
        "holds": rep.holds,
    });
    let mut report = RunReport::new(cmd, cfg, to_value(&file), result).with_certificates(p.cost(), certs);
    report.certified &= rep.certified && rep.holds;
    Ok(report)
}

pub fn membership(cmd: Vec<String>, cfg: Config, path: &Path) -> Result<RunReport, CliError> {
    let (file, p) = kernel_inputs(path)?;
    let f = need(&file.f, "f")?;
    let m = solve_membership(&p, &f)?;
    Ok(RunReport::new(cmd, cfg, to_value(&file), to_value(&m)))
}

pub struct GaussianArgs {
    pub alpha: f64,
    pub sigma: f64,
    /// Potential `−b x² − c x − d` and constant `a` for the risk map.
    pub potential: Option<(QuadraticFunction, f64)>,
    /// Cost `b x² + c x + d` to test for membership.
    pub cost: Option<QuadraticFunction>,
}

pub fn gaussian(cmd: Vec<String>, cfg: Config, args: &GaussianArgs) -> Result<RunReport, CliError> {
    let model = GaussianAR1::new(args.alpha, args.sigma)?;
    let k = gaussian_kmax(&model);
    let agree = (k.search_b - k.b_star).abs() <= 1e-8 && (k.search_k - k.k_star).abs() <= 1e-8;
    let mut result = json!({ "kmax": k, "search_agrees": agree });
    if let Some((g, a)) = args.potential {
        let (f, valid) = gaussian_risk_coeffs(&model, &g, a);
        result["risk_map"] = if valid { json!({ "valid": true, "f": f }) } else { json!({ "valid": false }) };
    }
    if let Some(f) = args.cost {
        result["in_risk_range"] = json!(in_gaussian_risk_range(&model, &f));
    }
    let inputs = json!({
        "alpha": args.alpha,
        "sigma": args.sigma,
        "potential": args.potential.map(|(g, _)| g),
        "a": args.potential.map(|(_, a)| a),
        "cost": args.cost,
    });
    let mut report = RunReport::new(cmd, cfg, inputs, result);
    report.certified = agree;
    Ok(report)
}

/// Randomized self-check of the divergence inequalities, seeded.
pub fn check(cmd: Vec<String>, cfg: Config, opts: &SolverOptions, cases: usize, max_points: usize) -> Result<RunReport, CliError> {
    if max_points < 2 {
        return Err(CliError::Invalid("--max-points must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut failures = Vec::new();
    let (mut worst_gap, mut worst_excess) = (0.0f64, f64::NEG_INFINITY);
    for case in 0..cases {
        let n = rng.gen_range(2..=max_points);
        let coords = (0..n).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let points = gammadiv::PointSet::from_coords(coords)?;
        let cost = gammadiv::CostMatrix::from_metric(&points, gammadiv::Metric::Euclidean, rng.gen_range(0.5..5.0))?;
        let mut draw = || {
            let w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.05..1.0) }).collect();
            let w = if w.iter().all(|&x| x == 0.0) { vec![1.0; n] } else { w };
            gammadiv::DiscreteMeasure::from_masses(w)
        };
        let (mu, nu) = (draw()?, draw()?);
        let sol = gamma_divergence(&mu, &nu, &cost, opts)?;
        let bound = transport_cost(&mu, &nu, &cost)?.value.min(relative_entropy(&mu, &nu));
        let check = gammadiv::verify_optimality(&sol.gamma_star, &sol.g_star, &mu, &nu, &cost, cfg.tol)?;
        worst_gap = worst_gap.max(sol.duality_gap);
        worst_excess = worst_excess.max(sol.value - bound);
        if !(sol.certified && check.optimal && sol.value >= 0.0 && sol.value <= bound + 1e-9) {
            failures.push(json!({ "case": case, "points": n, "value": sol.value, "bound": bound, "gap": sol.duality_gap }));
        }
    }
    let result = json!({
        "cases": cases,
        "failures": failures,
        "max_duality_gap": worst_gap,
        "max_excess_over_min_r_w": worst_excess,
    });
    let inputs = json!({ "cases": cases, "max_points": max_points });
    let mut report = RunReport::new(cmd, cfg, inputs, result);
    report.certified = failures.is_empty();
    Ok(report)
}
