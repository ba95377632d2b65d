use gammadiv::{validate_cost, verify_optimality, CostMatrix, DiscreteMeasure, GammaSolution, LipschitzFunction};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::inputs::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub method: MethodArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    /// Mirror-descent warm start, then exact active-set pivoting.
    ActiveSet,
    /// Mirror descent only.
    MirrorDescent,
}

impl From<MethodArg> for gammadiv::Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ActiveSet => gammadiv::Method::ActiveSet,
            MethodArg::MirrorDescent => gammadiv::Method::MirrorDescent,
        }
    }
}

/// Unit-scale cost on the points every certificate refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub entries: Vec<Vec<f64>>,
    pub scale: f64,
}

impl CostRecord {
    pub fn of(cost: &CostMatrix) -> Self {
        Self { entries: cost.rows(), scale: cost.scale() }
    }

    pub fn matrix(&self) -> Result<CostMatrix, CliError> {
        Ok(validate_cost(&self.entries, self.scale)?)
    }
}

/// One solve: enough to re-run the optimality check without re-solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub label: String,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub gamma_star: Vec<f64>,
    pub g_star: Vec<f64>,
    pub value: f64,
    pub primal: f64,
    pub duality_gap: f64,
    pub certified: bool,
    pub gibbs_residual: f64,
    pub transport_residual: f64,
}

impl Certificate {
    pub fn new(
        label: impl Into<String>,
        sol: &GammaSolution,
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        cost: &CostMatrix,
        tol: f64,
    ) -> Result<Self, CliError> {
        let check = verify_optimality(&sol.gamma_star, &sol.g_star, mu, nu, cost, tol)?;
        Ok(Self {
            label: label.into(),
            mu: mu.weights().to_vec(),
            nu: nu.weights().to_vec(),
            gamma_star: sol.gamma_star.weights().to_vec(),
            g_star: sol.g_star.values().to_vec(),
            value: sol.value,
            primal: sol.primal,
            duality_gap: sol.duality_gap,
            certified: sol.certified,
            gibbs_residual: check.gibbs_residual,
            transport_residual: check.transport_residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub config: Config,
    /// sha256 of the canonical JSON of `inputs` and `config`.
    pub digest: String,
    pub inputs: Value,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

pub fn digest(inputs: &Value, config: &Config) -> String {
    let bytes = serde_json::to_vec(&(inputs, config)).expect("values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn new(command: Vec<String>, config: Config, inputs: Value, result: Value) -> Self {
        Self {
            command,
            digest: digest(&inputs, &config),
            config,
            inputs,
            result,
            cost: None,
            certificates: Vec::new(),
            certified: true,
            timing_ms: None,
        }
    }

    pub fn with_certificates(mut self, cost: &CostMatrix, certs: Vec<Certificate>) -> Self {
        self.certified &= certs.iter().all(|c| c.certified);
        self.cost = Some(CostRecord::of(cost));
        self.certificates = certs;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckedCertificate {
    pub label: String,
    pub gibbs_residual: f64,
    pub transport_residual: f64,
    pub primal: f64,
    pub dual: f64,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub digest_matches: bool,
    pub certificates: Vec<CheckedCertificate>,
    pub all_optimal: bool,
}

/// Re-checks a report: its digest, then every certificate's optimality
/// conditions at the report's tolerance.
pub fn verify(report: &RunReport) -> Result<Verification, CliError> {
    let digest_matches = digest(&report.inputs, &report.config) == report.digest;
    let mut checked = Vec::new();
    if !report.certificates.is_empty() {
        let cost = report
            .cost
            .as_ref()
            .ok_or_else(|| CliError::Invalid("report has certificates but no cost".into()))?
            .matrix()?;
        for c in &report.certificates {
            let m = |w: &[f64]| DiscreteMeasure::new(w.to_vec());
            let g = LipschitzFunction::new(c.g_star.clone());
            let r = verify_optimality(&m(&c.gamma_star)?, &g, &m(&c.mu)?, &m(&c.nu)?, &cost, report.config.tol)?;
            checked.push(CheckedCertificate {
                label: c.label.clone(),
                gibbs_residual: r.gibbs_residual,
                transport_residual: r.transport_residual,
                primal: r.primal,
                dual: r.dual,
                optimal: r.optimal,
            });
        }
    }
    Ok(Verification { digest_matches, all_optimal: checked.iter().all(|c| c.optimal), certificates: checked })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_config() {
        let inputs = serde_json::json!({"x": [1.0, 2.0]});
        let a = Config { tol: 1e-8, max_iter: 10, seed: 1, method: MethodArg::ActiveSet };
        let b = Config { seed: 2, ..a };
        assert_eq!(digest(&inputs, &a), digest(&inputs, &a));
        assert_ne!(digest(&inputs, &a), digest(&inputs, &b));
        assert_eq!(digest(&inputs, &a).len(), 64);
    }
}
