//! Environment files: `{"K", "priorMean", "priorCov", "coeffs", "noiseVars"}`
//! with row-major matrices.

use std::fs;
use std::path::Path;

use infoseq_core::Environment;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "priorMean")]
    pub prior_mean: Vec<f64>,
    #[serde(rename = "priorCov")]
    pub prior_cov: Vec<Vec<f64>>,
    pub coeffs: Vec<Vec<f64>>,
    #[serde(rename = "noiseVars")]
    pub noise_vars: Vec<f64>,
}

fn square(name: &str, rows: &[Vec<f64>], k: usize) -> CliResult<DMatrix<f64>> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(CliError::input(format!("{name} must be {k}x{k}")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl EnvironmentFile {
    pub fn from_environment(env: &Environment) -> Self {
        EnvironmentFile {
            k: env.num_signals(),
            prior_mean: env.prior_mean().iter().copied().collect(),
            prior_cov: rows(env.prior_cov()),
            coeffs: rows(env.coeffs()),
            noise_vars: env.noise_vars().iter().copied().collect(),
        }
    }

    /// Checks shapes against `K` and runs the environment validation.
    pub fn to_environment(&self) -> CliResult<Environment> {
        let k = self.k;
        if k == 0 {
            return Err(CliError::input("K must be at least 1"));
        }
        if self.prior_mean.len() != k || self.noise_vars.len() != k {
            return Err(CliError::input(format!("priorMean and noiseVars must have length {k}")));
        }
        let env = Environment::new(
            self.prior_mean.clone(),
            square("priorCov", &self.prior_cov, k)?,
            square("coeffs", &self.coeffs, k)?,
            self.noise_vars.clone(),
        )?;
        let report = env.validate();
        if !report.is_valid() {
            return Err(CliError::input(format!("invalid environment: {report}")));
        }
        Ok(env)
    }
}

pub fn parse_environment(json: &str) -> CliResult<Environment> {
    serde_json::from_str::<EnvironmentFile>(json)?.to_environment()
}

pub fn environment_to_json(env: &Environment) -> String {
    serde_json::to_string_pretty(&EnvironmentFile::from_environment(env)).expect("plain data serializes")
}

pub fn read_environment(path: &Path) -> CliResult<Environment> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_environment(&text)
}

pub fn write_environment(env: &Environment, path: &Path) -> CliResult<()> {
    fs::write(path, environment_to_json(env) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use infoseq_core::special_cases::{chain_environment, w1_demo_environment};
    use infoseq_core::{Division, PosteriorModel, ObjectiveOracle};

    #[test]
    fn round_trip_is_exact() {
        let env = w1_demo_environment();
        let back = parse_environment(&environment_to_json(&env)).unwrap();
        assert_eq!(back.prior_cov(), env.prior_cov());
        let a = PosteriorModel::new(&env).unwrap().value(&Division::new(vec![3, 1, 4]));
        let b = PosteriorModel::new(&back).unwrap().value(&Division::new(vec![3, 1, 4]));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        let mut file = EnvironmentFile::from_environment(&chain_environment());
        file.coeffs.pop();
        assert!(file.to_environment().is_err());
        let mut file = EnvironmentFile::from_environment(&chain_environment());
        file.noise_vars[1] = 0.0;
        let err = file.to_environment().unwrap_err().to_string();
        assert!(err.contains("noiseVars must be strictly positive"), "{err}");
        assert!(parse_environment(r#"{"K": 1}"#).is_err());
    }
}
