//! Named environments. Names are tried before file paths.

use std::path::Path;

use infoseq_core::special_cases::{
    chain_environment, orthogonal_environment, w1_demo_environment, K2Coefficients,
    MultipleBiasesEnvironment,
};
use infoseq_core::Environment;
use serde::Deserialize;

use crate::envfile::read_environment;
use crate::error::{CliError, CliResult};

pub const NAMES: &str = "chain, orthogonal:K, multiple-biases:<json>, k2:a,b,c,d, w1demo";

#[derive(Debug, Clone)]
pub struct ResolvedEnv {
    /// The reference as given.
    pub reference: String,
    pub env: Environment,
    /// Present for `k2:` references.
    pub k2: Option<K2Coefficients>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultipleBiasesArgs {
    #[serde(rename = "priorVars")]
    prior_vars: Vec<f64>,
    #[serde(rename = "noiseVars")]
    noise_vars: Vec<f64>,
}

fn parse_floats(list: &str, what: &str) -> CliResult<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("{what}: cannot parse {s:?} as a number")))
        })
        .collect()
}

pub fn resolve(reference: &str) -> CliResult<ResolvedEnv> {
    let named = |env| ResolvedEnv { reference: reference.to_string(), env, k2: None };
    if reference == "chain" {
        return Ok(named(chain_environment()));
    }
    if reference == "w1demo" {
        return Ok(named(w1_demo_environment()));
    }
    if let Some(k) = reference.strip_prefix("orthogonal:") {
        let k: usize =
            k.trim().parse().map_err(|_| CliError::input(format!("orthogonal:K needs an integer, got {k:?}")))?;
        return Ok(named(orthogonal_environment(k)?));
    }
    if let Some(json) = reference.strip_prefix("multiple-biases:") {
        let args: MultipleBiasesArgs = serde_json::from_str(json)?;
        let mb = MultipleBiasesEnvironment::new(args.prior_vars, args.noise_vars)?;
        return Ok(named(mb.to_environment()));
    }
    if let Some(list) = reference.strip_prefix("k2:") {
        let x = parse_floats(list, "k2")?;
        if x.len() != 4 {
            return Err(CliError::input(format!("k2 needs four coefficients a,b,c,d, got {}", x.len())));
        }
        let k2 = K2Coefficients::new(x[0], x[1], x[2], x[3])?;
        return Ok(ResolvedEnv { reference: reference.to_string(), env: k2.to_environment(), k2: Some(k2) });
    }
    let path = Path::new(reference);
    if path.exists() {
        return Ok(named(read_environment(path)?));
    }
    Err(CliError::input(format!("unknown environment {reference:?}: not a file and not one of {NAMES}")))
}

/// Comma-separated non-negative counts.
pub fn parse_counts(list: &str) -> CliResult<Vec<u32>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| CliError::input(format!("cannot parse count {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_every_name() {
        assert_eq!(resolve("chain").unwrap().env.num_signals(), 3);
        assert_eq!(resolve("orthogonal:4").unwrap().env.num_signals(), 4);
        assert_eq!(resolve("w1demo").unwrap().env.num_signals(), 3);
        let mb = resolve(r#"multiple-biases:{"priorVars":[1,0.5],"noiseVars":[1,2]}"#).unwrap();
        assert_eq!(mb.env.num_signals(), 2);
        let k2 = resolve("k2:1,0.5,-0.3,2").unwrap();
        assert_eq!(k2.k2.unwrap().d, 2.0);
    }

    #[test]
    fn rejects_malformed_references() {
        assert!(resolve("orthogonal:x").is_err());
        assert!(resolve("k2:1,2,3").is_err());
        assert!(resolve("k2:0.1,1,1,0.1").is_err());
        assert!(resolve("no/such/file.json").is_err());
        assert!(parse_counts("4,x,0").is_err());
    }
}
