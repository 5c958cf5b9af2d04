//! `custom:<file>` amplitude distributions.
//!
//! ```toml
//! [coefficients]
//! "1" = [1.0]
//! "2" = [0.6, 0.8]
//!
//! [multiphoton.2]      # optional, photon number 2
//! "2" = [0.8, 0.6]
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use dpsbound_core::error::Error as CoreError;
use dpsbound_core::resend::{CustomDistribution, StrategyFactory};
use dpsbound_core::StrategyRegistry;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFile {
    coefficients: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    multiphoton: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

fn index(key: &str, what: &str) -> Result<usize, CoreError> {
    key.trim()
        .parse()
        .map_err(|_| CoreError::CustomDistribution(format!("{what} key `{key}` is not an integer")))
}

fn table(raw: BTreeMap<String, Vec<f64>>) -> Result<BTreeMap<usize, Vec<f64>>, CoreError> {
    raw.into_iter()
        .map(|(k, v)| Ok((index(&k, "block length")?, v)))
        .collect()
}

pub fn parse(text: &str) -> Result<CustomDistribution, CoreError> {
    let file: CustomFile = toml::from_str(text).map_err(|e| CoreError::CustomDistribution(e.to_string()))?;
    let per_k = table(file.coefficients)?;
    let multiphoton = file
        .multiphoton
        .into_iter()
        .map(|(m, t)| Ok((index(&m, "photon number")?, table(t)?)))
        .collect::<Result<_, CoreError>>()?;
    CustomDistribution::new(per_k, multiphoton)
}

pub fn load(path: &Path) -> Result<CustomDistribution, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::CustomDistribution(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CoreError::CustomDistribution(msg) => CoreError::CustomDistribution(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Built-in distributions plus `custom:<file>`.
pub fn registry() -> StrategyRegistry {
    let mut reg = StrategyRegistry::with_builtins();
    let factory: StrategyFactory = Arc::new(|arg| match arg {
        Some(path) if !path.is_empty() => Ok(Arc::new(load(Path::new(path))?)),
        _ => Err(CoreError::CustomDistribution("expected custom:<file>".into())),
    });
    reg.register("custom", factory);
    reg
}
