use std::collections::BTreeMap;

use super::{AmplitudeStrategy, DistributionKind};
use crate::error::{Error, Result};

/// Squared norms further than this from one are rescaled with a warning.
const RENORMALIZE_ABOVE: f64 = 1e-9;
/// Squared norms further than this from one are rejected.
const REJECT_ABOVE: f64 = 1e-3;

/// User-supplied amplitude vectors, one per block length, with optional
/// per-photon-number overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomDistribution {
    per_k: BTreeMap<usize, Vec<f64>>,
    per_m: BTreeMap<(usize, usize), Vec<f64>>,
}

impl CustomDistribution {
    /// `multiphoton` maps a photon number `m` to its own `k → vector` table.
    pub fn new(
        per_k: BTreeMap<usize, Vec<f64>>,
        multiphoton: BTreeMap<usize, BTreeMap<usize, Vec<f64>>>,
    ) -> Result<Self> {
        if per_k.is_empty() {
            return Err(Error::CustomDistribution("no coefficient vectors given".into()));
        }
        let per_k = per_k
            .into_iter()
            .map(|(k, v)| Ok((k, normalize(k, None, v)?)))
            .collect::<Result<_>>()?;
        let mut per_m = BTreeMap::new();
        for (m, table) in multiphoton {
            if m == 0 {
                return Err(Error::CustomDistribution("photon number 0 is not allowed".into()));
            }
            for (k, v) in table {
                per_m.insert((k, m), normalize(k, Some(m), v)?);
            }
        }
        Ok(Self { per_k, per_m })
    }

    /// Block lengths with an explicit vector.
    pub fn block_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_k.keys().copied()
    }
}

fn normalize(k: usize, m: Option<usize>, mut v: Vec<f64>) -> Result<Vec<f64>> {
    let label = match m {
        Some(m) => format!("k={k}, m={m}"),
        None => format!("k={k}"),
    };
    if k == 0 {
        return Err(Error::CustomDistribution("block length 0 is not allowed".into()));
    }
    if v.len() != k {
        return Err(Error::CustomDistribution(format!(
            "{label}: expected {k} coefficients, got {}",
            v.len()
        )));
    }
    if let Some(bad) = v.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::CustomDistribution(format!(
            "{label}: coefficients must be finite and non-negative, got {bad}"
        )));
    }
    let norm2: f64 = v.iter().map(|a| a * a).sum();
    let off = (norm2 - 1.0).abs();
    if off > REJECT_ABOVE {
        return Err(Error::CustomDistribution(format!(
            "{label}: squared norm {norm2} is too far from 1"
        )));
    }
    if off > RENORMALIZE_ABOVE {
        log::warn!("custom distribution {label}: squared norm {norm2}, renormalizing");
        let scale = norm2.sqrt();
        v.iter_mut().for_each(|a| *a /= scale);
    }
    Ok(v)
}

impl AmplitudeStrategy for CustomDistribution {
    fn kind(&self) -> DistributionKind {
        DistributionKind::Custom
    }

    fn coefficients(&self, k: usize) -> Result<Vec<f64>> {
        self.per_k
            .get(&k)
            .cloned()
            .ok_or_else(|| Error::CustomDistribution(format!("no coefficients for k={k}")))
    }

    fn multiphoton_coefficients(&self, k: usize, m: usize) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::invalid("m", "photon number must be >= 1"));
        }
        match self.per_m.get(&(k, m)) {
            Some(v) => Ok(v.clone()),
            None => self.coefficients(k),
        }
    }
}
