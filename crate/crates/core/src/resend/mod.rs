//! Amplitude distributions `A_n^(k)` for Eve's resend states.
//!
//! Every variant implements [`AmplitudeStrategy`] and is reachable by name
//! through a [`StrategyRegistry`], so the CLI can select one with
//! `--dist flat|binomial|optimal|custom:<file>`.

mod custom;
pub mod eigen;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use custom::CustomDistribution;
use eigen::SymmetricTridiagonal;

/// Squared-norm slack tolerated on any emitted coefficient vector.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Flat,
    Binomial,
    Optimal,
    Custom,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DistributionKind::Flat => "flat",
            DistributionKind::Binomial => "binomial",
            DistributionKind::Optimal => "optimal",
            DistributionKind::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// A rule assigning a real, non-negative, unit-norm amplitude vector to each
/// block length `k`.
pub trait AmplitudeStrategy: fmt::Debug + Send + Sync {
    fn kind(&self) -> DistributionKind;

    /// Amplitudes `(A_1, …, A_k)`; mode 1 arrives last at Bob.
    fn coefficients(&self, k: usize) -> Result<Vec<f64>>;

    /// Amplitudes used for the `m`-photon component. Defaults to the
    /// single-photon vector for every `m`.
    fn multiphoton_coefficients(&self, k: usize, m: usize) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::invalid("m", "photon number must be >= 1"));
        }
        self.coefficients(k)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::invalid("k", "block length must be >= 1"))
    } else {
        Ok(())
    }
}

/// `1/√k` in every mode.
pub fn flat_coefficients(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    Ok(vec![1.0 / (k as f64).sqrt(); k])
}

/// `(1/√2)^(k-1) · √C(k-1, n-1)`, evaluated in log space so large `k` does not
/// overflow the binomial coefficient.
pub fn binomial_coefficients(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let top = k - 1;
    let ln2 = std::f64::consts::LN_2;
    let mut ln_choose = 0.0;
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        if j > 0 {
            ln_choose += ((top - j + 1) as f64).ln() - (j as f64).ln();
        }
        out.push((0.5 * (ln_choose - top as f64 * ln2)).exp());
    }
    Ok(out)
}

/// Unit eigenvector of the `k × k` first-off-diagonal matrix for its largest
/// eigenvalue, with non-negative entries.
pub fn optimal_coefficients(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let (_, v) = SymmetricTridiagonal::path(k)?.max_eigenpair(1e-12)?;
    Ok(v.into_iter().map(|a| a.max(0.0)).collect())
}

/// Coefficients for the `m`-photon component of a distribution.
pub fn multiphoton_coefficients(dist: &AmplitudeDistribution, k: usize, m: usize) -> Result<Vec<f64>> {
    dist.multiphoton_coefficients(k, m)
}

#[derive(Debug, Default)]
pub struct Flat;

impl AmplitudeStrategy for Flat {
    fn kind(&self) -> DistributionKind {
        DistributionKind::Flat
    }

    fn coefficients(&self, k: usize) -> Result<Vec<f64>> {
        flat_coefficients(k)
    }
}

#[derive(Debug, Default)]
pub struct Binomial;

impl AmplitudeStrategy for Binomial {
    fn kind(&self) -> DistributionKind {
        DistributionKind::Binomial
    }

    fn coefficients(&self, k: usize) -> Result<Vec<f64>> {
        binomial_coefficients(k)
    }
}

/// Optimal distribution with a per-`k` memo shared by concurrent readers.
#[derive(Debug, Default)]
pub struct Optimal {
    memo: RwLock<HashMap<usize, Arc<[f64]>>>,
}

impl AmplitudeStrategy for Optimal {
    fn kind(&self) -> DistributionKind {
        DistributionKind::Optimal
    }

    fn coefficients(&self, k: usize) -> Result<Vec<f64>> {
        if let Some(v) = self.memo.read().expect("memo poisoned").get(&k) {
            return Ok(v.to_vec());
        }
        let v: Arc<[f64]> = optimal_coefficients(k)?.into();
        self.memo
            .write()
            .expect("memo poisoned")
            .entry(k)
            .or_insert_with(|| v.clone());
        Ok(v.to_vec())
    }
}

/// Cheaply clonable handle to a registered strategy.
#[derive(Clone)]
pub struct AmplitudeDistribution {
    name: String,
    strategy: Arc<dyn AmplitudeStrategy>,
}

impl fmt::Debug for AmplitudeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmplitudeDistribution")
            .field("name", &self.name)
            .field("kind", &self.strategy.kind())
            .finish()
    }
}

impl AmplitudeDistribution {
    pub fn from_strategy(name: impl Into<String>, strategy: Arc<dyn AmplitudeStrategy>) -> Self {
        Self {
            name: name.into(),
            strategy,
        }
    }

    pub fn flat() -> Self {
        Self::from_strategy("flat", Arc::new(Flat))
    }

    pub fn binomial() -> Self {
        Self::from_strategy("binomial", Arc::new(Binomial))
    }

    pub fn optimal() -> Self {
        Self::from_strategy("optimal", Arc::new(Optimal::default()))
    }

    pub fn custom(dist: CustomDistribution) -> Self {
        Self::from_strategy("custom", Arc::new(dist))
    }

    /// Name the distribution was resolved under (e.g. `optimal`, `custom`).
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DistributionKind {
        self.strategy.kind()
    }

    pub fn coefficients(&self, k: usize) -> Result<Vec<f64>> {
        self.strategy.coefficients(k)
    }

    pub fn multiphoton_coefficients(&self, k: usize, m: usize) -> Result<Vec<f64>> {
        self.strategy.multiphoton_coefficients(k, m)
    }
}

/// Builds a strategy from the optional argument after `name:`.
pub type StrategyFactory = Arc<dyn Fn(Option<&str>) -> Result<Arc<dyn AmplitudeStrategy>> + Send + Sync>;

/// Name-keyed table of distribution factories.
#[derive(Clone, Default)]
pub struct StrategyRegistry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding `flat`, `binomial` and `optimal`. `custom` needs a file
    /// loader and is registered by the front end.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("flat", no_arg("flat", || Arc::new(Flat)));
        reg.register("binomial", no_arg("binomial", || Arc::new(Binomial)));
        reg.register("optimal", no_arg("optimal", || Arc::new(Optimal::default())));
        reg
    }

    pub fn register(&mut self, name: impl Into<String>, factory: StrategyFactory) {
        self.factories.insert(name.into(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    /// Resolves `name` or `name:argument`.
    pub fn resolve(&self, spec: &str) -> Result<AmplitudeDistribution> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownDistribution(spec.to_string()))?;
        Ok(AmplitudeDistribution::from_strategy(name, factory(arg)?))
    }
}

fn no_arg<F>(name: &'static str, make: F) -> StrategyFactory
where
    F: Fn() -> Arc<dyn AmplitudeStrategy> + Send + Sync + 'static,
{
    Arc::new(move |arg| match arg {
        None => Ok(make()),
        Some(a) => Err(Error::invalid("dist", format!("`{name}` takes no argument, got `{a}`"))),
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_vec(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
        }
    }

    fn norm2(v: &[f64]) -> f64 {
        v.iter().map(|a| a * a).sum()
    }

    #[test]
    fn flat_examples() {
        assert_vec(&flat_coefficients(1).unwrap(), &[1.0], 1e-15);
        assert_vec(&flat_coefficients(4).unwrap(), &[0.5; 4], 1e-15);
        assert_vec(&flat_coefficients(2).unwrap(), &[0.70711; 2], 1e-5);
        assert!(flat_coefficients(0).is_err());
    }

    #[test]
    fn binomial_examples() {
        assert_vec(&binomial_coefficients(1).unwrap(), &[1.0], 1e-15);
        assert_vec(&binomial_coefficients(3).unwrap(), &[0.5, 0.70711, 0.5], 1e-5);
        assert_vec(&binomial_coefficients(2).unwrap(), &[0.70711, 0.70711], 1e-5);
        assert!(binomial_coefficients(0).is_err());
    }

    #[test]
    fn optimal_examples() {
        assert_vec(&optimal_coefficients(2).unwrap(), &[0.70711, 0.70711], 1e-5);
        assert_vec(&optimal_coefficients(3).unwrap(), &[0.5, 0.70711, 0.5], 1e-5);
        assert!(optimal_coefficients(0).is_err());
    }

    #[test]
    fn optimal_matches_sine_profile() {
        for k in [1usize, 5, 17, 40] {
            let v = optimal_coefficients(k).unwrap();
            let s: Vec<f64> = (1..=k).map(|n| (n as f64 * PI / (k as f64 + 1.0)).sin()).collect();
            let norm = norm2(&s).sqrt();
            let s: Vec<f64> = s.iter().map(|a| a / norm).collect();
            assert_vec(&v, &s, 1e-6);
        }
    }

    #[test]
    fn all_builtins_are_normalized_for_long_blocks() {
        let reg = StrategyRegistry::with_builtins();
        for name in ["flat", "binomial", "optimal"] {
            let dist = reg.resolve(name).unwrap();
            for k in [1usize, 2, 9, 25, 50, 500] {
                let v = dist.coefficients(k).unwrap();
                assert_eq!(v.len(), k);
                assert!((norm2(&v) - 1.0).abs() < NORM_TOLERANCE, "{name} k={k}");
                assert!(v.iter().all(|a| *a >= 0.0));
            }
        }
    }

    #[test]
    fn multiphoton_defaults_to_single_photon_vector() {
        let flat = AmplitudeDistribution::flat();
        assert_vec(&multiphoton_coefficients(&flat, 2, 3).unwrap(), &[0.70711; 2], 1e-5);
        let opt = AmplitudeDistribution::optimal();
        assert_vec(&multiphoton_coefficients(&opt, 1, 5).unwrap(), &[1.0], 1e-12);
        let bin = AmplitudeDistribution::binomial();
        assert_vec(
            &multiphoton_coefficients(&bin, 3, 2).unwrap(),
            &[0.5, 0.70711, 0.5],
            1e-5,
        );
        assert!(flat.multiphoton_coefficients(2, 0).is_err());
    }

    #[test]
    fn registry_resolution() {
        let reg = StrategyRegistry::with_builtins();
        assert_eq!(reg.names().collect::<Vec<_>>(), ["binomial", "flat", "optimal"]);
        assert_eq!(reg.resolve("optimal").unwrap().kind(), DistributionKind::Optimal);
        assert!(matches!(reg.resolve("gaussian"), Err(Error::UnknownDistribution(_))));
        assert!(reg.resolve("flat:3").is_err());
        assert!(matches!(
            reg.resolve("custom:x.toml"),
            Err(Error::UnknownDistribution(_))
        ));
    }

    #[test]
    fn optimal_memo_is_consistent() {
        let opt = Optimal::default();
        let a = opt.coefficients(12).unwrap();
        let b = opt.coefficients(12).unwrap();
        assert_eq!(a, b);
    }
}
