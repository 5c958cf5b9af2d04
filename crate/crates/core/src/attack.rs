//! Attack parameterization and the block-emission statistics of the sequential
//! USD attack.
//!
//! Eve runs unambiguous state discrimination on every pulse. A run of `k`
//! consecutive successes terminated by an inconclusive result is turned into
//! either a signal block (`k` signal modes, then vacuum padding) or `k + 1`
//! vacuum pulses, depending on `k` relative to `M_min`/`M_max` and on the
//! randomization probability `q` at `k == M_min`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability that USD identifies one of the `|±α⟩` states, `1 - exp(-2 μ)`.
pub fn usd_success_probability(mu_alpha: f64) -> Result<f64> {
    if !(mu_alpha >= 0.0) || !mu_alpha.is_finite() {
        return Err(Error::invalid("mu_alpha", format!("must be >= 0, got {mu_alpha}")));
    }
    Ok(-(-2.0 * mu_alpha).exp_m1())
}

/// Number of pulses covered by a dead time, `⌈t_d · f_c⌉`.
///
/// Products that land within a relative 1e-9 of an integer are rounded to it, so
/// `50 ns × 10 GHz` gives 500 rather than 501.
pub fn dead_time_pad(t_dead: f64, f_clock: f64) -> Result<usize> {
    if !(f_clock > 0.0) || !f_clock.is_finite() {
        return Err(Error::invalid("f_clock", format!("must be > 0, got {f_clock}")));
    }
    if !(t_dead >= 0.0) || !t_dead.is_finite() {
        return Err(Error::invalid("t_dead", format!("must be >= 0, got {t_dead}")));
    }
    let product = t_dead * f_clock;
    let nearest = product.round();
    let pulses = if (product - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        product.ceil()
    };
    Ok(pulses as usize)
}

/// Where the per-pulse USD success probability came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessSource {
    /// Derived from Alice's mean photon number.
    Intensity { mu_alpha: f64 },
    /// Supplied directly (used by oracle tests that pin `p`).
    Direct,
}

/// Eve's strategy knobs together with Alice's source intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    p: f64,
    source: SuccessSource,
    m_min: usize,
    m_max: usize,
    q: f64,
    pad: usize,
}

impl AttackParams {
    /// Builds parameters from Alice's mean photon number.
    pub fn new(mu_alpha: f64, m_min: usize, m_max: usize, q: f64, pad: usize) -> Result<Self> {
        let p = usd_success_probability(mu_alpha)?;
        Self::build(p, SuccessSource::Intensity { mu_alpha }, m_min, m_max, q, pad)
    }

    /// Builds parameters from a directly supplied USD success probability.
    pub fn with_success_probability(p: f64, m_min: usize, m_max: usize, q: f64, pad: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
        }
        Self::build(p, SuccessSource::Direct, m_min, m_max, q, pad)
    }

    fn build(p: f64, source: SuccessSource, m_min: usize, m_max: usize, q: f64, pad: usize) -> Result<Self> {
        if m_min < 1 {
            return Err(Error::invalid("m_min", "must be >= 1"));
        }
        if m_max <= m_min {
            return Err(Error::invalid(
                "m_max",
                format!("must exceed m_min ({m_min}), got {m_max}"),
            ));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid("q", format!("must lie in [0, 1], got {q}")));
        }
        Ok(Self {
            p,
            source,
            m_min,
            m_max,
            q,
            pad,
        })
    }

    /// Same intensity and padding with a different `(M_min, q)` pair.
    pub fn with_strategy(&self, m_min: usize, q: f64) -> Result<Self> {
        Self::build(self.p, self.source, m_min, self.m_max, q, self.pad)
    }

    pub fn with_pad(&self, pad: usize) -> Self {
        Self { pad, ..*self }
    }

    /// Per-pulse USD success probability `p`.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn source(&self) -> SuccessSource {
        self.source
    }

    /// Alice's mean photon number; inferred from `p` when it was supplied directly.
    pub fn mu_alpha(&self) -> f64 {
        match self.source {
            SuccessSource::Intensity { mu_alpha } => mu_alpha,
            SuccessSource::Direct => -(-self.p).ln_1p() / 2.0,
        }
    }

    pub fn m_min(&self) -> usize {
        self.m_min
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Vacuum padding after each signal block (`d` or `d̃`).
    pub fn pad(&self) -> usize {
        self.pad
    }
}

/// Probabilities of the blocks Eve emits.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistribution {
    m_min: usize,
    m_max: usize,
    p_s: Vec<f64>,
    p_v: Vec<f64>,
    p_usd: f64,
    q: f64,
}

impl BlockDistribution {
    pub fn new(params: &AttackParams) -> Self {
        let p = params.p;
        let (m_min, m_max, q) = (params.m_min, params.m_max, params.q);
        let pow = |k: usize| p.powi(k as i32);

        let mut p_s = vec![0.0; m_max + 1];
        p_s[m_min] = q * pow(m_min) * (1.0 - p);
        for (k, slot) in p_s.iter_mut().enumerate().take(m_max).skip(m_min + 1) {
            *slot = pow(k) * (1.0 - p);
        }
        p_s[m_max] = pow(m_max);

        let mut p_v = vec![0.0; m_min + 1];
        for (k, slot) in p_v.iter_mut().enumerate().take(m_min) {
            *slot = pow(k) * (1.0 - p);
        }
        p_v[m_min] = (1.0 - q) * pow(m_min) * (1.0 - p);

        Self {
            m_min,
            m_max,
            p_s,
            p_v,
            p_usd: p,
            q,
        }
    }

    /// Probability that Eve sends `ψ_k` followed by vacuum padding.
    pub fn p_s(&self, k: usize) -> f64 {
        self.p_s.get(k).copied().unwrap_or(0.0)
    }

    /// Probability that Eve sends `k + 1` vacuum pulses.
    pub fn p_v(&self, k: usize) -> f64 {
        self.p_v.get(k).copied().unwrap_or(0.0)
    }

    pub fn p_usd(&self) -> f64 {
        self.p_usd
    }

    pub fn m_min(&self) -> usize {
        self.m_min
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// `p_s(k) / p^o` for `k ≥ o`, evaluated without forming `p^k`.
    pub fn p_s_scaled(&self, k: usize, o: usize) -> f64 {
        self.scaled(k, o, self.signal_factor(k))
    }

    /// `p_v(k) / p^o` for `k ≥ o`.
    pub fn p_v_scaled(&self, k: usize, o: usize) -> f64 {
        self.scaled(k, o, self.vacuum_factor(k))
    }

    fn signal_factor(&self, k: usize) -> f64 {
        let p = self.p_usd;
        if k == self.m_max {
            1.0
        } else if k == self.m_min {
            self.q * (1.0 - p)
        } else if k > self.m_min && k < self.m_max {
            1.0 - p
        } else {
            0.0
        }
    }

    fn vacuum_factor(&self, k: usize) -> f64 {
        let p = self.p_usd;
        if k < self.m_min {
            1.0 - p
        } else if k == self.m_min {
            (1.0 - self.q) * (1.0 - p)
        } else {
            0.0
        }
    }

    fn scaled(&self, k: usize, o: usize, factor: f64) -> f64 {
        let p = self.p_usd;
        if k < o || (p == 0.0 && o > 0) {
            return 0.0;
        }
        factor * p.powi((k - o) as i32)
    }

    pub fn signal_total(&self) -> f64 {
        self.p_s.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.signal_total() + self.p_v.iter().sum::<f64>()
    }
}

/// Convenience wrapper matching [`BlockDistribution::new`].
pub fn block_distribution(params: &AttackParams) -> BlockDistribution {
    BlockDistribution::new(params)
}
