//! Sweep evaluation of the trusted gain map.
//!
//! For a fixed `μ` and `M_max` the expected rewards of a trial that starts at
//! offset `o`, `X(o) = Σ_blocks mass · reward / tail(o)`, depend on `(M_min, q)`
//! only through a few boundary terms once suffix sums over the block length are
//! tabulated. Each gain-map evaluation is then `Σ p_d(o) X(o)`.

use super::blocks::pd_profile;
use super::remnant::vacuum_run_rewards;
use super::{initial_gain, iterate_gain, FixedPoint, PhotonNumberDistribution, RemnantTable, Rewards};
use crate::attack::{usd_success_probability, AttackParams};
use crate::detection::DetectorModel;
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;

#[derive(Debug, Clone)]
pub struct SweepKernel {
    mu_alpha: f64,
    p: f64,
    m_max: usize,
    detector: DetectorModel,
    table: RemnantTable,
    /// `vacuum[L]`: run of `L` vacuum pulses.
    vacuum: Vec<Rewards>,
    /// `pow[j] = p^j`.
    pow: Vec<f64>,
    /// `vac_pre[J] = Σ_{j<J} p^j V(j+1)`.
    vac_pre: Vec<Rewards>,
    /// `sig_suf[o][a − o] = Σ_{k=a}^{M_max−1} p^{k−o} T(k, k−o)` for `a ∈ [o, M_max]`.
    sig_suf: Vec<Vec<Rewards>>,
}

impl SweepKernel {
    pub fn new(
        mu_alpha: f64,
        m_max: usize,
        detector: &DetectorModel,
        dist: &AmplitudeDistribution,
        photons: &PhotonNumberDistribution,
    ) -> Result<Self> {
        let p = usd_success_probability(mu_alpha)?;
        Self::with_success_probability(mu_alpha, p, m_max, detector, dist, photons)
    }

    pub(crate) fn with_success_probability(
        mu_alpha: f64,
        p: f64,
        m_max: usize,
        detector: &DetectorModel,
        dist: &AmplitudeDistribution,
        photons: &PhotonNumberDistribution,
    ) -> Result<Self> {
        let dead = detector.dead_pulses();
        if m_max < 2 {
            return Err(Error::invalid("m_max", format!("must be >= 2, got {m_max}")));
        }
        if m_max > dead {
            return Err(Error::DeadTimeConstraint {
                m_max,
                dead_pulses: dead,
            });
        }
        let table = RemnantTable::build(1, m_max, dist, photons, detector, dead)?;
        let vacuum: Vec<Rewards> = (0..=m_max + 1)
            .map(|len| vacuum_run_rewards(len, detector, dead))
            .collect();
        let mut pow = vec![1.0; m_max + 2];
        for j in 1..pow.len() {
            pow[j] = pow[j - 1] * p;
        }
        let mut vac_pre = vec![Rewards::default(); m_max + 2];
        for j in 0..=m_max {
            vac_pre[j + 1] = vac_pre[j] + pow[j] * vacuum[j + 1];
        }
        let sig_suf = (0..=m_max)
            .map(|o| {
                let mut row = vec![Rewards::default(); m_max - o + 1];
                for a in (o..m_max).rev() {
                    row[a - o] = row[a - o + 1];
                    if a > 0 {
                        row[a - o] += pow[a - o] * table.get(a, a - o);
                    }
                }
                row
            })
            .collect();
        Ok(Self {
            mu_alpha,
            p,
            m_max,
            detector: *detector,
            table,
            vacuum,
            pow,
            vac_pre,
            sig_suf,
        })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// `X(o)` for `o ∈ [0, M_max]`. Offsets that no block reaches are `None`.
    pub fn offset_rewards(&self, m_min: usize, q: f64) -> Result<Vec<Option<Rewards>>> {
        let m_max = self.m_max;
        // Validates the strategy.
        AttackParams::with_success_probability(self.p, m_min, m_max, q, m_max)?;
        let p = self.p;
        let t = |k: usize, kb: usize| self.table.get(k, kb);
        let top = |o: usize| self.pow[m_max - o] * t(m_max, m_max - o);
        Ok((0..=m_max)
            .map(|o| {
                if p == 0.0 && o > 0 {
                    return None;
                }
                let x = if o <= m_min {
                    let j = m_min - o;
                    let vac = (1.0 - p) * (self.vac_pre[j] + ((1.0 - q) * self.pow[j]) * self.vacuum[j + 1]);
                    let sig = (1.0 - p) * self.sig_suf[o][j] + (-(1.0 - q) * (1.0 - p) * self.pow[j]) * t(m_min, j);
                    vac + sig + top(o)
                } else {
                    (1.0 - p) * self.sig_suf[o][0] + top(o)
                };
                Some(x)
            })
            .collect())
    }

    /// Iterates the gain map at one `(M_min, q)`.
    pub fn solve(&self, m_min: usize, q: f64) -> Result<FixedPoint> {
        let x = self.offset_rewards(m_min, q)?;
        let g0 = initial_gain(self.mu_alpha, &self.detector);
        iterate_gain(g0, |g| {
            let pd = pd_profile(g, self.m_max)?;
            let mut acc = Rewards::default();
            for (w, xo) in pd.iter().zip(&x) {
                if let Some(xo) = xo {
                    acc += *w * *xo;
                }
            }
            Ok(acc)
        })
    }
}
