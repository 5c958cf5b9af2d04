//! Trusted-device scenario: Bob's efficiency, dark counts and dead time are
//! physical, and Eve may resend multi-photon blocks.
//!
//! The gain enters its own input through the distribution of the offset at
//! which a trial starts after a dead time, so it is found as a fixed point.

mod blocks;
mod fast;
mod remnant;
mod renewal;

use serde::{Deserialize, Serialize};

pub use blocks::{
    pd_profile, preceding_probabilities, scaled_tails, tail_masses, truncated_blocks, PrecedingSignalProbabilities,
    TruncatedBlockDistribution,
};
pub use fast::SweepKernel;
pub use remnant::{remnant_slots, signal_remnant_rewards, vacuum_run_rewards, RemnantTable, Rewards};
pub use renewal::renewal_rates;

use crate::attack::{AttackParams, BlockDistribution};
use crate::detection::DetectorModel;
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;
use crate::sweep::{frontier, sweep, Curve, FrontierKind, GridSpec};
use crate::untrusted::{gain_to_distance, AttackOutcome, ChannelModel};

/// Convergence threshold on `|ΔG| / G`.
pub const GAIN_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
const DAMPING: f64 = 0.5;
const PHOTON_NORM_TOLERANCE: f64 = 1e-10;

/// Finite mixture over the number of photons `m ≥ 1` in Eve's resent block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumberDistribution {
    probs: Vec<(usize, f64)>,
}

impl PhotonNumberDistribution {
    pub fn new(mut probs: Vec<(usize, f64)>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("photons", "empty distribution"));
        }
        probs.sort_by_key(|&(m, _)| m);
        for w in probs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(
                    "photons",
                    format!("photon number {} listed twice", w[0].0),
                ));
            }
        }
        for &(m, p) in &probs {
            if m == 0 {
                return Err(Error::invalid("photons", "photon numbers must be >= 1"));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::invalid("photons", format!("bad probability {p} for m = {m}")));
            }
        }
        let total: f64 = probs.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PHOTON_NORM_TOLERANCE {
            return Err(Error::invalid(
                "photons",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        probs.retain(|&(_, p)| p > 0.0);
        Ok(Self { probs })
    }

    /// All blocks carry exactly `m` photons.
    pub fn single(m: usize) -> Result<Self> {
        Self::new(vec![(m, 1.0)])
    }

    pub fn probs(&self) -> &[(usize, f64)] {
        &self.probs
    }
}

/// Totals of one evaluation of the gain map.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustedStep {
    pub pd_n: Vec<f64>,
    pub truncated: TruncatedBlockDistribution,
    pub preceding: PrecedingSignalProbabilities,
    /// Expected clicks, errors, double clicks and pulses per trial.
    pub totals: Rewards,
}

impl TrustedStep {
    pub fn gain(&self) -> f64 {
        self.totals.clicks / self.totals.pulses
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub outcome: AttackOutcome,
    pub iterations: usize,
    /// Input of the last gain-map evaluation.
    pub previous: f64,
}

/// Checks `M_max ≤ d̃` and that the padding recorded in `params` is `d̃`.
pub(crate) fn check_dead_time(params: &AttackParams, detector: &DetectorModel) -> Result<usize> {
    let dead = detector.dead_pulses();
    if params.m_max() > dead {
        return Err(Error::DeadTimeConstraint {
            m_max: params.m_max(),
            dead_pulses: dead,
        });
    }
    if params.pad() != dead {
        return Err(Error::invalid(
            "pad",
            format!(
                "trusted scenario needs pad = dead-time pulses ({dead}), got {}",
                params.pad()
            ),
        ));
    }
    Ok(dead)
}

pub(crate) fn outcome_from_totals(r: Rewards) -> Result<AttackOutcome> {
    if !(r.clicks > 0.0) {
        return Err(Error::NoClicks);
    }
    Ok(AttackOutcome {
        gain: r.clicks / r.pulses,
        qber: r.errors / r.clicks,
        dc_rate: r.doubles / r.pulses,
        distance_km: None,
    })
}

pub(crate) fn initial_gain(mu_alpha: f64, detector: &DetectorModel) -> f64 {
    -(-mu_alpha * detector.eta_det()).exp_m1()
}

/// Picard iteration of `G ↦ clicks(G) / pulses(G)`, damped by one half from the
/// first time successive steps flip sign with growing size.
pub(crate) fn iterate_gain<F>(g0: f64, mut eval: F) -> Result<FixedPoint>
where
    F: FnMut(f64) -> Result<Rewards>,
{
    let mut g = g0;
    let mut last_delta = 0.0f64;
    let mut damped = false;
    for it in 1..=MAX_ITERATIONS {
        let totals = eval(g)?;
        let outcome = outcome_from_totals(totals)?;
        let next = outcome.gain;
        let delta = next - g;
        if delta.abs() <= GAIN_TOLERANCE * g.max(next) {
            return Ok(FixedPoint {
                outcome,
                iterations: it,
                previous: g,
            });
        }
        if !damped && delta * last_delta < 0.0 && delta.abs() > last_delta.abs() {
            log::debug!("gain iteration oscillates at step {it}; damping");
            damped = true;
        }
        last_delta = delta;
        g = if damped { g + DAMPING * delta } else { next };
        if it == MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations: it,
                previous: g - if damped { DAMPING * delta } else { delta },
                last: g,
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// One parameter point of the trusted scenario with all gain-independent
/// tables precomputed.
#[derive(Debug, Clone)]
pub struct TrustedModel {
    params: AttackParams,
    detector: DetectorModel,
    blocks: BlockDistribution,
    table: RemnantTable,
    /// `vacuum[L]`: a run of `L` vacuum pulses.
    vacuum: Vec<Rewards>,
}

impl TrustedModel {
    pub fn new(
        params: &AttackParams,
        detector: &DetectorModel,
        dist: &AmplitudeDistribution,
        photons: &PhotonNumberDistribution,
    ) -> Result<Self> {
        let dead = check_dead_time(params, detector)?;
        let table = RemnantTable::build(params.m_min(), params.m_max(), dist, photons, detector, dead)?;
        let vacuum = (0..=params.m_min() + 1)
            .map(|len| vacuum_run_rewards(len, detector, dead))
            .collect();
        Ok(Self {
            params: *params,
            detector: *detector,
            blocks: BlockDistribution::new(params),
            table,
            vacuum,
        })
    }

    pub fn params(&self) -> &AttackParams {
        &self.params
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.detector
    }

    /// Evaluates the gain map at `gain` from the truncated block masses and the
    /// preceding-signal probabilities.
    pub fn step(&self, gain: f64) -> Result<TrustedStep> {
        let (m_min, m_max) = (self.params.m_min(), self.params.m_max());
        let t = |k: usize, k_bar: usize| self.table.get(k, k_bar);
        let pd_n = pd_profile(gain, m_max)?;
        let truncated = truncated_blocks(&self.blocks, &pd_n)?;
        let pre = preceding_probabilities(&self.blocks, &pd_n, &truncated)?;

        let mut totals = Rewards::default();
        let q0 = truncated.q_probs[0];
        if q0 > 0.0 {
            let mut single = pre.p_pv * self.vacuum[1];
            for k in m_min..=m_max {
                if pre.p_pk[k] > 0.0 {
                    single += pre.p_pk[k] * t(k, 0);
                }
            }
            totals += q0 * single;
        }
        for k in 1..=m_min {
            totals += truncated.q_probs[k] * self.vacuum[k + 1];
        }
        for k_bar in 1..m_min {
            let r = truncated.r_probs[k_bar - 1];
            if r > 0.0 {
                let mut acc = Rewards::default();
                for k in m_min..=m_max {
                    acc += pre.p_kbar_k[k_bar][k] * t(k, k_bar);
                }
                totals += r * acc;
            }
        }
        for k_bar in m_min..=m_max {
            let s = truncated.s_probs[k_bar - m_min];
            if s > 0.0 {
                let mut acc = pre.p_pv_kbar[k_bar] * t(k_bar, k_bar);
                for k in k_bar + 1..=m_max {
                    acc += pre.p_p_kbar_k[k_bar][k] * t(k, k_bar);
                }
                totals += s * acc;
            }
        }
        Ok(TrustedStep {
            pd_n,
            truncated,
            preceding: pre,
            totals,
        })
    }

    /// Iterates [`Self::step`] from `1 − exp(−μ η_det)`.
    pub fn solve(&self) -> Result<FixedPoint> {
        self.solve_from(initial_gain(self.params.mu_alpha(), &self.detector))
    }

    pub fn solve_from(&self, g0: f64) -> Result<FixedPoint> {
        iterate_gain(g0, |g| Ok(self.step(g)?.totals))
    }
}

/// Self-consistent gain, QBER and double-click rate.
pub fn trusted_rates(
    params: &AttackParams,
    detector: &DetectorModel,
    dist: &AmplitudeDistribution,
    photons: &PhotonNumberDistribution,
) -> Result<AttackOutcome> {
    Ok(TrustedModel::new(params, detector, dist, photons)?.solve()?.outcome)
}

/// [`trusted_rates`] plus the equivalent distance when a channel is given.
pub fn trusted_point(
    params: &AttackParams,
    detector: &DetectorModel,
    dist: &AmplitudeDistribution,
    photons: &PhotonNumberDistribution,
    channel: Option<&ChannelModel>,
) -> Result<AttackOutcome> {
    let mut out = trusted_rates(params, detector, dist, photons)?;
    if let Some(ch) = channel {
        out.distance_km = Some(gain_to_distance(out.gain, ch, params.mu_alpha())?.km);
    }
    Ok(out)
}

/// Sweep over `(M_min, q)` at `M_max = d̃`, with minimal-QBER and minimal-D_c
/// frontiers.
pub fn trusted_curve(
    mu_alpha: f64,
    d_tilde: usize,
    detector: &DetectorModel,
    dist: &AmplitudeDistribution,
    photons: &PhotonNumberDistribution,
    grid: &GridSpec,
    channel: Option<&ChannelModel>,
) -> Result<Curve> {
    let base = AttackParams::new(mu_alpha, 1, d_tilde, 1.0, d_tilde)?;
    check_dead_time(&base, detector)?;
    let kernel = SweepKernel::new(mu_alpha, d_tilde, detector, dist, photons)?;
    let points = sweep(grid, d_tilde, |m, q| {
        let mut out = kernel.solve(m, q)?.outcome;
        if let Some(ch) = channel {
            out.distance_km = Some(gain_to_distance(out.gain, ch, mu_alpha)?.km);
        }
        Ok(out)
    })?;
    Ok(Curve {
        frontier_qber: frontier(&points, FrontierKind::MinQber),
        frontier_dc: Some(frontier(&points, FrontierKind::MinDc)),
        points,
    })
}
