//! Untrusted-device scenario: Eve emulates Bob's dead time with single-photon
//! blocks followed by `d` vacuum pulses, so every signal block yields exactly
//! one click.

use serde::{Deserialize, Serialize};

use crate::attack::{AttackParams, BlockDistribution};
use crate::detection::untrusted_error_count;
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;

/// Fibre and receiver losses used to convert a gain into a distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    gamma: f64,
    loss_b: f64,
    eta_det: f64,
}

impl ChannelModel {
    /// `gamma` in dB/km, `loss_b` in dB.
    pub fn new(gamma: f64, loss_b: f64, eta_det: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be > 0, got {gamma}")));
        }
        if !(loss_b >= 0.0 && loss_b.is_finite()) {
            return Err(Error::invalid("loss_b", format!("must be >= 0, got {loss_b}")));
        }
        if !(eta_det > 0.0 && eta_det <= 1.0) {
            return Err(Error::invalid("eta_det", format!("must lie in (0, 1], got {eta_det}")));
        }
        Ok(Self { gamma, loss_b, eta_det })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn loss_b(&self) -> f64 {
        self.loss_b
    }

    pub fn eta_det(&self) -> f64 {
        self.eta_det
    }

    /// Expected gain of the honest channel at `distance_km`.
    pub fn expected_gain(&self, distance_km: f64, mu_alpha: f64) -> f64 {
        let eta_t = 10f64.powf(-(self.gamma * distance_km + self.loss_b) / 10.0);
        -(-mu_alpha * self.eta_det * eta_t).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub km: f64,
    /// The gain exceeds what the honest channel gives at zero length.
    pub negative: bool,
}

/// Fibre length at which the honest channel would produce `gain`.
pub fn gain_to_distance(gain: f64, channel: &ChannelModel, mu_alpha: f64) -> Result<Distance> {
    if !(gain > 0.0 && gain < 1.0) {
        return Err(Error::invalid("gain", format!("must lie in (0, 1), got {gain}")));
    }
    if !(mu_alpha > 0.0) {
        return Err(Error::invalid("mu_alpha", format!("must be > 0, got {mu_alpha}")));
    }
    let ratio = -(-gain).ln_1p() / (mu_alpha * channel.eta_det);
    let km = -(channel.loss_b + 10.0 * ratio.log10()) / channel.gamma;
    Ok(Distance { km, negative: km < 0.0 })
}

/// Gain, QBER, double-click rate and equivalent distance at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub gain: f64,
    pub qber: f64,
    pub dc_rate: f64,
    pub distance_km: Option<f64>,
}

fn pow(p: f64, k: usize) -> f64 {
    p.powi(k as i32)
}

/// Mean clicks per emission cycle, `[q + (1−q)p] p^M_min`.
pub fn clicks_closed_form(params: &AttackParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    (q + (1.0 - q) * p) * pow(p, params.m_min())
}

/// Mean pulses per emission cycle.
pub fn pulses_closed_form(params: &AttackParams) -> Result<f64> {
    let (p, q) = (params.p(), params.q());
    if p >= 1.0 {
        return Err(Error::invalid("p", "closed form needs p < 1"));
    }
    let d = params.pad() as f64;
    let num =
        d * (q + (1.0 - 2.0 * q) * p - (1.0 - q) * p * p) * pow(p, params.m_min()) - pow(p, params.m_max() + 1) + 1.0;
    Ok(num / (1.0 - p))
}

/// `Σ p_s(k)`.
pub fn clicks_by_summation(blocks: &BlockDistribution) -> f64 {
    (blocks.m_min()..=blocks.m_max()).map(|k| blocks.p_s(k)).sum()
}

/// `Σ p_v(k)(k+1) + Σ p_s(k)(k+1+d)`.
pub fn pulses_by_summation(blocks: &BlockDistribution, pad: usize) -> f64 {
    let vac: f64 = (0..=blocks.m_min()).map(|k| blocks.p_v(k) * (k + 1) as f64).sum();
    let sig: f64 = (blocks.m_min()..=blocks.m_max())
        .map(|k| blocks.p_s(k) * (k + 1 + pad) as f64)
        .sum();
    vac + sig
}

/// Clicks per Alice pulse. Independent of the amplitude distribution.
pub fn untrusted_gain(params: &AttackParams) -> Result<f64> {
    Ok(clicks_closed_form(params) / pulses_closed_form(params)?)
}

/// Error fraction `Σ p_s(k) e(k) / Σ p_s(k)`.
pub fn untrusted_qber(params: &AttackParams, dist: &AmplitudeDistribution) -> Result<f64> {
    let blocks = BlockDistribution::new(params);
    let clicks = clicks_closed_form(params);
    if clicks <= 0.0 {
        return Err(Error::NoClicks);
    }
    let mut errors = 0.0;
    for k in params.m_min()..=params.m_max() {
        let w = blocks.p_s(k);
        if w > 0.0 {
            errors += w * untrusted_error_count(&dist.coefficients(k)?)?;
        }
    }
    Ok(errors / clicks)
}

/// Gain, QBER and (when a channel is given) distance at one point.
pub fn untrusted_point(
    params: &AttackParams,
    dist: &AmplitudeDistribution,
    channel: Option<&ChannelModel>,
) -> Result<AttackOutcome> {
    let gain = untrusted_gain(params)?;
    let qber = untrusted_qber(params, dist)?;
    let distance_km = match channel {
        Some(ch) => Some(gain_to_distance(gain, ch, params.mu_alpha())?.km),
        None => None,
    };
    Ok(AttackOutcome {
        gain,
        qber,
        dc_rate: 0.0,
        distance_km,
    })
}
