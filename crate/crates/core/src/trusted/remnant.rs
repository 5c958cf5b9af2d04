//! Expected clicks, errors, double clicks and consumed pulses of one trial,
//! i.e. of the block remnant Bob sees after his detectors recover.

use std::ops::{Add, AddAssign, Mul};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PhotonNumberDistribution;
use crate::detection::{
    dark_convolution, real_interferometer_amplitudes, slot_probabilities_from_weights, vacuum_click_error_dc,
    DetectorModel, SlotOutcome,
};
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rewards {
    pub clicks: f64,
    pub errors: f64,
    pub doubles: f64,
    pub pulses: f64,
}

impl Add for Rewards {
    type Output = Rewards;
    fn add(self, o: Rewards) -> Rewards {
        Rewards {
            clicks: self.clicks + o.clicks,
            errors: self.errors + o.errors,
            doubles: self.doubles + o.doubles,
            pulses: self.pulses + o.pulses,
        }
    }
}

impl AddAssign for Rewards {
    fn add_assign(&mut self, o: Rewards) {
        *self = *self + o;
    }
}

impl Mul<Rewards> for f64 {
    type Output = Rewards;
    fn mul(self, r: Rewards) -> Rewards {
        Rewards {
            clicks: self * r.clicks,
            errors: self * r.errors,
            doubles: self * r.doubles,
            pulses: self * r.pulses,
        }
    }
}

/// `Σ_{i<len} (1 − P)^i`, stable for tiny `P`.
fn survival_sum(big_p: f64, len: usize) -> f64 {
    if big_p == 0.0 {
        len as f64
    } else if big_p == 1.0 {
        1.0
    } else {
        -((len as f64) * (-big_p).ln_1p()).exp_m1() / big_p
    }
}

/// A run of `len` vacuum pulses that follows another vacuum pulse.
pub fn vacuum_run_rewards(len: usize, detector: &DetectorModel, dead: usize) -> Rewards {
    let v = vacuum_click_error_dc(detector);
    let s = survival_sum(v.click, len);
    let clicks = v.click * s;
    Rewards {
        clicks,
        errors: v.error * s,
        doubles: v.double * s,
        pulses: s + dead as f64 * clicks,
    }
}

/// Per-slot outcomes of the remnant `k_bar` of a block with output weights
/// `we`/`wf`, slot `k_bar` first.
pub fn remnant_slots(
    we: &[f64],
    wf: &[f64],
    k_bar: usize,
    m: u32,
    detector: &DetectorModel,
) -> Result<Vec<SlotOutcome>> {
    let s = slot_probabilities_from_weights(we, wf, k_bar, m)?;
    (0..=k_bar)
        .map(|n| {
            dark_convolution(
                s.p_d0[n],
                s.p_d1[n],
                s.p_dc[n],
                s.p_vac[n],
                k_bar - n,
                detector.p_dark(),
            )
        })
        .collect()
}

pub(crate) fn fold_slots(slots: &[SlotOutcome], k_bar: usize, dead: usize) -> Rewards {
    let mut r = Rewards::default();
    for (n, o) in slots.iter().enumerate() {
        r.clicks += o.click;
        r.errors += o.error;
        r.doubles += o.double;
        r.pulses += o.click * (k_bar - n + 1 + dead) as f64;
    }
    r.pulses += (1.0 - r.clicks) * (k_bar + 1) as f64;
    r
}

/// Rewards of the last `k_bar` modes of an `m`-photon block plus its trailing
/// vacuum.
pub fn signal_remnant_rewards(
    we: &[f64],
    wf: &[f64],
    k_bar: usize,
    m: u32,
    detector: &DetectorModel,
    dead: usize,
) -> Result<Rewards> {
    Ok(fold_slots(&remnant_slots(we, wf, k_bar, m, detector)?, k_bar, dead))
}

/// Photon-mixture rewards `T(k, k_bar)` for every block length `k` in
/// `[k_lo, k_hi]` and every remnant `k_bar ≤ k`. Independent of `M_min`, `q`
/// and the gain, so one table serves a whole fixed-point run or sweep.
#[derive(Debug, Clone)]
pub struct RemnantTable {
    k_lo: usize,
    rows: Vec<Vec<Rewards>>,
}

impl RemnantTable {
    pub fn build(
        k_lo: usize,
        k_hi: usize,
        dist: &AmplitudeDistribution,
        photons: &PhotonNumberDistribution,
        detector: &DetectorModel,
        dead: usize,
    ) -> Result<Self> {
        if k_lo == 0 || k_hi < k_lo {
            return Err(Error::invalid("k", format!("bad block range [{k_lo}, {k_hi}]")));
        }
        let rows = (k_lo..=k_hi)
            .into_par_iter()
            .map(|k| -> Result<Vec<Rewards>> {
                let mut row = vec![Rewards::default(); k + 1];
                for &(m, pm) in photons.probs() {
                    let coeffs = dist.multiphoton_coefficients(k, m)?;
                    let amps = real_interferometer_amplitudes(&coeffs, detector.eta_det())?;
                    let (we, wf) = (amps.e_weights(), amps.f_weights());
                    for (k_bar, slot) in row.iter_mut().enumerate() {
                        *slot += pm * signal_remnant_rewards(&we, &wf, k_bar, m as u32, detector, dead)?;
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k_lo, rows })
    }

    pub fn k_lo(&self) -> usize {
        self.k_lo
    }

    pub fn k_hi(&self) -> usize {
        self.k_lo + self.rows.len() - 1
    }

    pub fn get(&self, k: usize, k_bar: usize) -> Rewards {
        self.rows[k - self.k_lo][k_bar]
    }
}
