//! Exact stationary rates of the trial-offset Markov chain.
//!
//! The gain map of the fixed point assumes the offset of each trial is drawn
//! from `p_d(n)`, independently of the block the previous click came from.
//! Here the offset is instead propagated exactly: a click with `n` slots left in
//! its block ends the dead time `d̃ − n` pulses into the following renewal
//! process of fresh blocks, and the offset is the age of the block covering that
//! pulse. The stationary distribution of this chain gives the long-run rates of
//! the actual pulse train. Used as a diagnostic next to the fixed point.

use super::blocks::OffsetWeights;
use super::remnant::{fold_slots, remnant_slots, vacuum_run_rewards};
use super::{check_dead_time, outcome_from_totals, PhotonNumberDistribution, Rewards};
use crate::attack::{AttackParams, BlockDistribution};
use crate::detection::{real_interferometer_amplitudes, DetectorModel};
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;
use crate::untrusted::AttackOutcome;

/// Per-slot click probabilities (indexed by the slots that remain after the
/// click) and rewards of one remnant.
struct Remnant {
    clicks: Vec<f64>,
    rewards: Rewards,
}

fn signal_remnant(
    k: usize,
    k_bar: usize,
    dist: &AmplitudeDistribution,
    photons: &PhotonNumberDistribution,
    detector: &DetectorModel,
    dead: usize,
) -> Result<Remnant> {
    let mut clicks = vec![0.0; k_bar + 1];
    let mut rewards = Rewards::default();
    for &(m, pm) in photons.probs() {
        let coeffs = dist.multiphoton_coefficients(k, m)?;
        let amps = real_interferometer_amplitudes(&coeffs, detector.eta_det())?;
        let slots = remnant_slots(&amps.e_weights(), &amps.f_weights(), k_bar, m as u32, detector)?;
        for (c, s) in clicks.iter_mut().zip(&slots) {
            *c += pm * s.click;
        }
        rewards += pm * fold_slots(&slots, k_bar, dead);
    }
    Ok(Remnant { clicks, rewards })
}

fn vacuum_remnant(len: usize, detector: &DetectorModel, dead: usize) -> Remnant {
    let big_p = detector.dark_click_probability();
    let mut clicks = vec![0.0; len];
    let mut survive = 1.0;
    for i in 0..len {
        clicks[len - 1 - i] = big_p * survive;
        survive *= 1.0 - big_p;
    }
    Remnant {
        clicks,
        rewards: vacuum_run_rewards(len, detector, dead),
    }
}

/// Stationary distribution of a row-stochastic matrix by Gaussian elimination
/// on `π (T − I) = 0`, `Σ π = 1`.
fn stationary(t: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = t.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().take(n).enumerate() {
            *v = t[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::invalid("renewal", "singular transition matrix"));
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Long-run gain, QBER and double-click rate of the exact pulse train.
pub fn renewal_rates(
    params: &AttackParams,
    detector: &DetectorModel,
    dist: &AmplitudeDistribution,
    photons: &PhotonNumberDistribution,
) -> Result<AttackOutcome> {
    let dead = check_dead_time(params, detector)?;
    let blocks = BlockDistribution::new(params);
    let (m_min, m_max) = (params.m_min(), params.m_max());
    let states = m_max + 1;

    // Block length (modes including the trailing vacuum) distribution.
    let mut plen = vec![0.0; states + 1];
    for n in 0..=m_min {
        plen[n + 1] += blocks.p_v(n);
    }
    for k in m_min..=m_max {
        plen[k + 1] += blocks.p_s(k);
    }
    let mut u = vec![0.0; dead + 1];
    u[0] = 1.0;
    for s in 1..=dead {
        u[s] = (1..=s.min(states)).map(|l| plen[l] * u[s - l]).sum();
    }
    let survivor: Vec<f64> = (0..states).map(|a| plen[a + 1..].iter().sum()).collect();
    let age = |s: usize| -> Vec<f64> {
        (0..states)
            .map(|a| if a <= s { u[s - a] * survivor[a] } else { 0.0 })
            .collect()
    };

    // Uniform offset weights give `mass / tail(o)` for every block at offset `o`.
    let ones = vec![1.0; states];
    let w = OffsetWeights::new(&blocks, &ones);
    let mut trans = vec![vec![0.0; states]; states];
    let mut rewards = vec![Rewards::default(); states];
    for o in 0..states {
        let mut cases: Vec<(f64, Remnant)> = Vec::new();
        for n in o..=m_min {
            let wt = w.vacuum(o, n);
            if wt > 0.0 {
                cases.push((wt, vacuum_remnant(n - o + 1, detector, dead)));
            }
        }
        for k in o.max(m_min)..=m_max {
            let wt = w.signal(o, k);
            if wt > 0.0 {
                cases.push((wt, signal_remnant(k, k - o, dist, photons, detector, dead)?));
            }
        }
        if cases.is_empty() {
            trans[o][0] = 1.0;
            continue;
        }
        for (wt, rem) in cases {
            rewards[o] += wt * rem.rewards;
            let mut total = 0.0;
            for (left, &c) in rem.clicks.iter().enumerate() {
                if c > 0.0 {
                    for (dst, a) in trans[o].iter_mut().zip(age(dead - left)) {
                        *dst += wt * c * a;
                    }
                    total += c;
                }
            }
            trans[o][0] += wt * (1.0 - total);
        }
    }
    let pi = stationary(&trans)?;
    let mut totals = Rewards::default();
    for (p, r) in pi.iter().zip(&rewards) {
        totals += *p * *r;
    }
    outcome_from_totals(totals)
}
