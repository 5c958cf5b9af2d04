//! Statistics of the block remnants that start a trial after a dead time.
//!
//! A trial begins `o` modes into a block, with `o` distributed as `p_d(o)`.
//! Given `o`, the block is drawn from those with at least `o + 1` modes, whose
//! mass is the suffix sum `tail(o) = Σ_{m ≥ o} [p_v(m) + p_s(m)]`. Suffix sums are
//! used instead of `1 − Σ_{m<o} p_v(m)` to avoid cancellation, and both the
//! masses and the suffix sum are divided by `p^o` before the ratio is taken so
//! that long blocks do not underflow.

use crate::attack::BlockDistribution;
use crate::error::{Error, Result};

/// Offset profile `p_d(n)` for a gain estimate `G`:
/// `p_d(0) = G + (1−G)^(M_max+1)`, `p_d(n) = G(1−G)^n`.
pub fn pd_profile(gain: f64, m_max: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::invalid("gain", format!("must lie in [0, 1], got {gain}")));
    }
    let mut pd = Vec::with_capacity(m_max + 1);
    pd.push(gain + (1.0 - gain).powi(m_max as i32 + 1));
    let mut run = 1.0;
    for _ in 1..=m_max {
        run *= 1.0 - gain;
        pd.push(gain * run);
    }
    Ok(pd)
}

/// `tail[o]` for `o ∈ [0, M_max]`.
pub fn tail_masses(blocks: &BlockDistribution) -> Vec<f64> {
    let m_max = blocks.m_max();
    let mut tail = vec![0.0; m_max + 2];
    for o in (0..=m_max).rev() {
        tail[o] = tail[o + 1] + blocks.p_v(o) + blocks.p_s(o);
    }
    tail.truncate(m_max + 1);
    tail
}

/// `tail[o] / p^o` for `o ∈ [0, M_max]`.
pub fn scaled_tails(blocks: &BlockDistribution) -> Vec<f64> {
    let m_max = blocks.m_max();
    (0..=m_max)
        .map(|o| {
            (o..=m_max)
                .rev()
                .map(|m| blocks.p_v_scaled(m, o) + blocks.p_s_scaled(m, o))
                .sum()
        })
        .collect()
}

/// Trial-start weights `p_d(o) · mass / tail(o)` for the two block families.
pub(crate) struct OffsetWeights<'a> {
    blocks: &'a BlockDistribution,
    pd: &'a [f64],
    tail: Vec<f64>,
}

impl<'a> OffsetWeights<'a> {
    pub(crate) fn new(blocks: &'a BlockDistribution, pd: &'a [f64]) -> Self {
        Self {
            blocks,
            pd,
            tail: scaled_tails(blocks),
        }
    }

    fn ratio(&self, o: usize, scaled: f64) -> f64 {
        if scaled == 0.0 || self.tail[o] == 0.0 {
            0.0
        } else {
            self.pd[o] * scaled / self.tail[o]
        }
    }

    /// Vacuum block `p_v(n)` entered at offset `o`.
    pub(crate) fn vacuum(&self, o: usize, n: usize) -> f64 {
        self.ratio(o, self.blocks.p_v_scaled(n, o))
    }

    /// Signal block `p_s(k)` entered at offset `o`.
    pub(crate) fn signal(&self, o: usize, k: usize) -> f64 {
        self.ratio(o, self.blocks.p_s_scaled(k, o))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedBlockDistribution {
    /// `q(k)`, `k ∈ [0, M_min]`: `k + 1` vacuum pulses.
    pub q_probs: Vec<f64>,
    /// `r(k)`, `k ∈ [0, M_min − 2]`: last `k + 1` modes of a signal block.
    pub r_probs: Vec<f64>,
    /// `s(k)`, `k ∈ [0, M_max − M_min]`: last `M_min + k` modes of a signal block.
    pub s_probs: Vec<f64>,
    pub pd_n: Vec<f64>,
}

impl TruncatedBlockDistribution {
    pub fn total(&self) -> f64 {
        self.q_probs.iter().chain(&self.r_probs).chain(&self.s_probs).sum()
    }
}

pub fn truncated_blocks(blocks: &BlockDistribution, pd_n: &[f64]) -> Result<TruncatedBlockDistribution> {
    let (m_min, m_max) = (blocks.m_min(), blocks.m_max());
    if pd_n.len() != m_max + 1 {
        return Err(Error::invalid(
            "pd_n",
            format!("expected {} entries, got {}", m_max + 1, pd_n.len()),
        ));
    }
    let w = OffsetWeights::new(blocks, pd_n);

    let mut q_probs = vec![0.0; m_min + 1];
    for (k, slot) in q_probs.iter_mut().enumerate() {
        *slot = (k..=m_min).map(|n| w.vacuum(n - k, n)).sum();
    }
    q_probs[0] += (m_min..=m_max).map(|k| w.signal(k, k)).sum::<f64>();

    let r_probs = (0..m_min.saturating_sub(1))
        .map(|k| (m_min..=m_max).map(|n| w.signal(n - 1 - k, n)).sum())
        .collect();

    let s_probs = (0..=m_max - m_min)
        .map(|k| (m_min + k..=m_max).map(|n| w.signal(n - m_min - k, n)).sum())
        .collect();

    Ok(TruncatedBlockDistribution {
        q_probs,
        r_probs,
        s_probs,
        pd_n: pd_n.to_vec(),
    })
}

/// Conditional identities of the signal that precedes, or contains, each
/// remnant. Dense vectors are indexed by the block length `k ∈ [0, M_max]`;
/// rows for classes of zero mass are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecedingSignalProbabilities {
    /// Single vacuum remnant preceded by vacuum.
    pub p_pv: f64,
    /// Single vacuum remnant preceded by `ψ_k`.
    pub p_pk: Vec<f64>,
    /// Row `k̄ ∈ [1, M_min − 1]`: remnant `k̄` taken from `ψ_k`.
    pub p_kbar_k: Vec<Vec<f64>>,
    /// Entry `k̄ ∈ [M_min, M_max]`: remnant is the whole `ψ_k̄`, preceded by vacuum.
    pub p_pv_kbar: Vec<f64>,
    /// Row `k̄ ∈ [M_min, M_max]`: remnant `k̄` taken from `ψ_k`, `k > k̄`.
    pub p_p_kbar_k: Vec<Vec<f64>>,
}

pub fn preceding_probabilities(
    blocks: &BlockDistribution,
    pd_n: &[f64],
    truncated: &TruncatedBlockDistribution,
) -> Result<PrecedingSignalProbabilities> {
    let (m_min, m_max) = (blocks.m_min(), blocks.m_max());
    if pd_n.len() != m_max + 1 || truncated.q_probs.len() != m_min + 1 {
        return Err(Error::invalid("truncated", "inconsistent with the block distribution"));
    }
    let w = OffsetWeights::new(blocks, pd_n);

    let q0 = truncated.q_probs[0];
    let (p_pv, p_pk) = if q0 > 0.0 {
        let vac: f64 = (0..=m_min).map(|n| w.vacuum(n, n)).sum();
        let mut pk = vec![0.0; m_max + 1];
        for (k, slot) in pk.iter_mut().enumerate().skip(m_min) {
            *slot = w.signal(k, k) / q0;
        }
        (vac / q0, pk)
    } else {
        (0.0, Vec::new())
    };

    let mut p_kbar_k = vec![Vec::new(); m_min];
    for (k_bar, row) in p_kbar_k.iter_mut().enumerate().skip(1) {
        let r = truncated.r_probs[k_bar - 1];
        if r > 0.0 {
            let mut v = vec![0.0; m_max + 1];
            for (k, slot) in v.iter_mut().enumerate().skip(m_min) {
                *slot = w.signal(k - k_bar, k) / r;
            }
            *row = v;
        }
    }

    let mut p_pv_kbar = vec![0.0; m_max + 1];
    let mut p_p_kbar_k = vec![Vec::new(); m_max + 1];
    for k_bar in m_min..=m_max {
        let s = truncated.s_probs[k_bar - m_min];
        if s > 0.0 {
            p_pv_kbar[k_bar] = w.signal(0, k_bar) / s;
            let mut v = vec![0.0; m_max + 1];
            for (k, slot) in v.iter_mut().enumerate().skip(k_bar + 1) {
                *slot = w.signal(k - k_bar, k) / s;
            }
            p_p_kbar_k[k_bar] = v;
        }
    }

    Ok(PrecedingSignalProbabilities {
        p_pv,
        p_pk,
        p_kbar_k,
        p_pv_kbar,
        p_p_kbar_k,
    })
}
