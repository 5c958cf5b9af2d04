//! `(M_min, q)` parameter sweeps and their per-gain-bin frontiers.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::AttackParams;
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;
use crate::untrusted::{untrusted_point, AttackOutcome, ChannelModel};

/// Gain bins per decade used to group points for the frontier.
pub const BINS_PER_DECADE: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Inclusive `M_min` range; `None` means `[1, M_max − 1]`.
    pub m_min_range: Option<(usize, usize)>,
    /// Uniform samples of `q` in `[0, 1]`; a single sample means `q = 1`.
    pub q_steps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            m_min_range: None,
            q_steps: 101,
        }
    }
}

impl GridSpec {
    pub fn q_values(&self) -> Vec<f64> {
        match self.q_steps {
            0 => Vec::new(),
            1 => vec![1.0],
            n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        }
    }

    /// Grid points ordered by `M_min`, then `q`.
    pub fn points(&self, m_max: usize) -> Result<Vec<(usize, f64)>> {
        let (lo, hi) = self.m_min_range.unwrap_or((1, m_max.saturating_sub(1)));
        if lo < 1 || hi >= m_max {
            return Err(Error::invalid(
                "m_min",
                format!("range [{lo}, {hi}] must lie within [1, {}]", m_max.saturating_sub(1)),
            ));
        }
        let qs = self.q_values();
        let pts: Vec<(usize, f64)> = (lo..=hi).flat_map(|m| qs.iter().map(move |&q| (m, q))).collect();
        if pts.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m_min: usize,
    pub q: f64,
    pub gain: f64,
    pub qber: f64,
    pub dc_rate: f64,
    pub distance_km: Option<f64>,
}

impl CurvePoint {
    pub fn new(m_min: usize, q: f64, outcome: AttackOutcome) -> Self {
        Self {
            m_min,
            q,
            gain: outcome.gain,
            qber: outcome.qber,
            dc_rate: outcome.dc_rate,
            distance_km: outcome.distance_km,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontierKind {
    MinQber,
    MinDc,
}

impl FrontierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrontierKind::MinQber => "min_qber",
            FrontierKind::MinDc => "min_dc",
        }
    }
}

/// Logarithmic gain bin index, `⌊60 · log10 G⌋`.
pub fn gain_bin(gain: f64) -> i64 {
    (BINS_PER_DECADE * gain.log10()).floor() as i64
}

/// Lowest-QBER (or lowest-D_c) point in every gain bin, ordered by bin. Ties
/// keep the earliest point in grid order.
pub fn frontier(points: &[CurvePoint], kind: FrontierKind) -> Vec<CurvePoint> {
    let key = |p: &CurvePoint| match kind {
        FrontierKind::MinQber => p.qber,
        FrontierKind::MinDc => p.dc_rate,
    };
    let mut best: BTreeMap<i64, CurvePoint> = BTreeMap::new();
    for p in points.iter().filter(|p| p.gain > 0.0) {
        best.entry(gain_bin(p.gain))
            .and_modify(|cur| {
                if key(p) < key(cur) {
                    *cur = *p;
                }
            })
            .or_insert(*p);
    }
    best.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub frontier_qber: Vec<CurvePoint>,
    /// Present for the trusted scenario only.
    pub frontier_dc: Option<Vec<CurvePoint>>,
}

/// Evaluates `eval` on every grid point in parallel, keeps grid order and drops
/// points without clicks.
pub(crate) fn sweep<F>(grid: &GridSpec, m_max: usize, eval: F) -> Result<Vec<CurvePoint>>
where
    F: Fn(usize, f64) -> Result<AttackOutcome> + Sync,
{
    let pts = grid.points(m_max)?;
    let results: Vec<Result<Option<CurvePoint>>> = pts
        .par_iter()
        .map(|&(m, q)| match eval(m, q) {
            Ok(o) if o.gain > 0.0 => Ok(Some(CurvePoint::new(m, q, o))),
            Ok(_) | Err(Error::NoClicks) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        if let Some(p) = r? {
            out.push(p);
        }
    }
    Ok(out)
}

/// All `(G, Q)` points of the untrusted scenario for the grid, plus the
/// minimal-QBER frontier.
pub fn untrusted_curve(
    mu_alpha: f64,
    pad: usize,
    m_max: usize,
    dist: &AmplitudeDistribution,
    grid: &GridSpec,
    channel: Option<&ChannelModel>,
) -> Result<Curve> {
    let base = AttackParams::new(mu_alpha, 1, m_max, 1.0, pad)?;
    let points = sweep(grid, m_max, |m, q| {
        untrusted_point(&base.with_strategy(m, q)?, dist, channel)
    })?;
    let frontier_qber = frontier(&points, FrontierKind::MinQber);
    Ok(Curve {
        points,
        frontier_qber,
        frontier_dc: None,
    })
}
