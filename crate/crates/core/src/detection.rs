//! Bob's interferometer, loss and threshold detectors.
//!
//! Slot `n` of a block of `k` signal modes plus one trailing vacuum is the time
//! bin where mode `n` interferes with mode `n + 1`; slot `k` is reached first and
//! slot `0` (the trailing vacuum) last. A remnant keeps only slots `0..=k_bar`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::attack::dead_time_pad;
use crate::error::{checked_probability, Error, Result};

/// Accepted deviation of `Σ A_n²` from one on input vectors.
const INPUT_NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    eta_det: f64,
    p_dark: f64,
    t_dead: f64,
    f_clock: f64,
}

impl DetectorModel {
    pub fn new(eta_det: f64, p_dark: f64, t_dead: f64, f_clock: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta_det) {
            return Err(Error::invalid("eta_det", format!("must lie in [0, 1], got {eta_det}")));
        }
        if !(0.0..=1.0).contains(&p_dark) {
            return Err(Error::invalid("p_dark", format!("must lie in [0, 1], got {p_dark}")));
        }
        // Validates t_dead and f_clock.
        dead_time_pad(t_dead, f_clock)?;
        Ok(Self {
            eta_det,
            p_dark,
            t_dead,
            f_clock,
        })
    }

    /// Detector whose dead time spans exactly `dead_pulses` pulses of a 1 GHz clock.
    pub fn with_dead_pulses(eta_det: f64, p_dark: f64, dead_pulses: usize) -> Result<Self> {
        Self::new(eta_det, p_dark, dead_pulses as f64 * 1e-9, 1e9)
    }

    /// Ideal detector (unit efficiency, no dark counts).
    pub fn ideal(dead_pulses: usize) -> Self {
        Self::with_dead_pulses(1.0, 0.0, dead_pulses).expect("ideal detector is valid")
    }

    pub fn eta_det(&self) -> f64 {
        self.eta_det
    }

    pub fn p_dark(&self) -> f64 {
        self.p_dark
    }

    pub fn t_dead(&self) -> f64 {
        self.t_dead
    }

    pub fn f_clock(&self) -> f64 {
        self.f_clock
    }

    /// Probability that at least one of the two detectors dark-counts in a slot.
    pub fn dark_click_probability(&self) -> f64 {
        self.p_dark * (2.0 - self.p_dark)
    }

    /// `d̃ = ⌈t_dead · f_clock⌉`.
    pub fn dead_pulses(&self) -> usize {
        dead_time_pad(self.t_dead, self.f_clock).expect("validated at construction")
    }
}

/// Output amplitudes at D1 (`e`), D0 (`f`) and the loss port (`g`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudes {
    pub e_amp: Vec<Complex64>,
    pub f_amp: Vec<Complex64>,
    pub g_amp: Vec<Complex64>,
}

impl ModeAmplitudes {
    /// Block length `k`.
    pub fn k(&self) -> usize {
        self.g_amp.len()
    }

    pub fn e_weights(&self) -> Vec<f64> {
        self.e_amp.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn f_weights(&self) -> Vec<f64> {
        self.f_amp.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.e_amp
            .iter()
            .chain(&self.f_amp)
            .chain(&self.g_amp)
            .map(|a| a.norm_sqr())
            .sum()
    }
}

fn check_normalized(coeffs: &[f64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::invalid("coeffs", "block length must be >= 1"));
    }
    let norm2: f64 = coeffs.iter().map(|a| a * a).sum();
    if !((norm2 - 1.0).abs() <= INPUT_NORM_TOLERANCE) {
        return Err(Error::invalid("coeffs", format!("squared norm {norm2} is not 1")));
    }
    Ok(())
}

/// Output amplitudes for real coefficients `A_1..A_k` carrying phases `θ_1..θ_k`.
pub fn interferometer_amplitudes(coeffs: &[f64], eta_det: f64, phases: &[f64]) -> Result<ModeAmplitudes> {
    check_normalized(coeffs)?;
    if phases.len() != coeffs.len() {
        return Err(Error::invalid(
            "phases",
            format!("expected {} phases, got {}", coeffs.len(), phases.len()),
        ));
    }
    let a: Vec<Complex64> = coeffs
        .iter()
        .zip(phases)
        .map(|(&c, &t)| Complex64::from_polar(c, t))
        .collect();
    complex_interferometer_amplitudes(&a, eta_det)
}

/// Output amplitudes with all phases zero.
pub fn real_interferometer_amplitudes(coeffs: &[f64], eta_det: f64) -> Result<ModeAmplitudes> {
    interferometer_amplitudes(coeffs, eta_det, &vec![0.0; coeffs.len()])
}

/// Output amplitudes for arbitrary complex input amplitudes.
pub fn complex_interferometer_amplitudes(a: &[Complex64], eta_det: f64) -> Result<ModeAmplitudes> {
    if !(0.0..=1.0).contains(&eta_det) {
        return Err(Error::invalid("eta_det", format!("must lie in [0, 1], got {eta_det}")));
    }
    let k = a.len();
    if k == 0 {
        return Err(Error::invalid("coeffs", "block length must be >= 1"));
    }
    let eta = eta_det.sqrt() / 2.0;
    let mut e_amp = Vec::with_capacity(k + 1);
    let mut f_amp = Vec::with_capacity(k + 1);
    e_amp.push(a[0] * eta);
    f_amp.push(a[0] * eta);
    for n in 1..k {
        e_amp.push((a[n] - a[n - 1]) * eta);
        f_amp.push((a[n] + a[n - 1]) * eta);
    }
    e_amp.push(-a[k - 1] * eta);
    f_amp.push(a[k - 1] * eta);
    let loss = (1.0 - eta_det).sqrt();
    let g_amp = a.iter().map(|x| x * loss).collect();
    Ok(ModeAmplitudes { e_amp, f_amp, g_amp })
}

/// Expected errors per single-photon block on ideal detectors,
/// `¼[A_1² + Σ (A_{n+1} − A_n)² + A_k²]`.
pub fn untrusted_error_count(coeffs: &[f64]) -> Result<f64> {
    check_normalized(coeffs)?;
    let k = coeffs.len();
    let inner: f64 = coeffs.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(0.25 * (coeffs[0].powi(2) + inner + coeffs[k - 1].powi(2)))
}

/// Error count for complex amplitudes measured against the all-zero phase
/// reference.
pub fn untrusted_error_count_complex(a: &[Complex64]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("coeffs", "block length must be >= 1"));
    }
    let inner: f64 = a.windows(2).map(|w| (w[1] - w[0]).norm_sqr()).sum();
    Ok(0.25 * (a[0].norm_sqr() + inner + a[a.len() - 1].norm_sqr()))
}

/// Which detector signals an error in each slot when Eve's identified phases
/// are `θ_1..θ_k` (each 0 or π): D1 where neighbours agree, D0 where they
/// differ. The two boundary slots see equal weight at both detectors and are
/// reported as D1.
pub fn wrong_detectors(phases: &[f64]) -> Vec<Detector> {
    let k = phases.len();
    let mut out = vec![Detector::D1; k + 1];
    for n in 1..k {
        let diff = (phases[n] - phases[n - 1]).rem_euclid(2.0 * std::f64::consts::PI);
        let same = !(0.5..=2.0 * std::f64::consts::PI - 0.5).contains(&diff);
        out[n] = if same { Detector::D1 } else { Detector::D0 };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    D0,
    D1,
}

/// Per-slot signal-only outcome probabilities of a remnant, each conditioned on
/// no signal click in the later-arriving slots `(n, k_bar]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotClickProbabilities {
    pub k_bar: usize,
    pub p_d0: Vec<f64>,
    pub p_d1: Vec<f64>,
    pub p_dc: Vec<f64>,
    pub p_vac: Vec<f64>,
}

/// Dark-count-aware probabilities for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub click: f64,
    pub error: f64,
    pub double: f64,
}

impl SlotClickProbabilities {
    pub fn signal_click(&self, n: usize) -> f64 {
        self.p_d0[n] + self.p_d1[n] + self.p_dc[n]
    }

    /// Adds independent dark counts to slot `n`, counting errors at D1.
    pub fn with_dark_counts(&self, n: usize, detector: &DetectorModel) -> Result<SlotOutcome> {
        self.with_dark_counts_wrong(n, detector, Detector::D1)
    }

    /// As [`Self::with_dark_counts`] with an explicit wrong detector.
    pub fn with_dark_counts_wrong(&self, n: usize, detector: &DetectorModel, wrong: Detector) -> Result<SlotOutcome> {
        if n > self.k_bar {
            return Err(Error::invalid("n", format!("slot {n} beyond k_bar = {}", self.k_bar)));
        }
        let (right, wrong_p) = match wrong {
            Detector::D1 => (self.p_d0[n], self.p_d1[n]),
            Detector::D0 => (self.p_d1[n], self.p_d0[n]),
        };
        dark_convolution(
            right,
            wrong_p,
            self.p_dc[n],
            self.p_vac[n],
            self.k_bar - n,
            detector.p_dark(),
        )
    }
}

/// Combines signal outcomes of one slot with dark counts; `later` is the number
/// of later-arriving live slots that must stay dark.
pub(crate) fn dark_convolution(
    right: f64,
    wrong: f64,
    dc: f64,
    vac: f64,
    later: usize,
    p_dark: f64,
) -> Result<SlotOutcome> {
    let big_p = p_dark * (2.0 - p_dark);
    let survive = (1.0 - big_p).powi(later as i32);
    let click = survive * (right + wrong + dc + big_p * vac);
    let error = survive
        * ((1.0 - p_dark / 2.0) * wrong + p_dark * right / 2.0 + dc / 2.0 + p_dark * (1.0 - p_dark / 2.0) * vac);
    let double = survive * (p_dark * (right + wrong) + dc + p_dark * p_dark * vac);
    Ok(SlotOutcome {
        click: checked_probability("slot click", click)?,
        error: checked_probability("slot error", error)?,
        double: checked_probability("slot double click", double)?,
    })
}

/// `a^m − (a − d)^m`, written so that `d` enters linearly.
fn pow_diff(a: f64, d: f64, m: u32) -> f64 {
    let b = a - d;
    let mut sum = 0.0;
    let mut ap = 1.0;
    for i in 0..m {
        sum += ap * b.powi((m - 1 - i) as i32);
        ap *= a;
    }
    d * sum
}

/// Outcome probabilities of slot `n` given the photon weights of the later live
/// slots, `later = Σ_{l ∈ (n, k_bar]} (e_l + f_l)`.
pub(crate) fn slot_from_weights(later: f64, e: f64, f: f64, m: u32) -> Result<[f64; 4]> {
    let x = 1.0 - later;
    let d0 = pow_diff(x - e, f, m);
    let d1 = pow_diff(x - f, e, m);
    let dc = pow_diff(x, e, m) - pow_diff(x - f, e, m);
    let vac = (x - e - f).powi(m as i32);
    Ok([
        checked_probability("p_d0", d0)?,
        checked_probability("p_d1", d1)?,
        checked_probability("p_dc", dc)?,
        checked_probability("p_vac", vac)?,
    ])
}

/// Inclusion–exclusion evaluation of the per-slot outcome probabilities for `m`
/// photons placed independently across the output modes.
pub fn slot_click_probabilities(amps: &ModeAmplitudes, k_bar: usize, m: usize) -> Result<SlotClickProbabilities> {
    let k = amps.k();
    if m == 0 {
        return Err(Error::invalid("m", "photon number must be >= 1"));
    }
    if k_bar > k {
        return Err(Error::invalid("k_bar", format!("must not exceed k = {k}, got {k_bar}")));
    }
    let we = amps.e_weights();
    let wf = amps.f_weights();
    slot_probabilities_from_weights(&we, &wf, k_bar, m as u32)
}

pub(crate) fn slot_probabilities_from_weights(
    we: &[f64],
    wf: &[f64],
    k_bar: usize,
    m: u32,
) -> Result<SlotClickProbabilities> {
    let len = k_bar + 1;
    let mut out = SlotClickProbabilities {
        k_bar,
        p_d0: vec![0.0; len],
        p_d1: vec![0.0; len],
        p_dc: vec![0.0; len],
        p_vac: vec![0.0; len],
    };
    let mut later = 0.0;
    for n in (0..=k_bar).rev() {
        let [d0, d1, dc, vac] = slot_from_weights(later, we[n], wf[n], m)?;
        out.p_d0[n] = d0;
        out.p_d1[n] = d1;
        out.p_dc[n] = dc;
        out.p_vac[n] = vac;
        later += we[n] + wf[n];
    }
    Ok(out)
}

/// Click, error and double-click probabilities for slot `n` of the remnant
/// `k_bar` of an `m`-photon block.
pub fn click_error_dc_probability(
    amps: &ModeAmplitudes,
    k_bar: usize,
    m: usize,
    n: usize,
    detector: &DetectorModel,
) -> Result<SlotOutcome> {
    slot_click_probabilities(amps, k_bar, m)?.with_dark_counts(n, detector)
}

/// Outcome probabilities of a vacuum slot preceded by vacuum: `(P_d, P_d/2, p_d²)`.
pub fn vacuum_click_error_dc(detector: &DetectorModel) -> SlotOutcome {
    let big_p = detector.dark_click_probability();
    SlotOutcome {
        click: big_p,
        error: big_p / 2.0,
        double: detector.p_dark() * detector.p_dark(),
    }
}
