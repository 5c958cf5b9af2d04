//! Pulse-level simulation of the attack and of Bob's receiver.
//!
//! Alice's phases, Eve's run-length strategy, photon placement at Bob's
//! interferometer outputs, dark counts and the dead time are all sampled. The
//! simulator shares no code with the analytic rates beyond the resend
//! coefficients and the interferometer amplitudes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::AttackParams;
use crate::detection::{interferometer_amplitudes, Detector, DetectorModel};
use crate::error::{Error, Result};
use crate::resend::AmplitudeDistribution;
use crate::trusted::{check_dead_time, PhotonNumberDistribution};

pub const RNG_ALGORITHM: &str = "ChaCha8";
pub const MIN_PULSES: u64 = 10_000;
/// Batches used for the batch-means standard errors.
pub const BATCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Untrusted,
    Trusted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlicePhases {
    Random,
    /// Every pulse carries phase 0.
    Zero,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: AttackParams,
    /// Ignored in the untrusted scenario, where Bob's detectors are ideal with
    /// a dead time equal to the padding.
    pub detector: DetectorModel,
    pub dist: AmplitudeDistribution,
    /// Ignored in the untrusted scenario (single photons).
    pub photons: PhotonNumberDistribution,
    pub n_pulses: u64,
    pub seed: u64,
    pub scenario: Scenario,
    pub phases: AlicePhases,
    pub record_clicks: bool,
}

impl SimConfig {
    pub fn untrusted(params: AttackParams, dist: AmplitudeDistribution, n_pulses: u64, seed: u64) -> Self {
        Self {
            detector: DetectorModel::ideal(params.pad()),
            params,
            dist,
            photons: PhotonNumberDistribution::single(1).expect("single photon"),
            n_pulses,
            seed,
            scenario: Scenario::Untrusted,
            phases: AlicePhases::Random,
            record_clicks: false,
        }
    }

    pub fn trusted(
        params: AttackParams,
        detector: DetectorModel,
        dist: AmplitudeDistribution,
        photons: PhotonNumberDistribution,
        n_pulses: u64,
        seed: u64,
    ) -> Self {
        Self {
            params,
            detector,
            dist,
            photons,
            n_pulses,
            seed,
            scenario: Scenario::Trusted,
            phases: AlicePhases::Random,
            record_clicks: false,
        }
    }

    /// Pulses discarded before statistics start, `max(10 d, 1000)`.
    pub fn warmup(&self) -> u64 {
        (10 * self.params.pad() as u64).max(1000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub pulse: u64,
    pub detector: Detector,
    pub double: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub gain_hat: f64,
    pub qber_hat: f64,
    pub dc_hat: f64,
    pub gain_stderr: f64,
    pub qber_stderr: f64,
    pub dc_stderr: f64,
    pub clicks: u64,
    pub errors: u64,
    pub double_clicks: u64,
    pub pulses: u64,
    pub seed: u64,
    pub rng: String,
    pub warmup: u64,
    /// Every click, warm-up included, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub click_log: Option<Vec<ClickRecord>>,
}

impl SimResult {
    /// Writes the click log as newline-delimited JSON.
    pub fn write_click_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for rec in self.click_log.iter().flatten() {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    clicks: u64,
    errors: u64,
    doubles: u64,
    pulses: u64,
}

/// Ratio estimate `Σx / Σy` and its batch-means standard error.
fn ratio_with_stderr(batches: &[Tally], x: impl Fn(&Tally) -> u64, y: impl Fn(&Tally) -> u64) -> (f64, f64) {
    let sx: u64 = batches.iter().map(&x).sum();
    let sy: u64 = batches.iter().map(&y).sum();
    if sy == 0 {
        return (0.0, 0.0);
    }
    let r = sx as f64 / sy as f64;
    let b = batches.len() as f64;
    let ybar = sy as f64 / b;
    let ss: f64 = batches.iter().map(|t| (x(t) as f64 - r * y(t) as f64).powi(2)).sum();
    (r, (ss / (b * (b - 1.0))).sqrt() / ybar)
}

/// Cumulative photon-placement weights over `[e_0..e_k, f_0..f_k, loss]`.
fn placement_table(coeffs: &[f64], eta_det: f64, phases: &[f64]) -> Result<Vec<f64>> {
    let amps = interferometer_amplitudes(coeffs, eta_det, phases)?;
    let mut cum = Vec::with_capacity(2 * coeffs.len() + 3);
    let mut acc = 0.0;
    for w in amps.e_weights().into_iter().chain(amps.f_weights()) {
        acc += w;
        cum.push(acc);
    }
    cum.push(1.0f64.max(acc));
    Ok(cum)
}

struct Simulator<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    stop: u64,
    warmup: u64,
    batch_len: u64,
    dead: u64,
    p_dark: f64,
    eta_det: f64,
    dead_until: Option<u64>,
    prev_phase: f64,
    batches: Vec<Tally>,
    log: Option<Vec<ClickRecord>>,
}

impl Simulator<'_> {
    fn phase(&mut self) -> f64 {
        match self.cfg.phases {
            AlicePhases::Zero => 0.0,
            AlicePhases::Random => {
                if self.rng.random_bool(0.5) {
                    std::f64::consts::PI
                } else {
                    0.0
                }
            }
        }
    }

    fn photons(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let probs = self.cfg.photons.probs();
        for &(m, p) in probs {
            acc += p;
            if u < acc {
                return m;
            }
        }
        probs[probs.len() - 1].0
    }

    /// Eve's run of USD successes, then her decision. Returns the block length
    /// `k` and whether she sends `ψ_k`.
    fn block(&mut self) -> (usize, bool) {
        let params = &self.cfg.params;
        let mut k = 0;
        while k < params.m_max() && self.rng.random_bool(params.p()) {
            k += 1;
        }
        let signal = if k == params.m_max() || k > params.m_min() {
            true
        } else if k == params.m_min() {
            self.rng.random_bool(params.q())
        } else {
            false
        };
        (k, signal)
    }

    fn batch(&mut self, t: u64) -> &mut Tally {
        let i = (((t - self.warmup) / self.batch_len) as usize).min(BATCHES - 1);
        &mut self.batches[i]
    }

    /// Bob's outcome at pulse `t`, given photon hits at D1 and D0 and the phase
    /// of the pulse it interferes with.
    fn slot(&mut self, t: u64, phase: f64, hit_d1: bool, hit_d0: bool) {
        let prev = std::mem::replace(&mut self.prev_phase, phase);
        if self.dead_until.is_some_and(|d| t <= d) {
            return;
        }
        let dark1 = self.p_dark > 0.0 && self.rng.random_bool(self.p_dark);
        let dark0 = self.p_dark > 0.0 && self.rng.random_bool(self.p_dark);
        let d1 = hit_d1 || dark1;
        let d0 = hit_d0 || dark0;
        if !(d0 || d1) {
            return;
        }
        self.dead_until = Some(t + self.dead);
        let correct = if prev == phase { Detector::D0 } else { Detector::D1 };
        let double = d0 && d1;
        let detector = if double {
            if self.rng.random_bool(0.5) {
                Detector::D0
            } else {
                Detector::D1
            }
        } else if d0 {
            Detector::D0
        } else {
            Detector::D1
        };
        if let Some(log) = self.log.as_mut() {
            log.push(ClickRecord {
                pulse: t,
                detector,
                double,
            });
        }
        if t >= self.warmup {
            let error = detector != correct;
            let b = self.batch(t);
            b.clicks += 1;
            b.errors += error as u64;
            b.doubles += double as u64;
        }
    }

    fn vacuum(&mut self, t: u64) {
        let phase = self.phase();
        self.slot(t, phase, false, false);
    }

    fn run(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let untrusted = cfg.scenario == Scenario::Untrusted;
        let pad = cfg.params.pad() as u64;
        let mut t = 0u64;
        while t < self.stop {
            let (k, signal) = self.block();
            // Position `pos` of the block holds mode `A_{k−pos}`; the last
            // position is the trailing vacuum.
            let phases: Vec<f64> = (0..=k).map(|_| self.phase()).collect();
            let mut hits_e = vec![false; k + 1];
            let mut hits_f = vec![false; k + 1];
            if signal {
                let m = if untrusted { 1 } else { self.photons() };
                let coeffs = cfg.dist.multiphoton_coefficients(k, m)?;
                let eve: Vec<f64> = (1..=k).map(|j| phases[k - j]).collect();
                let cum = placement_table(&coeffs, self.eta_det, &eve)?;
                for _ in 0..m {
                    let u: f64 = self.rng.random::<f64>() * cum[cum.len() - 1];
                    let cell = cum.partition_point(|&c| c <= u);
                    if cell <= k {
                        hits_e[cell] = true;
                    } else if cell <= 2 * k + 1 {
                        hits_f[cell - k - 1] = true;
                    }
                }
            }
            for (pos, &phase) in phases.iter().enumerate() {
                let tt = t + pos as u64;
                if tt >= self.stop {
                    break;
                }
                let n = k - pos;
                self.slot(tt, phase, hits_e[n], hits_f[n]);
            }
            t += k as u64 + 1;
            if untrusted && signal {
                for _ in 0..pad {
                    if t >= self.stop {
                        break;
                    }
                    self.vacuum(t);
                    t += 1;
                }
            }
        }
        Ok(())
    }
}

/// Simulates `n_pulses` Alice pulses and estimates the gain, QBER and
/// double-click rate after the warm-up.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    if cfg.n_pulses < MIN_PULSES {
        return Err(Error::invalid(
            "n_pulses",
            format!("must be >= {MIN_PULSES}, got {}", cfg.n_pulses),
        ));
    }
    let warmup = cfg.warmup();
    if cfg.n_pulses < warmup + BATCHES as u64 * 10 {
        return Err(Error::invalid(
            "n_pulses",
            format!("too few pulses after the {warmup}-pulse warm-up"),
        ));
    }
    let (dead, p_dark, eta_det) = match cfg.scenario {
        Scenario::Untrusted => (cfg.params.pad(), 0.0, 1.0),
        Scenario::Trusted => (
            check_dead_time(&cfg.params, &cfg.detector)?,
            cfg.detector.p_dark(),
            cfg.detector.eta_det(),
        ),
    };
    let window = cfg.n_pulses - warmup;
    let batch_len = window / BATCHES as u64;
    let mut sim = Simulator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        stop: cfg.n_pulses,
        warmup,
        batch_len,
        dead: dead as u64,
        p_dark,
        eta_det,
        dead_until: None,
        prev_phase: 0.0,
        batches: vec![Tally::default(); BATCHES],
        log: cfg.record_clicks.then(Vec::new),
    };
    for (i, b) in sim.batches.iter_mut().enumerate() {
        b.pulses = if i + 1 == BATCHES {
            window - batch_len * (BATCHES as u64 - 1)
        } else {
            batch_len
        };
    }
    sim.run()?;

    let batches = &sim.batches;
    let (gain_hat, gain_stderr) = ratio_with_stderr(batches, |t| t.clicks, |t| t.pulses);
    let (qber_hat, qber_stderr) = ratio_with_stderr(batches, |t| t.errors, |t| t.clicks);
    let (dc_hat, dc_stderr) = ratio_with_stderr(batches, |t| t.doubles, |t| t.pulses);
    let total = |f: fn(&Tally) -> u64| batches.iter().map(f).sum::<u64>();
    Ok(SimResult {
        gain_hat,
        qber_hat,
        dc_hat,
        gain_stderr,
        qber_stderr,
        dc_stderr,
        clicks: total(|t| t.clicks),
        errors: total(|t| t.errors),
        double_clicks: total(|t| t.doubles),
        pulses: window,
        seed: cfg.seed,
        rng: RNG_ALGORITHM.to_string(),
        warmup,
        click_log: sim.log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCheck {
    pub random: SimResult,
    pub zero: SimResult,
    /// `(Q_random − Q_zero) / sqrt(σ_random² + σ_zero²)`.
    pub z: f64,
    pub agrees: bool,
}

/// Compares the QBER under uniformly random and all-zero Alice phases.
pub fn phase_randomization_check(cfg: &SimConfig) -> Result<PhaseCheck> {
    if cfg.scenario != Scenario::Untrusted {
        return Err(Error::invalid("scenario", "phase check runs on the untrusted scenario"));
    }
    let random = simulate(&SimConfig {
        phases: AlicePhases::Random,
        ..cfg.clone()
    })?;
    let zero = simulate(&SimConfig {
        phases: AlicePhases::Zero,
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    })?;
    let se = random.qber_stderr.hypot(zero.qber_stderr);
    let diff = random.qber_hat - zero.qber_hat;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(PhaseCheck {
        agrees: z.abs() <= 3.0,
        random,
        zero,
        z,
    })
}
