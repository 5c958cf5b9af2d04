//! The `untrusted`, `trusted` and `oracle` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dpsbound_core::montecarlo::{simulate, SimConfig, SimResult};
use dpsbound_core::{
    renewal_rates, trusted_curve, trusted_rates, untrusted_curve, untrusted_gain, untrusted_qber,
    AmplitudeDistribution, AttackParams, ChannelModel, Curve, DetectorModel, FrontierKind, GridSpec,
    PhotonNumberDistribution,
};
use serde::Serialize;

use crate::custom::registry;
use crate::output::{frontier_csv, num, points_csv, Written};
use crate::settings::Settings;
use crate::CliError;

/// Largest |z| the oracle accepts.
pub const Z_LIMIT: f64 = 4.0;

fn need<T: Clone>(v: &Option<T>, name: &str, cmd: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| {
        CliError::Config(format!(
            "`{cmd}` needs --{} (or `{name}` in the config)",
            name.replace('_', "-")
        ))
    })
}

fn check_scenario(s: &Settings, cmd: &str) -> Result<(), CliError> {
    match s.scenario.as_deref() {
        None => Ok(()),
        Some(sc) if sc == cmd => Ok(()),
        Some(sc) => Err(CliError::Config(format!(
            "settings are for the {sc} scenario{}, not `{cmd}`",
            s.preset
                .as_ref()
                .map(|p| format!(" (preset `{p}`)"))
                .unwrap_or_default()
        ))),
    }
}

fn distribution(s: &mut Settings) -> Result<AmplitudeDistribution, CliError> {
    let spec = s.dist.get_or_insert_with(|| "optimal".into()).clone();
    Ok(registry().resolve(&spec)?)
}

fn grid(s: &mut Settings, m_max: usize) -> GridSpec {
    let q_steps = *s.q_steps.get_or_insert(GridSpec::default().q_steps);
    let range = *s.m_min.get_or_insert([1, m_max.saturating_sub(1)]);
    GridSpec {
        m_min_range: Some((range[0], range[1])),
        q_steps,
    }
}

fn channel(s: &mut Settings, default_eta: f64) -> Result<Option<ChannelModel>, CliError> {
    match s.gamma {
        None => Ok(None),
        Some(gamma) => {
            let loss_b = *s.loss_b.get_or_insert(0.0);
            let eta = *s.eta_det.get_or_insert(default_eta);
            Ok(Some(ChannelModel::new(gamma, loss_b, eta)?))
        }
    }
}

fn out_dir(s: &mut Settings) -> PathBuf {
    s.out.get_or_insert_with(|| PathBuf::from("out")).clone()
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Every setting the run used, defaults included.
    pub config: Settings,
    pub outputs: Vec<PathBuf>,
    pub points: Vec<(String, usize)>,
    pub wall_time_s: f64,
}

fn finish(
    cmd: &str,
    config: Settings,
    dir: &Path,
    mut written: Written,
    points: Vec<(String, usize)>,
    start: Instant,
) -> Result<Manifest, CliError> {
    let mut manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.to_string(),
        config,
        outputs: Vec::new(),
        points,
        wall_time_s: 0.0,
    };
    written.write(dir, &format!("{cmd}_config.toml"), &manifest.config.to_toml())?;
    manifest.outputs = written.0.clone();
    manifest.outputs.push(dir.join(format!("{cmd}_manifest.json")));
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    written.write(dir, &format!("{cmd}_manifest.json"), &json)?;
    println!("{json}");
    Ok(manifest)
}

fn write_curve(written: &mut Written, dir: &Path, stem: &str, curve: &Curve) -> Result<(), CliError> {
    written.write(dir, &format!("{stem}_points.csv"), &points_csv(&curve.points))?;
    let mut frontiers = vec![(FrontierKind::MinQber, curve.frontier_qber.as_slice())];
    if let Some(dc) = &curve.frontier_dc {
        frontiers.push((FrontierKind::MinDc, dc.as_slice()));
    }
    written.write(dir, &format!("{stem}_frontier.csv"), &frontier_csv(&frontiers))
}

pub fn run_untrusted(mut s: Settings) -> Result<Manifest, CliError> {
    let start = Instant::now();
    check_scenario(&s, "untrusted")?;
    s.scenario = Some("untrusted".into());
    let mu = need(&s.mu, "mu", "untrusted")?;
    let pad = need(&s.pad, "pad", "untrusted")?;
    let m_max = *s.m_max.get_or_insert(25);
    let dist = distribution(&mut s)?;
    let grid = grid(&mut s, m_max);
    let ch = channel(&mut s, 1.0)?;
    let dir = out_dir(&mut s);
    let curve = untrusted_curve(mu, pad, m_max, &dist, &grid, ch.as_ref())?;
    let mut written = Written::default();
    write_curve(&mut written, &dir, "untrusted", &curve)?;
    let points = vec![("untrusted".to_string(), curve.points.len())];
    finish("untrusted", s, &dir, written, points, start)
}

pub fn run_trusted(mut s: Settings) -> Result<Manifest, CliError> {
    let start = Instant::now();
    check_scenario(&s, "trusted")?;
    s.scenario = Some("trusted".into());
    let mu = need(&s.mu, "mu", "trusted")?;
    let pad = need(&s.pad, "pad", "trusted")?;
    let p_dark = need(&s.p_dark, "p_dark", "trusted")?;
    let eta_det = need(&s.eta_det, "eta_det", "trusted")?;
    let m_max = *s.m_max.get_or_insert(pad);
    if m_max > pad {
        return Err(dpsbound_core::Error::DeadTimeConstraint {
            m_max,
            dead_pulses: pad,
        }
        .into());
    }
    if m_max < pad {
        return Err(CliError::Config(format!(
            "trusted sweeps use m_max = pad (dead-time pulses); got m_max = {m_max}, pad = {pad}"
        )));
    }
    let photons = s.photon_number.get_or_insert_with(|| vec![1]).clone();
    if photons.is_empty() {
        return Err(CliError::Config("--photon-number needs at least one value".into()));
    }
    let detector = DetectorModel::with_dead_pulses(eta_det, p_dark, pad)?;
    let dist = distribution(&mut s)?;
    let grid = grid(&mut s, m_max);
    let ch = channel(&mut s, eta_det)?;
    let dir = out_dir(&mut s);
    let mut written = Written::default();
    let mut points = Vec::new();
    for m in photons {
        let pn = PhotonNumberDistribution::single(m)?;
        let curve = trusted_curve(mu, pad, &detector, &dist, &pn, &grid, ch.as_ref())?;
        let stem = format!("trusted_m{m}");
        write_curve(&mut written, &dir, &stem, &curve)?;
        points.push((stem, curve.points.len()));
    }
    finish("trusted", s, &dir, written, points, start)
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub case: String,
    pub quantity: &'static str,
    pub analytic: f64,
    pub simulated: f64,
    pub stderr: f64,
    pub z: f64,
    /// Exact stationary value of the pulse train (trusted scenario).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub config: Settings,
    pub comparisons: Vec<Comparison>,
    pub simulations: Vec<SimResult>,
    pub max_abs_z: f64,
    pub agrees: bool,
}

fn z_score(analytic: f64, simulated: f64, stderr: f64) -> f64 {
    let d = simulated - analytic;
    if stderr > 0.0 {
        d / stderr
    } else if d.abs() <= 1e-15 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn compare(
    case: &str,
    quantity: &'static str,
    analytic: f64,
    simulated: f64,
    stderr: f64,
    exact: Option<f64>,
) -> Comparison {
    Comparison {
        case: case.to_string(),
        quantity,
        analytic,
        simulated,
        stderr,
        z: z_score(analytic, simulated, stderr),
        exact,
    }
}

fn point(s: &mut Settings, default_m_min: usize) -> Result<(usize, f64), CliError> {
    let [lo, hi] = *s.m_min.get_or_insert([default_m_min, default_m_min]);
    if lo != hi {
        return Err(CliError::Config(format!(
            "`oracle` evaluates one point; give --m-min {lo} {lo} (got {lo} {hi})"
        )));
    }
    Ok((lo, *s.q.get_or_insert(1.0)))
}

pub fn run_oracle(mut s: Settings, click_log: Option<&Path>) -> Result<OracleReport, CliError> {
    let scenario = s.scenario.get_or_insert_with(|| "untrusted".into()).clone();
    let pulses = *s.pulses.get_or_insert(1_000_000);
    let seed = *s.seed.get_or_insert(1);
    let mut comparisons = Vec::new();
    let mut sims = Vec::new();
    match scenario.as_str() {
        "untrusted" => {
            let mu = *s.mu.get_or_insert(0.2);
            let pad = *s.pad.get_or_insert(50);
            let m_max = *s.m_max.get_or_insert(25);
            let (m_min, q) = point(&mut s, 3)?;
            let dist = distribution(&mut s)?;
            let params = AttackParams::new(mu, m_min, m_max, q, pad)?;
            let g = untrusted_gain(&params)?;
            let qb = untrusted_qber(&params, &dist)?;
            let mut cfg = SimConfig::untrusted(params, dist, pulses, seed);
            cfg.record_clicks = click_log.is_some();
            let r = simulate(&cfg)?;
            comparisons.push(compare("untrusted", "gain", g, r.gain_hat, r.gain_stderr, None));
            comparisons.push(compare("untrusted", "qber", qb, r.qber_hat, r.qber_stderr, None));
            sims.push(r);
        }
        "trusted" => {
            let mu = *s.mu.get_or_insert(0.2);
            let pad = *s.pad.get_or_insert(2);
            let m_max = *s.m_max.get_or_insert(pad);
            let (m_min, q) = point(&mut s, 1)?;
            let eta_det = *s.eta_det.get_or_insert(1.0);
            let p_dark = *s.p_dark.get_or_insert(0.0);
            let photons = s.photon_number.get_or_insert_with(|| vec![1]).clone();
            let dist = distribution(&mut s)?;
            let detector = DetectorModel::with_dead_pulses(eta_det, p_dark, pad)?;
            let params = AttackParams::new(mu, m_min, m_max, q, pad)?;
            for m in photons {
                let pn = PhotonNumberDistribution::single(m)?;
                let a = trusted_rates(&params, &detector, &dist, &pn)?;
                let exact = renewal_rates(&params, &detector, &dist, &pn)?;
                let mut cfg = SimConfig::trusted(params, detector, dist.clone(), pn, pulses, seed);
                cfg.record_clicks = click_log.is_some();
                let r = simulate(&cfg)?;
                let case = format!("trusted m={m}");
                comparisons.push(compare(
                    &case,
                    "gain",
                    a.gain,
                    r.gain_hat,
                    r.gain_stderr,
                    Some(exact.gain),
                ));
                comparisons.push(compare(
                    &case,
                    "qber",
                    a.qber,
                    r.qber_hat,
                    r.qber_stderr,
                    Some(exact.qber),
                ));
                comparisons.push(compare(
                    &case,
                    "dc_rate",
                    a.dc_rate,
                    r.dc_hat,
                    r.dc_stderr,
                    Some(exact.dc_rate),
                ));
                sims.push(r);
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown scenario `{other}`; use untrusted or trusted"
            )))
        }
    }
    if let Some(path) = click_log {
        let mut buf = Vec::new();
        for r in &sims {
            r.write_click_log(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        }
        crate::output::write_atomic(path, &buf)?;
    }
    for r in &mut sims {
        r.click_log = None;
    }
    let max_abs_z = comparisons.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    let report = OracleReport {
        config: s.clone(),
        agrees: max_abs_z <= Z_LIMIT,
        comparisons,
        simulations: sims,
        max_abs_z,
    };
    print_report(&report);
    if let Some(dir) = &s.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        Written::default().write(dir, "oracle_report.json", &json)?;
    }
    Ok(report)
}

fn print_report(r: &OracleReport) {
    println!(
        "{:<12} {:<8} {:>18} {:>18} {:>18} {:>9} {:>18}",
        "case", "quantity", "analytic", "simulated", "stderr", "z", "exact"
    );
    for c in &r.comparisons {
        println!(
            "{:<12} {:<8} {:>18} {:>18} {:>18} {:>9.3} {:>18}",
            c.case,
            c.quantity,
            num(c.analytic),
            num(c.simulated),
            num(c.stderr),
            c.z,
            c.exact.map(num).unwrap_or_default()
        );
    }
    let verdict = if r.agrees { "agree" } else { "DISAGREE" };
    println!("max |z| = {:.3} (limit {Z_LIMIT}): {verdict}", r.max_abs_z);
}
