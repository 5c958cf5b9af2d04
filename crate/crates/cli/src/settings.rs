//! Run settings: preset, then config file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::presets::Preset;
use crate::CliError;

/// Every knob of a run. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pad: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_min: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_number: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_dark: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_det: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulses: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    /// Fields set in `other` replace ours.
    pub fn overlay(&mut self, other: &Settings) {
        overlay!(
            self,
            other,
            preset,
            mu,
            pad,
            m_max,
            m_min,
            q_steps,
            q,
            dist,
            photon_number,
            p_dark,
            eta_det,
            gamma,
            loss_b,
            out,
            pulses,
            seed,
            scenario
        );
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize")
    }
}

/// Flags shared by the run commands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the settings below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Alice's mean photon number per pulse.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Vacuum padding d (untrusted) or dead-time pulses d̃ (trusted).
    #[arg(long)]
    pub pad: Option<usize>,
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Inclusive M_min range; a single point for `oracle`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub m_min: Option<Vec<usize>>,
    #[arg(long)]
    pub q_steps: Option<usize>,
    /// q of the `oracle` point.
    #[arg(long)]
    pub q: Option<f64>,
    /// flat, binomial, optimal or custom:<file>.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long, num_args = 1.., value_name = "M")]
    pub photon_number: Option<Vec<usize>>,
    #[arg(long)]
    pub p_dark: Option<f64>,
    #[arg(long)]
    pub eta_det: Option<f64>,
    /// Fibre loss in dB/km; enables distances.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Receiver loss in dB.
    #[arg(long)]
    pub loss_b: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pulses: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// untrusted or trusted (`oracle` only).
    #[arg(long)]
    pub scenario: Option<String>,
}

impl RunArgs {
    fn as_settings(&self) -> Settings {
        Settings {
            preset: self.preset.clone(),
            mu: self.mu,
            pad: self.pad,
            m_max: self.m_max,
            m_min: self.m_min.as_ref().map(|v| [v[0], v[1]]),
            q_steps: self.q_steps,
            q: self.q,
            dist: self.dist.clone(),
            photon_number: self.photon_number.clone(),
            p_dark: self.p_dark,
            eta_det: self.eta_det,
            gamma: self.gamma,
            loss_b: self.loss_b,
            out: self.out.clone(),
            pulses: self.pulses,
            seed: self.seed,
            scenario: self.scenario.clone(),
        }
    }

    /// Preset values, overlaid by the config file, overlaid by flags.
    pub fn resolve(&self) -> Result<Settings, CliError> {
        let flags = self.as_settings();
        let file = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let preset_name = flags.preset.clone().or_else(|| file.preset.clone());
        let mut out = match preset_name {
            Some(name) => Preset::find(&name)?.settings(),
            None => Settings::default(),
        };
        out.overlay(&file);
        out.overlay(&flags);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_preset() {
        let dir = std::env::temp_dir().join(format!("dpsbound-settings-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "preset = \"fig-untrusted-mu0.2-d500\"\npad = 40\nq_steps = 7\n").unwrap();
        let args = RunArgs {
            config: Some(path),
            q_steps: Some(3),
            ..Default::default()
        };
        let s = args.resolve().unwrap();
        assert_eq!(s.mu, Some(0.2));
        assert_eq!(s.pad, Some(40));
        assert_eq!(s.q_steps, Some(3));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = Settings::from_toml("mu = 0.2\nbogus = 1\n", Path::new("x.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn toml_round_trip() {
        let s = Settings {
            mu: Some(0.17),
            m_min: Some([2, 9]),
            photon_number: Some(vec![1, 3]),
            out: Some("runs/a".into()),
            ..Default::default()
        };
        assert_eq!(Settings::from_toml(&s.to_toml(), Path::new("-")).unwrap(), s);
    }
}
