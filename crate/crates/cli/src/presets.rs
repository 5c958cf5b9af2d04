//! Parameter sets of the published figures.

use serde::{Deserialize, Serialize};

use crate::settings::Settings;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub scenario: String,
    pub mu_alpha: f64,
    pub pad: usize,
    pub m_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_dark: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_det: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_numbers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_b: Option<f64>,
}

fn untrusted(name: &str, mu: f64, pad: usize) -> Preset {
    Preset {
        name: name.into(),
        scenario: "untrusted".into(),
        mu_alpha: mu,
        pad,
        m_max: 25,
        p_dark: None,
        eta_det: None,
        photon_numbers: None,
        gamma: None,
        loss_b: None,
    }
}

fn trusted(name: &str, mu: f64, pad: usize, p_dark: f64, eta_det: f64) -> Preset {
    Preset {
        name: name.into(),
        scenario: "trusted".into(),
        mu_alpha: mu,
        pad,
        m_max: pad,
        p_dark: Some(p_dark),
        eta_det: Some(eta_det),
        photon_numbers: Some(vec![1, 2, 3]),
        gamma: None,
        loss_b: None,
    }
}

pub fn all() -> Vec<Preset> {
    vec![
        untrusted("fig-untrusted-mu0.2-d500", 0.2, 500),
        untrusted("fig-untrusted-mu0.17-d50", 0.17, 50),
        untrusted("fig-untrusted-mu0.16-d50", 0.16, 50),
        untrusted("fig-untrusted-mu0.2-d50", 0.2, 50),
        trusted("fig-trusted-mu0.2-d500", 0.2, 500, 2.5e-9, 0.005),
        trusted("fig-trusted-mu0.17-d50", 0.17, 50, 7.8e-6, 0.0327),
        trusted("fig-trusted-mu0.16-d50", 0.16, 50, 2.7e-7, 0.0045),
        trusted("fig-trusted-mu0.2-d50", 0.2, 50, 3.5e-8, 0.0011),
    ]
}

impl Preset {
    pub fn find(name: &str) -> Result<Preset, CliError> {
        all()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{name}` (see `dpsbound presets list`)")))
    }

    pub fn settings(&self) -> Settings {
        Settings {
            preset: Some(self.name.clone()),
            mu: Some(self.mu_alpha),
            pad: Some(self.pad),
            m_max: Some(self.m_max),
            p_dark: self.p_dark,
            eta_det: self.eta_det,
            photon_number: self.photon_numbers.clone(),
            gamma: self.gamma,
            loss_b: self.loss_b,
            scenario: Some(self.scenario.clone()),
            ..Default::default()
        }
    }
}
