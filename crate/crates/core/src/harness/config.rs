use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aircraft::Airframe;
use crate::ddpg::DdpgConfig;
use crate::env::{Channel, EnvConfig, PilotProfile, ProtectionMode};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub seed: u64,
    pub max_episodes: usize,
    /// Stop once the moving-average episode reward reaches this value.
    pub stop_avg_reward: f64,
    /// Episodes in the moving average.
    pub average_window: usize,
    pub checkpoint_every: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { seed: 1, max_episodes: 300, stop_avg_reward: 80.0, average_window: 150, checkpoint_every: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    /// Pitch command range, deg/s.
    pub q_range: [f64; 2],
    pub increment: f64,
    /// Constant roll command held through every run, deg/s.
    pub p_cmd: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { q_range: [-10.0, 25.0], increment: 0.5, p_cmd: 0.0 }
    }
}

impl SweepSpec {
    pub fn commands(&self) -> Result<Vec<f64>, HarnessError> {
        let [lo, hi] = self.q_range;
        if !(self.increment > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(HarnessError::Config("sweep needs increment > 0 and a nonempty finite range".into()));
        }
        let n = ((hi - lo) / self.increment + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + i as f64 * self.increment).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub profile: PilotProfile,
    #[serde(default)]
    pub mode: ProtectionMode,
}

pub fn default_scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "pitch-up".into(),
            description: "constant 25 deg/s pitch command".into(),
            profile: PilotProfile::pitch(25.0),
            mode: ProtectionMode::Classical,
        },
        Scenario {
            name: "pitch-down".into(),
            description: "constant -10 deg/s pitch command, on the negative rate limit".into(),
            profile: PilotProfile::pitch(-10.0),
            mode: ProtectionMode::Classical,
        },
        Scenario {
            name: "roll-transition".into(),
            description: "60 deg/s roll with a pitch command reversing from 20 to -10 deg/s".into(),
            profile: PilotProfile {
                p: Channel::constant(60.0),
                q: Channel { points: vec![[0.0, 20.0], [4.0, 20.0], [5.0, -10.0]] },
                r: Channel::zero(),
            },
            mode: ProtectionMode::Classical,
        },
    ]
}

/// Everything a run depends on, in one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub env: EnvConfig,
    pub airframe: Airframe,
    pub agent: DdpgConfig,
    pub training: TrainingConfig,
    pub sweep: SweepSpec,
    pub scenarios: Vec<Scenario>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            airframe: Airframe::default(),
            agent: DdpgConfig::default(),
            training: TrainingConfig::default(),
            sweep: SweepSpec::default(),
            scenarios: default_scenarios(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.airframe.aero.resolve_tables().map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.env.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.agent.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.agent.obs_dim != crate::env::OBS_DIM {
            return Err(HarnessError::Config(format!("agent.obs_dim must be {}", crate::env::OBS_DIM)));
        }
        for s in &self.scenarios {
            s.profile.validate().map_err(|e| HarnessError::Config(format!("scenario {}: {e}", s.name)))?;
        }
        self.sweep.commands()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario, HarnessError> {
        self.scenarios.iter().find(|s| s.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
            HarnessError::Config(format!("unknown scenario '{name}' (known: {})", known.join(", ")))
        })
    }
}
