//! Closed-loop episode execution, per-step logs and run summaries.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aircraft::Airframe;
use crate::ddpg::DdpgAgent;
use crate::env::{EnvConfig, Normalization, PilotProfile, ProtectionEnv, ProtectionMode, StepInfo, OBS_DIM};

use super::HarnessError;

/// One row per agent step. Angles in deg, rates in deg/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub alpha: f64,
    pub nz: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub phi: f64,
    pub theta: f64,
    pub altitude: f64,
    pub airspeed: f64,
    pub aileron: f64,
    pub tail: f64,
    pub rudder: f64,
    pub p_cmd: f64,
    pub q_pilot: f64,
    pub q_rest: f64,
    pub q_cmd: f64,
    pub r_tracking: f64,
    pub r_alpha: f64,
    pub r_nz: f64,
    pub r_q: f64,
    pub r_penalty: f64,
    pub reward: f64,
    pub viol_alpha: u8,
    pub viol_nz: u8,
    pub viol_q: u8,
    pub aero_clamped: u8,
    pub controller_fault: u8,
    pub below_sea_level: u8,
}

impl LogRow {
    pub fn from_info(info: &StepInfo) -> Self {
        let s = &info.state;
        let d = info.deflections;
        let w = s.omega.map(f64::to_degrees);
        Self {
            t: info.time,
            alpha: info.sample.alpha_deg,
            nz: info.sample.nz,
            p: w.x,
            q: w.y,
            r: w.z,
            phi: s.euler.x.to_degrees(),
            theta: s.euler.y.to_degrees(),
            altitude: s.altitude(),
            airspeed: s.airspeed(),
            aileron: d.x,
            tail: d.y,
            rudder: d.z,
            p_cmd: info.pilot[0],
            q_pilot: info.pilot[1],
            q_rest: info.q_rest,
            q_cmd: info.q_cmd,
            r_tracking: info.reward.tracking,
            r_alpha: info.reward.alpha,
            r_nz: info.reward.nz,
            r_q: info.reward.q,
            r_penalty: info.reward.penalty,
            reward: info.reward.total,
            viol_alpha: info.beyond[0] as u8,
            viol_nz: info.beyond[1] as u8,
            viol_q: info.beyond[2] as u8,
            aero_clamped: info.aero_clamped as u8,
            controller_fault: info.controller_fault as u8,
            below_sea_level: info.below_sea_level as u8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
}

impl EpisodeLog {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, HarnessError> {
        let mut rd = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for (i, rec) in rd.deserialize().enumerate() {
            // header is line 1
            let row: LogRow = rec.map_err(|e| HarnessError::Parse { row: i + 2, message: e.to_string() })?;
            rows.push(row);
        }
        Ok(Self { rows })
    }
}

/// Envelope statistics of one run and its pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub steps: usize,
    pub duration: f64,
    pub max_alpha: f64,
    pub min_alpha: f64,
    pub max_nz: f64,
    pub min_nz: f64,
    pub max_abs_q: f64,
    /// Longest continuous exceedance per variable (α, n_z, q), s.
    pub longest_violation: [f64; 3],
    /// Total time beyond each limit, s.
    pub violation_time: [f64; 3],
    /// RMS of q − pilot q command, deg/s.
    pub tracking_rms: f64,
    pub total_reward: f64,
    pub termination: Option<String>,
    /// Envelope failure: an exceedance lasting the full window, a gross
    /// exceedance, or an integrity abort.
    pub failed: bool,
}

impl EpisodeSummary {
    pub fn any_violation(&self) -> bool {
        self.violation_time.iter().any(|t| *t > 0.0)
    }
}

/// Who closes the pitch-command loop.
#[derive(Debug, Clone)]
pub enum Pilot<'a> {
    /// No restorative action; the environment mode does the rest.
    Plain,
    Agent(&'a DdpgAgent),
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub log: EpisodeLog,
    pub summary: EpisodeSummary,
}

/// Builds an environment whose observation scaling matches the agent, if any.
pub fn make_env(
    env_config: &EnvConfig,
    airframe: Arc<Airframe>,
    mode: ProtectionMode,
    agent: Option<&DdpgAgent>,
) -> Result<ProtectionEnv, HarnessError> {
    let mut cfg = env_config.clone();
    if let Some(a) = agent {
        if a.obs_offset.len() != OBS_DIM || a.obs_scale.len() != OBS_DIM {
            return Err(HarnessError::Config("checkpoint observation size does not match the environment".into()));
        }
        cfg.normalization = Normalization {
            offset: std::array::from_fn(|i| a.obs_offset[i]),
            scale: std::array::from_fn(|i| a.obs_scale[i]),
        };
    }
    Ok(ProtectionEnv::new(cfg, airframe, mode)?)
}

pub fn run_episode(env: &mut ProtectionEnv, profile: PilotProfile, pilot: &Pilot<'_>) -> Result<EpisodeOutcome, HarnessError> {
    if env.mode == ProtectionMode::Rl && matches!(pilot, Pilot::Plain) {
        return Err(HarnessError::Config("rl mode needs a checkpoint".into()));
    }
    let mut obs = env.reset(profile)?;
    let dt = env.config.agent_dt;
    let window = crate::env::window_steps(env.config.reward.sustained_window, dt);
    let mut log = EpisodeLog::default();
    let mut longest = [0u32; 3];
    let mut total_steps = [0u32; 3];
    let mut sq_err = 0.0;
    let mut total_reward = 0.0;
    let termination = loop {
        let q_rest = match pilot {
            Pilot::Plain => 0.0,
            Pilot::Agent(agent) => env.config.apply_action(agent.policy(&obs)),
        };
        let step = env.step(q_rest)?;
        let info = &step.info;
        for i in 0..3 {
            longest[i] = longest[i].max(info.timers.steps[i]);
            total_steps[i] += info.beyond[i] as u32;
        }
        sq_err += (info.sample.q_deg - info.pilot[1]).powi(2);
        total_reward += step.reward;
        log.rows.push(LogRow::from_info(info));
        obs = step.observation;
        if step.done() {
            break step.terminated;
        }
    };
    let rows = &log.rows;
    let fold = |f: fn(&LogRow) -> f64, init: f64, pick: fn(f64, f64) -> f64| rows.iter().map(f).fold(init, pick);
    let summary = EpisodeSummary {
        steps: rows.len(),
        duration: rows.last().map_or(0.0, |r| r.t),
        max_alpha: fold(|r| r.alpha, f64::NEG_INFINITY, f64::max),
        min_alpha: fold(|r| r.alpha, f64::INFINITY, f64::min),
        max_nz: fold(|r| r.nz, f64::NEG_INFINITY, f64::max),
        min_nz: fold(|r| r.nz, f64::INFINITY, f64::min),
        max_abs_q: fold(|r| r.q.abs(), 0.0, f64::max),
        longest_violation: longest.map(|s| s as f64 * dt),
        violation_time: total_steps.map(|s| s as f64 * dt),
        tracking_rms: (sq_err / rows.len().max(1) as f64).sqrt(),
        total_reward,
        termination: termination.map(|t| t.label().to_string()),
        failed: termination.is_some() || longest.iter().any(|s| *s >= window),
    };
    Ok(EpisodeOutcome { log, summary })
}
