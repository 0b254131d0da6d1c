//! Monte Carlo sweeps over constant pitch commands.

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aircraft::Airframe;
use crate::ddpg::DdpgAgent;
use crate::env::{EnvConfig, PilotProfile, ProtectionMode};

use super::{make_env, run_episode, HarnessError, Pilot, SweepSpec};

/// One sweep run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q_cmd: f64,
    pub p_cmd: f64,
    pub passed: bool,
    pub max_alpha: f64,
    pub min_alpha: f64,
    pub max_nz: f64,
    pub min_nz: f64,
    pub max_abs_q: f64,
    pub longest_alpha: f64,
    pub longest_nz: f64,
    pub longest_q: f64,
    pub tracking_rms: f64,
    pub termination: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.passed).count()
    }

    /// Recomputed from the rows every time; there is no separate aggregate state.
    pub fn pass_rate(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.passed() as f64 / self.rows.len() as f64
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

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
            rows.push(rec.map_err(|e| HarnessError::Parse { row: i + 2, message: e.to_string() })?);
        }
        Ok(Self { rows })
    }
}

/// Runs every command of `spec`; rows come back in command order whatever
/// the worker count. `jobs = 0` uses rayon's default pool size.
pub fn sweep(
    spec: &SweepSpec,
    env_config: &EnvConfig,
    airframe: Arc<Airframe>,
    mode: ProtectionMode,
    agent: Option<&DdpgAgent>,
    jobs: usize,
) -> Result<SweepResult, HarnessError> {
    if mode == ProtectionMode::Rl && agent.is_none() {
        return Err(HarnessError::Config("rl mode needs a checkpoint".into()));
    }
    let commands = spec.commands()?;
    let template = make_env(env_config, airframe, mode, agent)?;
    let run = |q: &f64| -> Result<SweepRow, HarnessError> {
        let mut env = template.clone();
        let pilot = match agent {
            Some(a) if mode == ProtectionMode::Rl => Pilot::Agent(a),
            _ => Pilot::Plain,
        };
        let s = run_episode(&mut env, PilotProfile::coupled(spec.p_cmd, *q), &pilot)?.summary;
        Ok(SweepRow {
            q_cmd: *q,
            p_cmd: spec.p_cmd,
            passed: !s.failed,
            max_alpha: s.max_alpha,
            min_alpha: s.min_alpha,
            max_nz: s.max_nz,
            min_nz: s.min_nz,
            max_abs_q: s.max_abs_q,
            longest_alpha: s.longest_violation[0],
            longest_nz: s.longest_violation[1],
            longest_q: s.longest_violation[2],
            tracking_rms: s.tracking_rms,
            termination: s.termination.unwrap_or_else(|| "none".into()),
        })
    };
    // A run that errors is recorded as a failure and the sweep carries on.
    let record = |q: &f64| {
        run(q).unwrap_or_else(|e| SweepRow {
            q_cmd: *q,
            p_cmd: spec.p_cmd,
            passed: false,
            max_alpha: f64::NAN,
            min_alpha: f64::NAN,
            max_nz: f64::NAN,
            min_nz: f64::NAN,
            max_abs_q: f64::NAN,
            longest_alpha: f64::NAN,
            longest_nz: f64::NAN,
            longest_q: f64::NAN,
            tracking_rms: f64::NAN,
            termination: format!("error: {e}"),
        })
    };
    let rows: Vec<SweepRow> = if jobs == 1 {
        commands.iter().map(record).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| commands.par_iter().map(record).collect())
    };
    Ok(SweepResult { rows })
}
