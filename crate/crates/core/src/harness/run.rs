//! Command-level runs. Each writes its outputs plus a manifest into an
//! output directory, and any of them can be regenerated from that manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::ddpg::DdpgAgent;
use crate::dynamics::trim::{trim_level_flight, TrimResult};
use crate::env::{window_steps, ProtectionMode};

use super::manifest::{sha256_file, FileDigest, Manifest, RunSpec, MANIFEST_FILE};
use super::plot::{plot_episode, plot_sweep};
use super::{make_env, run_episode, sweep, train, Config, EpisodeLog, EpisodeOutcome, HarnessError, Pilot, SweepResult};

pub const EPISODE_CSV: &str = "episode.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const TRIM_FILE: &str = "trim.toml";

/// A loaded checkpoint together with its digest.
pub struct LoadedAgent {
    pub agent: DdpgAgent,
    pub digest: FileDigest,
}

impl LoadedAgent {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let agent = DdpgAgent::load(path)?;
        let recorded = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
        let digest = FileDigest::of(path, recorded.to_string_lossy())?;
        Ok(Self { agent, digest })
    }
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = toml::to_string(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn file_names(dir: &Path, paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
        .collect()
}

fn require_agent(mode: ProtectionMode, agent: Option<&LoadedAgent>) -> Result<(), HarnessError> {
    if mode == ProtectionMode::Rl && agent.is_none() {
        return Err(HarnessError::Config("rl mode needs a checkpoint".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrimReport {
    pub mach: f64,
    pub altitude: f64,
    pub airspeed: f64,
    pub alpha_deg: f64,
    pub theta_deg: f64,
    pub aileron_deg: f64,
    pub tail_deg: f64,
    pub rudder_deg: f64,
    pub throttle: f64,
    pub thrust: f64,
    pub residuals: [f64; 3],
    pub iterations: usize,
}

impl TrimReport {
    fn new(mach: f64, altitude: f64, t: &TrimResult) -> Self {
        Self {
            mach,
            altitude,
            airspeed: t.state.airspeed(),
            alpha_deg: t.alpha().to_degrees(),
            theta_deg: t.state.euler.y.to_degrees(),
            aileron_deg: t.deflections.x,
            tail_deg: t.deflections.y,
            rudder_deg: t.deflections.z,
            throttle: t.throttle,
            thrust: t.thrust,
            residuals: t.residuals,
            iterations: t.iterations,
        }
    }
}

pub fn run_trim(config: &Config, out_dir: &Path) -> Result<(TrimReport, Manifest), HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let t = trim_level_flight(&config.airframe, config.env.mach, config.env.altitude)
        .map_err(|e| HarnessError::Config(format!("trim: {e}")))?;
    let report = TrimReport::new(config.env.mach, config.env.altitude, &t);
    write_toml(&out_dir.join(TRIM_FILE), &report)?;
    let mut manifest = Manifest::new(config, RunSpec::Trim, None);
    manifest.finish(out_dir, &[TRIM_FILE.to_string()])?;
    Ok((report, manifest))
}

/// Flies one configured scenario and writes its log, summary and plots.
/// `mode` overrides the scenario's own mode.
pub fn run_fly(
    config: &Config,
    scenario: &str,
    mode: Option<ProtectionMode>,
    agent: Option<&LoadedAgent>,
    out_dir: &Path,
) -> Result<(EpisodeOutcome, Manifest), HarnessError> {
    let sc = config.scenario(scenario)?;
    let mode = mode.unwrap_or(sc.mode);
    require_agent(mode, agent)?;
    std::fs::create_dir_all(out_dir)?;
    let rl_agent = agent.filter(|_| mode == ProtectionMode::Rl);
    let mut env = make_env(&config.env, Arc::new(config.airframe.clone()), mode, rl_agent.map(|a| &a.agent))?;
    let pilot = rl_agent.map_or(Pilot::Plain, |a| Pilot::Agent(&a.agent));
    let outcome = run_episode(&mut env, sc.profile.clone(), &pilot)?;

    let mut names = vec![EPISODE_CSV.to_string(), SUMMARY_FILE.to_string()];
    outcome.log.write_csv(BufWriter::new(File::create(out_dir.join(EPISODE_CSV))?))?;
    write_toml(&out_dir.join(SUMMARY_FILE), &outcome.summary)?;
    let plots = plot_episode(&outcome.log, &config.env.limits, out_dir)?;
    names.extend(file_names(out_dir, &plots));

    let run = RunSpec::Fly { scenario: scenario.to_string(), mode };
    let mut manifest = Manifest::new(config, run, rl_agent.map(|a| a.digest.clone()));
    manifest.finish(out_dir, &names)?;
    Ok((outcome, manifest))
}

/// Runs the configured sweep and writes the per-run table and plots.
pub fn run_sweep(
    config: &Config,
    mode: ProtectionMode,
    agent: Option<&LoadedAgent>,
    jobs: usize,
    out_dir: &Path,
) -> Result<(SweepResult, Manifest), HarnessError> {
    require_agent(mode, agent)?;
    std::fs::create_dir_all(out_dir)?;
    let rl_agent = agent.filter(|_| mode == ProtectionMode::Rl);
    let result = sweep(&config.sweep, &config.env, Arc::new(config.airframe.clone()), mode, rl_agent.map(|a| &a.agent), jobs)?;

    let mut names = vec![SWEEP_CSV.to_string()];
    result.write_csv(BufWriter::new(File::create(out_dir.join(SWEEP_CSV))?))?;
    let window = window_steps(config.env.reward.sustained_window, config.env.agent_dt) as f64 * config.env.agent_dt;
    let plots = plot_sweep(&result, &config.env.limits, window, out_dir)?;
    names.extend(file_names(out_dir, &plots));

    // Rows come back in command order whatever the worker count, so jobs
    // is recorded for information only.
    let mut manifest = Manifest::new(config, RunSpec::Sweep { mode, jobs }, rl_agent.map(|a| a.digest.clone()));
    manifest.finish(out_dir, &names)?;
    Ok((result, manifest))
}

pub fn run_train(config: &Config, seed: u64, out_dir: &Path) -> Result<(train::TrainReport, Manifest), HarnessError> {
    let report = train::train(config, seed, out_dir)?;
    let names = file_names(out_dir, &[report.metrics.clone(), report.checkpoint.clone()]);
    let mut manifest = Manifest::new(config, RunSpec::Train { seed }, None);
    manifest.finish(out_dir, &names)?;
    Ok((report, manifest))
}

/// Plots an episode log or a sweep table, chosen by its header.
pub fn run_plot(config: &Config, input: &Path, out_dir: &Path) -> Result<(Vec<PathBuf>, Manifest), HarnessError> {
    let text = std::fs::read_to_string(input)?;
    let header = text.lines().next().unwrap_or_default();
    let plots = if header.starts_with("q_cmd,p_cmd,passed") {
        let result = SweepResult::read_csv(text.as_bytes())?;
        let window = window_steps(config.env.reward.sustained_window, config.env.agent_dt) as f64 * config.env.agent_dt;
        plot_sweep(&result, &config.env.limits, window, out_dir)?
    } else {
        plot_episode(&EpisodeLog::read_csv(text.as_bytes())?, &config.env.limits, out_dir)?
    };
    let recorded = std::fs::canonicalize(input).unwrap_or_else(|_| input.to_path_buf());
    let run = RunSpec::Plot { input: FileDigest::of(input, recorded.to_string_lossy())? };
    let mut manifest = Manifest::new(config, run, None);
    manifest.finish(out_dir, &file_names(out_dir, &plots))?;
    Ok((plots, manifest))
}

/// Outcome of regenerating a run from its manifest.
#[derive(Debug, Clone)]
pub struct RerunReport {
    pub original: Manifest,
    pub rerun: Manifest,
    /// Outputs whose digest differs or which were not produced again.
    pub mismatches: Vec<String>,
}

impl RerunReport {
    pub fn identical(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Finds a recorded input: at its recorded path (relative paths are taken
/// from the manifest directory), else by file name next to the manifest.
/// The digest must match either way.
fn locate(recorded: &FileDigest, manifest_dir: &Path) -> Result<PathBuf, HarnessError> {
    let primary = manifest_dir.join(&recorded.path);
    let fallback = primary.file_name().map(|n| manifest_dir.join(n));
    for candidate in std::iter::once(primary.clone()).chain(fallback) {
        if candidate.is_file() {
            let digest = sha256_file(&candidate)?;
            if digest == recorded.sha256 {
                return Ok(candidate);
            }
            return Err(HarnessError::Config(format!("{} does not match its recorded digest", candidate.display())));
        }
    }
    Err(HarnessError::Config(format!("recorded input {} not found", recorded.path)))
}

pub fn rerun(manifest_path: &Path, out_dir: &Path) -> Result<RerunReport, HarnessError> {
    let original = Manifest::load(manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let config = &original.config;
    let agent = match &original.checkpoint {
        Some(ck) => Some(LoadedAgent::load(&locate(ck, manifest_dir)?)?),
        None => None,
    };
    let rerun = match &original.run {
        RunSpec::Trim => run_trim(config, out_dir)?.1,
        RunSpec::Fly { scenario, mode } => run_fly(config, scenario, Some(*mode), agent.as_ref(), out_dir)?.1,
        RunSpec::Sweep { mode, jobs } => run_sweep(config, *mode, agent.as_ref(), *jobs, out_dir)?.1,
        RunSpec::Train { seed } => run_train(config, *seed, out_dir)?.1,
        RunSpec::Plot { input } => run_plot(config, &locate(input, manifest_dir)?, out_dir)?.1,
    };
    let mismatches = original
        .outputs
        .iter()
        .filter(|o| !rerun.outputs.contains(o))
        .map(|o| o.path.clone())
        .collect();
    Ok(RerunReport { original, rerun, mismatches })
}

/// Path of the manifest a run wrote into `out_dir`.
pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join(MANIFEST_FILE)
}
