//! Seeded DDPG training on randomly drawn constant pitch commands.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ddpg::{DdpgAgent, Transition};
use crate::env::{ProtectionEnv, ProtectionMode};

use super::{Config, HarnessError};

/// One metrics CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: usize,
    pub q_cmd: f64,
    pub reward: f64,
    pub average_reward: f64,
    pub mean_q: f64,
    pub critic_loss: f64,
    pub noise_variance: f64,
    pub termination: String,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub episodes: usize,
    pub reached_stop: bool,
    pub final_average: f64,
    pub checkpoint: PathBuf,
    pub metrics: PathBuf,
    pub parameter_hash: String,
}

/// Agent seed is the training seed; the command draws use an independent stream.
pub fn env_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn new_agent(config: &Config, seed: u64) -> Result<DdpgAgent, HarnessError> {
    let mut agent = DdpgAgent::new(config.agent.clone(), seed)?;
    agent.obs_offset = config.env.normalization.offset.to_vec();
    agent.obs_scale = config.env.normalization.scale.to_vec();
    Ok(agent)
}

/// Runs one training episode, updating after every step once the buffer is warm.
pub fn train_episode(
    env: &mut ProtectionEnv,
    agent: &mut DdpgAgent,
    rng: &mut ChaCha8Rng,
    episode: usize,
    average_reward: f64,
) -> Result<EpisodeMetrics, HarnessError> {
    let (mut obs, q_cmd) = env.reset_random(rng)?;
    let mut reward = 0.0;
    let mut steps = 0;
    let (mut q_sum, mut loss_sum, mut updates) = (0.0, 0.0, 0usize);
    let termination = loop {
        let action = agent.select_action(&obs, true);
        let result = env.step(env.config.apply_action(action))?;
        agent.remember(&Transition {
            state: obs.to_vec(),
            action,
            reward: result.reward,
            next_state: result.observation.to_vec(),
            done: result.terminated.is_some(),
        });
        if agent.ready() {
            let stats = agent.update()?;
            q_sum += stats.mean_q;
            loss_sum += stats.critic_loss;
            updates += 1;
        }
        reward += result.reward;
        steps += 1;
        obs = result.observation;
        if result.done() {
            break result.terminated.map_or("time_limit", |t| t.label());
        }
    };
    let n = updates.max(1) as f64;
    Ok(EpisodeMetrics {
        episode,
        steps,
        q_cmd,
        reward,
        average_reward,
        mean_q: q_sum / n,
        critic_loss: loss_sum / n,
        noise_variance: agent.noise.variance,
        termination: termination.to_string(),
    })
}

/// Trains until the moving-average reward reaches the stop value or the
/// episode cap, writing `metrics.csv` and `agent.ckpt` under `out_dir`.
pub fn train(config: &Config, seed: u64, out_dir: &Path) -> Result<TrainReport, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let tc = &config.training;
    let mut agent = new_agent(config, seed)?;
    let mut env = ProtectionEnv::new(config.env.clone(), Arc::new(config.airframe.clone()), ProtectionMode::Rl)?;
    let mut rng = env_rng(seed);
    let metrics_path = out_dir.join("metrics.csv");
    let checkpoint = out_dir.join("agent.ckpt");
    let mut writer = csv::Writer::from_path(&metrics_path)?;
    let mut window: VecDeque<f64> = VecDeque::with_capacity(tc.average_window);
    let mut average = f64::NEG_INFINITY;
    let mut reached_stop = false;
    let mut episodes = 0;
    for episode in 1..=tc.max_episodes {
        let mut m = match train_episode(&mut env, &mut agent, &mut rng, episode, average) {
            Ok(m) => m,
            Err(e) => {
                writer.flush()?;
                log::error!("training aborted at episode {episode}: {e}; last checkpoint kept");
                return Err(e);
            }
        };
        if window.len() == tc.average_window {
            window.pop_front();
        }
        window.push_back(m.reward);
        average = window.iter().sum::<f64>() / window.len() as f64;
        m.average_reward = average;
        writer.serialize(&m)?;
        episodes = episode;
        log::info!(
            "episode {episode}: q_cmd {:.2} reward {:.2} avg {:.2} steps {} {}",
            m.q_cmd,
            m.reward,
            average,
            m.steps,
            m.termination
        );
        if tc.checkpoint_every > 0 && episode % tc.checkpoint_every == 0 {
            writer.flush()?;
            agent.save(&checkpoint)?;
        }
        if window.len() == tc.average_window && average >= tc.stop_avg_reward {
            reached_stop = true;
            break;
        }
    }
    writer.flush()?;
    agent.save(&checkpoint)?;
    Ok(TrainReport {
        episodes,
        reached_stop,
        final_average: average,
        checkpoint,
        metrics: metrics_path,
        parameter_hash: agent.parameter_hash(),
    })
}
