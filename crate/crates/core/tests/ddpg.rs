use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fepkit::aircraft::Airframe;
use fepkit::ddpg::{
    actor_layers, actor_objective_and_grad, critic_layers, soft_update, DdpgAgent, DdpgConfig, Network, NoiseProcess,
    Optimizer, OptimizerConfig, OptimizerKind, ReplayBuffer, Topology, Transition,
};
use fepkit::env::{EnvConfig, ProtectionEnv, ProtectionMode};
use fepkit::harness::train::{env_rng, train_episode};

#[test]
fn repeated_soft_updates_follow_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let online = Network::glorot(Topology::Critic, critic_layers(7, [80, 40], 40), &mut rng).unwrap();
    let start = Network::glorot(Topology::Critic, critic_layers(7, [80, 40], 40), &mut rng).unwrap();
    let tau = 0.001;
    let k = 500;
    let mut target = start.clone();
    for _ in 0..k {
        soft_update(&mut target, &online, tau).unwrap();
    }
    let decay = (1.0 - tau).powi(k);
    for ((t, o), s) in target.params.iter().zip(&online.params).zip(&start.params) {
        let expected = o + decay * (s - o);
        assert!((t - expected).abs() < 1e-9);
    }
}

#[test]
fn soft_update_rejects_mismatched_networks() {
    let mut a = Network::zeros(Topology::Chain, actor_layers(7, 40)).unwrap();
    let b = Network::zeros(Topology::Chain, actor_layers(7, 30)).unwrap();
    assert!(soft_update(&mut a, &b, 0.5).is_err());
}

fn transition(i: usize) -> Transition {
    Transition {
        state: vec![i as f64; 2],
        action: 0.0,
        reward: i as f64,
        next_state: vec![i as f64 + 1.0; 2],
        done: false,
    }
}

#[test]
fn replay_sampling_is_uniform() {
    let n = 100;
    let batch = 16;
    let draws = 20_000;
    let mut buffer = ReplayBuffer::new(n, 2);
    for i in 0..n {
        buffer.push(&transition(i));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut counts = vec![0u64; n];
    for _ in 0..draws {
        let idx = buffer.sample_indices(batch, &mut rng);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), batch, "indices within a batch must be distinct");
        for i in idx {
            counts[i] += 1;
        }
    }
    // each index appears in a batch with probability b/N, independently per batch
    let p = batch as f64 / n as f64;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    let within = counts.iter().filter(|&&c| (c as f64 - mean).abs() <= 3.0 * sd).count();
    assert!(within >= 98, "{within} of {n} counts within 3 sigma");
    assert!(counts.iter().all(|&c| (c as f64 - mean).abs() <= 4.5 * sd));
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2) / (sd * sd)).sum();
    let dof = (n - 1) as f64;
    assert!((chi2 - dof).abs() <= 3.0 * (2.0 * dof).sqrt(), "chi-square {chi2}");
}

#[test]
fn replay_overwrites_the_oldest_entry() {
    let mut buffer = ReplayBuffer::new(3, 2);
    for i in 0..5 {
        buffer.push(&transition(i));
    }
    assert_eq!(buffer.len(), 3);
    let mut rewards: Vec<f64> = (0..3).map(|i| buffer.get(i).reward).collect();
    rewards.sort_by(f64::total_cmp);
    assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
}

#[test]
fn exploration_noise_has_the_configured_spread() {
    let mut noise = NoiseProcess::new(0.001, 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let target = 0.001f64.sqrt();
    assert!((var.sqrt() / target - 1.0).abs() < 0.05, "std {}", var.sqrt());
    assert!(mean.abs() < 5.0 * target / (n as f64).sqrt());
    assert!(noise.variance < 0.001 && noise.variance > 0.001 * (1.0 - 1e-3));
}

#[test]
fn actor_step_along_the_gradient_raises_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut raised = 0;
    for _ in 0..50 {
        let mut actor = Network::glorot(Topology::Chain, actor_layers(7, 40), &mut rng).unwrap();
        let critic = Network::glorot(Topology::Critic, critic_layers(7, [80, 40], 40), &mut rng).unwrap();
        let states: Vec<Vec<f64>> = (0..64).map(|_| (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let views: Vec<&[f64]> = states.iter().map(|s| s.as_slice()).collect();
        let (before, grad) = actor_objective_and_grad(&actor, &critic, &views);
        let sgd = OptimizerConfig { kind: OptimizerKind::Sgd, l2: 0.0, ..OptimizerConfig::default() };
        let mut opt = Optimizer::new(sgd, 1e-3, actor.weight_mask());
        let ascent: Vec<f64> = grad.iter().map(|g| -g).collect();
        opt.step(&mut actor.params, &ascent);
        let (after, _) = actor_objective_and_grad(&actor, &critic, &views);
        if grad.iter().any(|g| *g != 0.0) {
            assert!(after > before, "objective fell from {before} to {after}");
            raised += 1;
        }
    }
    assert!(raised > 40);
}

fn small_agent_config() -> DdpgConfig {
    DdpgConfig { warmup: 200, buffer_capacity: 10_000, ..DdpgConfig::default() }
}

/// Runs `steps` training steps across seeded episodes; returns the rewards.
fn train_steps(agent: &mut DdpgAgent, env: &mut ProtectionEnv, rng: &mut ChaCha8Rng, steps: usize) -> Vec<f64> {
    let mut rewards = Vec::new();
    let (mut obs, _) = env.reset_random(rng).unwrap();
    for _ in 0..steps {
        let a = agent.select_action(&obs, true);
        let r = env.step(env.config.apply_action(a)).unwrap();
        agent.remember(&Transition {
            state: obs.to_vec(),
            action: a,
            reward: r.reward,
            next_state: r.observation.to_vec(),
            done: r.terminated.is_some(),
        });
        if agent.ready() {
            agent.update().unwrap();
        }
        rewards.push(r.reward);
        obs = if r.done() { env.reset_random(rng).unwrap().0 } else { r.observation };
    }
    rewards
}

fn fresh(seed: u64) -> (DdpgAgent, ProtectionEnv, ChaCha8Rng) {
    let agent = DdpgAgent::new(small_agent_config(), seed).unwrap();
    let env = ProtectionEnv::new(EnvConfig::default(), Arc::new(Airframe::default()), ProtectionMode::Rl).unwrap();
    (agent, env, env_rng(seed))
}

#[test]
fn seeded_training_is_bit_deterministic() {
    let (mut a1, mut e1, mut r1) = fresh(5);
    let (mut a2, mut e2, mut r2) = fresh(5);
    let rewards1 = train_steps(&mut a1, &mut e1, &mut r1, 1000);
    let rewards2 = train_steps(&mut a2, &mut e2, &mut r2, 1000);
    assert_eq!(a1.updates, 801);
    assert_eq!(rewards1, rewards2);
    assert_eq!(a1.parameter_hash(), a2.parameter_hash());

    let (mut a3, mut e3, mut r3) = fresh(6);
    train_steps(&mut a3, &mut e3, &mut r3, 1000);
    assert_ne!(a1.parameter_hash(), a3.parameter_hash());
}

#[test]
fn resumed_checkpoint_continues_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent.ckpt");
    let (mut agent, mut env, mut rng) = fresh(7);
    train_steps(&mut agent, &mut env, &mut rng, 400);
    agent.save(&path).unwrap();

    let mut resumed = DdpgAgent::load(&path).unwrap();
    assert_eq!(resumed.parameter_hash(), agent.parameter_hash());
    assert_eq!(resumed.updates, agent.updates);
    // the replay buffer is not part of the checkpoint; hand over the same contents
    resumed.replay = agent.replay.clone();

    let mut env2 = env.clone();
    let mut rng2 = rng.clone();
    let before = train_steps(&mut agent, &mut env, &mut rng, 300);
    let after = train_steps(&mut resumed, &mut env2, &mut rng2, 300);
    assert_eq!(before, after);
    assert_eq!(agent.parameter_hash(), resumed.parameter_hash());
}

#[test]
fn training_episode_reports_consistent_metrics() {
    let (mut agent, mut env, mut rng) = fresh(8);
    let m = train_episode(&mut env, &mut agent, &mut rng, 1, 0.0).unwrap();
    assert!(m.steps > 0 && m.steps <= 1000);
    assert_eq!(m.termination == "time_limit", m.steps == 1000);
    assert!(m.reward.is_finite());
    assert_eq!(agent.updates as usize, m.steps.saturating_sub(199));
}
