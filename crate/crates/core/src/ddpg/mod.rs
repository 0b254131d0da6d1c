//! Deep deterministic policy gradient: actor/critic networks, replay,
//! exploration noise, the update rules and checkpoints.

mod checkpoint;
mod network;
mod noise;
mod optimizer;
mod replay;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use network::{
    actor_layers, critic_layers, soft_update, Activation, ChainTrace, CriticTrace, LayerShape, Network, NetworkError,
    Topology,
};
pub use noise::NoiseProcess;
pub use optimizer::{Optimizer, OptimizerConfig, OptimizerKind};
pub use replay::{ReplayBuffer, Transition, TransitionRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpgConfig {
    pub obs_dim: usize,
    pub actor_hidden: usize,
    pub critic_obs_hidden: [usize; 2],
    pub critic_action_hidden: usize,
    pub gamma: f64,
    /// Target smoothing factor.
    pub tau: f64,
    pub actor_learn_rate: f64,
    pub critic_learn_rate: f64,
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub noise_variance: f64,
    pub noise_decay: f64,
    pub noise_min_variance: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            obs_dim: 7,
            actor_hidden: 40,
            critic_obs_hidden: [80, 40],
            critic_action_hidden: 40,
            gamma: 0.99,
            tau: 0.001,
            actor_learn_rate: 1e-5,
            critic_learn_rate: 1e-4,
            optimizer: OptimizerConfig::default(),
            batch_size: 64,
            buffer_capacity: 1_000_000,
            warmup: 1000,
            noise_variance: 0.001,
            noise_decay: 1e-9,
            noise_min_variance: 0.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DdpgError {
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("non-finite {what} after {updates} updates")]
    Diverged { what: &'static str, updates: u64 },
    #[error("observation has {got} elements, agent expects {expected}")]
    ObservationShape { got: usize, expected: usize },
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<(), DdpgError> {
        let bad = |m: &str| Err(DdpgError::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must be in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 0 < batch_size <= buffer_capacity");
        }
        if !(self.actor_learn_rate >= 0.0 && self.critic_learn_rate >= 0.0) {
            return bad("learn rates must be nonnegative");
        }
        if !(self.noise_variance >= 0.0 && (0.0..=1.0).contains(&self.noise_decay)) {
            return bad("noise variance must be >= 0 and decay in [0, 1]");
        }
        Ok(())
    }
}

/// y = r + γ Q′(s′, π′(s′)), bootstrap dropped on terminal transitions.
pub fn td_target(reward: f64, done: bool, gamma: f64, next_q: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * next_q
    }
}

/// Targets and TD errors for a batch.
pub fn td_targets(
    batch: &[TransitionRef<'_>],
    actor_target: &Network,
    critic_target: &Network,
    critic: &Network,
    gamma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut ys = Vec::with_capacity(batch.len());
    let mut deltas = Vec::with_capacity(batch.len());
    let mut chain = ChainTrace::default();
    let mut trace = CriticTrace::default();
    for t in batch {
        let y = if t.done {
            t.reward
        } else {
            let a_next = actor_target.chain_forward(t.next_state, &mut chain);
            td_target(t.reward, false, gamma, critic_target.critic_forward(t.next_state, a_next, &mut trace))
        };
        let q = critic.critic_forward(t.state, t.action, &mut trace);
        ys.push(y);
        deltas.push(y - q);
    }
    (ys, deltas)
}

/// L = (1/2M) Σ (y − Q(s, a))² and its gradient with respect to the critic parameters.
pub fn critic_loss_and_grad(critic: &Network, batch: &[TransitionRef<'_>], targets: &[f64]) -> (f64, Vec<f64>) {
    let m = batch.len() as f64;
    let mut grad = vec![0.0; critic.params.len()];
    let mut trace = CriticTrace::default();
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        let q = critic.critic_forward(t.state, t.action, &mut trace);
        let delta = y - q;
        loss += delta * delta;
        critic.critic_backward(&trace, -delta / m, Some(&mut grad));
    }
    (loss / (2.0 * m), grad)
}

/// J = (1/M) Σ Q(s, π(s)) and ∇_θπ J via the chain rule through the critic.
pub fn actor_objective_and_grad(actor: &Network, critic: &Network, states: &[&[f64]]) -> (f64, Vec<f64>) {
    let m = states.len() as f64;
    let mut grad = vec![0.0; actor.params.len()];
    let mut chain = ChainTrace::default();
    let mut trace = CriticTrace::default();
    let mut objective = 0.0;
    for s in states {
        let a = actor.chain_forward(s, &mut chain);
        objective += critic.critic_forward(s, a, &mut trace);
        let dq_da = critic.critic_backward(&trace, 1.0, None);
        actor.chain_backward(&chain, dq_da / m, &mut grad);
    }
    (objective / m, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub mean_q: f64,
}

/// The full learner: online and target networks, optimizers, replay and noise.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub config: DdpgConfig,
    pub actor: Network,
    pub critic: Network,
    pub actor_target: Network,
    pub critic_target: Network,
    pub actor_optimizer: Optimizer,
    pub critic_optimizer: Optimizer,
    pub noise: NoiseProcess,
    pub replay: ReplayBuffer,
    pub rng: ChaCha8Rng,
    /// Observation scaling the agent was trained with: (x − offset)/scale.
    pub obs_offset: Vec<f64>,
    pub obs_scale: Vec<f64>,
    pub updates: u64,
}

impl DdpgAgent {
    pub fn new(config: DdpgConfig, seed: u64) -> Result<Self, DdpgError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Network::glorot(Topology::Chain, actor_layers(config.obs_dim, config.actor_hidden), &mut rng)?;
        let critic = Network::glorot(
            Topology::Critic,
            critic_layers(config.obs_dim, config.critic_obs_hidden, config.critic_action_hidden),
            &mut rng,
        )?;
        let mut noise = NoiseProcess::new(config.noise_variance, config.noise_decay);
        noise.min_variance = config.noise_min_variance;
        Ok(Self {
            actor_optimizer: Optimizer::new(config.optimizer, config.actor_learn_rate, actor.weight_mask()),
            critic_optimizer: Optimizer::new(config.optimizer, config.critic_learn_rate, critic.weight_mask()),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            noise,
            replay: ReplayBuffer::new(config.buffer_capacity, config.obs_dim),
            rng,
            obs_offset: vec![0.0; config.obs_dim],
            obs_scale: vec![1.0; config.obs_dim],
            updates: 0,
            config,
        })
    }

    pub fn policy(&self, state: &[f64]) -> f64 {
        self.actor.actor_output(state)
    }

    /// π(s), plus Gaussian noise when exploring, clamped to [−1, 1].
    pub fn select_action(&mut self, state: &[f64], explore: bool) -> f64 {
        let a = self.policy(state);
        if !explore {
            return a;
        }
        (a + self.noise.sample(&mut self.rng)).clamp(-1.0, 1.0)
    }

    pub fn remember(&mut self, t: &Transition) {
        self.replay.push(t);
    }

    pub fn ready(&self) -> bool {
        self.replay.len() >= self.config.warmup.max(self.config.batch_size)
    }

    /// One critic step, one actor step, then both target blends.
    pub fn update(&mut self) -> Result<UpdateStats, DdpgError> {
        let idx = self.replay.sample_indices(self.config.batch_size, &mut self.rng);
        let batch: Vec<TransitionRef<'_>> = idx.iter().map(|&i| self.replay.get(i)).collect();
        let (ys, _) = td_targets(&batch, &self.actor_target, &self.critic_target, &self.critic, self.config.gamma);
        let (loss, critic_grad) = critic_loss_and_grad(&self.critic, &batch, &ys);
        if !loss.is_finite() || !critic_grad.iter().all(|g| g.is_finite()) {
            return Err(DdpgError::Diverged { what: "critic loss", updates: self.updates });
        }
        self.critic_optimizer.step(&mut self.critic.params, &critic_grad);

        let states: Vec<&[f64]> = batch.iter().map(|t| t.state).collect();
        let (mean_q, mut actor_grad) = actor_objective_and_grad(&self.actor, &self.critic, &states);
        if !mean_q.is_finite() || !actor_grad.iter().all(|g| g.is_finite()) {
            return Err(DdpgError::Diverged { what: "actor gradient", updates: self.updates });
        }
        // Ascent on J is descent on −J.
        actor_grad.iter_mut().for_each(|g| *g = -*g);
        self.actor_optimizer.step(&mut self.actor.params, &actor_grad);

        soft_update(&mut self.critic_target, &self.critic, self.config.tau)?;
        soft_update(&mut self.actor_target, &self.actor, self.config.tau)?;
        self.updates += 1;
        Ok(UpdateStats { critic_loss: loss, mean_q })
    }

    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.obs_offset).zip(&self.obs_scale).map(|((x, o), s)| (x - o) / s).collect()
    }

    /// Deterministic fingerprint of every learnable parameter (online and target).
    pub fn parameter_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for net in [&self.actor, &self.critic, &self.actor_target, &self.critic_target] {
            for p in &net.params {
                h.update(p.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
