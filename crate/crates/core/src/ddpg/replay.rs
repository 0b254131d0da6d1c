use rand::Rng;

/// One transition. Observations are normalized, the action is in [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: f64,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// True only for terminal states (no bootstrap); time-limit ends are not terminal.
    pub done: bool,
}

/// Fixed-capacity ring buffer with flat storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    states: Vec<f64>,
    next_states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    len: usize,
    head: usize,
}

/// Borrowed view of one stored transition.
#[derive(Debug, Clone, Copy)]
pub struct TransitionRef<'a> {
    pub state: &'a [f64],
    pub action: f64,
    pub reward: f64,
    pub next_state: &'a [f64],
    pub done: bool,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            states: Vec::new(),
            next_states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            len: 0,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) {
        assert_eq!(t.state.len(), self.obs_dim);
        assert_eq!(t.next_state.len(), self.obs_dim);
        let d = self.obs_dim;
        if self.len < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.next_states.extend_from_slice(&t.next_state);
            self.actions.push(t.action);
            self.rewards.push(t.reward);
            self.dones.push(t.done);
            self.len += 1;
        } else {
            let i = self.head;
            self.states[i * d..(i + 1) * d].copy_from_slice(&t.state);
            self.next_states[i * d..(i + 1) * d].copy_from_slice(&t.next_state);
            self.actions[i] = t.action;
            self.rewards[i] = t.reward;
            self.dones[i] = t.done;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> TransitionRef<'_> {
        let d = self.obs_dim;
        TransitionRef {
            state: &self.states[i * d..(i + 1) * d],
            action: self.actions[i],
            reward: self.rewards[i],
            next_state: &self.next_states[i * d..(i + 1) * d],
            done: self.dones[i],
        }
    }

    /// Distinct indices, uniform over the stored transitions.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        rand::seq::index::sample(rng, self.len, batch.min(self.len)).into_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(x: f64) -> Transition {
        Transition { state: vec![x], action: 0.0, reward: x, next_state: vec![x], done: false }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3, 1);
        for i in 0..5 {
            b.push(&t(i as f64));
        }
        assert_eq!(b.len(), 3);
        let mut rewards: Vec<f64> = (0..3).map(|i| b.get(i).reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn batch_indices_distinct() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut b = ReplayBuffer::new(100, 1);
        for i in 0..100 {
            b.push(&t(i as f64));
        }
        let mut idx = b.sample_indices(64, &mut rng);
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 64);
    }
}
