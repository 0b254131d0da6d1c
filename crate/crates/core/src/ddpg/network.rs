//! Dense networks stored as one flat parameter vector, with hand-written
//! forward and backward passes for the actor and critic topologies.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Linear),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerShape {
    pub const fn new(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { inputs, outputs, activation }
    }

    pub fn param_count(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("network shape mismatch: {0}")]
    Shape(String),
}

/// Which wiring the layers follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Plain chain of layers.
    Chain,
    /// Layers: observation hidden, observation out, action path, head. The
    /// observation and action paths are summed and rectified before the head.
    Critic,
}

/// Weights (row-major, outputs × inputs) followed by biases, layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub topology: Topology,
    pub layers: Vec<LayerShape>,
    pub params: Vec<f64>,
    offsets: Vec<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// y = W x + b, no activation.
fn affine(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for (o, yo) in y.iter_mut().enumerate() {
        *yo = dot(&w[o * n..(o + 1) * n], x) + b[o];
    }
}

impl Network {
    pub fn zeros(topology: Topology, layers: Vec<LayerShape>) -> Result<Self, NetworkError> {
        Self::validate_shapes(topology, &layers)?;
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for l in &layers {
            offsets.push(total);
            total += l.param_count();
        }
        Ok(Self { topology, layers, params: vec![0.0; total], offsets })
    }

    pub fn from_params(topology: Topology, layers: Vec<LayerShape>, params: Vec<f64>) -> Result<Self, NetworkError> {
        let mut net = Self::zeros(topology, layers)?;
        if params.len() != net.params.len() {
            return Err(NetworkError::Shape(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(topology: Topology, layers: Vec<LayerShape>, rng: &mut R) -> Result<Self, NetworkError> {
        let mut net = Self::zeros(topology, layers)?;
        for l in 0..net.layers.len() {
            let shape = net.layers[l];
            let limit = (6.0 / (shape.inputs + shape.outputs) as f64).sqrt();
            for w in net.weights_mut(l) {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(net)
    }

    fn validate_shapes(topology: Topology, layers: &[LayerShape]) -> Result<(), NetworkError> {
        let err = |m: String| Err(NetworkError::Shape(m));
        if layers.iter().any(|l| l.inputs == 0 || l.outputs == 0) {
            return err("zero-width layer".into());
        }
        match topology {
            Topology::Chain => {
                if layers.is_empty() {
                    return err("chain needs at least one layer".into());
                }
                for (i, w) in layers.windows(2).enumerate() {
                    if w[0].outputs != w[1].inputs {
                        return err(format!("layer {} outputs {} but layer {} takes {}", i, w[0].outputs, i + 1, w[1].inputs));
                    }
                }
            }
            Topology::Critic => {
                let [hidden, obs_out, action, head] = layers else {
                    return err(format!("critic needs 4 layers, got {}", layers.len()));
                };
                if hidden.outputs != obs_out.inputs {
                    return err("observation path does not chain".into());
                }
                if action.outputs != obs_out.outputs || head.inputs != obs_out.outputs {
                    return err("observation and action paths must have equal width feeding the head".into());
                }
                if head.outputs != 1 || action.inputs != 1 {
                    return err("critic takes a scalar action and returns a scalar".into());
                }
                if [obs_out, action, head].iter().any(|l| l.activation != Activation::Linear) {
                    return err("critic path outputs and head must be linear".into());
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn same_shape(&self, other: &Network) -> bool {
        self.topology == other.topology && self.layers == other.layers
    }

    fn split(&self, l: usize) -> (usize, usize, usize) {
        let s = self.layers[l];
        let w = self.offsets[l];
        (w, w + s.inputs * s.outputs, w + s.param_count())
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        let (w, b, _) = self.split(l);
        &self.params[w..b]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let (w, b, _) = self.split(l);
        &mut self.params[w..b]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let (_, b, e) = self.split(l);
        &self.params[b..e]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let (_, b, e) = self.split(l);
        &mut self.params[b..e]
    }

    /// Mask with 1 on weight entries and 0 on biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for l in 0..self.layers.len() {
            let (w, b, _) = self.split(l);
            mask[w..b].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Activations kept from a chain forward pass.
#[derive(Debug, Clone, Default)]
pub struct ChainTrace {
    /// outputs[0] is the input, outputs[l+1] the post-activation of layer l.
    pub outputs: Vec<Vec<f64>>,
}

impl Network {
    pub fn chain_forward(&self, input: &[f64], trace: &mut ChainTrace) -> f64 {
        debug_assert_eq!(self.topology, Topology::Chain);
        trace.outputs.resize(self.layers.len() + 1, Vec::new());
        trace.outputs[0].clear();
        trace.outputs[0].extend_from_slice(input);
        for (l, shape) in self.layers.iter().enumerate() {
            let (head, tail) = trace.outputs.split_at_mut(l + 1);
            let y = &mut tail[0];
            y.resize(shape.outputs, 0.0);
            affine(self.weights(l), self.bias(l), &head[l], y);
            y.iter_mut().for_each(|v| *v = shape.activation.apply(*v));
        }
        trace.outputs[self.layers.len()][0]
    }

    /// Accumulates d(out)/dθ · upstream into `grad`; returns d(out)/d(input).
    pub fn chain_backward(&self, trace: &ChainTrace, upstream: f64, grad: &mut [f64]) -> Vec<f64> {
        let mut delta = vec![upstream];
        for l in (0..self.layers.len()).rev() {
            let shape = self.layers[l];
            let out = &trace.outputs[l + 1];
            let x = &trace.outputs[l];
            for (o, d) in delta.iter_mut().enumerate() {
                *d *= shape.activation.derivative_from_output(out[o]);
            }
            let (w0, b0, _) = self.split(l);
            let n = shape.inputs;
            let mut next = vec![0.0; n];
            let w = self.weights(l);
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad[b0 + o] += d;
                let gw = &mut grad[w0 + o * n..w0 + (o + 1) * n];
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g += d * xi;
                }
                for (nx, wi) in next.iter_mut().zip(&w[o * n..(o + 1) * n]) {
                    *nx += d * wi;
                }
            }
            delta = next;
        }
        delta
    }

    pub fn actor_output(&self, input: &[f64]) -> f64 {
        let mut trace = ChainTrace::default();
        self.chain_forward(input, &mut trace)
    }
}

/// Activations kept from a critic forward pass.
#[derive(Debug, Clone, Default)]
pub struct CriticTrace {
    pub obs: Vec<f64>,
    pub action: f64,
    pub hidden: Vec<f64>,
    pub merged: Vec<f64>,
    pub q: f64,
}

impl Network {
    pub fn critic_forward(&self, obs: &[f64], action: f64, trace: &mut CriticTrace) -> f64 {
        debug_assert_eq!(self.topology, Topology::Critic);
        let [l0, l1, l2, _] = [self.layers[0], self.layers[1], self.layers[2], self.layers[3]];
        trace.obs.clear();
        trace.obs.extend_from_slice(obs);
        trace.action = action;
        trace.hidden.resize(l0.outputs, 0.0);
        affine(self.weights(0), self.bias(0), obs, &mut trace.hidden);
        trace.hidden.iter_mut().for_each(|v| *v = l0.activation.apply(*v));
        trace.merged.resize(l1.outputs, 0.0);
        affine(self.weights(1), self.bias(1), &trace.hidden, &mut trace.merged);
        let (wa, ba) = (self.weights(2), self.bias(2));
        for (o, m) in trace.merged.iter_mut().enumerate() {
            let mut path = l1.activation.apply(*m);
            path += l2.activation.apply(wa[o] * action + ba[o]);
            *m = path.max(0.0);
        }
        let q = dot(self.weights(3), &trace.merged) + self.bias(3)[0];
        trace.q = self.layers[3].activation.apply(q);
        trace.q
    }

    pub fn critic_value(&self, obs: &[f64], action: f64) -> f64 {
        let mut trace = CriticTrace::default();
        self.critic_forward(obs, action, &mut trace)
    }

    /// Accumulates upstream·dQ/dθ into `grad` (if given); returns dQ/da · upstream.
    ///
    /// Only linear path outputs are supported for the observation-out, action
    /// and head layers, which is what the critic constructor builds.
    pub fn critic_backward(&self, trace: &CriticTrace, upstream: f64, grad: Option<&mut [f64]>) -> f64 {
        let [l0, l1, _, _] = [self.layers[0], self.layers[1], self.layers[2], self.layers[3]];
        let w_head = self.weights(3);
        let wa = self.weights(2);
        let w1 = self.weights(1);
        let mut dmerged = vec![0.0; l1.outputs];
        let mut da = 0.0;
        for o in 0..l1.outputs {
            if trace.merged[o] > 0.0 {
                dmerged[o] = upstream * w_head[o];
                da += dmerged[o] * wa[o];
            }
        }
        let Some(grad) = grad else {
            return da;
        };
        let (wh0, bh0, _) = self.split(3);
        for o in 0..l1.outputs {
            grad[wh0 + o] += upstream * trace.merged[o];
        }
        grad[bh0] += upstream;
        let (wa0, ba0, _) = self.split(2);
        for (o, &d) in dmerged.iter().enumerate() {
            grad[wa0 + o] += d * trace.action;
            grad[ba0 + o] += d;
        }
        let (w10, b10, _) = self.split(1);
        let n1 = l1.inputs;
        let mut dhidden = vec![0.0; n1];
        for (o, &d) in dmerged.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad[b10 + o] += d;
            let gw = &mut grad[w10 + o * n1..w10 + (o + 1) * n1];
            for (g, h) in gw.iter_mut().zip(&trace.hidden) {
                *g += d * h;
            }
            for (dh, w) in dhidden.iter_mut().zip(&w1[o * n1..(o + 1) * n1]) {
                *dh += d * w;
            }
        }
        let (w00, b00, _) = self.split(0);
        let n0 = l0.inputs;
        for (o, dh) in dhidden.iter().enumerate() {
            let d = dh * l0.activation.derivative_from_output(trace.hidden[o]);
            if d == 0.0 {
                continue;
            }
            grad[b00 + o] += d;
            let gw = &mut grad[w00 + o * n0..w00 + (o + 1) * n0];
            for (g, s) in gw.iter_mut().zip(&trace.obs) {
                *g += d * s;
            }
        }
        da
    }
}

pub fn actor_layers(obs_dim: usize, hidden: usize) -> Vec<LayerShape> {
    vec![LayerShape::new(obs_dim, hidden, Activation::Relu), LayerShape::new(hidden, 1, Activation::Tanh)]
}

pub fn critic_layers(obs_dim: usize, obs_hidden: [usize; 2], action_hidden: usize) -> Vec<LayerShape> {
    vec![
        LayerShape::new(obs_dim, obs_hidden[0], Activation::Relu),
        LayerShape::new(obs_hidden[0], obs_hidden[1], Activation::Linear),
        LayerShape::new(1, action_hidden, Activation::Linear),
        LayerShape::new(obs_hidden[1], 1, Activation::Linear),
    ]
}

/// θ′ ← τθ + (1 − τ)θ′.
pub fn soft_update(target: &mut Network, online: &Network, tau: f64) -> Result<(), NetworkError> {
    if !target.same_shape(online) {
        return Err(NetworkError::Shape("target and online networks differ".into()));
    }
    for (t, o) in target.params.iter_mut().zip(&online.params) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_networks_output_zero() {
        let actor = Network::zeros(Topology::Chain, actor_layers(7, 40)).unwrap();
        assert_eq!(actor.actor_output(&[0.3; 7]), 0.0);
        let critic = Network::zeros(Topology::Critic, critic_layers(7, [80, 40], 40)).unwrap();
        assert_eq!(critic.critic_value(&[0.3; 7], 0.5), 0.0);
    }

    #[test]
    fn tiny_actor_by_hand() {
        // 2 inputs → 1 relu unit → tanh output
        let mut net = Network::zeros(Topology::Chain, actor_layers(2, 1)).unwrap();
        net.params.copy_from_slice(&[0.5, -1.0, 0.1, 2.0, -0.3]);
        let h: f64 = (0.5 * 1.0 - 1.0 * -0.4 + 0.1_f64).max(0.0);
        assert!((net.actor_output(&[1.0, -0.4]) - (2.0 * h - 0.3).tanh()).abs() < 1e-15);
    }

    #[test]
    fn tiny_critic_by_hand() {
        let mut net = Network::zeros(Topology::Critic, critic_layers(1, [1, 1], 1)).unwrap();
        // hidden: w=2 b=0.5 relu; obs out: w=-1 b=0.2; action: w=3 b=0.1; head: w=1.5 b=-0.4
        net.params.copy_from_slice(&[2.0, 0.5, -1.0, 0.2, 3.0, 0.1, 1.5, -0.4]);
        let (s, a) = (0.25, -0.1);
        let h = (2.0 * s + 0.5f64).max(0.0);
        let m = (-h + 0.2 + 3.0 * a + 0.1f64).max(0.0);
        let q = 1.5 * m - 0.4;
        assert!((net.critic_value(&[s], a) - q).abs() < 1e-15);
        let (s, a) = (0.25, 0.3);
        let m = (-(2.0 * s + 0.5f64).max(0.0) + 0.2 + 3.0 * a + 0.1f64).max(0.0);
        assert!((net.critic_value(&[s], a) - (1.5 * m - 0.4)).abs() < 1e-15);
    }

    #[test]
    fn critic_ignores_action_without_action_path() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut net = Network::glorot(Topology::Critic, critic_layers(7, [80, 40], 40), &mut rng).unwrap();
        net.weights_mut(2).iter_mut().for_each(|w| *w = 0.0);
        net.bias_mut(2).iter_mut().for_each(|w| *w = 0.0);
        let s = [0.1, -0.2, 0.3, 0.0, 0.5, -0.6, 0.7];
        assert_eq!(net.critic_value(&s, -0.9), net.critic_value(&s, 0.8));
    }

    #[test]
    fn shape_validation() {
        let bad = vec![LayerShape::new(7, 40, Activation::Relu), LayerShape::new(30, 1, Activation::Tanh)];
        assert!(Network::zeros(Topology::Chain, bad).is_err());
        let a = Network::zeros(Topology::Chain, actor_layers(7, 40)).unwrap();
        let mut b = Network::zeros(Topology::Chain, actor_layers(7, 20)).unwrap();
        assert!(soft_update(&mut b, &a, 0.5).is_err());
    }

    #[test]
    fn soft_update_examples() {
        let online = Network::from_params(Topology::Chain, actor_layers(1, 1), vec![2.0; 4]).unwrap();
        let mut target = Network::zeros(Topology::Chain, actor_layers(1, 1)).unwrap();
        soft_update(&mut target, &online, 0.0).unwrap();
        assert_eq!(target.params, vec![0.0; 4]);
        soft_update(&mut target, &online, 0.5).unwrap();
        assert_eq!(target.params, vec![1.0; 4]);
        soft_update(&mut target, &online, 1.0).unwrap();
        assert_eq!(target.params, online.params);
    }
}
