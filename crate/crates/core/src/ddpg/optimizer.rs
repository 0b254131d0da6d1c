use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 penalty on weights (not biases), added to the gradient.
    pub l2: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { kind: OptimizerKind::Adam, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, l2: 1e-4 }
    }
}

/// Minimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub learn_rate: f64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub steps: u64,
    weight_mask: Vec<bool>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, learn_rate: f64, weight_mask: Vec<bool>) -> Self {
        let n = weight_mask.len();
        Self { config, learn_rate, first_moment: vec![0.0; n], second_moment: vec![0.0; n], steps: 0, weight_mask }
    }

    /// One descent step along `grad` (gradient of the quantity to minimize).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.steps += 1;
        let c = self.config;
        let lr = self.learn_rate;
        match c.kind {
            OptimizerKind::Sgd => {
                for ((p, g), w) in params.iter_mut().zip(grad).zip(&self.weight_mask) {
                    let g = if *w { g + c.l2 * *p } else { *g };
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps as i32;
                let bc1 = 1.0 - c.beta1.powi(t);
                let bc2 = 1.0 - c.beta2.powi(t);
                for i in 0..params.len() {
                    let g = if self.weight_mask[i] { grad[i] + c.l2 * params[i] } else { grad[i] };
                    let m = &mut self.first_moment[i];
                    let v = &mut self.second_moment[i];
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    params[i] -= lr * (*m / bc1) / ((*v / bc2).sqrt() + c.epsilon);
                }
            }
        }
    }

    pub fn weight_mask(&self) -> &[bool] {
        &self.weight_mask
    }
}
