//! Per-step reward terms, violation timers and the terminal penalty.

use serde::{Deserialize, Serialize};

use crate::protection::EnvelopeLimits;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Constant per-step survival reward.
    pub survival: f64,
    /// Weight on the tracking cost (negative: the cost is positive).
    pub tracking_weight: f64,
    /// Weights on the exceedance costs (positive: the costs are already ≤ 0).
    pub alpha_weight: f64,
    pub nz_weight: f64,
    pub q_weight: f64,
    /// Guards the tracking-cost division, rad/s.
    pub epsilon: f64,
    /// Upper bound on the tracking cost inside the total reward; near-zero
    /// commands otherwise make it unbounded.
    pub tracking_cap: f64,
    /// Fraction of the α limit at which the α cost activates.
    pub alpha_threshold: f64,
    /// Penalty for sustained multi-variable exceedance.
    pub sustained_penalty: f64,
    /// Penalty for a gross single-variable exceedance.
    pub gross_penalty: f64,
    /// Continuous exceedance that triggers the sustained penalty, s.
    pub sustained_window: f64,
    /// Variables simultaneously over the window for the sustained penalty.
    pub sustained_count: usize,
    /// Relative exceedance that triggers the gross penalty.
    pub gross_fraction: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            survival: 0.1,
            tracking_weight: -1.0,
            alpha_weight: 10.0,
            nz_weight: 10.0,
            q_weight: 10.0,
            epsilon: 1e-6,
            tracking_cap: 1.0,
            alpha_threshold: 0.9,
            sustained_penalty: -400.0,
            gross_penalty: -600.0,
            sustained_window: 2.0,
            sustained_count: 2,
            gross_fraction: 0.5,
        }
    }
}

/// ((|q| − |q_cmd|)/(|q_cmd| + ε))², rates in rad/s.
pub fn r_tracking(q: f64, q_cmd: f64, epsilon: f64) -> f64 {
    let e = (q.abs() - q_cmd.abs()) / (q_cmd.abs() + epsilon);
    e * e
}

/// Zero below `threshold`·limit, then −((|α| − t·lim)/(t·lim))².
pub fn r_alpha(alpha: f64, alpha_limit: f64, threshold: f64) -> f64 {
    let start = threshold * alpha_limit.abs();
    if alpha.abs() >= start {
        let e = (alpha.abs() - start) / start;
        -e * e
    } else {
        0.0
    }
}

fn exceedance_cost(value: f64, limit: f64) -> f64 {
    let lim = limit.abs();
    if value.abs() >= lim {
        let e = (value.abs() - lim) / lim;
        -e * e
    } else {
        0.0
    }
}

pub fn r_nz(nz: f64, nz_limit: f64) -> f64 {
    exceedance_cost(nz, nz_limit)
}

pub fn r_q(q: f64, q_limit: f64) -> f64 {
    exceedance_cost(q, q_limit)
}

/// Protected variables in a fixed order.
pub const ALPHA: usize = 0;
pub const NZ: usize = 1;
pub const PITCH_RATE: usize = 2;
pub const VARIABLE_NAMES: [&str; 3] = ["alpha", "nz", "q"];

/// Protected quantities of one sample: α (deg), n_z (g), q (deg/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub alpha_deg: f64,
    pub nz: f64,
    pub q_deg: f64,
}

impl EnvelopeSample {
    pub fn values(&self) -> [f64; 3] {
        [self.alpha_deg, self.nz, self.q_deg]
    }

    /// Side-dependent limit magnitudes for each variable.
    pub fn limits(&self, limits: &EnvelopeLimits) -> [f64; 3] {
        [
            limits.alpha_limit(self.alpha_deg).abs(),
            limits.nz_limit(self.nz).abs(),
            limits.q_limit(self.q_deg).abs(),
        ]
    }

    /// |x|/|limit| − 1 per variable; positive means beyond the limit.
    pub fn exceedance(&self, limits: &EnvelopeLimits) -> [f64; 3] {
        let v = self.values();
        let l = self.limits(limits);
        [0, 1, 2].map(|i| v[i].abs() / l[i] - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardTerms {
    pub survival: f64,
    pub tracking: f64,
    pub alpha: f64,
    pub nz: f64,
    pub q: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Which terminal condition fired, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Sustained,
    Gross,
    /// Simulation integrity failure (non-finite state, kinematic singularity).
    Integrity,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Sustained => "sustained_exceedance",
            Termination::Gross => "gross_exceedance",
            Termination::Integrity => "integrity",
        }
    }
}

/// Consecutive-step exceedance counters per protected variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ViolationTimers {
    pub steps: [u32; 3],
}

impl ViolationTimers {
    /// Advances each timer on exceedance, resets it exactly when the variable is back inside.
    pub fn update(&mut self, beyond: [bool; 3]) {
        for (t, b) in self.steps.iter_mut().zip(beyond) {
            *t = if b { *t + 1 } else { 0 };
        }
    }

    pub fn seconds(&self, dt: f64) -> [f64; 3] {
        self.steps.map(|s| s as f64 * dt)
    }
}

/// Steps of continuous exceedance that make up `window` seconds.
pub fn window_steps(window: f64, dt: f64) -> u32 {
    (window / dt).round() as u32
}

/// Terminal penalty and termination. The gross condition dominates.
pub fn penalty_and_done(
    timers: &ViolationTimers,
    exceedance: [f64; 3],
    window: u32,
    config: &RewardConfig,
) -> (f64, Option<Termination>) {
    if exceedance.iter().any(|e| *e >= config.gross_fraction) {
        return (config.gross_penalty, Some(Termination::Gross));
    }
    let sustained = timers.steps.iter().filter(|s| **s >= window).count();
    if sustained >= config.sustained_count {
        return (config.sustained_penalty, Some(Termination::Sustained));
    }
    (0.0, None)
}

/// Assembles the weighted reward. Rates in deg/s at this interface; the
/// tracking cost is evaluated in rad/s so ε keeps its unit.
pub fn reward_total(
    sample: &EnvelopeSample,
    q_pilot_deg: f64,
    penalty: f64,
    limits: &EnvelopeLimits,
    config: &RewardConfig,
) -> RewardTerms {
    let tracking = r_tracking(sample.q_deg.to_radians(), q_pilot_deg.to_radians(), config.epsilon).min(config.tracking_cap);
    let alpha = r_alpha(sample.alpha_deg, limits.alpha_limit(sample.alpha_deg), config.alpha_threshold);
    let nz = r_nz(sample.nz, limits.nz_limit(sample.nz));
    let q = r_q(sample.q_deg, limits.q_limit(sample.q_deg));
    let total = config.survival
        + config.tracking_weight * tracking
        + config.alpha_weight * alpha
        + config.nz_weight * nz
        + config.q_weight * q
        + penalty;
    RewardTerms { survival: config.survival, tracking, alpha, nz, q, penalty, total }
}
