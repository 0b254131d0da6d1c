//! The protection task as an episodic environment: trimmed F-16 surrogate,
//! INDI rate loop, pitch-command protection and reward.

mod profile;
pub mod reward;

use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aero::ActuatorBank;
use crate::aircraft::{Airframe, Controls};
use crate::control::{AccelSource, ControlError, ControllerConfig, RateController};
use crate::dynamics::trim::{trim_level_flight, TrimError, TrimResult};
use crate::dynamics::{self, rotational_derivative, AircraftState, DynamicsError};
use crate::protection::{ClassicalConfig, ClassicalProtection, EnvelopeLimits};

pub use profile::{Channel, PilotProfile, ProfileError};
pub use reward::{
    penalty_and_done, r_alpha, r_nz, r_q, r_tracking, reward_total, window_steps, EnvelopeSample, RewardConfig,
    RewardTerms, Termination, ViolationTimers, VARIABLE_NAMES,
};

pub const OBS_DIM: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProtectionMode {
    /// Pilot command straight to the rate loop.
    None,
    #[default]
    Classical,
    /// Pilot command plus the agent's restorative rate.
    Rl,
}

impl ProtectionMode {
    pub fn name(&self) -> &'static str {
        match self {
            ProtectionMode::None => "none",
            ProtectionMode::Classical => "classical",
            ProtectionMode::Rl => "rl",
        }
    }
}

impl std::str::FromStr for ProtectionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "classical" => Ok(Self::Classical),
            "rl" => Ok(Self::Rl),
            _ => Err(format!("unknown protection mode '{s}' (expected none, classical or rl)")),
        }
    }
}

/// Fixed affine observation scaling: (x − offset)/scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: [f64; OBS_DIM],
    pub scale: [f64; OBS_DIM],
}

impl Default for Normalization {
    fn default() -> Self {
        let deg = 1f64.to_radians();
        Self {
            offset: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 20_000.0],
            // n_z, α, φ, p, q, e_q, q̄
            scale: [8.0, 25.0 * deg, 180.0 * deg, 60.0 * deg, 30.0 * deg, 30.0 * deg, 15_000.0],
        }
    }
}

impl Normalization {
    pub fn apply(&self, raw: &[f64; OBS_DIM]) -> [f64; OBS_DIM] {
        std::array::from_fn(|i| (raw[i] - self.offset[i]) / self.scale[i])
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.scale.iter().all(|s| s.is_finite() && *s != 0.0) && self.offset.iter().all(|o| o.is_finite()) {
            Ok(())
        } else {
            Err(EnvError::Config("observation scales must be finite and nonzero".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub mach: f64,
    /// m
    pub altitude: f64,
    /// Episode length, s.
    pub duration: f64,
    /// Controller and agent period, s.
    pub agent_dt: f64,
    pub physics_dt: f64,
    pub max_physics_dt: f64,
    /// Restorative rate mapped from actions −1 and +1, deg/s.
    pub action_range: [f64; 2],
    /// Pitch command range drawn at the start of each training episode, deg/s.
    pub training_q_range: [f64; 2],
    /// Read ω̇ from the simulator instead of estimating it.
    pub perfect_accel: bool,
    pub limits: EnvelopeLimits,
    pub reward: RewardConfig,
    pub controller: ControllerConfig,
    pub classical: ClassicalConfig,
    pub normalization: Normalization,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            mach: 0.6,
            altitude: 500.0,
            duration: 10.0,
            agent_dt: 0.01,
            physics_dt: 0.002,
            max_physics_dt: dynamics::DEFAULT_MAX_DT,
            action_range: [-20.0, 30.0],
            training_q_range: [-10.0, 25.0],
            perfect_accel: false,
            limits: EnvelopeLimits::default(),
            reward: RewardConfig::default(),
            controller: ControllerConfig::default(),
            classical: ClassicalConfig::default(),
            normalization: Normalization::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error(transparent)]
    Trim(#[from] TrimError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("episode already finished; call reset")]
    Finished,
}

impl EnvConfig {
    pub fn substeps(&self) -> usize {
        (self.agent_dt / self.physics_dt).round() as usize
    }

    pub fn episode_steps(&self) -> usize {
        (self.duration / self.agent_dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.to_string()));
        if !(self.duration > 0.0 && self.agent_dt > 0.0 && self.physics_dt > 0.0) {
            return bad("durations and steps must be positive");
        }
        if self.physics_dt > self.max_physics_dt {
            return bad("physics_dt exceeds max_physics_dt");
        }
        let ratio = self.agent_dt / self.physics_dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return bad("agent_dt must be an integer multiple of physics_dt");
        }
        if !(self.action_range[0] < self.action_range[1]) {
            return bad("action_range must be increasing");
        }
        if !(self.training_q_range[0] <= self.training_q_range[1]) {
            return bad("training_q_range must be nondecreasing");
        }
        self.limits.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        self.normalization.validate()
    }

    /// Affine map of a normalized action onto the restorative rate, deg/s.
    pub fn apply_action(&self, action: f64) -> f64 {
        apply_action(action, self.action_range)
    }
}

/// −1 → lo, +1 → hi, linear between; out-of-range actions are clamped.
pub fn apply_action(action: f64, range: [f64; 2]) -> f64 {
    let a = if action.is_nan() { 0.0 } else { action.clamp(-1.0, 1.0) };
    let [lo, hi] = range;
    0.5 * (lo + hi) + 0.5 * (hi - lo) * a
}

/// Everything logged about one agent step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Time at the end of the step, s.
    pub time: f64,
    pub state: AircraftState,
    pub sample: EnvelopeSample,
    /// Surface positions at the end of the step, deg.
    pub deflections: Vector3<f64>,
    /// Pilot (p, q, r) commands, deg/s.
    pub pilot: [f64; 3],
    pub q_rest: f64,
    /// Pitch-rate command sent to the rate loop, deg/s.
    pub q_cmd: f64,
    pub reward: RewardTerms,
    pub beyond: [bool; 3],
    pub timers: ViolationTimers,
    pub aero_clamped: bool,
    pub controller_fault: bool,
    pub below_sea_level: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    /// Normalized observation after the step.
    pub observation: [f64; OBS_DIM],
    pub reward: f64,
    /// Ended by a penalty condition; bootstrapping must stop.
    pub terminated: Option<Termination>,
    /// Ended by the time limit.
    pub truncated: bool,
    pub info: StepInfo,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated.is_some() || self.truncated
    }
}

/// One protection episode at a time. Cheap to clone; the airframe is shared.
#[derive(Debug, Clone)]
pub struct ProtectionEnv {
    pub config: EnvConfig,
    pub airframe: Arc<Airframe>,
    pub mode: ProtectionMode,
    trim: TrimResult,
    classical: ClassicalProtection,
    controller: RateController,
    profile: PilotProfile,
    state: AircraftState,
    actuators: ActuatorBank,
    step_index: usize,
    timers: ViolationTimers,
    window: u32,
    finished: bool,
    last_info: Option<StepInfo>,
}

impl ProtectionEnv {
    pub fn new(config: EnvConfig, airframe: Arc<Airframe>, mode: ProtectionMode) -> Result<Self, EnvError> {
        config.validate()?;
        let trim = trim_level_flight(&airframe, config.mach, config.altitude)?;
        let controller = RateController::new(config.controller);
        let window = window_steps(config.reward.sustained_window, config.agent_dt);
        let actuators = ActuatorBank::new(
            [crate::aero::ActuatorLimits::AILERON, crate::aero::ActuatorLimits::TAIL, crate::aero::ActuatorLimits::RUDDER],
            trim.deflections,
        );
        Ok(Self {
            classical: ClassicalProtection::new(config.limits, config.classical),
            config,
            airframe,
            mode,
            trim,
            controller,
            profile: PilotProfile::default(),
            state: trim.state,
            actuators,
            step_index: 0,
            timers: ViolationTimers::default(),
            window,
            finished: true,
            last_info: None,
        })
    }

    pub fn trim(&self) -> &TrimResult {
        &self.trim
    }

    pub fn state(&self) -> &AircraftState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.config.agent_dt
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn profile(&self) -> &PilotProfile {
        &self.profile
    }

    pub fn deflections(&self) -> Vector3<f64> {
        self.actuators.positions()
    }

    pub fn last_info(&self) -> Option<&StepInfo> {
        self.last_info.as_ref()
    }

    /// Starts an episode from trim with the given pilot profile.
    pub fn reset(&mut self, profile: PilotProfile) -> Result<[f64; OBS_DIM], EnvError> {
        profile.validate()?;
        self.profile = profile;
        self.state = self.trim.state;
        self.actuators = ActuatorBank::new(
            [crate::aero::ActuatorLimits::AILERON, crate::aero::ActuatorLimits::TAIL, crate::aero::ActuatorLimits::RUDDER],
            self.trim.deflections,
        );
        self.controller.reset();
        self.step_index = 0;
        self.timers = ViolationTimers::default();
        self.finished = false;
        self.last_info = None;
        Ok(self.observation())
    }

    /// Training reset: constant pitch command drawn uniformly from the training range.
    pub fn reset_random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<([f64; OBS_DIM], f64), EnvError> {
        let [lo, hi] = self.config.training_q_range;
        let q = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        Ok((self.reset(PilotProfile::pitch(q))?, q))
    }

    fn controls(&self) -> Controls {
        Controls { deflections: self.actuators.positions(), throttle: self.trim.throttle }
    }

    /// Normal load factor at the current state and surface positions, g.
    pub fn load_factor(&self) -> Result<f64, DynamicsError> {
        self.airframe.load_factor(&self.state, &self.controls())
    }

    /// Unnormalized [n_z, α, φ, p, q, e_q, q̄] with e_q = pilot q_cmd − q (rad, rad/s, Pa).
    pub fn raw_observation(&self) -> [f64; OBS_DIM] {
        let s = &self.state;
        let nz = self.load_factor().unwrap_or(f64::NAN);
        let qbar = self.airframe.condition(s).map(|c| c.dynamic_pressure()).unwrap_or(f64::NAN);
        let q_pilot = self.profile.q.value(self.time()).to_radians();
        [nz, s.alpha(), s.phi(), s.omega.x, s.omega.y, q_pilot - s.omega.y, qbar]
    }

    pub fn observation(&self) -> [f64; OBS_DIM] {
        let o = self.config.normalization.apply(&self.raw_observation());
        // A non-finite observation can only follow an integrity termination; keep the buffer clean.
        o.map(|v| if v.is_finite() { v } else { 0.0 })
    }

    fn pitch_command(&self, q_pilot: f64, q_rest: f64) -> Result<f64, DynamicsError> {
        let lim = &self.config.limits;
        Ok(match self.mode {
            ProtectionMode::None => q_pilot,
            ProtectionMode::Classical => self.classical.pitch_command(&self.airframe, &self.state, q_pilot)?.q_cmd,
            ProtectionMode::Rl => (q_pilot + q_rest).clamp(lim.q_min, lim.q_max),
        })
    }

    fn true_accel(&self) -> Result<Vector3<f64>, DynamicsError> {
        let loads = self.airframe.breakdown(&self.state, &self.controls())?.total();
        Ok(rotational_derivative(&self.state.omega, &loads.moment, &self.airframe.mass))
    }

    /// Advances one agent period with the given restorative rate (deg/s); it
    /// only enters the command path in RL mode.
    pub fn step(&mut self, q_rest: f64) -> Result<StepResult, EnvError> {
        if self.finished {
            return Err(EnvError::Finished);
        }
        let t0 = self.time();
        let pilot = self.profile.at(t0);
        let q_rest = if self.mode == ProtectionMode::Rl { q_rest } else { 0.0 };
        let outcome = self.advance(pilot, q_rest);
        self.step_index += 1;
        let time = self.time();
        let truncated = self.step_index >= self.config.episode_steps();

        let (q_cmd, controller_fault, integrity) = match outcome {
            Ok((q_cmd, fault)) => (q_cmd, fault, false),
            Err(q_cmd) => (q_cmd, false, true),
        };
        let nz = self.load_factor().unwrap_or(f64::NAN);
        let sample = EnvelopeSample {
            alpha_deg: self.state.alpha().to_degrees(),
            nz,
            q_deg: self.state.omega.y.to_degrees(),
        };
        let limits = &self.config.limits;
        let exceedance = sample.exceedance(limits);
        let beyond = exceedance.map(|e| e > 0.0 || e.is_nan());
        self.timers.update(beyond);
        let (penalty, mut terminated) = if integrity {
            (self.config.reward.gross_penalty, Some(Termination::Integrity))
        } else {
            penalty_and_done(&self.timers, exceedance, self.window, &self.config.reward)
        };
        let mut reward = reward_total(&sample, pilot[1], penalty, limits, &self.config.reward);
        if integrity {
            reward = RewardTerms { total: self.config.reward.survival + penalty, penalty, ..RewardTerms::default() };
        }
        if terminated.is_none() && !reward.total.is_finite() {
            terminated = Some(Termination::Integrity);
        }
        let aero_clamped = self
            .airframe
            .breakdown(&self.state, &self.controls())
            .map(|b| b.aero_clamped)
            .unwrap_or(true);
        let info = StepInfo {
            time,
            state: self.state,
            sample,
            deflections: self.actuators.positions(),
            pilot,
            q_rest,
            q_cmd,
            reward,
            beyond,
            timers: self.timers,
            aero_clamped,
            controller_fault,
            below_sea_level: self.state.altitude() < 0.0,
        };
        self.finished = truncated || terminated.is_some();
        self.last_info = Some(info);
        Ok(StepResult { observation: self.observation(), reward: reward.total, terminated, truncated, info })
    }

    /// Controller then physics substeps. Ok carries (q_cmd, controller fault);
    /// Err carries q_cmd after an integrity failure.
    fn advance(&mut self, pilot: [f64; 3], q_rest: f64) -> Result<(f64, bool), f64> {
        let q_cmd = match self.pitch_command(pilot[1], q_rest) {
            Ok(q) => q,
            Err(_) => return Err(pilot[1]),
        };
        let rate_cmd = Vector3::new(pilot[0], q_cmd, pilot[2]).map(f64::to_radians);
        let accel = if self.config.perfect_accel {
            match self.true_accel() {
                Ok(w) => AccelSource::Perfect(w),
                Err(_) => return Err(q_cmd),
            }
        } else {
            AccelSource::Estimated
        };
        let positions = self.actuators.positions();
        let (commands, fault) = match self.controller.command(
            &self.airframe,
            &self.state,
            &positions,
            &rate_cmd,
            self.config.agent_dt,
            accel,
        ) {
            Ok(out) => (out.commands, false),
            // Degraded condition: hold the surfaces where they are.
            Err(ControlError::IllConditioned { .. }) | Err(ControlError::NoDynamicPressure(_)) => (positions, true),
            Err(ControlError::NonFinite) => return Err(q_cmd),
        };
        let dt = self.config.physics_dt;
        for _ in 0..self.config.substeps() {
            self.actuators.step(&commands, dt);
            let loads = self.airframe.with_controls(self.controls());
            match dynamics::step(&self.state, &loads, &self.airframe.mass, dt, self.config.max_physics_dt) {
                Ok(s) => self.state = s,
                Err(_) => return Err(q_cmd),
            }
        }
        Ok((q_cmd, fault))
    }
}
