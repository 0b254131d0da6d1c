//! C interface to the protection environment, the trim solver and trained agents.
//!
//! Every fallible call returns a [`FepStatus`]; on failure the message is
//! available from [`fep_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use fepkit::aircraft::Airframe;
use fepkit::ddpg::DdpgAgent;
use fepkit::dynamics::trim::trim_level_flight;
use fepkit::env::{EnvError, Normalization, PilotProfile, ProtectionEnv, ProtectionMode, Termination, OBS_DIM};
use fepkit::harness::Config;

/// Observation length.
pub const FEP_OBS_DIM: usize = 7;
const _: () = assert!(FEP_OBS_DIM == OBS_DIM);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Trim = 4,
    Simulation = 5,
    EpisodeFinished = 6,
    Checkpoint = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FepMode {
    None = 0,
    Classical = 1,
    Rl = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FepTermination {
    Running = 0,
    Sustained = 1,
    Gross = 2,
    Integrity = 3,
}

/// Result of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FepStep {
    pub observation: [f64; FEP_OBS_DIM],
    pub reward: f64,
    pub termination: FepTermination,
    /// Nonzero when the time limit ended the episode.
    pub truncated: u8,
    /// Commanded pitch rate after protection, deg/s.
    pub q_cmd: f64,
    pub alpha_deg: f64,
    pub nz: f64,
}

/// Level-flight trim point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FepTrim {
    pub airspeed: f64,
    pub alpha_deg: f64,
    pub tail_deg: f64,
    pub throttle: f64,
    pub thrust: f64,
    pub max_residual: f64,
}

/// Opaque environment handle.
pub struct FepEnv {
    env: ProtectionEnv,
}

/// Opaque agent handle.
pub struct FepAgent {
    agent: DdpgAgent,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: FepStatus, msg: impl Into<String>) -> FepStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> FepStatus) -> FepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FepStatus::Panic, "internal panic"),
    }
}

fn env_status(e: &EnvError) -> FepStatus {
    match e {
        EnvError::Config(_) | EnvError::Profile(_) => FepStatus::Config,
        EnvError::Trim(_) => FepStatus::Trim,
        EnvError::Dynamics(_) => FepStatus::Simulation,
        EnvError::Finished => FepStatus::EpisodeFinished,
    }
}

unsafe fn opt_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, FepStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(Some)
        .map_err(|_| fail(FepStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// Message describing the last failure on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an environment from a TOML configuration (NULL for defaults).
///
/// # Safety
/// `config_toml` must be NULL or a NUL-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_env_new(config_toml: *const c_char, mode: FepMode, out: *mut *mut FepEnv) -> FepStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FepStatus::NullPointer, "out is null");
        }
        *out = std::ptr::null_mut();
        let config = match opt_str(config_toml) {
            Ok(Some(text)) => match Config::from_toml(text) {
                Ok(c) => c,
                Err(e) => return fail(FepStatus::Config, e.to_string()),
            },
            Ok(None) => Config::default(),
            Err(s) => return s,
        };
        let mode = match mode {
            FepMode::None => ProtectionMode::None,
            FepMode::Classical => ProtectionMode::Classical,
            FepMode::Rl => ProtectionMode::Rl,
        };
        match ProtectionEnv::new(config.env, Arc::new(config.airframe), mode) {
            Ok(env) => {
                *out = Box::into_raw(Box::new(FepEnv { env }));
                FepStatus::Ok
            }
            Err(e) => fail(env_status(&e), e.to_string()),
        }
    })
}

/// Starts an episode with constant roll and pitch commands (deg/s) and writes
/// the normalized observation to `obs` (FEP_OBS_DIM values).
///
/// # Safety
/// `env` must come from `fep_env_new`; `obs` must hold FEP_OBS_DIM doubles.
#[no_mangle]
pub unsafe extern "C" fn fep_env_reset(env: *mut FepEnv, p_cmd: f64, q_cmd: f64, obs: *mut f64) -> FepStatus {
    guarded(|| {
        let Some(env) = env.as_mut() else { return fail(FepStatus::NullPointer, "env is null") };
        if obs.is_null() {
            return fail(FepStatus::NullPointer, "obs is null");
        }
        if !(p_cmd.is_finite() && q_cmd.is_finite()) {
            return fail(FepStatus::InvalidArgument, "commands must be finite");
        }
        match env.env.reset(PilotProfile::coupled(p_cmd, q_cmd)) {
            Ok(o) => {
                std::ptr::copy_nonoverlapping(o.as_ptr(), obs, FEP_OBS_DIM);
                FepStatus::Ok
            }
            Err(e) => fail(env_status(&e), e.to_string()),
        }
    })
}

/// Advances one agent step with a restorative pitch rate in deg/s (ignored
/// outside rl mode).
///
/// # Safety
/// `env` must come from `fep_env_new`; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_env_step(env: *mut FepEnv, q_rest: f64, out: *mut FepStep) -> FepStatus {
    guarded(|| {
        let Some(env) = env.as_mut() else { return fail(FepStatus::NullPointer, "env is null") };
        let Some(out) = out.as_mut() else { return fail(FepStatus::NullPointer, "out is null") };
        if !q_rest.is_finite() {
            return fail(FepStatus::InvalidArgument, "q_rest must be finite");
        }
        match env.env.step(q_rest) {
            Ok(r) => {
                *out = FepStep {
                    observation: r.observation,
                    reward: r.reward,
                    termination: match r.terminated {
                        None => FepTermination::Running,
                        Some(Termination::Sustained) => FepTermination::Sustained,
                        Some(Termination::Gross) => FepTermination::Gross,
                        Some(Termination::Integrity) => FepTermination::Integrity,
                    },
                    truncated: r.truncated as u8,
                    q_cmd: r.info.q_cmd,
                    alpha_deg: r.info.sample.alpha_deg,
                    nz: r.info.sample.nz,
                };
                FepStatus::Ok
            }
            Err(e) => fail(env_status(&e), e.to_string()),
        }
    })
}

/// Maps an action in [-1, 1] to the restorative pitch rate, deg/s.
///
/// # Safety
/// `env` must come from `fep_env_new`; `q_rest` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_env_action_to_rate(env: *const FepEnv, action: f64, q_rest: *mut f64) -> FepStatus {
    guarded(|| {
        let Some(env) = env.as_ref() else { return fail(FepStatus::NullPointer, "env is null") };
        let Some(q_rest) = q_rest.as_mut() else { return fail(FepStatus::NullPointer, "q_rest is null") };
        if !action.is_finite() {
            return fail(FepStatus::InvalidArgument, "action must be finite");
        }
        *q_rest = env.env.config.apply_action(action);
        FepStatus::Ok
    })
}

/// Makes the environment scale observations the way `agent` was trained.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn fep_env_use_agent_scaling(env: *mut FepEnv, agent: *const FepAgent) -> FepStatus {
    guarded(|| {
        let Some(env) = env.as_mut() else { return fail(FepStatus::NullPointer, "env is null") };
        let Some(agent) = agent.as_ref() else { return fail(FepStatus::NullPointer, "agent is null") };
        let a = &agent.agent;
        if a.obs_offset.len() != OBS_DIM || a.obs_scale.len() != OBS_DIM {
            return fail(FepStatus::InvalidArgument, "agent observation size does not match");
        }
        let n = Normalization {
            offset: std::array::from_fn(|i| a.obs_offset[i]),
            scale: std::array::from_fn(|i| a.obs_scale[i]),
        };
        if let Err(e) = n.validate() {
            return fail(FepStatus::InvalidArgument, e.to_string());
        }
        env.env.config.normalization = n;
        FepStatus::Ok
    })
}

/// # Safety
/// `env` must be NULL or come from `fep_env_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fep_env_free(env: *mut FepEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Loads a trained agent checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_agent_load(path: *const c_char, out: *mut *mut FepAgent) -> FepStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FepStatus::NullPointer, "out is null");
        }
        *out = std::ptr::null_mut();
        let path = match opt_str(path) {
            Ok(Some(p)) => p,
            Ok(None) => return fail(FepStatus::NullPointer, "path is null"),
            Err(s) => return s,
        };
        match DdpgAgent::load(Path::new(path)) {
            Ok(agent) => {
                *out = Box::into_raw(Box::new(FepAgent { agent }));
                FepStatus::Ok
            }
            Err(e) => fail(FepStatus::Checkpoint, e.to_string()),
        }
    })
}

/// Deterministic policy output in [-1, 1] for a normalized observation.
///
/// # Safety
/// `agent` must be live; `obs` must hold `len` doubles; `action` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fep_agent_act(agent: *const FepAgent, obs: *const f64, len: usize, action: *mut f64) -> FepStatus {
    guarded(|| {
        let Some(agent) = agent.as_ref() else { return fail(FepStatus::NullPointer, "agent is null") };
        let Some(action) = action.as_mut() else { return fail(FepStatus::NullPointer, "action is null") };
        if obs.is_null() {
            return fail(FepStatus::NullPointer, "obs is null");
        }
        if len != FEP_OBS_DIM {
            return fail(FepStatus::InvalidArgument, format!("observation has {len} values, expected {FEP_OBS_DIM}"));
        }
        let obs = std::slice::from_raw_parts(obs, len);
        if obs.iter().any(|x| !x.is_finite()) {
            return fail(FepStatus::InvalidArgument, "observation is not finite");
        }
        *action = agent.agent.policy(obs);
        FepStatus::Ok
    })
}

/// # Safety
/// `agent` must be NULL or come from `fep_agent_load`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fep_agent_free(agent: *mut FepAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Trims the default airframe for wings-level flight.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fep_trim(mach: f64, altitude: f64, out: *mut FepTrim) -> FepStatus {
    guarded(|| {
        let Some(out) = out.as_mut() else { return fail(FepStatus::NullPointer, "out is null") };
        match trim_level_flight(&Airframe::default(), mach, altitude) {
            Ok(t) => {
                *out = FepTrim {
                    airspeed: t.state.airspeed(),
                    alpha_deg: t.alpha().to_degrees(),
                    tail_deg: t.deflections.y,
                    throttle: t.throttle,
                    thrust: t.thrust,
                    max_residual: t.residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
                };
                FepStatus::Ok
            }
            Err(e) => fail(FepStatus::Trim, e.to_string()),
        }
    })
}
