//! Envelope limits and the classical angle-of-attack / load-factor protection.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::aero::AeroQuery;
use crate::aircraft::Airframe;
use crate::dynamics::{AircraftState, DynamicsError};

/// Two-sided envelope limits. Angles and rates in degrees at this interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvelopeLimits {
    pub alpha_max_deg: f64,
    pub alpha_min_deg: f64,
    /// g
    pub nz_max: f64,
    pub nz_min: f64,
    /// deg/s
    pub q_max: f64,
    pub q_min: f64,
    /// Fraction of the α limit at which nose-up commands start fading.
    pub fade_start_fraction: f64,
}

impl Default for EnvelopeLimits {
    fn default() -> Self {
        Self {
            alpha_max_deg: 25.0,
            alpha_min_deg: -25.0,
            nz_max: 9.0,
            nz_min: -9.0,
            q_max: 30.0,
            q_min: -10.0,
            fade_start_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LimitsError {
    #[error("invalid envelope limits: {0}")]
    Invalid(&'static str),
}

impl EnvelopeLimits {
    pub fn validate(&self) -> Result<(), LimitsError> {
        let all = [
            self.alpha_max_deg,
            self.alpha_min_deg,
            self.nz_max,
            self.nz_min,
            self.q_max,
            self.q_min,
            self.fade_start_fraction,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(LimitsError::Invalid("non-finite limit"));
        }
        if !(self.alpha_max_deg > 0.0 && self.alpha_min_deg < 0.0) {
            return Err(LimitsError::Invalid("need alpha_min < 0 < alpha_max"));
        }
        if !(self.nz_max > 1.0 && self.nz_min < 0.0) {
            return Err(LimitsError::Invalid("need nz_min < 0 and nz_max > 1"));
        }
        if !(self.q_max > 0.0 && self.q_min < 0.0) {
            return Err(LimitsError::Invalid("need q_min < 0 < q_max"));
        }
        if !(0.0..1.0).contains(&self.fade_start_fraction) {
            return Err(LimitsError::Invalid("fade_start_fraction must be in [0, 1)"));
        }
        Ok(())
    }

    /// The limit on the side of zero where `value` lies.
    pub fn side(value: f64, max: f64, min: f64) -> f64 {
        if value >= 0.0 {
            max
        } else {
            min
        }
    }

    pub fn alpha_limit(&self, alpha_deg: f64) -> f64 {
        Self::side(alpha_deg, self.alpha_max_deg, self.alpha_min_deg)
    }

    pub fn nz_limit(&self, nz: f64) -> f64 {
        Self::side(nz, self.nz_max, self.nz_min)
    }

    pub fn q_limit(&self, q_deg: f64) -> f64 {
        Self::side(q_deg, self.q_max, self.q_min)
    }
}

/// Angle of attack (deg) at which the linearized normal force reaches `nz_limit`:
/// W·n_z / (q̄ S |C_zα|).
pub fn nz_equivalent_alpha(weight: f64, nz_limit: f64, dynamic_pressure: f64, wing_area: f64, cz_alpha: f64) -> f64 {
    (weight * nz_limit / (dynamic_pressure * wing_area * cz_alpha.abs())).to_degrees()
}

pub fn effective_alpha_limit(alpha_max_deg: f64, alpha_nz_deg: f64) -> f64 {
    alpha_max_deg.min(alpha_nz_deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicalConfig {
    /// Restorative gain, (deg/s)/deg.
    pub restore_gain: f64,
    /// Below this dynamic pressure (Pa) the load-factor bound is skipped.
    pub qbar_floor: f64,
    /// Finite-difference step for C_zα, deg.
    pub cz_alpha_step_deg: f64,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self { restore_gain: 2.0, qbar_floor: 100.0, cz_alpha_step_deg: 0.5 }
    }
}

/// Fade toward the α limit on each side, restore beyond it, clamp to the rate limits.
///
/// `alpha_upper` > 0 > `alpha_lower` are the effective α limits in degrees.
pub fn protect_pitch_command(
    q_pilot: f64,
    alpha_deg: f64,
    alpha_upper: f64,
    alpha_lower: f64,
    limits: &EnvelopeLimits,
    restore_gain: f64,
) -> f64 {
    let band = 1.0 - limits.fade_start_fraction;
    let mut q = if q_pilot > 0.0 {
        let k = ((alpha_upper - alpha_deg) / (band * alpha_upper)).clamp(0.0, 1.0);
        k * q_pilot
    } else if q_pilot < 0.0 {
        let k = ((alpha_deg - alpha_lower) / (band * -alpha_lower)).clamp(0.0, 1.0);
        k * q_pilot
    } else {
        0.0
    };
    if alpha_deg > alpha_upper {
        q -= restore_gain * (alpha_deg - alpha_upper);
    } else if alpha_deg < alpha_lower {
        q -= restore_gain * (alpha_deg - alpha_lower);
    }
    q.clamp(limits.q_min, limits.q_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectedCommand {
    /// deg/s
    pub q_cmd: f64,
    /// Effective α limits, deg.
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    /// Dynamic pressure was below the floor; only the static α limits applied.
    pub below_qbar_floor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalProtection {
    pub limits: EnvelopeLimits,
    pub config: ClassicalConfig,
}

impl ClassicalProtection {
    pub fn new(limits: EnvelopeLimits, config: ClassicalConfig) -> Self {
        Self { limits, config }
    }

    /// Effective (upper, lower) α limits for the current flight condition. The
    /// normal-force slope is taken at α = 0, clean configuration.
    pub fn alpha_limits(&self, airframe: &Airframe, state: &AircraftState) -> Result<(f64, f64, bool), DynamicsError> {
        let condition = airframe.condition(state)?;
        let qbar = condition.dynamic_pressure();
        if qbar < self.config.qbar_floor {
            return Ok((self.limits.alpha_max_deg, self.limits.alpha_min_deg, true));
        }
        let query = AeroQuery {
            alpha: 0.0,
            beta: 0.0,
            rates: Vector3::zeros(),
            deflections: Vector3::zeros(),
            airspeed: condition.airspeed,
            mach: condition.mach,
        };
        let slope = airframe.aero.cz_alpha(&query, self.config.cz_alpha_step_deg).per_rad;
        let weight = airframe.mass.weight();
        let area = airframe.aero.geometry.wing_area;
        let upper = nz_equivalent_alpha(weight, self.limits.nz_max, qbar, area, slope);
        let lower = -nz_equivalent_alpha(weight, -self.limits.nz_min, qbar, area, slope);
        Ok((
            effective_alpha_limit(self.limits.alpha_max_deg, upper),
            self.limits.alpha_min_deg.max(lower),
            false,
        ))
    }

    pub fn pitch_command(&self, airframe: &Airframe, state: &AircraftState, q_pilot: f64) -> Result<ProtectedCommand, DynamicsError> {
        let (upper, lower, floored) = self.alpha_limits(airframe, state)?;
        let q_cmd = protect_pitch_command(
            q_pilot,
            state.alpha().to_degrees(),
            upper,
            lower,
            &self.limits,
            self.config.restore_gain,
        );
        Ok(ProtectedCommand { q_cmd, alpha_upper: upper, alpha_lower: lower, below_qbar_floor: floored })
    }
}
