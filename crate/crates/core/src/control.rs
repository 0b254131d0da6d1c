//! Incremental nonlinear dynamic inversion (INDI) of the angular-rate dynamics.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::aero::Geometry;
use crate::aircraft::{Airframe, FlightCondition};
use crate::dynamics::AircraftState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("dynamic pressure {0} Pa too low for control effectivity")]
    NoDynamicPressure(f64),
    #[error("control effectivity ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("non-finite controller input")]
    NonFinite,
}

/// Proportional rate-loop gains, 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGains {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Default for RateGains {
    fn default() -> Self {
        Self { roll: 4.0, pitch: 4.0, yaw: 4.0 }
    }
}

impl RateGains {
    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.roll, self.pitch, self.yaw)
    }
}

/// Moment-coefficient derivatives and the assembled angular-acceleration effectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEffectivity {
    /// ∂(C_l, C_m, C_n)/∂δ, per rad; column j is surface j.
    pub coefficient_derivatives: Matrix3<f64>,
    /// ∂ω̇/∂δ, (rad/s²)/rad.
    pub matrix: Matrix3<f64>,
}

/// g = J⁻¹ q̄ S diag(b, c̄, b) Φ.
pub fn assemble_effectivity(
    coefficient_derivatives: &Matrix3<f64>,
    dynamic_pressure: f64,
    geometry: &Geometry,
    inertia_inv: &Matrix3<f64>,
) -> ControlEffectivity {
    let lengths = Matrix3::from_diagonal(&Vector3::new(geometry.span, geometry.chord, geometry.span));
    ControlEffectivity {
        coefficient_derivatives: *coefficient_derivatives,
        matrix: inertia_inv * (lengths * coefficient_derivatives) * (dynamic_pressure * geometry.wing_area),
    }
}

/// Central differences of the moment coefficients over each surface at the
/// current state and deflections (deg), assembled into g.
pub fn effectivity(
    airframe: &Airframe,
    state: &AircraftState,
    condition: &FlightCondition,
    deflections: &Vector3<f64>,
    step_deg: f64,
) -> Result<ControlEffectivity, ControlError> {
    let qbar = condition.dynamic_pressure();
    if !(qbar > 0.0) {
        return Err(ControlError::NoDynamicPressure(qbar));
    }
    let mut phi = Matrix3::zeros();
    for j in 0..3 {
        let mut up = *deflections;
        let mut down = *deflections;
        up[j] += step_deg;
        down[j] -= step_deg;
        let cu = airframe.aero.coefficients(&airframe.query(state, condition, &up)).coefficients.moments();
        let cd = airframe.aero.coefficients(&airframe.query(state, condition, &down)).coefficients.moments();
        phi.set_column(j, &((cu - cd) / (2.0 * step_deg.to_radians())));
    }
    Ok(assemble_effectivity(&phi, qbar, &airframe.aero.geometry, airframe.mass.inertia_inv()))
}

/// K·(ω_cmd − ω), rad/s².
pub fn virtual_input(rate_cmd: &Vector3<f64>, rate: &Vector3<f64>, gains: &RateGains) -> Vector3<f64> {
    gains.as_vector().component_mul(&(rate_cmd - rate))
}

pub fn condition_number(m: &Matrix3<f64>) -> f64 {
    let s = m.singular_values();
    let min = s.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        s.max() / min
    }
}

/// δ_cmd = δ₀ + g⁻¹(ω̇_c − ω̇₀). Deflections in degrees, g per radian.
pub fn indi_law(
    virtual_accel: &Vector3<f64>,
    omega_dot_measured: &Vector3<f64>,
    effectivity: &Matrix3<f64>,
    deflections_now: &Vector3<f64>,
    max_condition: f64,
) -> Result<Vector3<f64>, ControlError> {
    let condition = condition_number(effectivity);
    if !(condition <= max_condition) {
        return Err(ControlError::IllConditioned { condition });
    }
    let increment = effectivity
        .lu()
        .solve(&(virtual_accel - omega_dot_measured))
        .ok_or(ControlError::IllConditioned { condition })?;
    let cmd = deflections_now + increment.map(f64::to_degrees);
    if cmd.iter().all(|v| v.is_finite()) {
        Ok(cmd)
    } else {
        Err(ControlError::NonFinite)
    }
}

/// First-order low-pass of a vector signal, exact discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    pub cutoff: f64,
    value: Option<Vector3<f64>>,
}

impl LowPass {
    pub fn new(cutoff: f64) -> Self {
        Self { cutoff, value: None }
    }

    pub fn update(&mut self, input: &Vector3<f64>, dt: f64) -> Vector3<f64> {
        let v = match self.value {
            None => *input,
            Some(prev) => prev + (input - prev) * (1.0 - (-self.cutoff * dt).exp()),
        };
        self.value = Some(v);
        v
    }

    pub fn value(&self) -> Option<Vector3<f64>> {
        self.value
    }
}

/// Angular acceleration from a backward difference of sampled rates, low-passed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaDotEstimator {
    previous: Option<Vector3<f64>>,
    estimate: Vector3<f64>,
    /// rad/s
    pub cutoff: f64,
}

impl OmegaDotEstimator {
    pub fn new(cutoff: f64) -> Self {
        Self { previous: None, estimate: Vector3::zeros(), cutoff }
    }

    /// Feeds one rate sample taken `dt` after the previous one. The first call returns zero.
    pub fn update(&mut self, rate: &Vector3<f64>, dt: f64) -> Vector3<f64> {
        if let Some(prev) = self.previous {
            let raw = (rate - prev) / dt;
            self.estimate += (raw - self.estimate) * (1.0 - (-self.cutoff * dt).exp());
        }
        self.previous = Some(*rate);
        self.estimate
    }

    pub fn estimate(&self) -> Vector3<f64> {
        self.estimate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub gains: RateGains,
    /// Low-pass cutoff on the ω̇ estimate, rad/s.
    pub filter_cutoff: f64,
    /// Pass the measured deflections through the same low-pass so δ₀ and ω̇₀
    /// refer to the same instant.
    pub synchronize_deflections: bool,
    pub max_condition: f64,
    /// Finite-difference step for the effectivity, deg.
    pub effectivity_step_deg: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gains: RateGains::default(),
            filter_cutoff: 50.0,
            synchronize_deflections: true,
            max_condition: 1e6,
            effectivity_step_deg: 0.5,
        }
    }
}

/// Where ω̇₀ comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccelSource {
    Estimated,
    /// True derivative from the simulator; isolates the control algebra in tests.
    Perfect(Vector3<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerOutput {
    /// Surface commands, deg.
    pub commands: Vector3<f64>,
    pub virtual_accel: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
    pub effectivity: ControlEffectivity,
}

/// Rate controller with its per-episode filter state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateController {
    pub config: ControllerConfig,
    estimator: OmegaDotEstimator,
    /// Backward-differenced deflections, averaged over the sample interval before filtering.
    deflection_filter: LowPass,
    previous_deflections: Option<Vector3<f64>>,
}

impl RateController {
    pub fn new(config: ControllerConfig) -> Self {
        Self {
            config,
            estimator: OmegaDotEstimator::new(config.filter_cutoff),
            deflection_filter: LowPass::new(config.filter_cutoff),
            previous_deflections: None,
        }
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.config);
    }

    pub fn command(
        &mut self,
        airframe: &Airframe,
        state: &AircraftState,
        deflections: &Vector3<f64>,
        rate_cmd: &Vector3<f64>,
        dt: f64,
        accel: AccelSource,
    ) -> Result<ControllerOutput, ControlError> {
        if !rate_cmd.iter().all(|v| v.is_finite()) {
            return Err(ControlError::NonFinite);
        }
        let condition = airframe.condition(state).map_err(|_| ControlError::NonFinite)?;
        let estimated = self.estimator.update(&state.omega, dt);
        // The backward difference is centred half a sample back; pair it with the
        // deflection at that instant.
        let midpoint = match self.previous_deflections {
            Some(prev) => (prev + deflections) * 0.5,
            None => *deflections,
        };
        self.previous_deflections = Some(*deflections);
        let filtered = self.deflection_filter.update(&midpoint, dt);
        let (omega_dot, reference) = match accel {
            AccelSource::Estimated if self.config.synchronize_deflections => (estimated, filtered),
            AccelSource::Estimated => (estimated, *deflections),
            AccelSource::Perfect(w) => (w, *deflections),
        };
        let g = effectivity(airframe, state, &condition, deflections, self.config.effectivity_step_deg)?;
        let virtual_accel = virtual_input(rate_cmd, &state.omega, &self.config.gains);
        let commands = indi_law(&virtual_accel, &omega_dot, &g.matrix, &reference, self.config.max_condition)?;
        Ok(ControllerOutput { commands, virtual_accel, omega_dot, effectivity: g })
    }
}
