//! The assembled airframe: mass properties, aerodynamics and propulsion
//! producing total body loads for the integrator.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::aero::{dimensionalize, AeroEvaluation, AeroModel, AeroQuery, Propulsion};
use crate::dynamics::{gravity_body, AircraftState, Atmosphere, DynamicsError, LoadModel, Loads, MassProperties};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airframe {
    pub mass: MassProperties,
    pub aero: AeroModel,
    pub propulsion: Propulsion,
}

impl Default for Airframe {
    fn default() -> Self {
        Self { mass: MassProperties::f16(), aero: AeroModel::default(), propulsion: Propulsion::default() }
    }
}

/// Air data derived from a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightCondition {
    pub atmosphere: Atmosphere,
    pub airspeed: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mach: f64,
}

impl FlightCondition {
    pub fn dynamic_pressure(&self) -> f64 {
        self.atmosphere.dynamic_pressure
    }
}

/// Surface deflections (deg) and throttle setting held over an integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub deflections: Vector3<f64>,
    pub throttle: f64,
}

/// Loads and air data at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadBreakdown {
    pub aero_force: Vector3<f64>,
    pub aero_moment: Vector3<f64>,
    pub thrust: f64,
    pub gravity: Vector3<f64>,
    pub condition: FlightCondition,
    pub aero_clamped: bool,
    pub thrust_clamped: bool,
}

impl LoadBreakdown {
    pub fn total(&self) -> Loads {
        Loads {
            force: self.aero_force + Vector3::new(self.thrust, 0.0, 0.0) + self.gravity,
            moment: self.aero_moment,
        }
    }

    /// Normal load factor in g, positive for pilot-felt upward load (−z specific force).
    pub fn load_factor(&self, weight: f64) -> f64 {
        -self.aero_force.z / weight
    }
}

impl Airframe {
    pub fn condition(&self, state: &AircraftState) -> Result<FlightCondition, DynamicsError> {
        let airspeed = state.airspeed();
        let atmosphere = Atmosphere::isa(state.altitude(), airspeed)?;
        Ok(FlightCondition {
            atmosphere,
            airspeed,
            alpha: state.alpha(),
            beta: state.beta(),
            mach: atmosphere.mach(airspeed),
        })
    }

    pub fn query(&self, state: &AircraftState, condition: &FlightCondition, deflections: &Vector3<f64>) -> AeroQuery {
        AeroQuery {
            alpha: condition.alpha,
            beta: condition.beta,
            rates: state.omega,
            deflections: *deflections,
            airspeed: condition.airspeed,
            mach: condition.mach,
        }
    }

    pub fn aero(&self, state: &AircraftState, deflections: &Vector3<f64>) -> Result<(AeroEvaluation, FlightCondition), DynamicsError> {
        let condition = self.condition(state)?;
        Ok((self.aero.coefficients(&self.query(state, &condition, deflections)), condition))
    }

    pub fn breakdown(&self, state: &AircraftState, controls: &Controls) -> Result<LoadBreakdown, DynamicsError> {
        let (eval, condition) = self.aero(state, &controls.deflections)?;
        let (aero_force, aero_moment) =
            dimensionalize(&eval.coefficients, condition.dynamic_pressure(), &self.aero.geometry);
        let thrust = self.propulsion.thrust_force(controls.throttle);
        Ok(LoadBreakdown {
            aero_force,
            aero_moment,
            thrust: thrust.force,
            gravity: gravity_body(&state.euler, self.mass.weight()),
            condition,
            aero_clamped: eval.clamped,
            thrust_clamped: thrust.clamped,
        })
    }

    pub fn load_factor(&self, state: &AircraftState, controls: &Controls) -> Result<f64, DynamicsError> {
        Ok(self.breakdown(state, controls)?.load_factor(self.mass.weight()))
    }

    pub fn with_controls(&self, controls: Controls) -> AirframeLoads<'_> {
        AirframeLoads { airframe: self, controls }
    }
}

/// [`LoadModel`] for the airframe at fixed controls.
pub struct AirframeLoads<'a> {
    pub airframe: &'a Airframe,
    pub controls: Controls,
}

impl LoadModel for AirframeLoads<'_> {
    fn loads(&self, state: &AircraftState) -> Result<Loads, DynamicsError> {
        Ok(self.airframe.breakdown(state, &self.controls)?.total())
    }
}
