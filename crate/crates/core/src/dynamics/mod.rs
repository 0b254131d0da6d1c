//! Rigid-body flight dynamics: state, atmosphere, equations of motion,
//! fixed-step RK4 integration and level-flight trim.

mod atmosphere;
mod rigid_body;
mod state;
pub mod trim;

pub use atmosphere::{Atmosphere, GRAVITY};
pub use rigid_body::{
    body_to_ned, euler_kinematics, gravity_body, rotational_derivative, step, state_derivative,
    translational_derivative, Loads, LoadModel, StateDerivative, EULER_MARGIN,
};
pub use state::{AircraftState, MassProperties};

/// Physics integration step used everywhere unless configured otherwise.
pub const DEFAULT_PHYSICS_DT: f64 = 0.002;
/// Largest physics step `step` accepts by default.
pub const DEFAULT_MAX_DT: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },
    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),
    #[error("invalid inertia tensor: {0}")]
    InvalidInertia(&'static str),
    #[error("Euler kinematics singular at theta = {theta_deg:.4} deg")]
    EulerSingularity { theta_deg: f64 },
    #[error("time step {dt} outside (0, {max}]")]
    InvalidStep { dt: f64, max: f64 },
    #[error("altitude {0:.1} m outside the atmosphere model")]
    AltitudeOutOfRange(f64),
}
