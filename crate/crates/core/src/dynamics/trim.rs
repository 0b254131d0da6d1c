//! Wings-level, constant-altitude trim by damped Newton iteration.

use nalgebra::{Matrix3, Vector3};

use super::{rotational_derivative, translational_derivative, AircraftState, Atmosphere, DynamicsError, GRAVITY};
use crate::aero::TAIL;
use crate::aircraft::{Airframe, Controls};

const MAX_ITERATIONS: usize = 50;
const TOLERANCE: f64 = 1e-10;
pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrimError {
    #[error("Mach {mach} outside the aero model range [{min}, {max}]")]
    MachOutOfRange { mach: f64, min: f64, max: f64 },
    #[error("trim did not converge after {iterations} iterations; residuals (u̇/g, ẇ/g, q̇) = {residuals:?}")]
    NoConvergence { iterations: usize, residuals: [f64; 3] },
    #[error("trim requires throttle {0:.3}, outside [0, 1]")]
    ThrottleSaturated(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimResult {
    pub state: AircraftState,
    /// Surface deflections (aileron, tail, rudder), deg.
    pub deflections: Vector3<f64>,
    pub throttle: f64,
    /// N
    pub thrust: f64,
    /// Normalized residuals (u̇/g, ẇ/g, q̇ in rad/s²).
    pub residuals: [f64; 3],
    pub iterations: usize,
}

impl TrimResult {
    pub fn alpha(&self) -> f64 {
        self.state.alpha()
    }

    pub fn controls(&self) -> Controls {
        Controls { deflections: self.deflections, throttle: self.throttle }
    }
}

fn residuals(airframe: &Airframe, airspeed: f64, altitude: f64, x: &Vector3<f64>) -> Result<Vector3<f64>, DynamicsError> {
    let state = AircraftState::level(airspeed, x[0], altitude);
    let controls = Controls { deflections: Vector3::new(0.0, x[1], 0.0), throttle: x[2] };
    let loads = airframe.breakdown(&state, &controls)?.total();
    let vdot = translational_derivative(&state.velocity, &state.omega, &loads.force, airframe.mass.mass())?;
    let wdot = rotational_derivative(&state.omega, &loads.moment, &airframe.mass);
    Ok(Vector3::new(vdot.x / GRAVITY, vdot.z / GRAVITY, wdot.y))
}

/// Unknowns (α, tail deflection, throttle); residuals (u̇, ẇ, q̇). The flight
/// path angle is zero by construction (θ = α, φ = β = 0).
pub fn trim_level_flight(airframe: &Airframe, mach: f64, altitude: f64) -> Result<TrimResult, TrimError> {
    let [min, max] = airframe.aero.mach_range;
    if !(mach.is_finite() && airframe.aero.mach_in_range(mach)) {
        return Err(TrimError::MachOutOfRange { mach, min, max });
    }
    let airspeed = mach * Atmosphere::isa(altitude, 0.0)?.speed_of_sound;
    let mut x = Vector3::new(0.05, 0.0, 0.3);
    let mut r = residuals(airframe, airspeed, altitude, &x)?;
    let steps = Vector3::new(1e-6, 1e-4, 1e-6);
    for iteration in 0..MAX_ITERATIONS {
        if r.amax() < TOLERANCE {
            return finish(airframe, airspeed, altitude, x, r, iteration);
        }
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += steps[k];
            xm[k] -= steps[k];
            let col = (residuals(airframe, airspeed, altitude, &xp)? - residuals(airframe, airspeed, altitude, &xm)?)
                / (2.0 * steps[k]);
            jac.set_column(k, &col);
        }
        let Some(dx) = jac.lu().solve(&(-r)) else {
            break;
        };
        // Backtrack until the residual norm decreases.
        let mut lambda = 1.0;
        loop {
            let candidate = x + dx * lambda;
            let rc = residuals(airframe, airspeed, altitude, &candidate)?;
            if rc.norm() < r.norm() || lambda < 1e-4 {
                x = candidate;
                r = rc;
                break;
            }
            lambda *= 0.5;
        }
    }
    if r.amax() < RESIDUAL_LIMIT {
        return finish(airframe, airspeed, altitude, x, r, MAX_ITERATIONS);
    }
    Err(TrimError::NoConvergence { iterations: MAX_ITERATIONS, residuals: r.into() })
}

fn finish(
    airframe: &Airframe,
    airspeed: f64,
    altitude: f64,
    x: Vector3<f64>,
    r: Vector3<f64>,
    iterations: usize,
) -> Result<TrimResult, TrimError> {
    if !(0.0..=1.0).contains(&x[2]) {
        return Err(TrimError::ThrottleSaturated(x[2]));
    }
    let mut deflections = Vector3::zeros();
    deflections[TAIL] = x[1];
    Ok(TrimResult {
        state: AircraftState::level(airspeed, x[0], altitude),
        deflections,
        throttle: x[2],
        thrust: airframe.propulsion.thrust_force(x[2]).force,
        residuals: r.into(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_trim_is_physical() {
        let trim = trim_level_flight(&Airframe::default(), 0.6, 500.0).unwrap();
        let alpha = trim.alpha().to_degrees();
        assert!(alpha > 0.0 && alpha < 15.0, "alpha {alpha}");
        assert!(trim.residuals.iter().all(|r| r.abs() < RESIDUAL_LIMIT), "{:?}", trim.residuals);
        assert_eq!(trim.state.phi(), 0.0);
        assert_eq!(trim.state.omega, Vector3::zeros());
        assert!(trim.throttle > 0.0 && trim.throttle < 1.0);
    }

    #[test]
    fn rejects_mach_outside_model() {
        let err = trim_level_flight(&Airframe::default(), 2.5, 500.0).unwrap_err();
        assert!(matches!(err, TrimError::MachOutOfRange { .. }));
    }
}
