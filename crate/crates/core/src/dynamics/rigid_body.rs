use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::{AircraftState, DynamicsError, MassProperties};

/// Angular distance from θ = ±π/2 inside which the Euler rates are treated as singular.
pub const EULER_MARGIN: f64 = 1e-3;

/// Roll/yaw coupling magnitude below which the secθ and tanθ terms are taken as exactly zero.
const COUPLING_EPS: f64 = 1e-12;

/// Total body-axis force (N) and moment (N·m) acting on the airframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loads {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl Loads {
    pub fn zero() -> Self {
        Self { force: Vector3::zeros(), moment: Vector3::zeros() }
    }
}

/// Anything that can produce body loads for a given state. Evaluated at every
/// integrator stage.
pub trait LoadModel {
    fn loads(&self, state: &AircraftState) -> Result<Loads, DynamicsError>;
}

/// Constant loads, held over the whole step.
impl LoadModel for Loads {
    fn loads(&self, _state: &AircraftState) -> Result<Loads, DynamicsError> {
        Ok(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub euler: Vector3<f64>,
    pub position: Vector3<f64>,
}

fn ensure_finite(v: &Vector3<f64>, field: &'static str) -> Result<(), DynamicsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DynamicsError::NonFinite { field })
    }
}

/// V̇ = F/m − ω × V
pub fn translational_derivative(
    velocity: &Vector3<f64>,
    omega: &Vector3<f64>,
    force: &Vector3<f64>,
    mass: f64,
) -> Result<Vector3<f64>, DynamicsError> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(DynamicsError::InvalidMass(mass));
    }
    ensure_finite(velocity, "velocity")?;
    ensure_finite(omega, "omega")?;
    ensure_finite(force, "force")?;
    Ok(force / mass - omega.cross(velocity))
}

/// ω̇ = J⁻¹ (M − ω × Jω)
pub fn rotational_derivative(
    omega: &Vector3<f64>,
    moment: &Vector3<f64>,
    mass: &MassProperties,
) -> Vector3<f64> {
    let j = mass.inertia();
    mass.inertia_inv() * (moment - omega.cross(&(j * omega)))
}

/// Euler-angle rates from body rates.
///
/// Near θ = ±π/2 the secθ/tanθ terms blow up unless the body rates feeding
/// them, `q sinφ + r cosφ`, vanish. Purely longitudinal motion therefore
/// passes through the vertical; any roll/yaw coupling there is an error.
pub fn euler_kinematics(
    omega: &Vector3<f64>,
    euler: &Vector3<f64>,
) -> Result<Vector3<f64>, DynamicsError> {
    let (p, q, r) = (omega.x, omega.y, omega.z);
    let (sphi, cphi) = euler.x.sin_cos();
    let (stheta, ctheta) = euler.y.sin_cos();
    let coupling = q * sphi + r * cphi;
    if coupling.abs() <= COUPLING_EPS {
        return Ok(Vector3::new(p, q * cphi - r * sphi, 0.0));
    }
    if ctheta.abs() < EULER_MARGIN.sin() {
        return Err(DynamicsError::EulerSingularity { theta_deg: euler.y.to_degrees() });
    }
    Ok(Vector3::new(
        p + coupling * stheta / ctheta,
        q * cphi - r * sphi,
        coupling / ctheta,
    ))
}

/// Body-to-NED direction cosine matrix for a 3-2-1 Euler sequence.
pub fn body_to_ned(euler: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = euler.x.sin_cos();
    let (sth, cth) = euler.y.sin_cos();
    let (spsi, cpsi) = euler.z.sin_cos();
    Matrix3::new(
        cth * cpsi,
        sphi * sth * cpsi - cphi * spsi,
        cphi * sth * cpsi + sphi * spsi,
        cth * spsi,
        sphi * sth * spsi + cphi * cpsi,
        cphi * sth * spsi - sphi * cpsi,
        -sth,
        sphi * cth,
        cphi * cth,
    )
}

/// Weight vector resolved in body axes.
pub fn gravity_body(euler: &Vector3<f64>, weight: f64) -> Vector3<f64> {
    let (sphi, cphi) = euler.x.sin_cos();
    let (sth, cth) = euler.y.sin_cos();
    weight * Vector3::new(-sth, sphi * cth, cphi * cth)
}

pub fn state_derivative(
    state: &AircraftState,
    loads: &Loads,
    mass: &MassProperties,
) -> Result<StateDerivative, DynamicsError> {
    ensure_finite(&loads.moment, "moment")?;
    Ok(StateDerivative {
        velocity: translational_derivative(&state.velocity, &state.omega, &loads.force, mass.mass())?,
        omega: rotational_derivative(&state.omega, &loads.moment, mass),
        euler: euler_kinematics(&state.omega, &state.euler)?,
        position: body_to_ned(&state.euler) * state.velocity,
    })
}

fn advance(state: &AircraftState, d: &StateDerivative, h: f64) -> AircraftState {
    AircraftState {
        velocity: state.velocity + d.velocity * h,
        omega: state.omega + d.omega * h,
        euler: state.euler + d.euler * h,
        position: state.position + d.position * h,
    }
}

fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// One classical fourth-order Runge-Kutta step. Loads are re-evaluated at every
/// stage; φ and ψ are wrapped to (−π, π] afterwards, θ is left continuous.
pub fn step<L: LoadModel + ?Sized>(
    state: &AircraftState,
    loads: &L,
    mass: &MassProperties,
    dt: f64,
    max_dt: f64,
) -> Result<AircraftState, DynamicsError> {
    if !(dt > 0.0 && dt <= max_dt) {
        return Err(DynamicsError::InvalidStep { dt, max: max_dt });
    }
    if let Some(field) = state.first_non_finite() {
        return Err(DynamicsError::NonFinite { field });
    }
    let eval = |s: &AircraftState| -> Result<StateDerivative, DynamicsError> {
        state_derivative(s, &loads.loads(s)?, mass)
    };
    let k1 = eval(state)?;
    let k2 = eval(&advance(state, &k1, 0.5 * dt))?;
    let k3 = eval(&advance(state, &k2, 0.5 * dt))?;
    let k4 = eval(&advance(state, &k3, dt))?;
    let sixth = dt / 6.0;
    let mut next = AircraftState {
        velocity: state.velocity + (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity) * sixth,
        omega: state.omega + (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega) * sixth,
        euler: state.euler + (k1.euler + 2.0 * k2.euler + 2.0 * k3.euler + k4.euler) * sixth,
        position: state.position + (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position) * sixth,
    };
    if let Some(field) = next.first_non_finite() {
        return Err(DynamicsError::NonFinite { field });
    }
    next.euler.x = wrap_angle(next.euler.x);
    next.euler.z = wrap_angle(next.euler.z);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn diag_mass(a: f64, b: f64, c: f64) -> MassProperties {
        MassProperties::new(1.0, Matrix3::from_diagonal(&Vector3::new(a, b, c))).unwrap()
    }

    fn rest_state() -> AircraftState {
        AircraftState {
            velocity: Vector3::zeros(),
            omega: Vector3::zeros(),
            euler: Vector3::zeros(),
            position: Vector3::zeros(),
        }
    }

    #[test]
    fn translational_examples() {
        let zero = translational_derivative(&Vector3::new(100.0, 0.0, 0.0), &Vector3::zeros(), &Vector3::zeros(), 1.0)
            .unwrap();
        assert_eq!(zero, Vector3::zeros());
        // −ω × V with ω = (0,0,0.1), V = (100,0,0): ω × V = (0, 10, 0)
        let d = translational_derivative(&Vector3::new(100.0, 0.0, 0.0), &Vector3::new(0.0, 0.0, 0.1), &Vector3::zeros(), 1.0)
            .unwrap();
        assert_relative_eq!(d, Vector3::new(0.0, -10.0, 0.0), epsilon = 1e-12);
        let d = translational_derivative(&Vector3::zeros(), &Vector3::zeros(), &Vector3::new(2.0, 0.0, 0.0), 2.0).unwrap();
        assert_eq!(d, Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn translational_rejects_bad_input() {
        let v = Vector3::zeros();
        assert!(translational_derivative(&v, &v, &v, 0.0).is_err());
        let nan = Vector3::new(f64::NAN, 0.0, 0.0);
        assert_eq!(
            translational_derivative(&v, &v, &nan, 1.0),
            Err(DynamicsError::NonFinite { field: "force" })
        );
    }

    #[test]
    fn rotational_examples() {
        let sphere = diag_mass(1.0, 1.0, 1.0);
        assert_eq!(rotational_derivative(&Vector3::new(0.0, 0.0, 1.0), &Vector3::zeros(), &sphere), Vector3::zeros());

        // Jω = (1,2,3); ω × Jω = (1·3−1·2, 1·1−1·3, 1·2−1·1) = (1,−2,1); −J⁻¹(...) = (−1, 1, −1/3)
        let m = diag_mass(1.0, 2.0, 3.0);
        let d = rotational_derivative(&Vector3::new(1.0, 1.0, 1.0), &Vector3::zeros(), &m);
        assert_relative_eq!(d, Vector3::new(-1.0, 1.0, -1.0 / 3.0), epsilon = 1e-15);

        let target = Vector3::new(0.3, -0.2, 0.1);
        let moment = m.inertia() * target;
        assert_relative_eq!(rotational_derivative(&Vector3::zeros(), &moment, &m), target, epsilon = 1e-15);
    }

    #[test]
    fn euler_kinematics_examples() {
        let w = Vector3::new(0.1, -0.4, 0.7);
        assert_eq!(euler_kinematics(&w, &Vector3::zeros()).unwrap(), w);

        let d = euler_kinematics(&Vector3::new(0.0, 0.0, 1.0), &Vector3::new(PI / 2.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(d, Vector3::new(0.0, -1.0, 0.0), epsilon = 1e-15);

        let near = Vector3::new(0.0, PI / 2.0 - 1e-6, 0.0);
        assert!(matches!(
            euler_kinematics(&Vector3::new(0.0, 0.0, 1.0), &near),
            Err(DynamicsError::EulerSingularity { .. })
        ));
        assert!(euler_kinematics(&Vector3::new(0.0, 0.1, 0.0), &Vector3::new(0.2, PI / 2.0, 0.0)).is_err());
    }

    #[test]
    fn pure_pitch_passes_through_vertical() {
        let d = euler_kinematics(&Vector3::new(0.0, 0.4, 0.0), &Vector3::new(0.0, PI / 2.0, 0.0)).unwrap();
        assert_eq!(d, Vector3::new(0.0, 0.4, 0.0));
    }

    proptest! {
        #[test]
        fn euler_kinematics_identity_at_level(p in -5.0..5.0f64, q in -5.0..5.0f64, r in -5.0..5.0f64) {
            let w = Vector3::new(p, q, r);
            prop_assert_eq!(euler_kinematics(&w, &Vector3::zeros()).unwrap(), w);
        }
    }

    #[test]
    fn free_coast_moves_by_velocity_only() {
        let mut s = rest_state();
        s.velocity = Vector3::new(100.0, 2.0, -3.0);
        let next = step(&s, &Loads::zero(), &diag_mass(1.0, 2.0, 3.0), 0.002, 0.005).unwrap();
        assert_relative_eq!(next.position, s.velocity * 0.002, epsilon = 1e-14);
        assert_eq!(next.velocity, s.velocity);
        assert_eq!(next.omega, s.omega);
    }

    #[test]
    fn step_rejects_bad_dt_and_is_deterministic() {
        let s = AircraftState::level(100.0, 0.1, 100.0);
        let m = diag_mass(1.0, 2.0, 3.0);
        assert!(step(&s, &Loads::zero(), &m, 0.0, 0.005).is_err());
        assert!(step(&s, &Loads::zero(), &m, 0.01, 0.005).is_err());
        let loads = Loads { force: Vector3::new(1.0, 2.0, 3.0), moment: Vector3::new(0.1, 0.2, 0.3) };
        let a = step(&s, &loads, &m, 0.002, 0.005).unwrap();
        let b = step(&s, &loads, &m, 0.002, 0.005).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_names_non_finite_field() {
        let s = AircraftState::level(100.0, 0.0, 100.0);
        let loads = Loads { force: Vector3::zeros(), moment: Vector3::new(f64::INFINITY, 0.0, 0.0) };
        let err = step(&s, &loads, &diag_mass(1.0, 2.0, 3.0), 0.002, 0.005).unwrap_err();
        assert_eq!(err, DynamicsError::NonFinite { field: "moment" });
    }

    #[test]
    fn angle_wrapping() {
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.3), 0.3);
    }

    #[test]
    fn gravity_and_dcm_agree() {
        let euler = Vector3::new(0.3, -0.2, 1.1);
        let ned_down = Vector3::new(0.0, 0.0, 5.0);
        let body = body_to_ned(&euler).transpose() * ned_down;
        assert_relative_eq!(gravity_body(&euler, 5.0), body, epsilon = 1e-14);
    }
}
