use approx::assert_relative_eq;
use nalgebra::Vector3;

use fepkit::aircraft::Airframe;
use fepkit::dynamics::trim::trim_level_flight;
use fepkit::dynamics::{step, AircraftState, Loads, MassProperties};

fn tumbling_state() -> AircraftState {
    AircraftState {
        velocity: Vector3::new(150.0, 0.0, 0.0),
        omega: Vector3::new(1.0, 0.05, 0.03),
        euler: Vector3::zeros(),
        position: Vector3::new(0.0, 0.0, -3000.0),
    }
}

fn momentum_and_energy(s: &AircraftState, m: &MassProperties) -> (f64, f64) {
    let h = m.inertia() * s.omega;
    (h.norm(), 0.5 * s.omega.dot(&h))
}

#[test]
fn torque_free_rotation_conserves_momentum_and_energy() {
    let m = MassProperties::f16();
    let mut s = tumbling_state();
    let (h0, e0) = momentum_and_energy(&s, &m);
    for _ in 0..5000 {
        s = step(&s, &Loads::zero(), &m, 0.002, 0.005).unwrap();
    }
    let (h, e) = momentum_and_energy(&s, &m);
    assert!(((h - h0) / h0).abs() < 1e-6, "momentum drift {}", (h - h0) / h0);
    assert!(((e - e0) / e0).abs() < 1e-6, "energy drift {}", (e - e0) / e0);
    // the product of inertia couples roll into yaw, so the spin really did evolve
    assert!((s.omega - tumbling_state().omega).norm() > 1e-3);
}

/// Integrates the trimmed airframe with a pitch-rate disturbance.
fn disturbed_flight(dt: f64, duration: f64) -> AircraftState {
    let airframe = Airframe::default();
    let trim = trim_level_flight(&airframe, 0.6, 500.0).unwrap();
    let loads = airframe.with_controls(trim.controls());
    let mut s = trim.state.clone();
    s.omega = Vector3::new(0.3, 0.2, -0.1);
    let n = (duration / dt).round() as usize;
    for _ in 0..n {
        s = step(&s, &loads, &airframe.mass, dt, 0.05).unwrap();
    }
    s
}

fn state_error(a: &AircraftState, b: &AircraftState) -> f64 {
    let angles = (a.euler - b.euler).norm() + (a.omega - b.omega).norm();
    let speeds = (a.velocity - b.velocity).norm() / 100.0;
    angles + speeds
}

#[test]
fn rk4_is_fourth_order() {
    let reference = disturbed_flight(0.000625, 2.0);
    let coarse = state_error(&disturbed_flight(0.02, 2.0), &reference);
    let fine = state_error(&disturbed_flight(0.01, 2.0), &reference);
    let ratio = coarse / fine;
    assert!((12.0..=20.0).contains(&ratio), "convergence ratio {ratio} (errors {coarse:e}, {fine:e})");
}

#[test]
fn trim_residuals_are_below_tolerance() {
    let airframe = Airframe::default();
    for (mach, altitude) in [(0.6, 500.0), (0.4, 2000.0), (0.8, 6000.0)] {
        let t = trim_level_flight(&airframe, mach, altitude).unwrap();
        assert!(t.residuals.iter().all(|r| r.abs() < 1e-8), "mach {mach}: {:?}", t.residuals);
        assert!(t.throttle > 0.0 && t.throttle <= 1.0);
        assert_relative_eq!(t.state.euler.y, t.alpha(), epsilon = 1e-12);
    }
}

#[test]
fn trimmed_flight_holds_for_ten_seconds() {
    let airframe = Airframe::default();
    let trim = trim_level_flight(&airframe, 0.6, 500.0).unwrap();
    let loads = airframe.with_controls(trim.controls());
    let alpha0 = trim.alpha();
    let mut s = trim.state.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..5000 {
        s = step(&s, &loads, &airframe.mass, 0.002, 0.005).unwrap();
        worst = worst.max((s.alpha() - alpha0).abs());
    }
    assert!(worst.to_degrees() < 0.5, "alpha drifted {:.4} deg", worst.to_degrees());
    assert!((s.altitude() - 500.0).abs() < 5.0);
}

#[test]
fn trim_rejects_mach_outside_the_model() {
    assert!(trim_level_flight(&Airframe::default(), 1.5, 500.0).is_err());
    assert!(trim_level_flight(&Airframe::default(), f64::NAN, 500.0).is_err());
}
