use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLimits {
    /// First-order lag time constant, s.
    pub time_constant: f64,
    /// deg/s
    pub rate_limit: f64,
    /// Symmetric position limit, deg.
    pub position_limit: f64,
}

impl ActuatorLimits {
    pub const AILERON: Self = Self { time_constant: 0.0495, rate_limit: 80.0, position_limit: 21.5 };
    pub const TAIL: Self = Self { time_constant: 0.0495, rate_limit: 60.0, position_limit: 25.0 };
    pub const RUDDER: Self = Self { time_constant: 0.0495, rate_limit: 120.0, position_limit: 30.0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuator {
    /// deg
    pub position: f64,
    /// Last command received, deg.
    pub command: f64,
    pub limits: ActuatorLimits,
}

impl Actuator {
    pub fn new(limits: ActuatorLimits, position: f64) -> Self {
        let p = position.clamp(-limits.position_limit, limits.position_limit);
        Self { position: p, command: p, limits }
    }
}

/// Advances one actuator by `dt`: exact first-order lag towards the command,
/// then the rate clamp, then the position clamp.
pub fn actuator_step(state: Actuator, command: f64, dt: f64) -> Actuator {
    let lim = state.limits;
    let lagged = state.position + (command - state.position) * (1.0 - (-dt / lim.time_constant).exp());
    let max_move = lim.rate_limit * dt;
    let rate_limited = state.position + (lagged - state.position).clamp(-max_move, max_move);
    Actuator {
        position: rate_limited.clamp(-lim.position_limit, lim.position_limit),
        command,
        limits: lim,
    }
}

/// The three primary surfaces in (aileron, tail, rudder) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorBank {
    pub surfaces: [Actuator; 3],
}

impl ActuatorBank {
    pub fn new(limits: [ActuatorLimits; 3], positions: Vector3<f64>) -> Self {
        Self { surfaces: [0, 1, 2].map(|i| Actuator::new(limits[i], positions[i])) }
    }

    pub fn positions(&self) -> Vector3<f64> {
        Vector3::new(self.surfaces[0].position, self.surfaces[1].position, self.surfaces[2].position)
    }

    pub fn step(&mut self, commands: &Vector3<f64>, dt: f64) {
        for (i, s) in self.surfaces.iter_mut().enumerate() {
            *s = actuator_step(*s, commands[i], dt);
        }
    }
}

impl Default for ActuatorBank {
    fn default() -> Self {
        Self::new([ActuatorLimits::AILERON, ActuatorLimits::TAIL, ActuatorLimits::RUDDER], Vector3::zeros())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_when_commanded_position() {
        let a = Actuator::new(ActuatorLimits::TAIL, 3.0);
        assert_eq!(actuator_step(a, 3.0, 0.002).position, 3.0);
    }

    #[test]
    fn tail_step_is_rate_limited() {
        // lag slope 25/0.0495 ≈ 505 deg/s exceeds 60 deg/s, so 0.1 s reaches 60·0.1
        let mut a = Actuator::new(ActuatorLimits::TAIL, 0.0);
        for _ in 0..50 {
            a = actuator_step(a, 25.0, 0.002);
        }
        assert!((a.position - 6.0).abs() < 1e-9, "{}", a.position);
    }

    #[test]
    fn aileron_settles_on_position_limit() {
        let mut a = Actuator::new(ActuatorLimits::AILERON, 0.0);
        for _ in 0..2000 {
            a = actuator_step(a, 40.0, 0.002);
        }
        assert_eq!(a.position, 21.5);
    }

    #[test]
    fn unsaturated_lag_matches_exponential() {
        let mut a = Actuator::new(ActuatorLimits::RUDDER, 0.0);
        // 0.1 deg command never hits the 120 deg/s limit.
        for _ in 0..25 {
            a = actuator_step(a, 0.1, 0.002);
        }
        let exact = 0.1 * (1.0 - (-0.05f64 / 0.0495).exp());
        assert!((a.position - exact).abs() < 1e-12);
    }

    #[test]
    fn limits_hold_every_step_under_random_commands() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut bank = ActuatorBank::default();
        for _ in 0..20_000 {
            let before = bank.positions();
            let cmd = Vector3::new(rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0));
            bank.step(&cmd, 0.002);
            let after = bank.positions();
            for (i, s) in bank.surfaces.iter().enumerate() {
                assert!(s.position.abs() <= s.limits.position_limit);
                assert!((after[i] - before[i]).abs() <= s.limits.rate_limit * 0.002 + 1e-12);
            }
        }
    }
}
