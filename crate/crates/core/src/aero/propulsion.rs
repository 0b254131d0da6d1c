use serde::{Deserialize, Serialize};

/// Throttle-to-thrust map; thrust acts along body x through the centre of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propulsion {
    /// Thrust at full setting, N.
    pub max_thrust: f64,
}

impl Default for Propulsion {
    fn default() -> Self {
        Self { max_thrust: 80_000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustOutput {
    pub force: f64,
    /// Setting was outside [0, 1] and got clamped.
    pub clamped: bool,
}

impl Propulsion {
    pub fn thrust_force(&self, setting: f64) -> ThrustOutput {
        let s = setting.clamp(0.0, 1.0);
        ThrustOutput { force: s * self.max_thrust, clamped: s != setting }
    }
}
