use super::DynamicsError;

/// Standard gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.80665;

const SEA_LEVEL_TEMPERATURE: f64 = 288.15;
const SEA_LEVEL_PRESSURE: f64 = 101_325.0;
const LAPSE_RATE: f64 = 0.0065;
const GAS_CONSTANT: f64 = 287.052_87;
const HEAT_RATIO: f64 = 1.4;
const TROPOPAUSE: f64 = 11_000.0;
const MIN_ALTITUDE: f64 = -5_000.0;
const MAX_ALTITUDE: f64 = 20_000.0;

/// ISA properties at one altitude, plus the dynamic pressure for one airspeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atmosphere {
    pub density: f64,
    pub speed_of_sound: f64,
    pub dynamic_pressure: f64,
}

impl Atmosphere {
    /// International Standard Atmosphere, troposphere and lower stratosphere.
    ///
    /// The troposphere law is used unchanged below sea level.
    pub fn isa(altitude: f64, airspeed: f64) -> Result<Self, DynamicsError> {
        if !altitude.is_finite() || !(MIN_ALTITUDE..=MAX_ALTITUDE).contains(&altitude) {
            return Err(DynamicsError::AltitudeOutOfRange(altitude));
        }
        if !airspeed.is_finite() {
            return Err(DynamicsError::NonFinite { field: "airspeed" });
        }
        let exponent = GRAVITY / (GAS_CONSTANT * LAPSE_RATE);
        let (temperature, pressure) = if altitude <= TROPOPAUSE {
            let t = SEA_LEVEL_TEMPERATURE - LAPSE_RATE * altitude;
            (t, SEA_LEVEL_PRESSURE * (t / SEA_LEVEL_TEMPERATURE).powf(exponent))
        } else {
            let t11 = SEA_LEVEL_TEMPERATURE - LAPSE_RATE * TROPOPAUSE;
            let p11 = SEA_LEVEL_PRESSURE * (t11 / SEA_LEVEL_TEMPERATURE).powf(exponent);
            let p = p11 * (-GRAVITY * (altitude - TROPOPAUSE) / (GAS_CONSTANT * t11)).exp();
            (t11, p)
        };
        let density = pressure / (GAS_CONSTANT * temperature);
        Ok(Self {
            density,
            speed_of_sound: (HEAT_RATIO * GAS_CONSTANT * temperature).sqrt(),
            dynamic_pressure: 0.5 * density * airspeed * airspeed,
        })
    }

    pub fn mach(&self, airspeed: f64) -> f64 {
        airspeed / self.speed_of_sound
    }
}
