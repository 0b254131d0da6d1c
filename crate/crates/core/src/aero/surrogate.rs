use serde::{Deserialize, Serialize};

use super::{AeroQuery, Coefficients, Geometry, AILERON, RUDDER, TAIL};

/// Frame in which the lift/drag polynomials are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForceAxes {
    /// Polynomials give C_L and C_D, rotated into body axes by α.
    #[default]
    Wind,
    /// Polynomials give −C_z and −C_x directly.
    Body,
}

/// Smooth polynomial stand-in for fighter wind-tunnel data.
///
/// Angles and deflections enter in radians, rates nondimensionalized.
/// Signs: positive tail deflection pitches nose down, positive aileron rolls
/// right, positive rudder yaws nose left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateCoefficients {
    pub force_axes: ForceAxes,
    pub lift_0: f64,
    pub lift_alpha: f64,
    /// Cubic loss of lift slope, produces C_L,max near 35° with the defaults.
    pub lift_alpha3: f64,
    pub lift_tail: f64,
    pub drag_0: f64,
    /// Induced drag factor on C_L².
    pub drag_k: f64,
    pub drag_alpha2: f64,
    pub side_beta: f64,
    pub side_aileron: f64,
    pub side_rudder: f64,
    pub roll_beta: f64,
    pub roll_beta_alpha: f64,
    pub roll_p: f64,
    pub roll_r: f64,
    pub roll_aileron: f64,
    pub roll_rudder: f64,
    pub pitch_0: f64,
    /// Negative for a statically stable airframe.
    pub pitch_alpha: f64,
    pub pitch_q: f64,
    pub pitch_tail: f64,
    pub yaw_beta: f64,
    pub yaw_beta_alpha: f64,
    pub yaw_p: f64,
    pub yaw_r: f64,
    pub yaw_aileron: f64,
    pub yaw_rudder: f64,
}

impl Default for SurrogateCoefficients {
    fn default() -> Self {
        Self {
            force_axes: ForceAxes::Wind,
            lift_0: 0.05,
            lift_alpha: 4.0,
            lift_alpha3: 3.6,
            lift_tail: 0.4,
            drag_0: 0.02,
            drag_k: 0.15,
            drag_alpha2: 1.5,
            side_beta: -1.0,
            side_aileron: 0.0,
            side_rudder: 0.15,
            roll_beta: -0.08,
            roll_beta_alpha: -0.15,
            roll_p: -0.35,
            roll_r: 0.1,
            roll_aileron: 0.08,
            roll_rudder: 0.015,
            pitch_0: -0.01,
            pitch_alpha: -0.25,
            pitch_q: -5.0,
            pitch_tail: -0.55,
            yaw_beta: 0.12,
            yaw_beta_alpha: -0.2,
            yaw_p: -0.03,
            yaw_r: -0.35,
            yaw_aileron: -0.005,
            yaw_rudder: -0.06,
        }
    }
}

impl SurrogateCoefficients {
    /// Default model with the zero-α offsets removed, so C_z is odd in α.
    pub fn symmetric() -> Self {
        Self { lift_0: 0.0, pitch_0: 0.0, ..Self::default() }
    }

    /// C_z = slope·α exactly, everything else zero.
    pub fn linear_normal_force(slope: f64) -> Self {
        Self {
            force_axes: ForceAxes::Body,
            lift_0: 0.0,
            lift_alpha: -slope,
            lift_alpha3: 0.0,
            lift_tail: 0.0,
            drag_0: 0.0,
            drag_k: 0.0,
            drag_alpha2: 0.0,
            side_beta: 0.0,
            side_aileron: 0.0,
            side_rudder: 0.0,
            roll_beta: 0.0,
            roll_beta_alpha: 0.0,
            roll_p: 0.0,
            roll_r: 0.0,
            roll_aileron: 0.0,
            roll_rudder: 0.0,
            pitch_0: 0.0,
            pitch_alpha: 0.0,
            pitch_q: 0.0,
            pitch_tail: 0.0,
            yaw_beta: 0.0,
            yaw_beta_alpha: 0.0,
            yaw_p: 0.0,
            yaw_r: 0.0,
            yaw_aileron: 0.0,
            yaw_rudder: 0.0,
        }
    }

    pub fn evaluate(&self, q: &AeroQuery, geometry: &Geometry) -> Coefficients {
        let a = q.alpha;
        let b = q.beta;
        let d = q.deflections.map(f64::to_radians);
        let (da, dh, dr) = (d[AILERON], d[TAIL], d[RUDDER]);
        let hat = q.normalized_rates(geometry);
        let (ph, qh, rh) = (hat.x, hat.y, hat.z);

        let lift = self.lift_0 + self.lift_alpha * a - self.lift_alpha3 * a * a * a + self.lift_tail * dh;
        let drag = self.drag_0 + self.drag_k * lift * lift + self.drag_alpha2 * a * a;
        let (cx, cz) = match self.force_axes {
            ForceAxes::Wind => {
                let (sa, ca) = a.sin_cos();
                (lift * sa - drag * ca, -lift * ca - drag * sa)
            }
            ForceAxes::Body => (-drag, -lift),
        };
        let cy = self.side_beta * b + self.side_aileron * da + self.side_rudder * dr;
        let cl = (self.roll_beta + self.roll_beta_alpha * a) * b
            + self.roll_p * ph
            + self.roll_r * rh
            + self.roll_aileron * da
            + self.roll_rudder * dr;
        let cm = self.pitch_0 + self.pitch_alpha * a + self.pitch_q * qh + self.pitch_tail * dh;
        let cn = (self.yaw_beta + self.yaw_beta_alpha * a) * b
            + self.yaw_p * ph
            + self.yaw_r * rh
            + self.yaw_aileron * da
            + self.yaw_rudder * dr;
        Coefficients { cx, cy, cz, cl, cm, cn }
    }
}
