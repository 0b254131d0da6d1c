use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{DynamicsError, GRAVITY};

/// Rigid-body state. Angles in radians, NED position in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AircraftState {
    /// Body-axis velocity (u, v, w), m/s.
    pub velocity: Vector3<f64>,
    /// Body angular rates (p, q, r), rad/s.
    pub omega: Vector3<f64>,
    /// Euler angles (φ, θ, ψ), rad.
    pub euler: Vector3<f64>,
    /// Position north-east-down relative to a sea-level origin, m.
    pub position: Vector3<f64>,
}

impl AircraftState {
    pub fn level(airspeed: f64, alpha: f64, altitude: f64) -> Self {
        Self {
            velocity: Vector3::new(airspeed * alpha.cos(), 0.0, airspeed * alpha.sin()),
            omega: Vector3::zeros(),
            euler: Vector3::new(0.0, alpha, 0.0),
            position: Vector3::new(0.0, 0.0, -altitude),
        }
    }

    pub fn altitude(&self) -> f64 {
        -self.position.z
    }

    pub fn airspeed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Angle of attack, rad.
    pub fn alpha(&self) -> f64 {
        self.velocity.z.atan2(self.velocity.x)
    }

    /// Sideslip angle, rad.
    pub fn beta(&self) -> f64 {
        let v = self.airspeed();
        if v > 0.0 {
            (self.velocity.y / v).clamp(-1.0, 1.0).asin()
        } else {
            0.0
        }
    }

    pub fn phi(&self) -> f64 {
        self.euler.x
    }

    pub fn theta(&self) -> f64 {
        self.euler.y
    }

    /// Returns the name of the first non-finite field, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let fields: [(&'static str, &Vector3<f64>); 4] = [
            ("velocity", &self.velocity),
            ("omega", &self.omega),
            ("euler", &self.euler),
            ("position", &self.position),
        ];
        fields
            .iter()
            .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
            .map(|(name, _)| *name)
    }
}

/// Mass and inertia with a cached inverse inertia tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MassConfig", into = "MassConfig")]
pub struct MassProperties {
    mass: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
}

impl MassProperties {
    pub fn new(mass: f64, inertia: Matrix3<f64>) -> Result<Self, DynamicsError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(DynamicsError::InvalidMass(mass));
        }
        if inertia.iter().any(|x| !x.is_finite()) {
            return Err(DynamicsError::InvalidInertia("non-finite entry"));
        }
        let scale = inertia.abs().max();
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * scale {
            return Err(DynamicsError::InvalidInertia("not symmetric"));
        }
        let eig = inertia.symmetric_eigenvalues();
        if eig.iter().any(|&l| l <= 0.0) {
            return Err(DynamicsError::InvalidInertia("not positive definite"));
        }
        // A physical body needs each principal moment to be at most the sum of the others.
        let (a, b, c) = (eig[0], eig[1], eig[2]);
        let slack = 1e-9 * (a + b + c);
        if a > b + c + slack || b > a + c + slack || c > a + b + slack {
            return Err(DynamicsError::InvalidInertia("violates triangle inequality"));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or(DynamicsError::InvalidInertia("singular"))?;
        Ok(Self { mass, inertia, inertia_inv })
    }

    /// Inertia from the usual aircraft moments with only the x-z product.
    pub fn from_moments(mass: f64, ixx: f64, iyy: f64, izz: f64, ixz: f64) -> Result<Self, DynamicsError> {
        let j = Matrix3::new(ixx, 0.0, -ixz, 0.0, iyy, 0.0, -ixz, 0.0, izz);
        Self::new(mass, j)
    }

    /// Nominal F-16 class values (Stevens & Lewis data converted to SI).
    pub fn f16() -> Self {
        Self::from_moments(9_298.6, 12_875.0, 75_674.0, 85_552.0, 1_331.4)
            .expect("nominal inertia is valid")
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }

    pub fn weight(&self) -> f64 {
        self.mass * GRAVITY
    }
}

/// Serialized form of [`MassProperties`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MassConfig {
    mass: f64,
    inertia: [[f64; 3]; 3],
}

impl TryFrom<MassConfig> for MassProperties {
    type Error = DynamicsError;

    fn try_from(c: MassConfig) -> Result<Self, Self::Error> {
        let j = Matrix3::from_fn(|i, k| c.inertia[i][k]);
        Self::new(c.mass, j)
    }
}

impl From<MassProperties> for MassConfig {
    fn from(m: MassProperties) -> Self {
        let mut inertia = [[0.0; 3]; 3];
        for (i, row) in inertia.iter_mut().enumerate() {
            for (k, x) in row.iter_mut().enumerate() {
                *x = m.inertia[(i, k)];
            }
        }
        MassConfig { mass: m.mass, inertia }
    }
}
