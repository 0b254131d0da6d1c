//! Aerodynamic coefficients, dimensionalization, propulsion and actuators.

mod actuator;
mod propulsion;
mod surrogate;
mod table;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use actuator::{actuator_step, Actuator, ActuatorBank, ActuatorLimits};
pub use propulsion::{Propulsion, ThrustOutput};
pub use surrogate::SurrogateCoefficients;
pub use table::{Axis, GridTable, Multiplier, TableError, TableSet, TableTerm, Variable};

/// Surface indices in every deflection vector: aileron, horizontal tail, rudder.
pub const AILERON: usize = 0;
pub const TAIL: usize = 1;
pub const RUDDER: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// Wing reference area S, m².
    pub wing_area: f64,
    /// Span b, m.
    pub span: f64,
    /// Mean aerodynamic chord c̄, m.
    pub chord: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { wing_area: 27.87, span: 9.144, chord: 3.45 }
    }
}

/// Inputs to a coefficient lookup. Angles in radians, deflections in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroQuery {
    pub alpha: f64,
    pub beta: f64,
    /// Body rates (p, q, r), rad/s.
    pub rates: Vector3<f64>,
    /// Deflections (aileron, tail, rudder), deg.
    pub deflections: Vector3<f64>,
    pub airspeed: f64,
    pub mach: f64,
}

impl AeroQuery {
    /// Nondimensional rates (p b/2V, q c̄/2V, r b/2V).
    pub fn normalized_rates(&self, geometry: &Geometry) -> Vector3<f64> {
        if self.airspeed <= 1e-6 {
            return Vector3::zeros();
        }
        let k = 0.5 / self.airspeed;
        Vector3::new(
            self.rates.x * geometry.span * k,
            self.rates.y * geometry.chord * k,
            self.rates.z * geometry.span * k,
        )
    }
}

/// Body-axis force and moment coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coefficients {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub cl: f64,
    pub cm: f64,
    pub cn: f64,
}

impl Coefficients {
    pub fn as_array(&self) -> [f64; 6] {
        [self.cx, self.cy, self.cz, self.cl, self.cm, self.cn]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { cx: a[0], cy: a[1], cz: a[2], cl: a[3], cm: a[4], cn: a[5] }
    }

    pub fn moments(&self) -> Vector3<f64> {
        Vector3::new(self.cl, self.cm, self.cn)
    }
}

/// Coefficients plus whether the query had to be clamped into the model envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroEvaluation {
    pub coefficients: Coefficients,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AeroSource {
    Surrogate(SurrogateCoefficients),
    Tables {
        /// Directory holding the coefficient CSV files.
        path: String,
        #[serde(skip)]
        tables: Option<TableSet>,
    },
}

/// Complete aerodynamic model: coefficient source, reference geometry and validity envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeroModel {
    pub geometry: Geometry,
    pub source: AeroSource,
    /// Valid angle-of-attack range, deg.
    pub alpha_range_deg: [f64; 2],
    /// Valid sideslip range, deg.
    pub beta_range_deg: [f64; 2],
    /// Mach range for which trim requests are accepted.
    pub mach_range: [f64; 2],
}

impl Default for AeroModel {
    fn default() -> Self {
        Self::surrogate(SurrogateCoefficients::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CzAlpha {
    /// ∂C_z/∂α, per rad.
    pub per_rad: f64,
    /// Set when the envelope edge forced a one-sided difference.
    pub one_sided: bool,
}

impl AeroModel {
    pub fn surrogate(coefficients: SurrogateCoefficients) -> Self {
        Self {
            geometry: Geometry::default(),
            source: AeroSource::Surrogate(coefficients),
            alpha_range_deg: [-20.0, 50.0],
            beta_range_deg: [-30.0, 30.0],
            mach_range: [0.1, 0.95],
        }
    }

    /// Builds a table-backed model; the α/β envelope comes from the table breakpoints.
    pub fn from_tables(path: impl Into<String>, tables: TableSet, geometry: Geometry) -> Self {
        let alpha = tables.range(Variable::Alpha).unwrap_or([-90.0, 90.0]);
        let beta = tables.range(Variable::Beta).unwrap_or([-90.0, 90.0]);
        let mach = tables.range(Variable::Mach).unwrap_or([0.0, 2.0]);
        Self {
            geometry,
            source: AeroSource::Tables { path: path.into(), tables: Some(tables) },
            alpha_range_deg: alpha,
            beta_range_deg: beta,
            mach_range: mach,
        }
    }

    /// Loads the CSV tables referenced by a deserialized config.
    pub fn resolve_tables(&mut self) -> Result<(), TableError> {
        if let AeroSource::Tables { path, tables } = &mut self.source {
            if tables.is_none() {
                let set = TableSet::load_dir(path.as_str())?;
                self.alpha_range_deg = set.range(Variable::Alpha).unwrap_or(self.alpha_range_deg);
                self.beta_range_deg = set.range(Variable::Beta).unwrap_or(self.beta_range_deg);
                self.mach_range = set.range(Variable::Mach).unwrap_or(self.mach_range);
                *tables = Some(set);
            }
        }
        Ok(())
    }

    /// Human-readable name of the coefficient source, written into every log.
    pub fn source_name(&self) -> String {
        match &self.source {
            AeroSource::Surrogate(_) => "polynomial-surrogate".to_string(),
            AeroSource::Tables { path, .. } => format!("table-set:{path}"),
        }
    }

    pub fn alpha_range(&self) -> [f64; 2] {
        [self.alpha_range_deg[0].to_radians(), self.alpha_range_deg[1].to_radians()]
    }

    pub fn beta_range(&self) -> [f64; 2] {
        [self.beta_range_deg[0].to_radians(), self.beta_range_deg[1].to_radians()]
    }

    pub fn mach_in_range(&self, mach: f64) -> bool {
        mach >= self.mach_range[0] && mach <= self.mach_range[1]
    }

    /// Coefficient lookup. Queries outside the α/β envelope are clamped onto it
    /// and flagged rather than extrapolated.
    pub fn coefficients(&self, query: &AeroQuery) -> AeroEvaluation {
        let [amin, amax] = self.alpha_range();
        let [bmin, bmax] = self.beta_range();
        let mut q = *query;
        q.alpha = query.alpha.clamp(amin, amax);
        q.beta = query.beta.clamp(bmin, bmax);
        let mut clamped = q.alpha != query.alpha || q.beta != query.beta;
        let coefficients = match &self.source {
            AeroSource::Surrogate(s) => s.evaluate(&q, &self.geometry),
            AeroSource::Tables { tables: Some(t), .. } => {
                let (c, c_clamped) = t.evaluate(&q, &self.geometry);
                clamped |= c_clamped;
                c
            }
            AeroSource::Tables { tables: None, path } => {
                panic!("aero tables at {path} were never loaded; call resolve_tables first")
            }
        };
        AeroEvaluation { coefficients, clamped }
    }

    /// Central finite difference of C_z over α, one-sided at the envelope edge.
    pub fn cz_alpha(&self, query: &AeroQuery, step_deg: f64) -> CzAlpha {
        let h = step_deg.to_radians();
        let [amin, amax] = self.alpha_range();
        let at = |alpha: f64| {
            let mut q = *query;
            q.alpha = alpha;
            self.coefficients(&q).coefficients.cz
        };
        let a = query.alpha;
        if a - h >= amin && a + h <= amax {
            CzAlpha { per_rad: (at(a + h) - at(a - h)) / (2.0 * h), one_sided: false }
        } else if a + h <= amax {
            let a0 = a.max(amin);
            CzAlpha { per_rad: (at(a0 + h) - at(a0)) / h, one_sided: true }
        } else {
            let a0 = a.min(amax);
            CzAlpha { per_rad: (at(a0) - at(a0 - h)) / h, one_sided: true }
        }
    }
}

/// Forces q̄S·(C_x, C_y, C_z) and moments q̄S·(b C_l, c̄ C_m, b C_n).
pub fn dimensionalize(
    coefficients: &Coefficients,
    dynamic_pressure: f64,
    geometry: &Geometry,
) -> (Vector3<f64>, Vector3<f64>) {
    let qs = dynamic_pressure * geometry.wing_area;
    let force = Vector3::new(coefficients.cx, coefficients.cy, coefficients.cz) * qs;
    let moment = Vector3::new(
        geometry.span * coefficients.cl,
        geometry.chord * coefficients.cm,
        geometry.span * coefficients.cn,
    ) * qs;
    (force, moment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn query(alpha_deg: f64) -> AeroQuery {
        AeroQuery {
            alpha: alpha_deg.to_radians(),
            beta: 0.0,
            rates: Vector3::zeros(),
            deflections: Vector3::zeros(),
            airspeed: 200.0,
            mach: 0.6,
        }
    }

    #[test]
    fn dimensionalize_examples() {
        let g = Geometry::default();
        let c = Coefficients { cx: 0.1, cy: -0.2, cz: 0.3, cl: 0.01, cm: 0.1, cn: -0.02 };
        let (f, m) = dimensionalize(&c, 0.0, &g);
        assert_eq!(f, Vector3::zeros());
        assert_eq!(m, Vector3::zeros());

        let (f1, m1) = dimensionalize(&c, 1000.0, &g);
        let (f2, m2) = dimensionalize(&c, 2000.0, &g);
        assert_relative_eq!(f2, f1 * 2.0, epsilon = 1e-9);
        assert_relative_eq!(m2, m1 * 2.0, epsilon = 1e-9);
        // 0.1 · 1000 · 27.87 · 3.45
        assert_relative_eq!(m1.y, 9615.15, epsilon = 1e-9);
    }

    #[test]
    fn out_of_envelope_is_clamped_and_flagged() {
        let model = AeroModel::default();
        let inside = model.coefficients(&query(10.0));
        assert!(!inside.clamped);
        let outside = model.coefficients(&query(80.0));
        assert!(outside.clamped);
        assert_eq!(outside.coefficients, model.coefficients(&query(50.0)).coefficients);
    }

    #[test]
    fn cz_alpha_exact_on_linear_model() {
        let linear = AeroModel::surrogate(SurrogateCoefficients::linear_normal_force(-4.5));
        for a in [-10.0, 0.0, 5.0, 20.0] {
            let d = linear.cz_alpha(&query(a), 0.5);
            assert!((d.per_rad + 4.5).abs() < 1e-10);
            assert!(!d.one_sided);
        }
        assert!(AeroModel::default().cz_alpha(&query(5.0), 0.5).per_rad < 0.0);
    }

    #[test]
    fn cz_alpha_symmetric_for_symmetric_model() {
        let mut model = AeroModel::surrogate(SurrogateCoefficients::symmetric());
        model.alpha_range_deg = [-50.0, 50.0];
        for a in [1.0, 7.0, 15.0, 30.0] {
            let plus = model.cz_alpha(&query(a), 0.5).per_rad;
            let minus = model.cz_alpha(&query(-a), 0.5).per_rad;
            assert_relative_eq!(plus, minus, epsilon = 1e-10);
        }
    }

    #[test]
    fn cz_alpha_converges_quadratically() {
        let model = AeroModel::default();
        let q = query(12.0);
        let exact = model.cz_alpha(&q, 1e-3).per_rad;
        let e1 = (model.cz_alpha(&q, 1.0).per_rad - exact).abs();
        let e2 = (model.cz_alpha(&q, 0.5).per_rad - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cz_alpha_one_sided_at_edge() {
        let model = AeroModel::default();
        let d = model.cz_alpha(&query(49.9), 0.5);
        assert!(d.one_sided);
        assert!(d.per_rad.is_finite());
        assert!(model.cz_alpha(&query(-19.9), 0.5).one_sided);
    }
}
