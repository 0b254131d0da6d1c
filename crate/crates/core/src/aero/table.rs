//! Gridded coefficient tables with multilinear interpolation.
//!
//! File layout (one CSV per term, see `docs/FORMATS.md`):
//!
//! ```text
//! # comment
//! alpha,-10,0,10,20
//! tail,-25,0,25
//! 0.1,0.0,-0.1
//! ...
//! ```
//!
//! Leading rows whose first field is an axis name declare the axes in order.
//! The remaining rows hold the values in row-major order, one row per
//! combination of the leading axes, with the last axis running along the row.

use std::fmt;
use std::path::Path;

use super::{AeroQuery, Coefficients, Geometry, AILERON, RUDDER, TAIL};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
    #[error("missing required coefficient table {0}")]
    Missing(String),
}

/// Table input variable. Angles and deflections are in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Alpha,
    Beta,
    Aileron,
    Tail,
    Rudder,
    Mach,
}

impl Variable {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alpha" | "alpha_deg" => Some(Self::Alpha),
            "beta" | "beta_deg" => Some(Self::Beta),
            "aileron" | "aileron_deg" => Some(Self::Aileron),
            "tail" | "tail_deg" | "elevator" => Some(Self::Tail),
            "rudder" | "rudder_deg" => Some(Self::Rudder),
            "mach" => Some(Self::Mach),
            _ => None,
        }
    }

    fn value(self, q: &AeroQuery) -> f64 {
        match self {
            Self::Alpha => q.alpha.to_degrees(),
            Self::Beta => q.beta.to_degrees(),
            Self::Aileron => q.deflections[AILERON],
            Self::Tail => q.deflections[TAIL],
            Self::Rudder => q.deflections[RUDDER],
            Self::Mach => q.mach,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Alpha => "alpha",
            Self::Beta => "beta",
            Self::Aileron => "aileron",
            Self::Tail => "tail",
            Self::Rudder => "rudder",
            Self::Mach => "mach",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub variable: Variable,
    pub breakpoints: Vec<f64>,
}

/// N-dimensional rectangular grid, values row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    axes: Vec<Axis>,
    values: Vec<f64>,
}

impl GridTable {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self, String> {
        if axes.is_empty() {
            return Err("table needs at least one axis".into());
        }
        for axis in &axes {
            if axis.breakpoints.len() < 2 {
                return Err(format!("axis {} needs at least two breakpoints", axis.variable));
            }
            if axis.breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(format!("axis {} breakpoints are not strictly increasing", axis.variable));
            }
        }
        let expected: usize = axes.iter().map(|a| a.breakpoints.len()).product();
        if values.len() != expected {
            return Err(format!("expected {expected} values, found {}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite table value".into());
        }
        Ok(Self { axes, values })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Multilinear interpolation at `point` (one coordinate per axis).
    /// Coordinates outside the grid are clamped to it; the flag reports that.
    pub fn interpolate(&self, point: &[f64]) -> (f64, bool) {
        debug_assert_eq!(point.len(), self.axes.len());
        let n = self.axes.len();
        let mut clamped = false;
        let mut lower = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for (axis, &x) in self.axes.iter().zip(point) {
            let bp = &axis.breakpoints;
            let (lo, hi) = (bp[0], bp[bp.len() - 1]);
            let xc = x.clamp(lo, hi);
            clamped |= xc != x;
            // Index of the cell whose lower edge is the last breakpoint <= xc.
            let i = match bp.partition_point(|&b| b <= xc) {
                0 => 0,
                k => (k - 1).min(bp.len() - 2),
            };
            lower.push(i);
            frac.push((xc - bp[i]) / (bp[i + 1] - bp[i]));
        }
        let mut strides = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.axes[d + 1].breakpoints.len();
        }
        let mut total = 0.0;
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut index = 0;
            for d in 0..n {
                let upper = (corner >> d) & 1 == 1;
                weight *= if upper { frac[d] } else { 1.0 - frac[d] };
                index += (lower[d] + usize::from(upper)) * strides[d];
            }
            if weight != 0.0 {
                total += weight * self.values[index];
            }
        }
        (total, clamped)
    }

    fn evaluate(&self, q: &AeroQuery) -> (f64, bool) {
        let point: Vec<f64> = self.axes.iter().map(|a| a.variable.value(q)).collect();
        self.interpolate(&point)
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, TableError> {
        let mut axes = Vec::new();
        let mut values = Vec::new();
        let mut row_len = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = |message: String| TableError::Parse { path: path.to_string(), line: lineno + 1, message };
            if fields[0].parse::<f64>().is_err() {
                if !values.is_empty() {
                    return Err(err("axis declaration after values".into()));
                }
                let variable = Variable::parse(fields[0])
                    .ok_or_else(|| err(format!("unknown axis name {:?}", fields[0])))?;
                let breakpoints = fields[1..]
                    .iter()
                    .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad breakpoint {f:?}: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                axes.push(Axis { variable, breakpoints });
                continue;
            }
            let row = fields
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad value {f:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let expected = *row_len.get_or_insert_with(|| axes.last().map_or(0, |a| a.breakpoints.len()));
            if row.len() != expected {
                return Err(err(format!("row has {} values, expected {expected}", row.len())));
            }
            values.extend(row);
        }
        Self::new(axes, values).map_err(|message| TableError::Shape { path: path.to_string(), message })
    }
}

/// Rate factor multiplying a table term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    One,
    PHat,
    QHat,
    RHat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableTerm {
    pub table: GridTable,
    pub multiplier: Multiplier,
}

/// Each coefficient is a sum of table terms, optionally multiplied by a nondimensional rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSet {
    pub terms: [Vec<TableTerm>; 6],
}

pub const COEFFICIENT_NAMES: [&str; 6] = ["cx", "cy", "cz", "cl", "cm", "cn"];

impl TableSet {
    /// Reads `<coef>.csv` for every coefficient plus optional rate terms
    /// `<coef>_phat.csv`, `<coef>_qhat.csv`, `<coef>_rhat.csv`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, TableError> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<Option<GridTable>, TableError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            let p = path.display().to_string();
            let text = std::fs::read_to_string(&path).map_err(|source| TableError::Io { path: p.clone(), source })?;
            GridTable::parse(&text, &p).map(Some)
        };
        let mut terms: [Vec<TableTerm>; 6] = Default::default();
        for (i, name) in COEFFICIENT_NAMES.iter().enumerate() {
            let base = read(&format!("{name}.csv"))?.ok_or_else(|| TableError::Missing(format!("{name}.csv")))?;
            terms[i].push(TableTerm { table: base, multiplier: Multiplier::One });
            for (suffix, multiplier) in [("phat", Multiplier::PHat), ("qhat", Multiplier::QHat), ("rhat", Multiplier::RHat)] {
                if let Some(table) = read(&format!("{name}_{suffix}.csv"))? {
                    terms[i].push(TableTerm { table, multiplier });
                }
            }
        }
        Ok(Self { terms })
    }

    /// Breakpoint span of `variable` shared by all tables that use it.
    pub fn range(&self, variable: Variable) -> Option<[f64; 2]> {
        let mut out: Option<[f64; 2]> = None;
        for term in self.terms.iter().flatten() {
            for axis in term.table.axes() {
                if axis.variable == variable {
                    let lo = axis.breakpoints[0];
                    let hi = axis.breakpoints[axis.breakpoints.len() - 1];
                    out = Some(match out {
                        None => [lo, hi],
                        Some([a, b]) => [a.max(lo), b.min(hi)],
                    });
                }
            }
        }
        out
    }

    pub fn evaluate(&self, q: &AeroQuery, geometry: &Geometry) -> (Coefficients, bool) {
        let hat = q.normalized_rates(geometry);
        let mut out = [0.0; 6];
        let mut clamped = false;
        for (slot, terms) in out.iter_mut().zip(&self.terms) {
            for term in terms {
                let (v, c) = term.table.evaluate(q);
                clamped |= c;
                let m = match term.multiplier {
                    Multiplier::One => 1.0,
                    Multiplier::PHat => hat.x,
                    Multiplier::QHat => hat.y,
                    Multiplier::RHat => hat.z,
                };
                *slot += v * m;
            }
        }
        (Coefficients::from_array(out), clamped)
    }
}
