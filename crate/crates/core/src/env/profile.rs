//! Pilot rate-command profiles: piecewise-linear breakpoints per axis.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("{axis} profile: {message}")]
    Invalid { axis: &'static str, message: String },
}

/// Breakpoints `[time s, rate deg/s]`, linearly interpolated and held after
/// the last point. Repeating a time gives a step. An empty channel is zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Channel {
    pub points: Vec<[f64; 2]>,
}

impl Channel {
    pub fn constant(value: f64) -> Self {
        Self { points: vec![[0.0, value]] }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    fn validate(&self, axis: &'static str) -> Result<(), ProfileError> {
        let err = |message: &str| ProfileError::Invalid { axis, message: message.to_string() };
        if let Some(first) = self.points.first() {
            if first[0] != 0.0 {
                return Err(err("first breakpoint must be at t = 0"));
            }
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(err("non-finite breakpoint"));
        }
        if self.points.windows(2).any(|w| w[1][0] < w[0][0]) {
            return Err(err("breakpoint times must be nondecreasing"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        let pts = &self.points;
        let Some(last) = pts.last() else {
            return 0.0;
        };
        if t >= last[0] {
            return last[1];
        }
        // Last breakpoint at or before t, so a repeated time switches at that instant.
        let i = pts.partition_point(|p| p[0] <= t);
        if i == 0 {
            return pts[0][1];
        }
        let (a, b) = (pts[i - 1], pts[i]);
        a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
    }
}

/// Pilot commands on all three axes, deg/s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PilotProfile {
    pub p: Channel,
    pub q: Channel,
    pub r: Channel,
}

impl PilotProfile {
    pub fn pitch(q: f64) -> Self {
        Self { q: Channel::constant(q), ..Self::default() }
    }

    pub fn coupled(p: f64, q: f64) -> Self {
        Self { p: Channel::constant(p), q: Channel::constant(q), r: Channel::zero() }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        self.p.validate("p")?;
        self.q.validate("q")?;
        self.r.validate("r")
    }

    pub fn at(&self, t: f64) -> [f64; 3] {
        [self.p.value(t), self.q.value(t), self.r.value(t)]
    }
}
