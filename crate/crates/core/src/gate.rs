//! Pass/fail records shared by every verification routine.

use serde::Serialize;

/// Outcome of one inequality gate. `margin` is positive when the gate passes
/// with room to spare and negative by the amount of the violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateOutcome {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_time: Option<f64>,
}

impl GateOutcome {
    /// Passes iff `measured <= bound`. A NaN measurement fails.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: measured <= bound,
            measured,
            bound,
            margin: bound - measured,
            worst_time: None,
        }
    }

    /// Passes iff `measured >= bound`. A NaN measurement fails.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: measured >= bound,
            measured,
            bound,
            margin: measured - bound,
            worst_time: None,
        }
    }

    /// A yes/no condition, recorded as measured 1/0 against bound 1.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.worst_time = Some(t);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
