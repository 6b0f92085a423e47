use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One measured inequality `lhs <= C * sum(rhs_terms)` at one instant.
///
/// `implied_constant` is the smallest `C` consistent with the measurement.
/// When the right side vanishes the constant is `0` for a vanishing left side
/// and `+inf` otherwise. Two-sided audits (Bernstein) also carry a `floor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityAudit {
    pub name: String,
    pub time: Option<f64>,
    pub lhs: f64,
    pub rhs_terms: BTreeMap<String, f64>,
    pub implied_constant: f64,
    pub ceiling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    pub pass: bool,
}

impl InequalityAudit {
    pub fn new(
        name: impl Into<String>,
        lhs: f64,
        rhs_terms: impl IntoIterator<Item = (String, f64)>,
        ceiling: f64,
    ) -> Self {
        let rhs_terms: BTreeMap<String, f64> = rhs_terms.into_iter().collect();
        let total: f64 = rhs_terms.values().sum();
        let implied_constant = if total > 0.0 {
            lhs / total
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        InequalityAudit {
            name: name.into(),
            time: None,
            lhs,
            rhs_terms,
            implied_constant,
            ceiling,
            floor: None,
            pass: implied_constant <= ceiling,
        }
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    /// Adds a lower bound on the implied constant and recomputes `pass`.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self.pass = self.implied_constant <= self.ceiling && self.implied_constant >= floor;
        self
    }

    pub fn rhs_total(&self) -> f64 {
        self.rhs_terms.values().sum()
    }
}

pub(crate) fn term(name: &str, value: f64) -> (String, f64) {
    (name.to_string(), value)
}
