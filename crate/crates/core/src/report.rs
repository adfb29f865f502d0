//! Check reports and the verification manifest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub parameters: BTreeMap<String, String>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    /// Passes iff `residual` is finite and below `tolerance`.
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        CheckReport {
            check_name: name.into(),
            parameters: BTreeMap::new(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual < tolerance,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Forces a failure on top of the residual comparison.
    pub fn require(mut self, cond: bool, key: &str) -> Self {
        if !cond {
            self.pass = false;
        }
        self.param(key, cond)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub checks: Vec<CheckReport>,
}

impl Manifest {
    /// Sorts by check name so that output does not depend on evaluation order.
    pub fn new(mut checks: Vec<CheckReport>) -> Self {
        checks.sort_by(|a, b| a.check_name.cmp(&b.check_name));
        Manifest { checks }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}
