//! Named moment-inequality checks, each returning a uniform report.
//!
//! Every check compares a quantum left-hand side against a classical bound
//! and records the intermediate scalars needed to audit the run. The sign
//! convention is margin = rhs - lhs, so negative margin means the classical
//! bound is broken.

use std::collections::BTreeMap;

use serde::Serialize;

mod bell;
mod cfrd;
mod fock;
mod ghz;
mod pentagon;
mod square;

pub use bell::{chsh_bell_scenario, tsirelson_check};
pub use cfrd::{
    cfrd_two_party, cfrd_two_party_sweep, ghz_quadripartite_cfrd, ghz_state,
    ghz_tripartite_cfrd, oscillator_tripartite_bound, quadripartite_cfrd_fock,
    quadripartite_cfrd_state, raising_pair, tripartite_cfrd, ComplexObservable,
};
pub use fock::{det4m, m_matrix};
pub use ghz::{ghz_scenario, ghz_test, ghz_test_on};
pub use pentagon::{pentagon_model, pentagon_test, PentagonModel, PENTAGON_Q};
pub use square::{det_identity_check, mermin_peres_square, mp_inequality, MerminPeresSquare};

/// Default absolute tolerance on the margin of a report.
pub const REPORT_TOL: f64 = 1e-9;

/// Uniform result of one inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs; negative means violated.
    pub margin: f64,
    pub violated: bool,
    pub tolerance: f64,
    /// Named intermediate scalars for auditing.
    pub details: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl InequalityReport {
    pub fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::with_tolerance(name, lhs, rhs, REPORT_TOL)
    }

    pub fn with_tolerance(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        assert!(lhs.is_finite() && rhs.is_finite(), "non-finite report sides");
        let margin = rhs - lhs;
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            violated: margin < -tolerance,
            tolerance,
            details: BTreeMap::new(),
            seed: None,
            params: BTreeMap::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_sign_convention() {
        let r = InequalityReport::new("demo", 6.0, 5.0);
        assert!(r.violated);
        assert_eq!(r.margin, -1.0);
        let r = InequalityReport::new("demo", 5.0, 5.0);
        assert!(!r.violated);
    }

    #[test]
    fn report_serializes_with_schema_fields() {
        let r = InequalityReport::new("demo", 1.0, 2.0)
            .detail("aux", 0.5)
            .param("trials", 10)
            .with_seed(7);
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "name",
            "lhs",
            "rhs",
            "margin",
            "violated",
            "tolerance",
            "details",
            "seed",
            "params",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
