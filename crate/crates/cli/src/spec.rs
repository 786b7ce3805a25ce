//! State descriptions read from JSON documents.

use serde::{Deserialize, Serialize};
use std::path::Path;
use xree::{ComplexMatrix4, DensityMatrix, FilterNormalForm, XStateParams};

use crate::CliError;

/// Eigenvalue parameters. `eta` defaults to zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub lambda0: f64,
    pub lambda3: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi: f64,
    #[serde(default)]
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// One input state. Exactly one of the three shapes, written as
/// `{"params": {...}}`, `{"filter": {...}}` or `{"matrix": [[re, im], ...]}`
/// with 16 row-major entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Params(ParamsSpec),
    Filter(FilterSpec),
    Matrix(Vec<[f64; 2]>),
}

impl From<XStateParams> for StateSpec {
    fn from(p: XStateParams) -> Self {
        StateSpec::Params(ParamsSpec {
            lambda0: p.lambda0,
            lambda3: p.lambda3,
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            phi: p.phi,
            eta: p.eta,
        })
    }
}

impl StateSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validated parameters of the described state.
    pub fn resolve(&self) -> Result<XStateParams, CliError> {
        let p = match self {
            StateSpec::Params(s) => XStateParams::new(s.lambda0, s.lambda3, s.lambda1, s.lambda2, s.phi, s.eta)?,
            StateSpec::Filter(f) => {
                XStateParams::from_filter_normal_form(&FilterNormalForm { a: f.a, b: f.b, c: f.c, d: f.d })?
            }
            StateSpec::Matrix(entries) => {
                if entries.len() != 16 {
                    return Err(CliError::Parse(format!("matrix needs 16 entries, got {}", entries.len())));
                }
                let mut m = ComplexMatrix4::zeros();
                for (k, [re, im]) in entries.iter().enumerate() {
                    m[(k / 4, k % 4)] = xree::Complex64::new(*re, *im);
                }
                XStateParams::from_matrix(&DensityMatrix::new(m)?)?
            }
        };
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_shape() {
        let s = StateSpec::parse(r#"{"params": {"lambda0": 0.5, "lambda3": 0.1, "lambda1": 0.25, "lambda2": 0.15, "phi": 1.5707963267948966}}"#).unwrap();
        let p = s.resolve().unwrap();
        assert_eq!(p.eta, 0.0);
        assert_eq!(p.lambda1, 0.25);
    }

    #[test]
    fn filter_shape() {
        let s = StateSpec::parse(r#"{"filter": {"a": 1.0, "b": 0.4, "c": 0.2, "d": 0.3}}"#).unwrap();
        let p = s.resolve().unwrap();
        assert!((p.lambda0 + p.lambda1 + p.lambda2 + p.lambda3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_shape_round_trips_params() {
        let p = XStateParams::new(0.5, 0.1, 0.25, 0.15, 1.2, 0.4).unwrap();
        let m = p.matrix();
        let entries: Vec<[f64; 2]> = (0..16).map(|k| [m[(k / 4, k % 4)].re, m[(k / 4, k % 4)].im]).collect();
        let q = StateSpec::Matrix(entries).resolve().unwrap();
        assert!(q.matrix().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn two_shapes_are_rejected() {
        let text = r#"{"filter": {"a": 0.6, "b": 0.2, "c": 0.1, "d": 0.3}, "matrix": []}"#;
        assert!(matches!(StateSpec::parse(text), Err(CliError::Parse(_))));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{"params": {"lambda0": 0.5, "lambda3": 0.1, "lambda1": 0.25, "lambda2": 0.15, "phi": 1.0, "psi": 2}}"#;
        assert!(matches!(StateSpec::parse(text), Err(CliError::Parse(_))));
    }

    #[test]
    fn wrong_matrix_size() {
        assert!(matches!(StateSpec::Matrix(vec![[0.25, 0.0]; 4]).resolve(), Err(CliError::Parse(_))));
    }

    #[test]
    fn trace_violation_names_the_invariant() {
        let s = StateSpec::parse(r#"{"params": {"lambda0": 0.6, "lambda3": 0.1, "lambda1": 0.25, "lambda2": 0.15, "phi": 1.0}}"#).unwrap();
        let err = s.resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("must equal 1"), "{err}");
    }
}
