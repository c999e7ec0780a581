//! Per-period cash-flow distributions.

use serde::{Deserialize, Serialize};

use crate::tree::ValidationReport;

/// A single period's cash flow in $K: a fixed number, a Gaussian forecast,
/// or an interval forecast (uniform).
///
/// Negative values are outflows (investments), positive are inflows. A
/// deterministic amount is interchangeable with the degenerate Gaussian
/// (sd = 0) everywhere in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CashFlowDist {
    Deterministic { value: f64 },
    Gaussian { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl From<f64> for CashFlowDist {
    fn from(value: f64) -> Self {
        CashFlowDist::Deterministic { value }
    }
}

impl CashFlowDist {
    pub fn deterministic(value: f64) -> Self {
        CashFlowDist::Deterministic { value }
    }

    pub fn gaussian(mean: f64, sd: f64) -> Self {
        CashFlowDist::Gaussian { mean, sd }
    }

    /// Gaussian with spread given as a coefficient of variation:
    /// sd = |mean| * cv.
    pub fn gaussian_cv(mean: f64, cv: f64) -> Self {
        CashFlowDist::Gaussian {
            mean,
            sd: mean.abs() * cv,
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        CashFlowDist::Uniform { lo, hi }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CashFlowDist::Deterministic { value } => value,
            CashFlowDist::Gaussian { mean, .. } => mean,
            CashFlowDist::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CashFlowDist::Deterministic { .. } => 0.0,
            CashFlowDist::Gaussian { sd, .. } => sd * sd,
            CashFlowDist::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// The scalar this distribution degenerates to, if it carries no
    /// randomness (Deterministic, Gaussian with sd = 0, Uniform with
    /// lo = hi).
    pub fn as_scalar(&self) -> Option<f64> {
        match *self {
            CashFlowDist::Deterministic { value } => Some(value),
            CashFlowDist::Gaussian { mean, sd } if sd == 0.0 => Some(mean),
            CashFlowDist::Uniform { lo, hi } if lo == hi => Some(lo),
            _ => None,
        }
    }

    pub fn is_random(&self) -> bool {
        self.as_scalar().is_none()
    }

    /// True for distributions the Gaussian analytic engine accepts
    /// (Gaussian proper or deterministic degenerate).
    pub fn is_gaussian_compatible(&self) -> bool {
        !matches!(self, CashFlowDist::Uniform { .. })
    }

    /// Appends any parameter violations to `report`, using `path` to name
    /// this distribution's location in the containing model.
    pub fn check(&self, path: &str, report: &mut ValidationReport) {
        match *self {
            CashFlowDist::Deterministic { value } => {
                if !value.is_finite() {
                    report.push(format!("{path}.value"), format!("must be finite, got {value}"));
                }
            }
            CashFlowDist::Gaussian { mean, sd } => {
                if !mean.is_finite() {
                    report.push(format!("{path}.mean"), format!("must be finite, got {mean}"));
                }
                if !(sd >= 0.0) || !sd.is_finite() {
                    report.push(format!("{path}.sd"), format!("must be >= 0 and finite, got {sd}"));
                }
            }
            CashFlowDist::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    report.push(path.to_string(), format!("bounds must be finite, got [{lo}, {hi}]"));
                } else if lo > hi {
                    report.push(path.to_string(), format!("lo must be <= hi, got [{lo}, {hi}]"));
                }
            }
        }
    }
}
