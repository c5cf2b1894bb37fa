use serde::{Deserialize, Serialize};

use super::metrics::EvalSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DependenceThresholds {
    /// Drop in success rate above which a policy counts as dependent.
    pub success: f64,
    /// Drop in return, as a fraction of the on-mode return span, above which
    /// a policy counts as dependent.
    pub return_fraction: f64,
    /// Width of the on-mode return span in standard deviations.
    pub span_sigmas: f64,
}

impl Default for DependenceThresholds {
    fn default() -> Self {
        Self {
            success: 0.2,
            return_fraction: 0.2,
            span_sigmas: 4.0,
        }
    }
}

/// The three statistics of one RTA mode that the detector looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeStats {
    pub return_mean: f64,
    pub return_std: f64,
    pub success: f64,
}

impl From<&EvalSummary> for ModeStats {
    fn from(s: &EvalSummary) -> Self {
        Self {
            return_mean: s.ret.mean,
            return_std: s.ret.std,
            success: s.success.mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub dependent: bool,
    /// `return_on - return_off`.
    pub delta_return: f64,
    /// `success_on - success_off`.
    pub delta_success: f64,
    pub return_threshold: f64,
}

pub fn detect_dependence_stats(on: ModeStats, off: ModeStats, t: &DependenceThresholds) -> DependenceReport {
    let delta_return = on.return_mean - off.return_mean;
    let delta_success = on.success - off.success;
    let return_threshold = t.return_fraction * t.span_sigmas * on.return_std;
    DependenceReport {
        dependent: delta_success > t.success || delta_return > return_threshold,
        delta_return,
        delta_success,
        return_threshold,
    }
}

pub fn detect_dependence(on: &EvalSummary, off: &EvalSummary, t: &DependenceThresholds) -> DependenceReport {
    detect_dependence_stats(on.into(), off.into(), t)
}
