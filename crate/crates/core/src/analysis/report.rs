use serde::{Deserialize, Serialize};

use super::{CaccioppoliOutcome, MonotonicityOutcome, OscillationOutcome, ResidualOutcome};

/// Discretization slacks applied to the inequalities, recorded with every
/// report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    /// Relative slack on `lhs ≤ rhs` in the Caccioppoli check.
    pub caccioppoli: f64,
    /// Relative change allowed under one mesh refinement.
    pub refinement: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Slack {
            caccioppoli: 0.05,
            refinement: 0.10,
        }
    }
}

/// Everything the estimates say about one computed field. Fields that were
/// not requested stay empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub harnack_quotient: Option<f64>,
    pub bloch_integral: Option<f64>,
    pub caccioppoli: Option<CaccioppoliOutcome>,
    pub residual: Option<ResidualOutcome>,
    pub monotonicity: Option<MonotonicityOutcome>,
    pub oscillation: Option<OscillationOutcome>,
    pub slack: Slack,
    /// Things a reader should know about, such as dropped infinite terms.
    pub flags: alloc::vec::Vec<alloc::string::String>,
}

impl VerificationReport {
    /// Every requested inequality holds within the recorded slack.
    pub fn all_hold(&self) -> bool {
        self.caccioppoli.map_or(true, |c| c.holds(self.slack.caccioppoli))
            && self.monotonicity.as_ref().map_or(true, |m| m.passed)
            && self.oscillation.map_or(true, |o| o.monotone_step_holds())
    }
}
