//! Inequality check records shared by the verification routines.

use serde::{Deserialize, Serialize};

/// One checked inequality. `margin` is positive when the inequality holds
/// with room to spare: `rhs − lhs` for upper bounds, `lhs − rhs` for lower
/// bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub instance: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    /// `lhs < rhs + slack`.
    pub fn less(instance: impl Into<String>, inequality: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = rhs - lhs;
        Check::record(instance, inequality, lhs, rhs, margin, margin > -slack)
    }

    /// `lhs ≤ rhs + slack`.
    pub fn less_eq(instance: impl Into<String>, inequality: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = rhs - lhs;
        Check::record(instance, inequality, lhs, rhs, margin, margin >= -slack)
    }

    /// `lhs > rhs − slack`.
    pub fn greater(instance: impl Into<String>, inequality: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = lhs - rhs;
        Check::record(instance, inequality, lhs, rhs, margin, margin > -slack)
    }

    /// `lhs ≥ rhs − slack`.
    pub fn greater_eq(instance: impl Into<String>, inequality: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = lhs - rhs;
        Check::record(instance, inequality, lhs, rhs, margin, margin >= -slack)
    }

    /// `|lhs − rhs| ≤ slack`; the margin is `slack − |lhs − rhs|`.
    pub fn close(instance: impl Into<String>, inequality: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = slack - (lhs - rhs).abs();
        Check::record(instance, inequality, lhs, rhs, margin, margin >= 0.0)
    }

    fn record(
        instance: impl Into<String>,
        inequality: impl Into<String>,
        lhs: f64,
        rhs: f64,
        margin: f64,
        pass: bool,
    ) -> Self {
        Check { instance: instance.into(), inequality: inequality.into(), lhs, rhs, margin, pass }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
