//! Confidence intervals and Z tests on DP estimates.

use serde::Serialize;

use crate::error::{DpError, Result};
pub use crate::normal::{phi, phi_inv};
use crate::propagation::DpEstimate;

#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub clipped_lower: f64,
    pub clipped_upper: f64,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    EeocLessThan08,
    AbTwoSided,
    AbOneSidedBGtA,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub z: f64,
    pub p_value: f64,
    pub reject_at_5pct: bool,
    pub kind: TestKind,
}

pub fn confidence_interval(est: &DpEstimate, level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(DpError::InvalidInput(format!(
            "confidence level must lie in (0,1), got {level}"
        )));
    }
    if !est.se.is_finite() {
        return Err(DpError::InvalidInput("non-finite standard error".into()));
    }
    let mut diagnostics = Vec::new();
    let (lower, upper) = if est.se == 0.0 {
        diagnostics.push("degenerate interval: standard error is zero".to_string());
        (est.dp, est.dp)
    } else {
        let zs = phi_inv((1.0 + level) / 2.0);
        (est.dp - zs * est.se, est.dp + zs * est.se)
    };
    Ok(ConfidenceInterval {
        level,
        lower,
        upper,
        clipped_lower: lower.clamp(0.0, 1.0),
        clipped_upper: upper.clamp(0.0, 1.0),
        diagnostics,
    })
}

/// One-sided test of H0: DP >= 0.8 against H1: DP < 0.8, the EEOC
/// four-fifths screen. Rejects for small Z.
pub fn test_eeoc(est: &DpEstimate) -> Result<TestResult> {
    if est.se <= 0.0 {
        return Err(DpError::TestUndefined(
            "EEOC test needs a positive standard error".into(),
        ));
    }
    let z = (est.dp - 0.8) / est.se;
    let p_value = phi(z);
    Ok(TestResult {
        z,
        p_value,
        reject_at_5pct: z < phi_inv(0.05),
        kind: TestKind::EeocLessThan08,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbSided {
    Two,
    OneBGtA,
}

/// A/B comparison of two DP estimates. One-sided tests H1: DP_B > DP_A and
/// rejects for large Z, consistent with its p-value 1 - Phi(Z).
pub fn test_ab(a: &DpEstimate, b: &DpEstimate, sided: AbSided) -> Result<TestResult> {
    let pooled = (a.se * a.se + b.se * b.se).sqrt();
    if pooled <= 0.0 {
        return Err(DpError::TestUndefined(
            "A/B test needs a positive pooled standard error".into(),
        ));
    }
    let z = (b.dp - a.dp) / pooled;
    match sided {
        AbSided::Two => Ok(TestResult {
            z,
            p_value: 2.0 * (1.0 - phi(z.abs())),
            reject_at_5pct: z.abs() > phi_inv(0.975),
            kind: TestKind::AbTwoSided,
        }),
        AbSided::OneBGtA => Ok(TestResult {
            z,
            p_value: 1.0 - phi(z),
            reject_at_5pct: z > phi_inv(0.95),
            kind: TestKind::AbOneSidedBGtA,
        }),
    }
}
