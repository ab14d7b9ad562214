//! Delta-method propagation from group means to the DP ratio.
//!
//! Two stages: the 2x2 covariance of (rsmin, rsmax) via the softmin/softmax
//! Jacobian, then the scalar variance of the ratio a/b via its gradient
//! `[1/b, -a/b^2]`. Raw (exact min/max) propagation uses the limiting
//! equal-weight-over-ties convention for the gradient rows.

use serde::Serialize;

use crate::data_model::MeansWithCovariance;
use crate::error::{DpError, Result};
use crate::smoothing::{rsmax, rsmin, softmax, softmin, Alpha};

/// How the sharpness parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SmoothingConfig {
    /// Use this alpha regardless of sample size.
    Fixed(f64),
    /// alpha = c * n^q with q < 1/2.
    Rule { c: f64, q: f64 },
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig::Rule { c: 1.0, q: 0.4 }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SmoothingConfig::Fixed(a) => {
                Alpha::new(a)?;
            }
            SmoothingConfig::Rule { c, q } => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(DpError::InvalidInput(format!("rule constant c must be positive, got {c}")));
                }
                if !(q > 0.0 && q < 0.5) {
                    return Err(DpError::InvalidInput(format!(
                        "rule exponent q must lie in (0, 1/2), got {q}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Resolved alpha, plus a diagnostic if a fixed alpha sits at or above the
/// sqrt(N) regime boundary.
#[derive(Debug, Clone)]
pub struct AlphaResolution {
    pub alpha: Alpha,
    pub warning: Option<String>,
}

pub fn resolve_alpha(config: SmoothingConfig, n: u64) -> Result<AlphaResolution> {
    config.validate()?;
    if n == 0 {
        return Err(DpError::InvalidInput("n must be >= 1".into()));
    }
    match config {
        SmoothingConfig::Fixed(a) => {
            let warning = if a >= (n as f64).sqrt() {
                Some(format!(
                    "alpha = {a} is at or above sqrt(N) = {}; asymptotic normality is not guaranteed",
                    (n as f64).sqrt()
                ))
            } else {
                None
            };
            Ok(AlphaResolution { alpha: Alpha::new(a)?, warning })
        }
        SmoothingConfig::Rule { c, q } => Ok(AlphaResolution {
            alpha: Alpha::new(c * (n as f64).powf(q))?,
            warning: None,
        }),
    }
}

/// Smoothed extremes of the group rates with their 2x2 delta-method
/// covariance (per-sqrt(N) scale).
#[derive(Debug, Clone, Serialize)]
pub struct SmoothedExtremes {
    pub min_value: f64,
    pub max_value: f64,
    /// [[var_min, cov], [cov, var_max]]
    pub cov: [[f64; 2]; 2],
    pub alpha_used: f64,
    /// Largest single-group sigma2, carried for the degenerate-normality check.
    pub max_group_sigma2: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimand {
    Smooth,
    Raw,
}

/// DP point estimate with its delta-method variance.
#[derive(Debug, Clone, Serialize)]
pub struct DpEstimate {
    pub dp: f64,
    /// Variance on the sqrt(N) scale (sigma^2_DP).
    pub variance: f64,
    /// Standard error of dp itself: sqrt(variance / n).
    pub se: f64,
    pub n: u64,
    pub alpha_used: Option<f64>,
    pub estimand: Estimand,
    pub diagnostics: Vec<String>,
}

fn quad_form_2x2(g: [f64; 2], cov: [[f64; 2]; 2]) -> f64 {
    g[0] * g[0] * cov[0][0] + 2.0 * g[0] * g[1] * cov[0][1] + g[1] * g[1] * cov[1][1]
}

fn propagate_cov(wmin: &[f64], wmax: &[f64], sigma2: &[f64]) -> [[f64; 2]; 2] {
    let mut vmin = 0.0;
    let mut vmax = 0.0;
    let mut cov = 0.0;
    for i in 0..sigma2.len() {
        vmin += wmin[i] * wmin[i] * sigma2[i];
        vmax += wmax[i] * wmax[i] * sigma2[i];
        cov += wmin[i] * wmax[i] * sigma2[i];
    }
    [[vmin, cov], [cov, vmax]]
}

pub fn smoothed_extremes(m: &MeansWithCovariance, alpha: Alpha) -> Result<SmoothedExtremes> {
    if m.s_hat.len() < 2 {
        return Err(DpError::InvalidInput(
            "DP inference needs at least two groups".into(),
        ));
    }
    let min_value = rsmin(&m.s_hat, alpha)?;
    let max_value = rsmax(&m.s_hat, alpha)?;
    let wmin = softmin(&m.s_hat, alpha)?;
    let wmax = softmax(&m.s_hat, alpha)?;
    Ok(SmoothedExtremes {
        min_value,
        max_value,
        cov: propagate_cov(&wmin, &wmax, &m.sigma2),
        alpha_used: alpha.value(),
        max_group_sigma2: m.sigma2.iter().copied().fold(0.0, f64::max),
        n: m.n,
    })
}

fn ratio_estimate(
    a: f64,
    b: f64,
    cov: [[f64; 2]; 2],
    n: u64,
    alpha_used: Option<f64>,
    estimand: Estimand,
    max_group_sigma2: f64,
) -> Result<DpEstimate> {
    if b <= 0.0 {
        return Err(DpError::UndefinedDp(
            "all-zero success rates: max rate is not positive".into(),
        ));
    }
    let mut diagnostics = Vec::new();
    let dp = a / b;
    let g = [1.0 / b, -a / (b * b)];
    let mut variance = quad_form_2x2(g, cov);
    if variance < 0.0 {
        if variance < -1e-12 {
            return Err(DpError::InvalidInput(format!(
                "propagated variance is negative beyond tolerance: {variance}"
            )));
        }
        diagnostics.push(format!(
            "variance clamped to 0 from floating-point noise ({variance:e})"
        ));
        variance = 0.0;
    }
    if variance < 1e-3 * max_group_sigma2 {
        diagnostics.push(
            "degenerate-normality: smooth DP variance collapsed relative to group variances; \
             normal inference is unreliable here"
                .to_string(),
        );
    }
    let se = (variance / n as f64).sqrt();
    Ok(DpEstimate {
        dp,
        variance,
        se,
        n,
        alpha_used,
        estimand,
        diagnostics,
    })
}

pub fn dp_point_and_variance(e: &SmoothedExtremes) -> Result<DpEstimate> {
    ratio_estimate(
        e.min_value,
        e.max_value,
        e.cov,
        e.n,
        Some(e.alpha_used),
        Estimand::Smooth,
        e.max_group_sigma2,
    )
}

/// Raw min-over-max DP with the alpha -> infinity gradient convention:
/// equal weight on every exact arg-extreme.
pub fn dp_raw(m: &MeansWithCovariance) -> Result<DpEstimate> {
    if m.s_hat.len() < 2 {
        return Err(DpError::InvalidInput(
            "DP inference needs at least two groups".into(),
        ));
    }
    let min = m.s_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let max = m.s_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_min = m.s_hat.iter().filter(|&&x| x == min).count() as f64;
    let n_max = m.s_hat.iter().filter(|&&x| x == max).count() as f64;
    let wmin: Vec<f64> = m
        .s_hat
        .iter()
        .map(|&x| if x == min { 1.0 / n_min } else { 0.0 })
        .collect();
    let wmax: Vec<f64> = m
        .s_hat
        .iter()
        .map(|&x| if x == max { 1.0 / n_max } else { 0.0 })
        .collect();
    let cov = propagate_cov(&wmin, &wmax, &m.sigma2);
    let max_sigma2 = m.sigma2.iter().copied().fold(0.0, f64::max);
    ratio_estimate(min, max, cov, m.n, None, Estimand::Raw, max_sigma2)
}

/// Raw-scale weights over exact arg-minima, used by reports.
pub fn raw_min_weights(s_hat: &[f64]) -> Vec<f64> {
    let min = s_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let n_min = s_hat.iter().filter(|&&x| x == min).count() as f64;
    s_hat
        .iter()
        .map(|&x| if x == min { 1.0 / n_min } else { 0.0 })
        .collect()
}
