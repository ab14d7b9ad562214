//! Smooth extremes: rsmax/rsmin (LogSumExp) and their gradients.
//!
//! All evaluations go through the shifted form `m + log(sum exp(alpha*(a - m)))/alpha`
//! with `m = max(a)`, so every exponent is <= 0 and nothing overflows even for
//! very large sharpness values.

use crate::error::{DpError, Result};

/// Sharpness parameter of the smooth max/min family. Larger values give a
/// tighter approximation of the exact extremes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(DpError::InvalidInput(format!(
                "alpha must be positive and finite, got {value}"
            )));
        }
        Ok(Alpha(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_entries(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(DpError::InvalidInput("input vector is empty".into()));
    }
    for (i, &x) in a.iter().enumerate() {
        if !x.is_finite() {
            return Err(DpError::InvalidInput(format!(
                "entry {i} is not finite: {x}"
            )));
        }
    }
    Ok(())
}

fn max_entry(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Smooth maximum: `max(a) + log(sum_g exp(alpha*(a_g - max(a)))) / alpha`.
///
/// Satisfies `max(a) <= rsmax(a) <= max(a) + ln(G)/alpha`.
pub fn rsmax(a: &[f64], alpha: Alpha) -> Result<f64> {
    check_entries(a)?;
    let m = max_entry(a);
    // fixed index-order accumulation for bit reproducibility
    let mut sum = 0.0;
    for &x in a {
        sum += (alpha.value() * (x - m)).exp();
    }
    Ok(m + sum.ln() / alpha.value())
}

/// Smooth minimum, defined as `-rsmax(-a)`.
pub fn rsmin(a: &[f64], alpha: Alpha) -> Result<f64> {
    check_entries(a)?;
    let neg: Vec<f64> = a.iter().map(|x| -x).collect();
    Ok(-rsmax(&neg, alpha)?)
}

/// Gradient of [`rsmax`]: nonnegative weights summing to 1, concentrating on
/// the argmax entries as alpha grows.
pub fn softmax(a: &[f64], alpha: Alpha) -> Result<Vec<f64>> {
    check_entries(a)?;
    let m = max_entry(a);
    let mut w: Vec<f64> = a
        .iter()
        .map(|&x| (alpha.value() * (x - m)).exp())
        .collect();
    let mut sum = 0.0;
    for &e in &w {
        sum += e;
    }
    for e in &mut w {
        *e /= sum;
    }
    Ok(w)
}

/// Gradient of [`rsmin`]: `softmax(-a)`.
pub fn softmin(a: &[f64], alpha: Alpha) -> Result<Vec<f64>> {
    check_entries(a)?;
    let neg: Vec<f64> = a.iter().map(|x| -x).collect();
    softmax(&neg, alpha)
}

/// Hessian of [`rsmax`]: entries `alpha * S_i * (delta_ij - S_j)` where `S`
/// is the softmax weight vector. Symmetric with zero row and column sums.
pub fn softmax_jacobian(a: &[f64], alpha: Alpha) -> Result<Vec<Vec<f64>>> {
    let s = softmax(a, alpha)?;
    let g = s.len();
    let mut out = vec![vec![0.0; g]; g];
    for i in 0..g {
        for j in 0..g {
            let delta = if i == j { 1.0 } else { 0.0 };
            out[i][j] = alpha.value() * s[i] * (delta - s[j]);
        }
    }
    Ok(out)
}
