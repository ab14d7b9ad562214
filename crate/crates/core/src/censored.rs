//! MLE for the censored model: each person submits `N_i` applications and we
//! only observe whether at least one succeeded, so the observable outcome is
//! Bernoulli(1 - (1-s)^{N_i}).

use std::collections::HashMap;

use serde::Serialize;

use crate::data_model::{CensoredRecord, MeansWithCovariance};
use crate::error::{DpError, Result};
use crate::propagation::{dp_point_and_variance, smoothed_extremes, DpEstimate};
use crate::smoothing::Alpha;

const S_EPS: f64 = 1e-9;
const SCORE_TOL: f64 = 1e-8;
const BRACKET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct MleResult {
    pub s_hat: f64,
    pub se: f64,
    pub loglik: f64,
    pub iterations: u32,
    pub converged: bool,
    /// Set when every outcome is identical and the optimum sits at the edge
    /// of (0,1); `se` is meaningless there.
    pub boundary: bool,
}

/// log(1 - (1-s)^n) evaluated without cancellation.
fn log_success_prob(s: f64, n: u64) -> f64 {
    // 1 - (1-s)^n = -expm1(n * log1p(-s))
    (-f64::exp_m1(n as f64 * f64::ln_1p(-s))).ln()
}

/// Censored log-likelihood for one group.
pub fn censored_loglik(s: f64, data: &[CensoredRecord]) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(DpError::InvalidInput(format!(
            "success rate must lie in (0,1), got {s}"
        )));
    }
    if data.is_empty() {
        return Err(DpError::InvalidInput("empty group".into()));
    }
    let mut ll = 0.0;
    for r in data {
        if r.hired == 1 {
            ll += log_success_prob(s, r.applications);
        } else {
            ll += r.applications as f64 * f64::ln_1p(-s);
        }
    }
    Ok(ll)
}

/// Analytic score d l / d s.
pub fn censored_score(s: f64, data: &[CensoredRecord]) -> f64 {
    let u = 1.0 - s;
    let mut sc = 0.0;
    for r in data {
        let n = r.applications as f64;
        if r.hired == 1 {
            // n u^{n-1} / (1 - u^n), with the denominator via expm1
            let denom = -f64::exp_m1(n * u.ln());
            sc += n * u.powf(n - 1.0) / denom;
        } else {
            sc -= n / u;
        }
    }
    sc
}

/// Observed information -d^2 l / d s^2.
pub fn censored_information(s: f64, data: &[CensoredRecord]) -> f64 {
    let u = 1.0 - s;
    let mut info = 0.0;
    for r in data {
        let n = r.applications as f64;
        if r.hired == 1 {
            let denom = -f64::exp_m1(n * u.ln());
            info += n * ((n - 1.0) * u.powf(n - 2.0) * denom + n * u.powf(2.0 * n - 2.0))
                / (denom * denom);
        } else {
            info += n / (u * u);
        }
    }
    info
}

/// Maximize the censored log-likelihood over (eps, 1-eps) by bisection on
/// the score. The score is +inf near 0 when any success is observed and
/// negative near 1 when any failure is, so a sign change is guaranteed for
/// mixed data.
pub fn fit_censored(data: &[CensoredRecord]) -> Result<MleResult> {
    if data.is_empty() {
        return Err(DpError::InvalidInput("empty group".into()));
    }
    let any_success = data.iter().any(|r| r.hired == 1);
    let any_failure = data.iter().any(|r| r.hired == 0);
    if !any_success || !any_failure {
        let s_hat = if any_success { 1.0 - S_EPS } else { S_EPS };
        return Ok(MleResult {
            s_hat,
            se: f64::NAN,
            loglik: censored_loglik(s_hat, data)?,
            iterations: 0,
            converged: false,
            boundary: true,
        });
    }

    let mut lo = S_EPS;
    let mut hi = 1.0 - S_EPS;
    let mut iterations = 0u32;
    let mut s = 0.5 * (lo + hi);
    let mut converged = false;
    while hi - lo > BRACKET_TOL {
        iterations += 1;
        s = 0.5 * (lo + hi);
        let sc = censored_score(s, data);
        if sc.abs() < SCORE_TOL {
            converged = true;
            break;
        }
        if sc > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
    }
    if !converged {
        s = 0.5 * (lo + hi);
        converged = censored_score(s, data).abs() < SCORE_TOL || hi - lo <= BRACKET_TOL;
    }
    let info = censored_information(s, data);
    Ok(MleResult {
        s_hat: s,
        se: 1.0 / info.sqrt(),
        loglik: censored_loglik(s, data)?,
        iterations,
        converged,
        boundary: false,
    })
}

/// Group censored records by label in first-appearance order.
pub fn group_records(records: &[CensoredRecord]) -> Vec<(String, Vec<CensoredRecord>)> {
    let mut order: Vec<String> = Vec::new();
    let mut map: HashMap<String, Vec<CensoredRecord>> = HashMap::new();
    for r in records {
        if !map.contains_key(&r.group) {
            order.push(r.group.clone());
        }
        map.entry(r.group.clone()).or_default().push(r.clone());
    }
    order
        .into_iter()
        .map(|g| {
            let v = map.remove(&g).unwrap();
            (g, v)
        })
        .collect()
}

/// Fit every group and push the results through the standard smooth-DP
/// pipeline, rescaling each per-group standard error to the sqrt(N) scale.
pub fn dp_from_censored(records: &[CensoredRecord], alpha: Alpha) -> Result<(DpEstimate, Vec<(String, MleResult)>)> {
    let grouped = group_records(records);
    if grouped.len() < 2 {
        return Err(DpError::InvalidInput(
            "DP inference needs at least two groups".into(),
        ));
    }
    let n = records.len() as u64;
    let mut fits = Vec::new();
    for (label, data) in &grouped {
        let fit = fit_censored(data)?;
        if fit.boundary {
            return Err(DpError::InferenceUnavailable(format!(
                "group {label} has all-identical outcomes; its MLE is on the boundary"
            )));
        }
        fits.push((label.clone(), fit));
    }
    let m = MeansWithCovariance {
        labels: fits.iter().map(|(l, _)| l.clone()).collect(),
        s_hat: fits.iter().map(|(_, f)| f.s_hat).collect(),
        p_hat: grouped
            .iter()
            .map(|(_, d)| d.len() as f64 / n as f64)
            .collect(),
        sigma2: fits.iter().map(|(_, f)| n as f64 * f.se * f.se).collect(),
        n,
        degenerate_groups: vec![],
    };
    let est = dp_point_and_variance(&smoothed_extremes(&m, alpha)?)?;
    Ok((est, fits))
}
