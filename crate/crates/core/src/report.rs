//! End-to-end pipelines producing JSON reports for the CLI.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::censored::{dp_from_censored, MleResult};
use crate::crossfit::{crossfit_dp, CrossfitConfig, CrossfitResult};
use crate::data_model::{
    aggregate, estimate_means, read_aggregate_csv, read_censored_csv, read_unit_csv,
    GroupedCounts, MeansWithCovariance,
};
use crate::error::Result;
use crate::inference::{confidence_interval, test_ab, test_eeoc, AbSided, ConfidenceInterval, TestResult};
use crate::propagation::{
    dp_point_and_variance, dp_raw, resolve_alpha, smoothed_extremes, DpEstimate, SmoothingConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Unit,
    Aggregate,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub format: InputFormat,
    pub smoothing: SmoothingConfig,
    pub raw: bool,
    pub level: f64,
    pub continuity_correction: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            format: InputFormat::Aggregate,
            smoothing: SmoothingConfig::default(),
            raw: false,
            level: 0.95,
            continuity_correction: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub rows: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<MeansWithCovariance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<DpEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_b: Option<DpEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence_interval: Option<ConfidenceInterval>,
    /// ln(G)/alpha bound on the smooth-vs-exact gap, per extreme.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimand_gap_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossfit: Option<CrossfitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mle_fits: Option<Vec<NamedMle>>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedMle {
    pub group: String,
    #[serde(flatten)]
    pub fit: MleResult,
}

fn digest(path: &Path, rows: u64) -> Result<InputDigest> {
    let bytes = fs::read(path)?;
    let hash = Sha256::digest(&bytes);
    Ok(InputDigest {
        path: path.display().to_string(),
        rows,
        sha256: format!("{hash:x}"),
    })
}

fn load_counts(path: &Path, format: InputFormat) -> Result<(GroupedCounts, u64)> {
    let file = fs::File::open(path)?;
    match format {
        InputFormat::Unit => {
            let records = read_unit_csv(file)?;
            let rows = records.len() as u64;
            Ok((aggregate(&records)?, rows))
        }
        InputFormat::Aggregate => {
            let counts = read_aggregate_csv(file)?;
            let rows = counts.groups.len() as u64;
            Ok((counts, rows))
        }
    }
}

struct Estimated {
    means: MeansWithCovariance,
    estimate: DpEstimate,
    gap_bound: Option<f64>,
    diagnostics: Vec<String>,
}

fn estimate_from_counts(counts: &GroupedCounts, opts: &EstimateOptions) -> Result<Estimated> {
    if counts.groups.iter().all(|g| g.successes == 0) {
        // the smooth max of an all-zero vector is ln(G)/alpha, a pure
        // smoothing artifact; the ratio estimand itself is undefined
        return Err(crate::error::DpError::UndefinedDp(
            "all-zero success rates: max rate is not positive".into(),
        ));
    }
    let means = estimate_means(counts, opts.continuity_correction);
    let mut diagnostics = Vec::new();
    for g in &means.degenerate_groups {
        diagnostics.push(format!("group {g} has a boundary rate; its plug-in variance is degenerate"));
    }
    let (estimate, gap_bound) = if opts.raw {
        (dp_raw(&means)?, None)
    } else {
        let resolved = resolve_alpha(opts.smoothing, counts.total_n)?;
        if let Some(w) = resolved.warning {
            diagnostics.push(w);
        }
        let e = smoothed_extremes(&means, resolved.alpha)?;
        let est = dp_point_and_variance(&e)?;
        let gap = (means.s_hat.len() as f64).ln() / resolved.alpha.value();
        (est, Some(gap))
    };
    diagnostics.extend(estimate.diagnostics.iter().cloned());
    Ok(Estimated {
        means,
        estimate,
        gap_bound,
        diagnostics,
    })
}

fn config_echo(opts: &EstimateOptions) -> serde_json::Value {
    serde_json::json!({
        "format": match opts.format { InputFormat::Unit => "unit", InputFormat::Aggregate => "aggregate" },
        "smoothing": opts.smoothing,
        "raw": opts.raw,
        "level": opts.level,
        "continuity_correction": opts.continuity_correction,
    })
}

pub fn run_estimate(path: &Path, opts: &EstimateOptions) -> Result<Report> {
    let (counts, rows) = load_counts(path, opts.format)?;
    let est = estimate_from_counts(&counts, opts)?;
    let ci = confidence_interval(&est.estimate, opts.level)?;
    let mut diagnostics = est.diagnostics;
    diagnostics.extend(ci.diagnostics.iter().cloned());
    Ok(Report {
        command: "estimate".into(),
        inputs: vec![digest(path, rows)?],
        config: config_echo(opts),
        groups: Some(est.means),
        estimate: Some(est.estimate),
        estimate_b: None,
        confidence_interval: Some(ci),
        estimand_gap_bound: est.gap_bound,
        test: None,
        crossfit: None,
        mle_fits: None,
        diagnostics,
    })
}

pub fn run_test_eeoc(path: &Path, opts: &EstimateOptions) -> Result<Report> {
    let (counts, rows) = load_counts(path, opts.format)?;
    let est = estimate_from_counts(&counts, opts)?;
    let test = test_eeoc(&est.estimate)?;
    let ci = confidence_interval(&est.estimate, opts.level)?;
    let mut diagnostics = est.diagnostics;
    diagnostics.extend(ci.diagnostics.iter().cloned());
    Ok(Report {
        command: "test-eeoc".into(),
        inputs: vec![digest(path, rows)?],
        config: config_echo(opts),
        groups: Some(est.means),
        estimate: Some(est.estimate),
        estimate_b: None,
        confidence_interval: Some(ci),
        estimand_gap_bound: est.gap_bound,
        test: Some(test),
        crossfit: None,
        mle_fits: None,
        diagnostics,
    })
}

pub fn run_ab_test(
    path_a: &Path,
    path_b: &Path,
    sided: AbSided,
    opts: &EstimateOptions,
) -> Result<Report> {
    let (counts_a, rows_a) = load_counts(path_a, opts.format)?;
    let (counts_b, rows_b) = load_counts(path_b, opts.format)?;
    let est_a = estimate_from_counts(&counts_a, opts)?;
    let est_b = estimate_from_counts(&counts_b, opts)?;
    let test = test_ab(&est_a.estimate, &est_b.estimate, sided)?;
    let mut diagnostics = est_a.diagnostics;
    diagnostics.extend(est_b.diagnostics);
    Ok(Report {
        command: "ab-test".into(),
        inputs: vec![digest(path_a, rows_a)?, digest(path_b, rows_b)?],
        config: config_echo(opts),
        groups: None,
        estimate: Some(est_a.estimate),
        estimate_b: Some(est_b.estimate),
        confidence_interval: None,
        estimand_gap_bound: est_a.gap_bound,
        test: Some(test),
        crossfit: None,
        mle_fits: None,
        diagnostics,
    })
}

pub fn run_crossfit(path: &Path, config: CrossfitConfig) -> Result<Report> {
    let file = fs::File::open(path)?;
    let records = read_unit_csv(file)?;
    let rows = records.len() as u64;
    let result = crossfit_dp(&records, config)?;
    Ok(Report {
        command: "crossfit".into(),
        inputs: vec![digest(path, rows)?],
        config: serde_json::json!({ "k": config.k, "seed": config.seed }),
        groups: None,
        estimate: None,
        estimate_b: None,
        confidence_interval: None,
        estimand_gap_bound: None,
        test: None,
        crossfit: Some(result),
        mle_fits: None,
        diagnostics: vec![
            "se_heuristic is sd(fold estimates)/sqrt(K): heuristic, not asymptotically justified"
                .to_string(),
        ],
    })
}

pub fn run_mle(path: &Path, opts: &EstimateOptions) -> Result<Report> {
    let file = fs::File::open(path)?;
    let records = read_censored_csv(file)?;
    let rows = records.len() as u64;
    let resolved = resolve_alpha(opts.smoothing, rows)?;
    let mut diagnostics = Vec::new();
    if let Some(w) = resolved.warning {
        diagnostics.push(w);
    }
    let (estimate, fits) = dp_from_censored(&records, resolved.alpha)?;
    diagnostics.extend(estimate.diagnostics.iter().cloned());
    let ci = confidence_interval(&estimate, opts.level)?;
    diagnostics.extend(ci.diagnostics.iter().cloned());
    let gap = (fits.len() as f64).ln() / resolved.alpha.value();
    Ok(Report {
        command: "mle".into(),
        inputs: vec![digest(path, rows)?],
        config: config_echo(opts),
        groups: None,
        estimate: Some(estimate),
        estimate_b: None,
        confidence_interval: Some(ci),
        estimand_gap_bound: Some(gap),
        test: None,
        crossfit: None,
        mle_fits: Some(
            fits.into_iter()
                .map(|(group, fit)| NamedMle { group, fit })
                .collect(),
        ),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn estimate_report_matches_module_values() {
        let f = write_temp("group,successes,trials\nA,10,100\nB,5,100\n");
        let opts = EstimateOptions {
            raw: true,
            ..Default::default()
        };
        let r = run_estimate(f.path(), &opts).unwrap();
        let est = r.estimate.unwrap();
        assert_eq!(est.dp, 0.5);
        let g = r.groups.unwrap();
        assert!((g.sigma2[0] - 0.18).abs() < 1e-15);
        assert!((g.sigma2[1] - 0.095).abs() < 1e-15);
        assert_eq!(r.inputs[0].rows, 2);
        assert_eq!(r.inputs[0].sha256.len(), 64);
    }

    #[test]
    fn estimate_report_smooth_has_gap_bound() {
        let f = write_temp("group,successes,trials\nA,10,100\nB,5,100\n");
        let r = run_estimate(f.path(), &EstimateOptions::default()).unwrap();
        let gap = r.estimand_gap_bound.unwrap();
        // alpha = 200^0.4, gap = ln(2)/alpha
        let alpha = 200f64.powf(0.4);
        assert!((gap - 2f64.ln() / alpha).abs() < 1e-12);
        assert!(r.confidence_interval.is_some());
    }

    #[test]
    fn alpha_warning_propagates_to_diagnostics() {
        let f = write_temp("group,successes,trials\nA,10,100\nB,5,100\n");
        let opts = EstimateOptions {
            smoothing: SmoothingConfig::Fixed(1e9),
            ..Default::default()
        };
        let r = run_estimate(f.path(), &opts).unwrap();
        assert!(r.diagnostics.iter().any(|d| d.contains("sqrt(N)")));
    }

    #[test]
    fn report_json_round_trips_exactly() {
        let f = write_temp("group,successes,trials\nA,7,103\nB,13,211\n");
        let r = run_estimate(f.path(), &EstimateOptions::default()).unwrap();
        let text = serde_json::to_string_pretty(&r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let dp = v["estimate"]["dp"].as_f64().unwrap();
        assert_eq!(dp, r.estimate.as_ref().unwrap().dp);
        let se = v["estimate"]["se"].as_f64().unwrap();
        assert_eq!(se, r.estimate.as_ref().unwrap().se);
    }

    #[test]
    fn ab_report_runs() {
        let fa = write_temp("group,successes,trials\nA,10,100\nB,5,100\n");
        let fb = write_temp("group,successes,trials\nA,12,100\nB,7,100\n");
        let r = run_ab_test(fa.path(), fb.path(), AbSided::Two, &EstimateOptions::default())
            .unwrap();
        let t = r.test.unwrap();
        assert!(t.p_value > 0.0 && t.p_value <= 1.0);
        assert_eq!(r.inputs.len(), 2);
    }

    #[test]
    fn mle_report_runs() {
        let mut content = String::from("group,applications,hired\n");
        for i in 0..200 {
            content.push_str(&format!("A,{},{}\n", 1 + i % 5, u8::from(i % 7 == 0)));
            content.push_str(&format!("B,{},{}\n", 1 + i % 3, u8::from(i % 11 == 0)));
        }
        let f = write_temp(&content);
        // sharp fixed alpha so the smooth min of the small fitted rates
        // stays positive
        let opts = EstimateOptions {
            smoothing: SmoothingConfig::Fixed(100.0),
            ..EstimateOptions::default()
        };
        let r = run_mle(f.path(), &opts).unwrap();
        assert_eq!(r.mle_fits.as_ref().unwrap().len(), 2);
        assert!(r.estimate.unwrap().dp > 0.0);
    }
}
