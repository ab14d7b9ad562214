//! Small descriptive-statistics helpers shared by the simulation lab.

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Bias-corrected sample skewness: g1 * sqrt(n(n-1)) / (n-2).
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let g1 = m3 / m2.powf(1.5);
    g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `xs` and a
/// reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let c = cdf(x);
        d = d.max((((i + 1) as f64) / n - c).abs());
        d = d.max(((i as f64) / n - c).abs());
    }
    d
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Histogram with Freedman-Diaconis binning unless a bin count is given.
pub fn histogram(xs: &[f64], bins: Option<usize>) -> Histogram {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let nbins = match bins {
        Some(b) => b.max(1),
        None => {
            let n = sorted.len();
            let q1 = sorted[n / 4];
            let q3 = sorted[(3 * n) / 4];
            let iqr = q3 - q1;
            let width = 2.0 * iqr / (n as f64).powf(1.0 / 3.0);
            if width > 0.0 && hi > lo {
                (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
            } else {
                1
            }
        }
    };
    let width = if hi > lo { (hi - lo) / nbins as f64 } else { 1.0 };
    let mut counts = vec![0u64; nbins];
    for &x in xs {
        let mut idx = ((x - lo) / width) as usize;
        if idx >= nbins {
            idx = nbins - 1;
        }
        counts[idx] += 1;
    }
    let edges = (0..=nbins).map(|i| lo + width * i as f64).collect();
    Histogram { edges, counts }
}
