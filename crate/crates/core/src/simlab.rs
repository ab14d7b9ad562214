//! Seeded Monte Carlo lab for the distributional claims: normality of the
//! smoothed DP under a sub-sqrt(N) alpha, skewness onset past that threshold,
//! and the two non-normal limits of the exact extremes at ties.
//!
//! Replications use counter-based RNG streams derived from (seed, index), so
//! results are bit-identical regardless of how many workers run them.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::MeansWithCovariance;
use crate::error::{DpError, Result};
use crate::inference::{phi, phi_inv};
use crate::propagation::{dp_point_and_variance, dp_raw, smoothed_extremes};
use crate::smoothing::{rsmax, rsmin, Alpha};
use crate::stats::{histogram, ks_distance, mean, sd, skewness, Histogram};

/// One estimator variant to simulate. Serialized as the string `"raw"` or a
/// bare number (the fixed sharpness).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Exact min-over-max.
    Raw,
    /// Smooth DP at this fixed sharpness.
    Alpha(f64),
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Variant::Raw => s.serialize_str("raw"),
            Variant::Alpha(a) => s.serialize_f64(*a),
        }
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Variant;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"raw\" or a positive number")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Variant, E> {
                if v == "raw" {
                    Ok(Variant::Raw)
                } else {
                    Err(E::custom(format!("unknown variant {v:?}")))
                }
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Variant, E> {
                Ok(Variant::Alpha(v))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Variant, E> {
                Ok(Variant::Alpha(v as f64))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Variant, E> {
                Ok(Variant::Alpha(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Analytic CDF a variant's draws can be compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Limit of sqrt(N)(max - s) for two equal groups at rate `s`.
    MaxLimit { s: f64 },
    /// Limit of sqrt(N)(DP - 1) for two equal groups; `sigma` is the
    /// per-group sd scale sqrt(s(1-s)).
    DpLimit { s: f64, sigma: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub true_rates: Vec<f64>,
    pub shares: Vec<f64>,
    pub n: u64,
    pub variants: Vec<Variant>,
    pub replications: u64,
    pub seed: u64,
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub reference: Option<Reference>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.true_rates.is_empty() || self.true_rates.len() != self.shares.len() {
            return Err(DpError::InvalidInput(
                "true_rates and shares must be non-empty and equal-length".into(),
            ));
        }
        for &s in &self.true_rates {
            if !(s > 0.0 && s < 1.0) {
                return Err(DpError::InvalidInput(format!(
                    "true rates must lie in (0,1), got {s}"
                )));
            }
        }
        let sum: f64 = self.shares.iter().sum();
        if self.shares.iter().any(|&p| p <= 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(DpError::InvalidInput(
                "shares must be positive and sum to 1".into(),
            ));
        }
        if self.replications == 0 {
            return Err(DpError::InvalidInput("replications must be >= 1".into()));
        }
        for v in &self.variants {
            if let Variant::Alpha(a) = v {
                Alpha::new(*a)?;
            }
        }
        if self.variants.is_empty() {
            return Err(DpError::InvalidInput("no variants".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantSummary {
    pub variant: Variant,
    /// Centering value: the smooth or exact estimand at the true rates.
    pub dp0: f64,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub coverage_95: f64,
    pub histogram: Histogram,
    pub ks_distance: Option<f64>,
    /// Centered draws sqrt(N)(dp_hat - dp0), in replication order.
    #[serde(skip)]
    pub draws: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary {
    pub spec: ScenarioSpec,
    pub variants: Vec<VariantSummary>,
    /// Replications excluded because every group had zero successes.
    pub excluded: u64,
}

/// Draw group sizes from multinomial(n, shares) by sequential conditional
/// binomials.
fn draw_multinomial(rng: &mut ChaCha8Rng, n: u64, shares: &[f64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(shares.len());
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in shares.iter().enumerate() {
        if i == shares.len() - 1 {
            out.push(remaining);
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q).unwrap().sample(rng);
        out.push(draw);
        remaining -= draw;
        mass -= p;
    }
    out
}

struct RepOutcome {
    /// Per-variant (draw, covered); None when the replication is excluded.
    values: Option<Vec<(f64, bool)>>,
}

pub fn simulate(spec: &ScenarioSpec) -> Result<SimSummary> {
    spec.validate()?;
    let g = spec.true_rates.len();
    let sqrt_n = (spec.n as f64).sqrt();
    let z95 = phi_inv(0.975);

    // estimands per variant, at the true rates
    let mut dp0s = Vec::with_capacity(spec.variants.len());
    for v in &spec.variants {
        let dp0 = match v {
            Variant::Raw => {
                let mn = spec.true_rates.iter().copied().fold(f64::INFINITY, f64::min);
                let mx = spec
                    .true_rates
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                mn / mx
            }
            Variant::Alpha(a) => {
                let alpha = Alpha::new(*a)?;
                rsmin(&spec.true_rates, alpha)? / rsmax(&spec.true_rates, alpha)?
            }
        };
        dp0s.push(dp0);
    }

    let outcomes: Vec<RepOutcome> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(rep.wrapping_add(1));
            let sizes = draw_multinomial(&mut rng, spec.n, &spec.shares);
            let mut s_hat = Vec::with_capacity(g);
            let mut p_hat = Vec::with_capacity(g);
            let mut sigma2 = Vec::with_capacity(g);
            let mut any_success = false;
            for i in 0..g {
                let trials = sizes[i].max(1);
                let succ = Binomial::new(trials, spec.true_rates[i])
                    .unwrap()
                    .sample(&mut rng);
                if succ > 0 {
                    any_success = true;
                }
                let s = succ as f64 / trials as f64;
                let p = trials as f64 / spec.n as f64;
                s_hat.push(s);
                p_hat.push(p);
                sigma2.push(s * (1.0 - s) / p);
            }
            if !any_success {
                return RepOutcome { values: None };
            }
            let m = MeansWithCovariance {
                labels: (0..g).map(|i| format!("g{i}")).collect(),
                s_hat,
                p_hat,
                sigma2,
                n: spec.n,
                degenerate_groups: vec![],
            };
            let mut values = Vec::with_capacity(spec.variants.len());
            for (v, &dp0) in spec.variants.iter().zip(&dp0s) {
                let est = match v {
                    Variant::Raw => dp_raw(&m),
                    Variant::Alpha(a) => smoothed_extremes(&m, Alpha::new(*a).unwrap())
                        .and_then(|e| dp_point_and_variance(&e)),
                };
                let est = est.expect("max rate positive: some success observed");
                let draw = sqrt_n * (est.dp - dp0);
                let covered =
                    est.dp - z95 * est.se <= dp0 && dp0 <= est.dp + z95 * est.se;
                values.push((draw, covered));
            }
            RepOutcome { values: Some(values) }
        })
        .collect();

    let mut excluded = 0u64;
    let mut per_variant: Vec<Vec<(f64, bool)>> = vec![Vec::new(); spec.variants.len()];
    for o in outcomes {
        match o.values {
            None => excluded += 1,
            Some(vals) => {
                for (i, v) in vals.into_iter().enumerate() {
                    per_variant[i].push(v);
                }
            }
        }
    }
    if per_variant[0].is_empty() {
        return Err(DpError::UndefinedDp(
            "every replication had all-zero successes".into(),
        ));
    }

    let variants = spec
        .variants
        .iter()
        .zip(dp0s)
        .zip(per_variant)
        .map(|((v, dp0), vals)| {
            let draws: Vec<f64> = vals.iter().map(|(d, _)| *d).collect();
            let coverage =
                vals.iter().filter(|(_, c)| *c).count() as f64 / vals.len() as f64;
            let ks = spec.reference.map(|r| match r {
                Reference::MaxLimit { s } => {
                    ks_distance(&draws, |x| max_limit_reference(s, x))
                }
                Reference::DpLimit { s, sigma } => {
                    ks_distance(&draws, |x| dp_limit_reference(s, sigma, x))
                }
            });
            VariantSummary {
                variant: *v,
                dp0,
                mean: mean(&draws),
                sd: sd(&draws),
                skewness: if draws.len() >= 3 { skewness(&draws) } else { 0.0 },
                coverage_95: coverage,
                histogram: histogram(&draws, spec.bins),
                ks_distance: ks,
                draws,
            }
        })
        .collect();

    Ok(SimSummary {
        spec: spec.clone(),
        variants,
        excluded,
    })
}

/// Limiting CDF of sqrt(N)(max(s1_hat, s2_hat) - s) for two equally sized
/// groups with a common rate `s`: Phi(x / sqrt(2 s (1-s)))^2.
pub fn max_limit_reference(s: f64, x: f64) -> f64 {
    let scale = (2.0 * s * (1.0 - s)).sqrt();
    let c = phi(x / scale);
    c * c
}

/// Limiting CDF of sqrt(N)(DP_hat - 1) for two equally sized groups with a
/// common rate: the negative half-normal law of -(sqrt(2) sigma / s)|Z1 - Z2|.
pub fn dp_limit_reference(s: f64, sigma: f64, x: f64) -> f64 {
    if x > 0.0 {
        return 1.0;
    }
    2.0 * (1.0 - phi(-x * s / (2.0 * sigma)))
}

/// Draws of sqrt(N)(max(s1_hat, s2_hat) - s) for two equally sized groups at
/// a common rate, for comparison against [`max_limit_reference`].
pub fn simulate_max_statistic(s: f64, n: u64, replications: u64, seed: u64) -> Vec<f64> {
    let sqrt_n = (n as f64).sqrt();
    (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep.wrapping_add(1));
            let sizes = draw_multinomial(&mut rng, n, &[0.5, 0.5]);
            let mut mx = f64::NEG_INFINITY;
            for &ng in &sizes {
                let trials = ng.max(1);
                let succ = Binomial::new(trials, s).unwrap().sample(&mut rng);
                mx = mx.max(succ as f64 / trials as f64);
            }
            sqrt_n * (mx - s)
        })
        .collect()
}
