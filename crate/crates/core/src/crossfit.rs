//! K-fold cross-fitted DP: pick the argmin/argmax groups on the complement
//! folds, measure their rates on the held-out fold. Decoupling selection from
//! magnitude estimation removes the Jensen-type downward bias of the pooled
//! min-over-max ratio when group rates are close.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data_model::UnitRecord;
use crate::error::{DpError, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossfitConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for CrossfitConfig {
    fn default() -> Self {
        CrossfitConfig { k: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossfitResult {
    pub dp: f64,
    pub fold_estimates: Vec<f64>,
    /// sd(fold estimates) / sqrt(K). Heuristic, not asymptotically justified.
    pub se_heuristic: f64,
    /// Per-fold (argmin label, argmax label) selected on the complement.
    pub selected: Vec<(String, String)>,
}

struct GroupData {
    label: String,
    outcomes: Vec<u8>,
    folds: Vec<usize>,
}

pub fn crossfit_dp(records: &[UnitRecord], config: CrossfitConfig) -> Result<CrossfitResult> {
    if config.k < 2 {
        return Err(DpError::InvalidInput("k must be >= 2".into()));
    }
    if records.is_empty() {
        return Err(DpError::InvalidInput("empty record stream".into()));
    }
    // group units in first-appearance order
    let mut order = Vec::new();
    let mut by_group: HashMap<&str, Vec<u8>> = HashMap::new();
    for r in records {
        if !by_group.contains_key(r.group.as_str()) {
            order.push(r.group.clone());
        }
        by_group.entry(r.group.as_str()).or_default().push(r.outcome);
    }
    if order.len() < 2 {
        return Err(DpError::InvalidInput(
            "cross-fitting needs at least two groups".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut groups = Vec::with_capacity(order.len());
    for label in &order {
        let outcomes = by_group[label.as_str()].clone();
        if outcomes.len() < config.k {
            return Err(DpError::InvalidInput(format!(
                "group {label} has {} units, fewer than k = {}",
                outcomes.len(),
                config.k
            )));
        }
        // stratified assignment: per-group shuffle then round-robin
        let mut idx: Vec<usize> = (0..outcomes.len()).collect();
        idx.shuffle(&mut rng);
        let mut folds = vec![0usize; outcomes.len()];
        for (pos, &i) in idx.iter().enumerate() {
            folds[i] = pos % config.k;
        }
        groups.push(GroupData {
            label: label.clone(),
            outcomes,
            folds,
        });
    }

    let mut fold_estimates = Vec::with_capacity(config.k);
    let mut selected = Vec::with_capacity(config.k);
    let mut invalid = Vec::new();
    for fold in 0..config.k {
        // selection on the complement, magnitudes on the fold
        let mut comp_rates = Vec::with_capacity(groups.len());
        let mut fold_rates = Vec::with_capacity(groups.len());
        for g in &groups {
            let (mut cs, mut cn, mut fs, mut fn_) = (0u64, 0u64, 0u64, 0u64);
            for (i, &y) in g.outcomes.iter().enumerate() {
                if g.folds[i] == fold {
                    fs += u64::from(y);
                    fn_ += 1;
                } else {
                    cs += u64::from(y);
                    cn += 1;
                }
            }
            comp_rates.push(cs as f64 / cn as f64);
            fold_rates.push(fs as f64 / fn_ as f64);
        }
        // ties broken by first group order: strict comparisons keep the
        // earliest index
        let mut argmin = 0;
        let mut argmax = 0;
        for i in 1..comp_rates.len() {
            if comp_rates[i] < comp_rates[argmin] {
                argmin = i;
            }
            if comp_rates[i] > comp_rates[argmax] {
                argmax = i;
            }
        }
        let denom = fold_rates[argmax];
        if denom == 0.0 {
            invalid.push(format!(
                "fold {fold}: selected argmax group {} has zero fold-level rate",
                groups[argmax].label
            ));
            continue;
        }
        fold_estimates.push(fold_rates[argmin] / denom);
        selected.push((groups[argmin].label.clone(), groups[argmax].label.clone()));
    }
    if !invalid.is_empty() {
        return Err(DpError::UndefinedDp(format!(
            "invalid folds: {}",
            invalid.join("; ")
        )));
    }

    let k = fold_estimates.len() as f64;
    let dp = fold_estimates.iter().sum::<f64>() / k;
    let var = fold_estimates
        .iter()
        .map(|x| (x - dp) * (x - dp))
        .sum::<f64>()
        / (k - 1.0);
    Ok(CrossfitResult {
        dp,
        se_heuristic: (var / k).sqrt(),
        fold_estimates,
        selected,
    })
}
