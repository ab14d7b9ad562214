//! Grouped binomial data: ingestion, counting, and plug-in moments.

use std::io::Read;

use serde::Serialize;

use crate::error::{DpError, Result};

/// One observed unit: a group label and a binary outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRecord {
    pub group: String,
    pub outcome: u8,
}

impl UnitRecord {
    pub fn new(group: impl Into<String>, outcome: u8) -> Result<Self> {
        let group = group.into();
        if group.is_empty() {
            return Err(DpError::InvalidInput("empty group label".into()));
        }
        if outcome > 1 {
            return Err(DpError::InvalidInput(format!(
                "outcome must be 0 or 1, got {outcome}"
            )));
        }
        Ok(UnitRecord { group, outcome })
    }
}

/// One record of the censored model: we only see whether any of the
/// `applications` trials succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredRecord {
    pub group: String,
    pub applications: u64,
    pub hired: u8,
}

/// Per-group success/trial counts, in first-appearance order.
#[derive(Debug, Clone, Serialize)]
pub struct GroupedCounts {
    pub groups: Vec<GroupCount>,
    pub total_n: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupCount {
    pub label: String,
    pub successes: u64,
    pub trials: u64,
}

impl GroupedCounts {
    pub fn new(groups: Vec<GroupCount>, total_n: u64) -> Result<Self> {
        if groups.is_empty() {
            return Err(DpError::InvalidInput("no groups".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut sum = 0u64;
        for g in &groups {
            if g.label.is_empty() {
                return Err(DpError::InvalidInput("empty group label".into()));
            }
            if !seen.insert(g.label.clone()) {
                return Err(DpError::InvalidInput(format!(
                    "duplicate group label: {}",
                    g.label
                )));
            }
            if g.trials == 0 {
                return Err(DpError::InvalidInput(format!(
                    "group {} has zero trials",
                    g.label
                )));
            }
            if g.successes > g.trials {
                return Err(DpError::InvalidInput(format!(
                    "group {} has successes {} > trials {}",
                    g.label, g.successes, g.trials
                )));
            }
            sum += g.trials;
        }
        if sum != total_n {
            return Err(DpError::InvalidInput(format!(
                "trials sum to {sum} but total_n = {total_n}"
            )));
        }
        Ok(GroupedCounts { groups, total_n })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.label.as_str()).collect()
    }
}

/// Plug-in rates, sample shares, and the diagonal CLT variances
/// `sigma2_g = s_g (1 - s_g) / p_g` on the per-sqrt(N) scale.
#[derive(Debug, Clone, Serialize)]
pub struct MeansWithCovariance {
    pub labels: Vec<String>,
    pub s_hat: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub n: u64,
    /// Labels of groups with a degenerate (zero) plug-in variance.
    pub degenerate_groups: Vec<String>,
}

/// Count outcomes per group, keeping first-appearance label order.
pub fn aggregate(records: &[UnitRecord]) -> Result<GroupedCounts> {
    if records.is_empty() {
        return Err(DpError::InvalidInput("empty record stream".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut counts: std::collections::HashMap<&str, (u64, u64)> = std::collections::HashMap::new();
    for r in records {
        if !counts.contains_key(r.group.as_str()) {
            order.push(r.group.clone());
        }
        let e = counts.entry(r.group.as_str()).or_insert((0, 0));
        e.0 += u64::from(r.outcome);
        e.1 += 1;
    }
    let groups = order
        .iter()
        .map(|label| {
            let (s, t) = counts[label.as_str()];
            GroupCount {
                label: label.clone(),
                successes: s,
                trials: t,
            }
        })
        .collect();
    GroupedCounts::new(groups, records.len() as u64)
}

/// Plug-in moments from grouped counts.
///
/// With `continuity_correction`, groups at a boundary rate use the adjusted
/// rate `(x + 0.5)/(n + 1)` for the variance only; the point estimate is
/// always the exact plug-in.
pub fn estimate_means(counts: &GroupedCounts, continuity_correction: bool) -> MeansWithCovariance {
    let n = counts.total_n as f64;
    let mut s_hat = Vec::with_capacity(counts.groups.len());
    let mut p_hat = Vec::with_capacity(counts.groups.len());
    let mut sigma2 = Vec::with_capacity(counts.groups.len());
    let mut degenerate = Vec::new();
    for g in &counts.groups {
        let s = g.successes as f64 / g.trials as f64;
        let p = g.trials as f64 / n;
        let s_for_var = if continuity_correction && (s == 0.0 || s == 1.0) {
            (g.successes as f64 + 0.5) / (g.trials as f64 + 1.0)
        } else {
            s
        };
        if s == 0.0 || s == 1.0 {
            degenerate.push(g.label.clone());
        }
        s_hat.push(s);
        p_hat.push(p);
        sigma2.push(s_for_var * (1.0 - s_for_var) / p);
    }
    MeansWithCovariance {
        labels: counts.groups.iter().map(|g| g.label.clone()).collect(),
        s_hat,
        p_hat,
        sigma2,
        n: counts.total_n,
        degenerate_groups: degenerate,
    }
}

fn check_label(label: &str, row: usize) -> Result<()> {
    if label.is_empty() {
        return Err(DpError::InvalidInput(format!("row {row}: empty group label")));
    }
    if label.contains(',') {
        return Err(DpError::InvalidInput(format!(
            "row {row}: group label contains a comma: {label:?}"
        )));
    }
    Ok(())
}

/// Read a unit-level CSV with header `group,outcome`.
pub fn read_unit_csv<R: Read>(reader: R) -> Result<Vec<UnitRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    {
        let headers = rdr.headers()?;
        if headers.len() != 2 || &headers[0] != "group" || &headers[1] != "outcome" {
            return Err(DpError::InvalidInput(format!(
                "expected header group,outcome, got {headers:?}"
            )));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 2 {
            return Err(DpError::InvalidInput(format!("row {row}: expected 2 fields")));
        }
        check_label(&rec[0], row)?;
        let outcome: u8 = rec[1].trim().parse().map_err(|_| {
            DpError::InvalidInput(format!("row {row}: bad outcome value {:?}", &rec[1]))
        })?;
        out.push(UnitRecord::new(rec[0].to_string(), outcome).map_err(|e| {
            DpError::InvalidInput(format!("row {row}: {e}"))
        })?);
    }
    if out.is_empty() {
        return Err(DpError::InvalidInput("no data rows".into()));
    }
    Ok(out)
}

/// Read an aggregate CSV with header `group,successes,trials`; group order is
/// file order.
pub fn read_aggregate_csv<R: Read>(reader: R) -> Result<GroupedCounts> {
    let mut rdr = csv::Reader::from_reader(reader);
    {
        let headers = rdr.headers()?;
        if headers.len() != 3
            || &headers[0] != "group"
            || &headers[1] != "successes"
            || &headers[2] != "trials"
        {
            return Err(DpError::InvalidInput(format!(
                "expected header group,successes,trials, got {headers:?}"
            )));
        }
    }
    let mut groups = Vec::new();
    let mut total = 0u64;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 3 {
            return Err(DpError::InvalidInput(format!("row {row}: expected 3 fields")));
        }
        check_label(&rec[0], row)?;
        let successes: u64 = rec[1].trim().parse().map_err(|_| {
            DpError::InvalidInput(format!("row {row}: bad successes value {:?}", &rec[1]))
        })?;
        let trials: u64 = rec[2].trim().parse().map_err(|_| {
            DpError::InvalidInput(format!("row {row}: bad trials value {:?}", &rec[2]))
        })?;
        total += trials;
        groups.push(GroupCount {
            label: rec[0].to_string(),
            successes,
            trials,
        });
    }
    GroupedCounts::new(groups, total)
}

/// Read a censored CSV with header `group,applications,hired`.
pub fn read_censored_csv<R: Read>(reader: R) -> Result<Vec<CensoredRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    {
        let headers = rdr.headers()?;
        if headers.len() != 3
            || &headers[0] != "group"
            || &headers[1] != "applications"
            || &headers[2] != "hired"
        {
            return Err(DpError::InvalidInput(format!(
                "expected header group,applications,hired, got {headers:?}"
            )));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 3 {
            return Err(DpError::InvalidInput(format!("row {row}: expected 3 fields")));
        }
        check_label(&rec[0], row)?;
        let applications: u64 = rec[1].trim().parse().map_err(|_| {
            DpError::InvalidInput(format!("row {row}: bad applications value {:?}", &rec[1]))
        })?;
        if applications == 0 {
            return Err(DpError::InvalidInput(format!(
                "row {row}: applications must be >= 1"
            )));
        }
        let hired: u8 = rec[2].trim().parse().map_err(|_| {
            DpError::InvalidInput(format!("row {row}: bad hired value {:?}", &rec[2]))
        })?;
        if hired > 1 {
            return Err(DpError::InvalidInput(format!(
                "row {row}: hired must be 0 or 1"
            )));
        }
        out.push(CensoredRecord {
            group: rec[0].to_string(),
            applications,
            hired,
        });
    }
    if out.is_empty() {
        return Err(DpError::InvalidInput("no data rows".into()));
    }
    Ok(out)
}
