use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Wilson score interval for `k` successes in `n` trials at confidence
/// `1 - alpha`.
pub fn wilson_interval(k: usize, n: usize, alpha: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "wilson interval needs 0 <= k <= n, n > 0");
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - alpha / 2.0);
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if k == 0.0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn wilson(k: usize, n: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(k, n, 0.05);
        Self { value: k as f64 / n as f64, ci_low, ci_high }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPatient {
    pub patient_id: String,
    pub score: f64,
    pub label: u8,
}

/// On-disk `enrichment.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub version: u32,
    /// Human-readable selection rule, e.g. `score >= 0.5`.
    pub rule: String,
    pub threshold: f64,
    pub n_total: usize,
    pub n_selected: usize,
    pub responders_total: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: Proportion,
    pub accuracy: Proportion,
    /// Absent when the cohort has no responders.
    pub recall: Option<Proportion>,
    /// Selected patient ids in input order.
    pub selected: Vec<String>,
}

/// Selects every patient scoring at or above `threshold` and reports the
/// enriched population's confusion counts with Wilson intervals.
pub fn enrich(patients: &[ScoredPatient], threshold: f64, rule_name: &str) -> Result<EnrichmentReport> {
    let selected: Vec<&ScoredPatient> = patients.iter().filter(|p| p.score >= threshold).collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let responders_total = patients.iter().filter(|p| p.label == 1).count();
    let tp = selected.iter().filter(|p| p.label == 1).count();
    let fp = selected.len() - tp;
    let fn_ = responders_total - tp;
    let tn = patients.len() - selected.len() - fn_;
    Ok(EnrichmentReport {
        version: 1,
        rule: format!("{rule_name} >= {threshold}"),
        threshold,
        n_total: patients.len(),
        n_selected: selected.len(),
        responders_total,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        precision: Proportion::wilson(tp, selected.len()),
        accuracy: Proportion::wilson(tp + tn, patients.len()),
        recall: (responders_total > 0).then(|| Proportion::wilson(tp, responders_total)),
        selected: selected.iter().map(|p| p.patient_id.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Highest threshold that still selects every responder, i.e. the
    /// lowest responder score.
    FullRecall,
    /// Threshold maximizing F1 over the observed scores; ties go to the
    /// higher threshold.
    MaxF1,
}

/// F1 of the rule `score >= threshold`.
pub fn f1_at(patients: &[ScoredPatient], threshold: f64) -> f64 {
    let tp = patients.iter().filter(|p| p.label == 1 && p.score >= threshold).count() as f64;
    let sel = patients.iter().filter(|p| p.score >= threshold).count() as f64;
    let pos = patients.iter().filter(|p| p.label == 1).count() as f64;
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (sel + pos)
    }
}

pub fn select_threshold(patients: &[ScoredPatient], policy: ThresholdPolicy) -> Result<f64> {
    let has = |l| patients.iter().any(|p| p.label == l);
    if !has(0) || !has(1) {
        return Err(Error::SingleClassLabels);
    }
    match policy {
        ThresholdPolicy::FullRecall => {
            Ok(patients.iter().filter(|p| p.label == 1).map(|p| p.score).fold(f64::INFINITY, f64::min))
        }
        ThresholdPolicy::MaxF1 => {
            let mut candidates: Vec<f64> = patients.iter().map(|p| p.score).collect();
            candidates.sort_by(|a, b| b.total_cmp(a));
            candidates.dedup();
            let mut best = (f64::NEG_INFINITY, candidates[0]);
            for t in candidates {
                let f = f1_at(patients, t);
                if f > best.0 {
                    best = (f, t);
                }
            }
            Ok(best.1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cohort(scores: &[f64], labels: &[u8]) -> Vec<ScoredPatient> {
        scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&score, &label))| ScoredPatient { patient_id: format!("p{i}"), score, label })
            .collect()
    }

    #[test]
    fn wilson_reference() {
        let (lo, hi) = wilson_interval(4, 18, 0.05);
        assert!((lo - 0.090_009_281).abs() < 1e-8 && (hi - 0.452_145_843).abs() < 1e-8, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 5, 0.05).0, 0.0);
        assert_eq!(wilson_interval(5, 5, 0.05).1, 1.0);
    }

    #[test]
    fn full_recall_threshold() {
        let p = cohort(&[0.8, 0.9, 0.3], &[1, 1, 0]);
        assert_eq!(select_threshold(&p, ThresholdPolicy::FullRecall).unwrap(), 0.8);
        let single = cohort(&[0.8, 0.9], &[1, 1]);
        assert!(matches!(select_threshold(&single, ThresholdPolicy::MaxF1), Err(Error::SingleClassLabels)));
    }

    #[test]
    fn empty_selection() {
        let p = cohort(&[0.1, 0.2], &[1, 0]);
        assert!(matches!(enrich(&p, 0.5, "score"), Err(Error::EmptySelection)));
    }
}
