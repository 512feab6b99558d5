use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Descending; point `i` selects every score at or above `thresholds[i]`.
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub auc: f64,
}

/// Cumulative (tp, fp) at each distinct score, highest score first.
fn sweep(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, u64, u64)>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteValue { row: i, col: 0 });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out: Vec<(f64, u64, u64)> = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (k, &i) in order.iter().enumerate() {
        if labels[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order.get(k + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_group {
            out.push((scores[i], tp, fp));
        }
    }
    Ok(out)
}

fn class_counts(labels: &[u8]) -> (u64, u64) {
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    (pos, labels.len() as u64 - pos)
}

pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let points = sweep(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassLabels);
    }
    let mut curve = RocCurve { thresholds: vec![f64::INFINITY], fpr: vec![0.0], tpr: vec![0.0], auc: 0.0 };
    // Twice the trapezoid area in units of one positive-negative pair, exact
    // in integers.
    let mut twice_area: u128 = 0;
    let (mut tp0, mut fp0) = (0u64, 0u64);
    for (t, tp, fp) in points {
        twice_area += (fp - fp0) as u128 * (tp + tp0) as u128;
        curve.thresholds.push(t);
        curve.fpr.push(fp as f64 / neg as f64);
        curve.tpr.push(tp as f64 / pos as f64);
        (tp0, fp0) = (tp, fp);
    }
    curve.auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(curve)
}

/// Area under the ROC curve; equals P(s+ > s-) + P(s+ = s-)/2.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(roc_curve(scores, labels)?.auc)
}

/// Precision-recall curve with average-precision area: the sum over cuts of
/// the recall gained times the precision at that cut. Tied scores form one
/// cut.
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<PrCurve> {
    let points = sweep(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut curve = PrCurve { thresholds: Vec::new(), recall: Vec::new(), precision: Vec::new(), auc: 0.0 };
    let mut tp0 = 0u64;
    for (t, tp, fp) in points {
        let precision = tp as f64 / (tp + fp) as f64;
        curve.auc += (tp - tp0) as f64 / pos as f64 * precision;
        curve.thresholds.push(t);
        curve.recall.push(tp as f64 / pos as f64);
        curve.precision.push(precision);
        tp0 = tp;
    }
    Ok(curve)
}

pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(pr_curve(scores, labels)?.auc)
}
