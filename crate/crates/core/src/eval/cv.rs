use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::metrics::{pr_auc, roc_auc};
use crate::error::{Error, Result};
use crate::rng;

/// Mean with a two-sided 95% t-interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `mean ± t(0.975, n-1) · sd / sqrt(n)` with the sample sd. A single value
/// gives a zero-width interval.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    assert!(n > 0, "summary of no values");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { mean, sd: 0.0, ci_low: mean, ci_high: mean };
    }
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive dof").inverse_cdf(0.975);
    let half = t * sd / (n as f64).sqrt();
    Summary { mean, sd, ci_low: mean - half, ci_high: mean + half }
}

/// Fold index per patient. Each class is shuffled and dealt round-robin,
/// non-responders continuing where responders stopped, so responders are
/// spread as evenly as possible and fold sizes differ by at most one.
pub fn stratified_folds(labels: &[u8], n_folds: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [1u8, 0] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(rng);
        for i in members {
            fold[i] = next % n_folds;
            next += 1;
        }
    }
    fold
}

/// One training/prediction job handed to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldTask {
    pub repeat: usize,
    pub fold: usize,
    /// Seed for any randomness inside this fold.
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientScore {
    pub patient_id: String,
    pub label: u8,
    pub score: f64,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub roc_auc: f64,
    pub pr_auc: f64,
    /// Out-of-fold scores of every patient, in cohort order.
    pub scores: Vec<PatientScore>,
}

/// On-disk `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub version: u32,
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub n_patients: usize,
    pub n_responders: usize,
    pub repeats: Vec<RepeatResult>,
    pub roc_auc: Summary,
    pub pr_auc: Summary,
}

/// Repeated stratified k-fold where each repeat's out-of-fold scores are
/// pooled and scored once.
///
/// `predict` receives one fold and returns scores for `task.test`, in that
/// order.
pub fn modified_repeated_cv<F>(
    ids: &[String],
    labels: &[u8],
    n_folds: usize,
    n_repeats: usize,
    seed: u64,
    mut predict: F,
) -> Result<CvReport>
where
    F: FnMut(&FoldTask) -> Result<Vec<f64>>,
{
    let n = labels.len();
    if ids.len() != n {
        return Err(Error::DimensionMismatch(format!("{} ids for {n} labels", ids.len())));
    }
    if n_folds < 2 || n < n_folds {
        return Err(Error::TooFewPatients { have: n, folds: n_folds });
    }
    let n_responders = labels.iter().filter(|&&l| l == 1).count();
    if n_responders == 0 || n_responders == n {
        return Err(Error::SingleClassLabels);
    }
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be at least 1".into()));
    }

    let mut repeats = Vec::with_capacity(n_repeats);
    for repeat in 0..n_repeats {
        let fold_of = stratified_folds(labels, n_folds, &mut rng::stream(seed, repeat as u64));
        let repeat_seed = rng::derive(seed, repeat as u64);
        let mut pooled = vec![f64::NAN; n];
        for fold in 0..n_folds {
            let task = FoldTask {
                repeat,
                fold,
                seed: rng::derive(repeat_seed, fold as u64),
                train: (0..n).filter(|&i| fold_of[i] != fold).collect(),
                test: (0..n).filter(|&i| fold_of[i] == fold).collect(),
            };
            let scores = predict(&task)?;
            if scores.len() != task.test.len() {
                return Err(Error::DimensionMismatch(format!(
                    "fold {fold} returned {} scores for {} patients",
                    scores.len(),
                    task.test.len()
                )));
            }
            for (&i, s) in task.test.iter().zip(scores) {
                pooled[i] = s;
            }
        }
        let scores = (0..n)
            .map(|i| PatientScore { patient_id: ids[i].clone(), label: labels[i], score: pooled[i], fold: fold_of[i] })
            .collect();
        repeats.push(RepeatResult { repeat, roc_auc: roc_auc(&pooled, labels)?, pr_auc: pr_auc(&pooled, labels)?, scores });
    }
    let rocs: Vec<f64> = repeats.iter().map(|r| r.roc_auc).collect();
    let prs: Vec<f64> = repeats.iter().map(|r| r.pr_auc).collect();
    Ok(CvReport {
        version: 1,
        n_folds,
        n_repeats,
        seed,
        n_patients: n,
        n_responders,
        roc_auc: summarize(&rocs),
        pr_auc: summarize(&prs),
        repeats,
    })
}

/// Mean of per-fold ROC AUCs over the folds that contain both classes; the
/// unpooled alternative, kept for comparison only.
pub fn fold_averaged_auc(scores: &[PatientScore]) -> Option<f64> {
    let n_folds = scores.iter().map(|s| s.fold + 1).max()?;
    let aucs: Vec<f64> = (0..n_folds)
        .filter_map(|f| {
            let (s, l): (Vec<f64>, Vec<u8>) = scores.iter().filter(|p| p.fold == f).map(|p| (p.score, p.label)).unzip();
            roc_auc(&s, &l).ok()
        })
        .collect();
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}
