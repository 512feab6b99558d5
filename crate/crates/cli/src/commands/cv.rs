use std::fs;

use tilemil::pipeline::{run_ablation, run_cv};

use super::{has_tumor_masks, patient_tps, prepare, ABLATION_FILE, REPORT_FILE};
use crate::args::CvArgs;
use crate::context::{feature_cache, load_cohort};
use crate::error::CliResult;

fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn cv(args: &CvArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.apply(&mut cfg);
    let out = prepare(&mut cfg, "cv", true)?;
    let cohort = load_cohort(&cfg)?;
    let mut cache = feature_cache(&cfg, &cohort)?;
    cfg.write(&out)?;
    let e = &cfg.eval;
    let report = run_cv(&cohort.patients, &cfg.pipeline, &mut cache, e.folds, e.repeats, e.seed, None)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    println!(
        "ROC AUC {:.3} [{:.3}, {:.3}]  PR AUC {:.3} [{:.3}, {:.3}]  ({} folds x {} repeats)",
        report.roc_auc.mean,
        report.roc_auc.ci_low,
        report.roc_auc.ci_high,
        report.pr_auc.mean,
        report.pr_auc.ci_low,
        report.pr_auc.ci_high,
        report.n_folds,
        report.n_repeats
    );
    Ok(())
}

pub fn ablation(args: &CvArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.apply(&mut cfg);
    let out = prepare(&mut cfg, "ablation", true)?;
    let cohort = load_cohort(&cfg)?;
    let mut cache = feature_cache(&cfg, &cohort)?;
    cfg.write(&out)?;
    let tps = if has_tumor_masks(&cohort) {
        Some(patient_tps(&cohort, &cfg.eval.tps)?.into_iter().map(|r| r.score).collect::<Vec<_>>())
    } else {
        eprintln!("no tumor masks beside the slides; TPS baseline skipped");
        None
    };
    let e = &cfg.eval;
    let report = run_ablation(&cohort.patients, &cfg.pipeline, &mut cache, e.folds, e.repeats, e.seed, tps.as_deref())?;
    write_json(&out.join(ABLATION_FILE), &report)?;
    print!("{}", report.table());
    Ok(())
}
