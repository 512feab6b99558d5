use tilemil::pipeline::{fit_responder_model, fit_tumor_model, Mode, PatientTiles};
use tilemil::slide::Split;

use super::{prepare, RESPONDER_MODEL, TUMOR_MODEL};
use crate::args::TrainArgs;
use crate::context::{feature_cache, load_cohort};
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Tumor,
    Responder,
}

/// Fits one step on the cohort's training-split patients and writes its
/// checkpoint.
pub fn run(args: &TrainArgs, step: Step) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.cohort.apply(&mut cfg);
    args.inputs.apply(&mut cfg);
    args.pipeline.apply(&mut cfg);
    if let Some(s) = args.common.seed {
        cfg.pipeline.seed = s;
    }
    let (name, file) = match step {
        Step::Tumor => ("train tumor", TUMOR_MODEL),
        Step::Responder => ("train responder", RESPONDER_MODEL),
    };
    let needs_labels = step == Step::Tumor || cfg.pipeline.mode == Mode::TwoStep;
    let out = prepare(&mut cfg, name, needs_labels)?;
    let cohort = load_cohort(&cfg)?;
    let mut cache = feature_cache(&cfg, &cohort)?;
    let train: Vec<PatientTiles> = cohort
        .patients
        .iter()
        .filter(|p| cohort.manifest.patient(&p.patient_id).is_some_and(|e| e.split == Split::Train))
        .cloned()
        .collect();
    let (model, log, tc) = match step {
        Step::Tumor => fit_tumor_model(&train, &cfg.pipeline, &mut cache)?,
        Step::Responder => fit_responder_model(&train, &cfg.pipeline, &mut cache)?,
    };
    cfg.write(&out)?;
    model.to_checkpoint(tc, &log).save(&out.join(file))?;
    let best = &log.epochs[log.best_epoch];
    println!(
        "{name}: {} patients, best epoch {} (train loss {:.4}, validation loss {}), model at {}",
        train.len(),
        best.epoch,
        best.train_loss,
        best.validation_loss.map_or("n/a".into(), |v| format!("{v:.4}")),
        out.join(file).display()
    );
    Ok(())
}
