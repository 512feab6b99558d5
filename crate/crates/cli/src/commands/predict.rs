use std::path::Path;

use tilemil::eval::roc_auc;
use tilemil::mil::Checkpoint;
use tilemil::pipeline::{predict_all, write_predictions, FittedPipeline, Mode, Model, PREDICTIONS_FILE};

use super::{prepare, RESPONDER_MODEL, TUMOR_MODEL};
use crate::args::PredictArgs;
use crate::config::require_exists;
use crate::error::{usage, CliResult};
use crate::context::{feature_cache, load_cohort};

fn load_model(path: &Path) -> CliResult<Model> {
    require_exists(path, "model")?;
    Ok(Model::from_checkpoint(&Checkpoint::load(path)?)?)
}

/// Models from a `train` output directory, as the configured mode needs.
pub fn load_pipeline(dir: &Path, mode: Mode) -> CliResult<FittedPipeline> {
    let tumor = match mode {
        Mode::TwoStep => Some(load_model(&dir.join(TUMOR_MODEL))?),
        Mode::SingleStep => None,
    };
    Ok(FittedPipeline { tumor, responder: load_model(&dir.join(RESPONDER_MODEL))? })
}

pub fn run(args: &PredictArgs) -> CliResult<()> {
    let mut cfg = args.common.base()?;
    args.cohort.apply(&mut cfg);
    args.inputs.apply(&mut cfg);
    args.pipeline.apply(&mut cfg);
    if let Some(m) = &args.models {
        cfg.paths.models = Some(m.clone());
    }
    let out = prepare(&mut cfg, "predict", false)?;
    let models = cfg.paths.models.clone().ok_or_else(|| usage("missing --models"))?;
    let fitted = load_pipeline(&models, cfg.pipeline.mode)?;
    let cohort = load_cohort(&cfg)?;
    let mut cache = feature_cache(&cfg, &cohort)?;
    let preds = predict_all(&fitted, &cohort.patients, &cfg.pipeline, &mut cache)?;
    cfg.write(&out)?;
    write_predictions(&out.join(PREDICTIONS_FILE), &preds)?;
    let scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
    let labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
    match roc_auc(&scores, &labels) {
        Ok(auc) => println!("{} patients scored, ROC AUC {auc:.3}", preds.len()),
        Err(_) => println!("{} patients scored", preds.len()),
    }
    Ok(())
}
