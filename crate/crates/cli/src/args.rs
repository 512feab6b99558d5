use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tilemil::eval::ThresholdPolicy;
use tilemil::pipeline::Mode;
use tilemil::synth::PatternLink;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "tilemil", version, about = "Two-step attention MIL for responder identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic cohorts.
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
    /// Segment tissue and tile every slide of a cohort.
    Tile(TileArgs),
    /// Tile labelling service.
    Annotate {
        #[command(subcommand)]
        command: AnnotateCommand,
    },
    /// Patch feature files.
    Features {
        #[command(subcommand)]
        command: FeaturesCommand,
    },
    /// Train one step of the pipeline.
    Train {
        #[command(subcommand)]
        command: TrainCommand,
    },
    /// Score every patient with trained models.
    Predict(PredictArgs),
    /// Modified repeated k-fold cross-validation.
    Cv(CvArgs),
    /// Baselines and enrichment analysis.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Attention heatmap of one tile.
    Heatmap(HeatmapArgs),
    /// Single step, two step with and without augmentation, TPS baseline.
    Ablation(CvArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Generate a cohort with ground truth.
    Gen(SynthArgs),
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    /// Serve the labelling API for a cohort.
    Serve(ServeArgs),
    /// Resolve the label log into a snapshot.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
pub enum FeaturesCommand {
    /// Compute stain features for every tiled patch.
    Extract(ExtractArgs),
    /// Convert JSONL embeddings into a feature file.
    Import(ImportArgs),
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Tumor vs non-tumor on labelled tiles.
    Tumor(TrainArgs),
    /// Responder vs non-responder.
    Responder(TrainArgs),
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Estimate the tumor proportion score of every patient.
    Tps(TpsArgs),
    /// Enrichment of a score threshold rule.
    Enrich(EnrichArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    #[value(name = "two_step")]
    TwoStep,
    #[value(name = "single_step")]
    SingleStep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    #[value(name = "full_recall")]
    FullRecall,
    #[value(name = "max_f1")]
    MaxF1,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternArg {
    #[value(name = "reactive_vs_constitutive")]
    ReactiveVsConstitutive,
    #[value(name = "tps_only")]
    TpsOnly,
    #[value(name = "none")]
    None,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; a `run.json` from an earlier run is accepted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    #[arg(long)]
    pub tiles: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TilingArgs {
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub min_tissue_frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub tiling: TilingArgs,
    /// `--augment` or `--augment false`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub augment: Option<bool>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub responder_weight: Option<f64>,
    /// Tumor probability at which a tile is kept for step two.
    #[arg(long)]
    pub tumor_threshold: Option<f64>,
    #[arg(long)]
    pub tumor_epochs: Option<usize>,
    #[arg(long)]
    pub responder_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n_patients: Option<usize>,
    #[arg(long)]
    pub responder_fraction: Option<f64>,
    #[arg(long)]
    pub slide_size: Option<usize>,
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[arg(long, value_enum)]
    pub pattern_link: Option<PatternArg>,
    /// Inclusive tissue area range per patient, in tiles.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub tiles_per_patient: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub tiling: TilingArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub tiling: TilingArgs,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub cohort: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub tiling: TilingArgs,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSONL rows of `{slide_id, grid_x, grid_y, patch_x, patch_y, values}`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub models: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TpsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub cohort: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSONL with `patient_id`, `score` and `label` per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long)]
    pub rule_name: Option<String>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Tile address as `slide/x/y`.
    #[arg(long)]
    pub tile: String,
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
    if v.is_some() {
        *slot = v.clone();
    }
}

impl Common {
    /// Base config for a command: the `--config` file or defaults, with
    /// `--out` applied.
    pub fn base(&self) -> crate::error::CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set_opt(&mut cfg.paths.out, &self.out);
        Ok(cfg)
    }
}

impl CohortArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set_opt(&mut cfg.paths.cohort, &self.cohort);
        set_opt(&mut cfg.paths.tiles, &self.tiles);
    }
}

impl InputArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set_opt(&mut cfg.paths.labels, &self.labels);
        set_opt(&mut cfg.paths.features, &self.features);
    }
}

impl TilingArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.pipeline.tile_size, &self.tile_size);
        set(&mut cfg.pipeline.patch_size, &self.patch_size);
        set(&mut cfg.pipeline.min_tissue_frac, &self.min_tissue_frac);
    }
}

impl PipelineArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        self.tiling.apply(cfg);
        let p = &mut cfg.pipeline;
        set(&mut p.augment, &self.augment);
        if let Some(m) = self.mode {
            p.mode = match m {
                ModeArg::TwoStep => Mode::TwoStep,
                ModeArg::SingleStep => Mode::SingleStep,
            };
        }
        set(&mut p.responder_weight, &self.responder_weight);
        set(&mut p.tumor_decision_threshold, &self.tumor_threshold);
        set(&mut p.tumor_training.epochs, &self.tumor_epochs);
        set(&mut p.responder_training.epochs, &self.responder_epochs);
    }
}

impl SynthArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.synth;
        set(&mut s.seed, &self.common.seed);
        set(&mut s.n_patients, &self.n_patients);
        set(&mut s.responder_fraction, &self.responder_fraction);
        set(&mut s.slide_size, &self.slide_size);
        set(&mut s.tile_size, &self.tile_size);
        if let Some(r) = &self.tiles_per_patient {
            s.tiles_per_patient_range = [r[0], r[1]];
        }
        if let Some(p) = self.pattern_link {
            s.pattern_link = match p {
                PatternArg::ReactiveVsConstitutive => PatternLink::ReactiveVsConstitutive,
                PatternArg::TpsOnly => PatternLink::TpsOnly,
                PatternArg::None => PatternLink::None,
            };
        }
    }
}

impl EnrichArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set_opt(&mut cfg.paths.input, &self.input);
        set_opt(&mut cfg.eval.threshold, &self.threshold);
        if let Some(p) = self.policy {
            cfg.eval.policy = match p {
                PolicyArg::FullRecall => ThresholdPolicy::FullRecall,
                PolicyArg::MaxF1 => ThresholdPolicy::MaxF1,
            };
        }
        set(&mut cfg.eval.rule_name, &self.rule_name);
    }
}

impl CvArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        self.cohort.apply(cfg);
        self.inputs.apply(cfg);
        self.pipeline.apply(cfg);
        set(&mut cfg.eval.folds, &self.folds);
        set(&mut cfg.eval.repeats, &self.repeats);
        set(&mut cfg.pipeline.seed, &self.common.seed);
        set(&mut cfg.eval.seed, &self.common.seed);
    }
}
