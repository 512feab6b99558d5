//! `tilemil` command line: subcommands over the core library, each
//! recording its resolved configuration as `run.json`.

pub mod args;
pub mod commands;
pub mod config;
pub mod context;
pub mod error;
pub mod service;

use args::{AnnotateCommand, Cli, Command, EvalCommand, FeaturesCommand, SynthCommand, TrainCommand};
use commands::train::Step;
pub use config::{RunConfig, RUN_FILE};
pub use error::{CliError, CliResult};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth { command: SynthCommand::Gen(a) } => commands::synth::gen(a),
        Command::Tile(a) => commands::tile::run(a),
        Command::Annotate { command: AnnotateCommand::Serve(a) } => commands::annotate::serve(a),
        Command::Annotate { command: AnnotateCommand::Export(a) } => commands::annotate::export(a),
        Command::Features { command: FeaturesCommand::Extract(a) } => commands::features::extract(a),
        Command::Features { command: FeaturesCommand::Import(a) } => commands::features::import(a),
        Command::Train { command: TrainCommand::Tumor(a) } => commands::train::run(a, Step::Tumor),
        Command::Train { command: TrainCommand::Responder(a) } => commands::train::run(a, Step::Responder),
        Command::Predict(a) => commands::predict::run(a),
        Command::Cv(a) => commands::cv::cv(a),
        Command::Eval { command: EvalCommand::Tps(a) } => commands::eval::tps(a),
        Command::Eval { command: EvalCommand::Enrich(a) } => commands::eval::enrichment(a),
        Command::Heatmap(a) => commands::heatmap::run(a),
        Command::Ablation(a) => commands::cv::ablation(a),
    }
}
