use clap::{Parser, Subcommand};

use ctxinflect::commands::{
    cmd_ablate, cmd_evaluate, cmd_finetune, cmd_predict, cmd_synth, cmd_train, AblateArgs,
    EvaluateArgs, FinetuneArgs, PredictArgs, SynthArgs, TrainArgs,
};

#[derive(Parser)]
#[command(
    name = "ctxinflect",
    version,
    about = "Morphological inflection in context: train, finetune, predict, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model (monolingual, baseline replication, or multilingual).
    Train(TrainArgs),
    /// Finetune one language out of a multilingual checkpoint.
    Finetune(FinetuneArgs),
    /// Predict word forms with one checkpoint or a five-model ensemble.
    Predict(PredictArgs),
    /// Score a predictions file against a gold answers file.
    Evaluate(EvaluateArgs),
    /// Run the architecture-ladder ablation and emit CSV reports.
    Ablate(AblateArgs),
    /// Generate a synthetic agreement corpus.
    Synth(SynthArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Finetune(args) => cmd_finetune(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Synth(args) => cmd_synth(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
