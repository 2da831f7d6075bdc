use clap::{Parser, Subcommand};
use perfsearch::commands;

/// Architecture performance prediction and hybrid evolutionary search.
#[derive(Parser)]
#[command(name = "perfsearch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a performance-prediction prompt for one architecture.
    PromptRender(commands::prompt_render::Args),
    /// Query an LLM endpoint for per-architecture predictions.
    PpPredict(commands::pp_predict::Args),
    /// Distillation dataset building, training, and prediction.
    Distill {
        #[command(subcommand)]
        cmd: commands::distill::Cmd,
    },
    /// Compare a predictions file against a truth file.
    Eval(commands::eval::Args),
    /// Run the hybrid evolutionary architecture search.
    Search(commands::search::Args),
    /// Synthetic-task experiment harness.
    Bench {
        #[command(subcommand)]
        cmd: commands::bench::Cmd,
    },
    /// Export built-in search spaces and sample architectures.
    Space(commands::space::Args),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::PromptRender(args) => commands::prompt_render::run(args),
        Command::PpPredict(args) => commands::pp_predict::run(args),
        Command::Distill { cmd } => commands::distill::run(cmd),
        Command::Eval(args) => commands::eval::run(args),
        Command::Search(args) => commands::search::run(args),
        Command::Bench { cmd } => commands::bench::run(cmd),
        Command::Space(args) => commands::space::run(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
