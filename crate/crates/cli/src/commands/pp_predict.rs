//! `perfsearch pp-predict`: renders one prompt per input architecture
//! and queries a chat-completions endpoint, or, with `--cost-only`,
//! prints the estimated query cost without touching the network.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use perfsearch_core::predictor::{CostModel, Currency, TokenEstimate};
use perfsearch_core::prompt::PromptConfig;

use crate::error::CliError;
use crate::formats::{self, PredictionRow};
use crate::llm::LlmPredictor;
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::predspec::build_prompt_context;

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Search space JSON file.
    #[arg(long)]
    pub space: PathBuf,
    /// Prompt config JSON file; defaults apply when omitted.
    #[arg(long)]
    pub prompt_config: Option<PathBuf>,
    /// LLM endpoint config JSON file (required unless --cost-only).
    #[arg(long)]
    pub endpoint_config: Option<PathBuf>,
    /// Task examples JSONL (required unless --cost-only).
    #[arg(long)]
    pub task_examples: Option<PathBuf>,
    /// Labeled eval records JSONL for demonstrations (required unless
    /// --cost-only).
    #[arg(long)]
    pub tfs_eval: Option<PathBuf>,
    /// Architectures to score, JSONL (one JSON object per line).
    #[arg(long)]
    pub archs: PathBuf,
    /// Seed for the demonstration split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output predictions JSONL.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the estimated cost of the queries and exit.
    #[arg(long)]
    pub cost_only: bool,
    /// Price per 1K tokens in dollars.
    #[arg(long, default_value_t = 0.03)]
    pub price_per_1k: f64,
    /// Fixed token count per query; the default assumes exactly one
    /// third of 1K tokens.
    #[arg(long)]
    pub tokens_per_query: Option<u64>,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let archs = formats::read_architectures_jsonl(&args.archs)?;

    if args.cost_only {
        let model = CostModel {
            price_per_1k_tokens: Currency::from_dollars(args.price_per_1k),
            tokens_per_query: match args.tokens_per_query {
                Some(t) => TokenEstimate::Tokens(t),
                None => TokenEstimate::OneThirdOfK,
            },
        };
        println!("{}", model.estimate_cost(archs.len() as u64));
        return Ok(());
    }

    let endpoint_path = args.endpoint_config.as_ref().ok_or_else(|| {
        CliError::Config("--endpoint-config is required without --cost-only".into())
    })?;
    let task_examples = args.task_examples.as_ref().ok_or_else(|| {
        CliError::Config("--task-examples is required without --cost-only".into())
    })?;
    let tfs_eval = args
        .tfs_eval
        .as_ref()
        .ok_or_else(|| CliError::Config("--tfs-eval is required without --cost-only".into()))?;
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("--out is required without --cost-only".into()))?;

    let space = formats::read_space(&args.space)?;
    for (i, arch) in archs.iter().enumerate() {
        let violations = space.validate(arch);
        if !violations.is_empty() {
            let detail: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(CliError::input_at_line(
                &args.archs,
                i + 1,
                format!("architecture invalid: {}", detail.join("; ")),
            ));
        }
    }

    let prompt_config = match &args.prompt_config {
        Some(path) => formats::read_prompt_config(path)?,
        None => PromptConfig::default(),
    };
    let endpoint_text = formats::read_to_string(endpoint_path)?;
    let endpoint =
        serde_json::from_str(&endpoint_text).map_err(|e| CliError::input_at(endpoint_path, e))?;
    let metric = prompt_config.performance_metric_name.clone();
    let context = build_prompt_context(prompt_config, task_examples, tfs_eval, args.seed)?;
    let predictor = LlmPredictor::new(endpoint, context)?;

    let outcomes = predictor.predict_each(&archs);
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for (arch, outcome) in archs.iter().zip(outcomes) {
        match outcome {
            Ok(prediction) => rows.push(PredictionRow {
                arch: arch.clone(),
                prediction,
            }),
            Err(e) => {
                failures += 1;
                eprintln!("prediction failed: {e}");
            }
        }
    }
    formats::write_predictions(out, Some(&metric), &rows)?;
    ManifestBuilder::new("pp-predict")
        .seed(args.seed)
        .config(&serde_json::json!({"archs": archs.len(), "metric": metric}))
        .input(&args.space)?
        .input(&args.archs)?
        .input(endpoint_path)?
        .input(task_examples)?
        .input(tfs_eval)?
        .output(out)
        .write(&manifest_path_for(out))?;
    eprintln!(
        "wrote {} predictions to {} ({} failed, {} requests sent)",
        rows.len(),
        out.display(),
        failures,
        predictor.requests_sent()
    );
    if failures > 0 {
        return Err(CliError::Transport(format!(
            "{failures} of {} architectures could not be predicted",
            archs.len()
        )));
    }
    Ok(())
}
