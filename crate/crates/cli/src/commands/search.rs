//! `perfsearch search`: runs the hybrid evolutionary search over a
//! space with two predictors and a latency model, persisting the trace,
//! summary, and manifest.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use perfsearch_core::efficiency::{EfficiencyEvaluator, EfficiencyModelConfig, LatencyModel};
use perfsearch_core::search::{run_search, SearchError};

use crate::error::CliError;
use crate::formats;
use crate::manifest::ManifestBuilder;
use crate::predspec::PredictorSpec;

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[arg(long)]
    pub space: PathBuf,
    /// Search config JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Predictor used inside the [llm_start, llm_end] window.
    #[arg(long)]
    pub predictor_a: String,
    /// Predictor used outside the window.
    #[arg(long)]
    pub predictor_b: String,
    /// Latency model JSON file; a default analytic model applies when
    /// omitted.
    #[arg(long)]
    pub latency_model: Option<PathBuf>,
    /// Output directory (trace.jsonl, summary.json, manifest.json).
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn map_search_error(e: &SearchError) -> CliError {
    match e {
        SearchError::BadConfig(m) => CliError::Config(m.clone()),
        SearchError::ConstraintInfeasible { metric, threshold } => {
            CliError::Infeasible(format!("no candidate satisfies {metric} <= {threshold}"))
        }
        SearchError::Predictor(e) => CliError::Transport(e.to_string()),
        SearchError::Efficiency(e) => CliError::Input(e.to_string()),
    }
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let space = formats::read_space(&args.space)?;
    let config = formats::read_search_config(&args.config)?;
    let predictor_a = PredictorSpec::parse(&args.predictor_a)?.build(&space, Some(config.seed))?;
    let predictor_b =
        PredictorSpec::parse(&args.predictor_b)?.build(&space, Some(config.seed ^ 1))?;
    let latency = match &args.latency_model {
        Some(path) => formats::read_latency_model(path)?,
        None => LatencyModel::Analytic {
            base_ms: perfsearch_core::bench::LATENCY_BASE_MS,
            slope_ms: perfsearch_core::bench::LATENCY_SLOPE_MS,
        },
    };
    let evaluator =
        EfficiencyEvaluator::new(space.clone(), EfficiencyModelConfig::default(), latency);

    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::input_at(&args.out_dir, e))?;
    let trace_path = args.out_dir.join("trace.jsonl");
    let summary_path = args.out_dir.join("summary.json");

    match run_search(
        &space,
        predictor_a.as_ref(),
        predictor_b.as_ref(),
        &evaluator,
        &config,
    ) {
        Ok(trace) => {
            formats::write_trace_jsonl(&trace_path, &trace.iterations)?;
            formats::write_search_summary(&summary_path, &trace.outcome)?;
            ManifestBuilder::new("search")
                .seed(config.seed)
                .config(&config)
                .input(&args.space)?
                .input(&args.config)?
                .output(&trace_path)
                .output(&summary_path)
                .write(&args.out_dir.join("manifest.json"))?;
            let o = &trace.outcome;
            println!(
                "score {:.4} latency_ms {:.2} gflops {:.3} size_millions {:.2} search_seconds {:.3}",
                o.predicted_score,
                o.efficiency.latency_ms,
                o.efficiency.gflops,
                o.efficiency.model_size_millions,
                o.search_seconds
            );
            Ok(())
        }
        Err(failure) => {
            // Persist whatever completed before the failure.
            let partial_path = args.out_dir.join("trace.partial.jsonl");
            formats::write_trace_jsonl(&partial_path, &failure.partial)?;
            eprintln!(
                "search failed after {} iterations; partial trace in {}",
                failure.partial.len(),
                partial_path.display()
            );
            Err(map_search_error(&failure.error))
        }
    }
}
