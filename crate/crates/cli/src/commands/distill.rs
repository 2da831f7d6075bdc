//! `perfsearch distill`: builds distillation datasets from a teacher
//! predictor, trains the MLP regressor, and predicts with a trained
//! model.

use std::path::PathBuf;

use clap::{Args as ClapArgs, Subcommand};
use perfsearch_core::distill::{
    build_distill_dataset, train_regressor, DistillDataset, MlpPredictor, TrainingConfig,
};
use perfsearch_core::predictor::Predictor as _;
use perfsearch_core::space::feature_bounds;

use crate::error::CliError;
use crate::formats::{self, PredictionRow};
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::predspec::PredictorSpec;

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Sample architectures and label them with a teacher predictor.
    BuildDataset(BuildDatasetArgs),
    /// Train the MLP regressor on a dataset.
    Train(TrainArgs),
    /// Predict scores for architectures with a trained model.
    Predict(PredictArgs),
}

#[derive(Debug, ClapArgs)]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub space: PathBuf,
    /// Teacher predictor spec (gold, sim:..., mlp:path, llm:path).
    #[arg(long)]
    pub teacher: String,
    /// Number of distinct architectures to label.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset JSONL ({"features": [...], "label": ...} rows).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, ClapArgs)]
pub struct TrainArgs {
    /// Dataset JSONL produced by build-dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Space file; feature normalization comes from its bounds.
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional training-config JSON file.
    #[arg(long)]
    pub training_config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, ClapArgs)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub space: PathBuf,
    /// Architectures to score, JSONL.
    #[arg(long)]
    pub archs: PathBuf,
    /// Output predictions JSONL.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cmd: &Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::BuildDataset(args) => build_dataset(args),
        Cmd::Train(args) => train(args),
        Cmd::Predict(args) => predict(args),
    }
}

fn build_dataset(args: &BuildDatasetArgs) -> Result<(), CliError> {
    let space = formats::read_space(&args.space)?;
    let teacher = PredictorSpec::parse(&args.teacher)?.build(&space, Some(args.seed))?;
    match build_distill_dataset(&space, teacher.as_ref(), args.n, args.seed) {
        Ok(dataset) => {
            formats::write_dataset_rows(&args.out, &dataset.rows)?;
            ManifestBuilder::new("distill build-dataset")
                .seed(args.seed)
                .config(&serde_json::json!({"teacher": args.teacher, "n": args.n}))
                .input(&args.space)?
                .output(&args.out)
                .write(&manifest_path_for(&args.out))?;
            eprintln!(
                "wrote {} rows to {}",
                dataset.rows.len(),
                args.out.display()
            );
            Ok(())
        }
        Err(failure) => {
            // Keep partial progress next to the intended output.
            let partial = args.out.with_extension("partial.jsonl");
            formats::write_dataset_rows(&partial, &failure.partial.rows)?;
            eprintln!(
                "teacher failed; retained {} labeled rows in {}",
                failure.partial.rows.len(),
                partial.display()
            );
            Err(CliError::Transport(failure.error.to_string()))
        }
    }
}

fn train(args: &TrainArgs) -> Result<(), CliError> {
    let space = formats::read_space(&args.space)?;
    let rows = formats::read_dataset_rows(&args.dataset)?;
    let bounds = feature_bounds(&space).map_err(|e| CliError::input_at(&args.space, e))?;
    let dataset = DistillDataset {
        rows,
        provenance: format!("file:{}", args.dataset.display()),
        seed: args.seed,
        feature_bounds: bounds,
    };
    let mut config = match &args.training_config {
        Some(path) => formats::read_training_config(path)?,
        None => TrainingConfig::default(),
    };
    if let Some(steps) = args.steps {
        config.steps = steps;
    }
    if let Some(batch) = args.batch_size {
        config.batch_size = batch;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    let model = train_regressor(&dataset, &config, args.seed)
        .map_err(|e| CliError::Input(e.to_string()))?;
    formats::write_model(&args.out, &model)?;
    ManifestBuilder::new("distill train")
        .seed(args.seed)
        .config(&config)
        .input(&args.dataset)?
        .input(&args.space)?
        .output(&args.out)
        .write(&manifest_path_for(&args.out))?;
    for warning in model.warnings() {
        eprintln!("warning: {warning}");
    }
    println!(
        "final training loss: {:.6} (initial {:.6})",
        model.final_loss(),
        model.initial_loss()
    );
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let space = formats::read_space(&args.space)?;
    let model = formats::read_model(&args.model)?;
    let archs = formats::read_architectures_jsonl(&args.archs)?;
    let predictor = MlpPredictor::new(space, model.into());
    let predictions = predictor
        .predict_batch(&archs)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let rows: Vec<PredictionRow> = archs
        .into_iter()
        .zip(predictions)
        .map(|(arch, prediction)| PredictionRow { arch, prediction })
        .collect();
    formats::write_predictions(&args.out, None, &rows)?;
    ManifestBuilder::new("distill predict")
        .config(&serde_json::json!({"archs": rows.len()}))
        .input(&args.model)?
        .input(&args.space)?
        .input(&args.archs)?
        .output(&args.out)
        .write(&manifest_path_for(&args.out))?;
    eprintln!("wrote {} predictions to {}", rows.len(), args.out.display());
    Ok(())
}
