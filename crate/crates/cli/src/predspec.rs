//! Predictor specification mini-grammar used on the command line:
//!
//! - `gold` — the synthetic task's exact scoring function
//! - `sim:sigma=0.5,bias=-2,seed=7` — gold plus bias and seeded noise
//! - `mlp:path/to/model.json` — a trained regressor
//! - `llm:path/to/llm-spec.json` — a remote LLM with prompt context
//!
//! Keeps the search engine agnostic of predictor construction.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use perfsearch_core::bench::SyntheticTask;
use perfsearch_core::distill::MlpPredictor;
use perfsearch_core::predictor::Predictor;
use perfsearch_core::prompt::{
    default_hyperparameter_glossary, split_tfs_eval, Demonstration, PromptConfig,
};
use perfsearch_core::space::SearchSpace;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats;
use crate::llm::{LlmEndpointConfig, LlmPredictor, PromptContext};

/// How a predictor seed behaves under per-seed re-instantiation: `sim`
/// specs take the evaluation seed unless the spec pins one explicitly.
#[derive(Debug, Clone)]
pub struct PredictorSpec {
    text: String,
}

impl PredictorSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec = Self {
            text: text.to_string(),
        };
        spec.kind()?;
        Ok(spec)
    }

    fn kind(&self) -> Result<SpecKind<'_>, CliError> {
        if self.text == "gold" {
            return Ok(SpecKind::Gold);
        }
        if let Some(rest) = self.text.strip_prefix("sim:") {
            let mut sigma = 0.0;
            let mut bias = 0.0;
            let mut seed = None;
            for part in rest.split(',').filter(|p| !p.is_empty()) {
                let (key, value) = part.split_once('=').ok_or_else(|| {
                    CliError::Config(format!("bad sim parameter `{part}` (expected key=value)"))
                })?;
                let parse = |v: &str| {
                    v.parse::<f64>().map_err(|_| {
                        CliError::Config(format!("bad numeric value `{v}` in sim spec"))
                    })
                };
                match key {
                    "sigma" => sigma = parse(value)?,
                    "bias" => bias = parse(value)?,
                    "seed" => {
                        seed = Some(value.parse::<u64>().map_err(|_| {
                            CliError::Config(format!("bad seed `{value}` in sim spec"))
                        })?)
                    }
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown sim parameter `{other}` (expected sigma, bias, seed)"
                        )))
                    }
                }
            }
            if sigma < 0.0 {
                return Err(CliError::Config("sim sigma must be >= 0".into()));
            }
            return Ok(SpecKind::Simulated { sigma, bias, seed });
        }
        if let Some(path) = self.text.strip_prefix("mlp:") {
            return Ok(SpecKind::Mlp(Path::new(path)));
        }
        if let Some(path) = self.text.strip_prefix("llm:") {
            return Ok(SpecKind::Llm(Path::new(path)));
        }
        Err(CliError::Config(format!(
            "unknown predictor spec `{}` (expected gold, sim:..., mlp:path, or llm:path)",
            self.text
        )))
    }

    /// Builds the predictor over `space`. `seed_override` replaces the
    /// noise seed of `sim` specs that do not pin one.
    pub fn build(
        &self,
        space: &SearchSpace,
        seed_override: Option<u64>,
    ) -> Result<Box<dyn Predictor>, CliError> {
        match self.kind()? {
            SpecKind::Gold => {
                let task = SyntheticTask::over_space(space.clone(), 0)
                    .map_err(|e| CliError::Input(e.to_string()))?;
                Ok(Box::new(task.gold_predictor()))
            }
            SpecKind::Simulated { sigma, bias, seed } => {
                let task = SyntheticTask::over_space(space.clone(), 0)
                    .map_err(|e| CliError::Input(e.to_string()))?;
                let seed = seed.or(seed_override).unwrap_or(0);
                Ok(Box::new(task.simulated_predictor(sigma, bias, seed)))
            }
            SpecKind::Mlp(path) => {
                let model = formats::read_model(path)?;
                Ok(Box::new(MlpPredictor::new(space.clone(), Arc::new(model))))
            }
            SpecKind::Llm(path) => {
                let predictor = build_llm_predictor(path, space)?;
                Ok(Box::new(predictor))
            }
        }
    }
}

enum SpecKind<'a> {
    Gold,
    Simulated {
        sigma: f64,
        bias: f64,
        seed: Option<u64>,
    },
    Mlp(&'a Path),
    Llm(&'a Path),
}

/// Self-contained LLM predictor description: the endpoint plus the
/// files that provide prompt context. Relative paths resolve against
/// the spec file's directory.
#[derive(Debug, Serialize, Deserialize)]
pub struct LlmPredictorSpecFile {
    pub format_version: u32,
    pub endpoint: LlmEndpointConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_config: Option<PathBuf>,
    pub task_examples: PathBuf,
    pub tfs_eval: PathBuf,
    /// Seed for the demonstration/eval split.
    pub seed: u64,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

pub fn build_llm_predictor(
    spec_path: &Path,
    _space: &SearchSpace,
) -> Result<LlmPredictor, CliError> {
    let text = formats::read_to_string(spec_path)?;
    let spec: LlmPredictorSpecFile =
        serde_json::from_str(&text).map_err(|e| CliError::input_at(spec_path, e))?;
    if spec.format_version != formats::FORMAT_VERSION {
        return Err(CliError::input_at(
            spec_path,
            format!(
                "expected format_version {}, found {}",
                formats::FORMAT_VERSION,
                spec.format_version
            ),
        ));
    }
    let base = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let prompt_config = match &spec.prompt_config {
        Some(p) => formats::read_prompt_config(&resolve(base, p))?,
        None => PromptConfig::default(),
    };
    let context = build_prompt_context(
        prompt_config,
        &resolve(base, &spec.task_examples),
        &resolve(base, &spec.tfs_eval),
        spec.seed,
    )?;
    LlmPredictor::new(spec.endpoint, context)
}

/// Loads task examples and eval records and performs the seeded
/// demonstration split, yielding everything prompt rendering needs.
pub fn build_prompt_context(
    config: PromptConfig,
    task_examples_path: &Path,
    tfs_eval_path: &Path,
    seed: u64,
) -> Result<PromptContext, CliError> {
    let task_examples = formats::read_task_examples(task_examples_path)?;
    let (_, records) = formats::read_eval_records(tfs_eval_path)?;
    let (demo_records, _eval) = split_tfs_eval(&records, config.n_arch, seed)
        .map_err(|e| CliError::input_at(tfs_eval_path, e))?;
    let demonstrations = demo_records
        .iter()
        .map(Demonstration::from_record)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input_at(tfs_eval_path, e))?;
    Ok(PromptContext {
        config,
        glossary: default_hyperparameter_glossary(),
        task_examples,
        demonstrations,
    })
}
