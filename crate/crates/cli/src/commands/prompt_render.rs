//! `perfsearch prompt-render`: builds one performance-prediction prompt
//! from a space, prompt config, task examples, an eval-record file (for
//! the seeded demonstration split), and a test architecture.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use perfsearch_core::prompt::{render_prompt, split_tfs_eval, Demonstration, PromptConfig};

use super::{apply_ablations, prompt_error};
use crate::error::CliError;
use crate::formats;
use crate::manifest::{manifest_path_for, ManifestBuilder};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// Search space JSON file.
    #[arg(long)]
    pub space: PathBuf,
    /// Prompt config JSON file; defaults apply when omitted.
    #[arg(long)]
    pub prompt_config: Option<PathBuf>,
    /// Task examples JSONL ({"input", "output"} per line).
    #[arg(long)]
    pub task_examples: PathBuf,
    /// Labeled eval records JSONL; demonstrations are sampled from it.
    #[arg(long)]
    pub tfs_eval: PathBuf,
    /// Test architecture JSON file.
    #[arg(long)]
    pub test_arch: PathBuf,
    /// Seed for the demonstration split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prompt text file.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated components to disable.
    #[arg(long, default_value = "")]
    pub ablate: String,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let space = formats::read_space(&args.space)?;
    let mut config = match &args.prompt_config {
        Some(path) => formats::read_prompt_config(path)?,
        None => PromptConfig::default(),
    };
    apply_ablations(&mut config.component_toggles, &args.ablate)?;
    let task_examples = formats::read_task_examples(&args.task_examples)?;
    let (_, records) = formats::read_eval_records(&args.tfs_eval)?;
    let test_arch = formats::read_architecture(&args.test_arch)?;

    let violations = space.validate(&test_arch);
    if !violations.is_empty() {
        let detail: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::input_at(
            &args.test_arch,
            format!("architecture invalid: {}", detail.join("; ")),
        ));
    }

    let (demo_records, _) = split_tfs_eval(&records, config.n_arch, args.seed)
        .map_err(|e| CliError::input_at(&args.tfs_eval, e))?;
    let demos = demo_records
        .iter()
        .map(Demonstration::from_record)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input_at(&args.tfs_eval, e))?;
    let glossary = perfsearch_core::prompt::default_hyperparameter_glossary();
    let prompt = render_prompt(&config, &glossary, &task_examples, &demos, &test_arch)
        .map_err(prompt_error)?;

    formats::write_text(&args.out, &prompt)?;
    ManifestBuilder::new("prompt-render")
        .seed(args.seed)
        .config(&config)
        .input(&args.space)?
        .input(&args.task_examples)?
        .input(&args.tfs_eval)?
        .input(&args.test_arch)?
        .output(&args.out)
        .write(&manifest_path_for(&args.out))?;
    eprintln!("wrote {} ({} bytes)", args.out.display(), prompt.len());
    Ok(())
}
