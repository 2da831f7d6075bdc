//! `perfsearch space`: exports the built-in search spaces and,
//! optionally, a sampled batch of architectures to get started with.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use perfsearch_core::bench::SyntheticTask;
use perfsearch_core::space::SearchSpace;
use rand::SeedableRng as _;

use crate::error::CliError;
use crate::formats;
use crate::manifest::{manifest_path_for, ManifestBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Variant {
    /// The full transformer space (not enumerable at desk scale).
    Transformer,
    /// The reduced, enumerable space used by the synthetic benchmarks.
    Tiny,
}

#[derive(Debug, ClapArgs)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Variant::Transformer)]
    pub variant: Variant,
    /// Output space JSON file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also sample this many architectures from the space.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSONL for the sampled architectures.
    #[arg(long)]
    pub sample_out: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let space = match args.variant {
        Variant::Transformer => SearchSpace::default_transformer(),
        Variant::Tiny => SyntheticTask::tiny_space(),
    };
    formats::write_space(&args.out, &space)?;
    eprintln!("wrote {}", args.out.display());
    let mut manifest = ManifestBuilder::new("space")
        .seed(args.seed)
        .config(&format!("{:?}", args.variant))
        .output(&args.out);
    if let Some(n) = args.sample {
        let out = args
            .sample_out
            .as_ref()
            .ok_or_else(|| CliError::Config("--sample requires --sample-out".into()))?;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
        let archs: Vec<_> = (0..n).map(|_| space.sample(&mut rng)).collect();
        formats::write_architectures_jsonl(out, &archs)?;
        eprintln!("wrote {n} architectures to {}", out.display());
        manifest = manifest.output(out);
    }
    manifest.write(&manifest_path_for(&args.out))?;
    Ok(())
}
