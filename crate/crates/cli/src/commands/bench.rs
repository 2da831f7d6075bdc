//! `perfsearch bench`: the synthetic-task experiment harness. `sweep`
//! runs a grid of search configurations (schedule windows, constraint
//! values, seeds) against the same predictor pair and emits a result
//! table; `report` scores a predictor's MAE/Kendall quality on
//! gold-labeled records across seeds.

use std::path::PathBuf;

use clap::{Args as ClapArgs, Subcommand};
use perfsearch_core::bench::{
    evaluate_predictor, standard_schedule_windows, sweep, SweepSpec, SyntheticTask,
};
use perfsearch_core::search::{Constraint, ConstraintMetric, SearchConfig};

use crate::error::CliError;
use crate::formats;
use crate::manifest::ManifestBuilder;
use crate::predspec::PredictorSpec;

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a grid of search configurations and emit CSV + JSONL tables.
    Sweep(SweepArgs),
    /// Evaluate a predictor's MAE/Kendall-Tau on gold-labeled records.
    Report(ReportArgs),
}

#[derive(Debug, ClapArgs)]
pub struct SweepArgs {
    /// Space file; the built-in tiny task space applies when omitted.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Schedule windows: comma-separated `start:end` pairs, `none` for
    /// the predictor-B-only baseline, or the word `standard` for the
    /// baseline plus the six standard windows.
    #[arg(long, default_value = "standard")]
    pub windows: String,
    /// Comma-separated constraint thresholds.
    #[arg(long, default_value = "100")]
    pub constraints: String,
    #[arg(long, value_enum, default_value_t = MetricArg::Latency)]
    pub constraint_metric: MetricArg,
    /// Comma-separated seeds.
    #[arg(long, default_value = "1")]
    pub seeds: String,
    /// Predictor used inside the schedule window.
    #[arg(long, default_value = "sim:sigma=0.25,bias=0,seed=11")]
    pub predictor_a: String,
    /// Predictor used outside the schedule window.
    #[arg(long, default_value = "sim:sigma=0.45,bias=-1.2,seed=12")]
    pub predictor_b: String,
    #[arg(long, default_value_t = 30)]
    pub num_iterations: u32,
    /// Resample the initial population until it satisfies the constraint.
    #[arg(long)]
    pub filter_init_population: bool,
    /// Retry mutation/crossover candidates until quotas fill.
    #[arg(long)]
    pub retry_until_quota: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricArg {
    Latency,
    Gflops,
}

impl From<MetricArg> for ConstraintMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Latency => ConstraintMetric::Latency,
            MetricArg::Gflops => ConstraintMetric::Gflops,
        }
    }
}

#[derive(Debug, ClapArgs)]
pub struct ReportArgs {
    /// Space file; the built-in tiny task space applies when omitted.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Predictor spec to evaluate.
    #[arg(long)]
    pub predictor: String,
    /// Number of gold-labeled eval records.
    #[arg(long, default_value_t = 200)]
    pub n_eval: usize,
    #[arg(long, default_value = "1,2,3")]
    pub seeds: String,
    /// Output report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cmd: &Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Sweep(args) => run_sweep(args),
        Cmd::Report(args) => run_report(args),
    }
}

fn load_task(space: &Option<PathBuf>) -> Result<SyntheticTask, CliError> {
    match space {
        None => Ok(SyntheticTask::new(0)),
        Some(path) => {
            let space = formats::read_space(path)?;
            SyntheticTask::over_space(space, 0).map_err(|e| CliError::input_at(path, e))
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::Config(format!("bad {what} value `{s}`")))
        })
        .collect()
}

/// `none` means an empty window (predictor B everywhere), encoded as a
/// start past the end.
fn parse_windows(text: &str, num_iterations: u32) -> Result<Vec<(String, u32, u32)>, CliError> {
    if text == "standard" {
        let mut windows = vec![("baseline".to_string(), num_iterations + 1, 0)];
        for (start, end) in standard_schedule_windows(num_iterations) {
            windows.push((format!("hybrid({start},{end})"), start, end));
        }
        return Ok(windows);
    }
    let mut windows = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if part == "none" {
            windows.push(("baseline".to_string(), num_iterations + 1, 0));
            continue;
        }
        let (start, end) = part
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("bad window `{part}` (expected start:end)")))?;
        let start: u32 = start
            .parse()
            .map_err(|_| CliError::Config(format!("bad window start `{start}`")))?;
        let end: u32 = end
            .parse()
            .map_err(|_| CliError::Config(format!("bad window end `{end}`")))?;
        windows.push((format!("hybrid({start},{end})"), start, end));
    }
    Ok(windows)
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let task = load_task(&args.space)?;
    let predictor_a = PredictorSpec::parse(&args.predictor_a)?.build(task.space(), None)?;
    let predictor_b = PredictorSpec::parse(&args.predictor_b)?.build(task.space(), None)?;
    let windows = parse_windows(&args.windows, args.num_iterations)?;
    let constraints: Vec<f64> = parse_list(&args.constraints, "constraint")?;
    let seeds: Vec<u64> = parse_list(&args.seeds, "seed")?;

    let mut specs = Vec::new();
    for (label, start, end) in &windows {
        for &threshold in &constraints {
            for &seed in &seeds {
                specs.push(SweepSpec {
                    label: label.clone(),
                    config: SearchConfig {
                        num_iterations: args.num_iterations,
                        llm_start_iteration: *start,
                        llm_end_iteration: *end,
                        constraint: Constraint {
                            metric: args.constraint_metric.into(),
                            threshold,
                        },
                        filter_init_population: args.filter_init_population,
                        retry_until_quota: args.retry_until_quota,
                        seed,
                        ..SearchConfig::default()
                    },
                });
            }
        }
    }

    let table = sweep(&task, predictor_a.as_ref(), predictor_b.as_ref(), &specs);
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::input_at(&args.out_dir, e))?;
    let csv_path = args.out_dir.join("sweep.csv");
    let jsonl_path = args.out_dir.join("sweep.jsonl");
    formats::write_text(&csv_path, &table.to_csv())?;
    let lines: Vec<String> = table
        .rows
        .iter()
        .map(|row| serde_json::to_string(row).expect("sweep rows serialize"))
        .collect();
    formats::write_text(&jsonl_path, &(lines.join("\n") + "\n"))?;
    ManifestBuilder::new("bench sweep")
        .config(&serde_json::json!({
            "windows": args.windows,
            "constraints": args.constraints,
            "seeds": args.seeds,
            "predictor_a": args.predictor_a,
            "predictor_b": args.predictor_b,
            "num_iterations": args.num_iterations,
        }))
        .output(&csv_path)
        .output(&jsonl_path)
        .write(&args.out_dir.join("manifest.json"))?;
    print!("{}", table.to_csv());
    Ok(())
}

fn run_report(args: &ReportArgs) -> Result<(), CliError> {
    let task = load_task(&args.space)?;
    let seeds: Vec<u64> = parse_list(&args.seeds, "seed")?;
    let records = task
        .eval_records(args.n_eval, 0xe7a1)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let spec = PredictorSpec::parse(&args.predictor)?;
    // Build eagerly once so config errors surface before the seed loop.
    spec.build(task.space(), Some(seeds.first().copied().unwrap_or(0)))?;
    let report = evaluate_predictor(
        |seed| {
            spec.build(task.space(), Some(seed))
                .expect("spec validated above")
        },
        &format!("synthetic-{}", args.n_eval),
        &records,
        &seeds,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    formats::write_text(&args.out, &text)?;
    ManifestBuilder::new("bench report")
        .config(&serde_json::json!({
            "predictor": args.predictor,
            "n_eval": args.n_eval,
            "seeds": args.seeds,
        }))
        .output(&args.out)
        .write(&crate::manifest::manifest_path_for(&args.out))?;
    match (report.mean_mae, report.mean_tau) {
        (Some(mae), Some(tau)) => println!("mean MAE: {mae:.4}  mean Kendall-Tau: {tau:.4}"),
        (Some(mae), None) => println!("mean MAE: {mae:.4}  mean Kendall-Tau: degenerate"),
        _ => println!("no completed seeds"),
    }
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}
