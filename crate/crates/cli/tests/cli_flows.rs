//! End-to-end runs of the `perfsearch` binary over the checked-in
//! fixtures: outputs, reproducibility, and exit codes.

mod support;

use std::path::Path;
use std::process::{Command, Output};

use perfsearch::formats;
use support::*;

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn prompt_render_reproduces_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prompt.txt");
    let output = run(&[
        "prompt-render",
        "--space",
        &path_str(&fixture("space.json")),
        "--task-examples",
        &path_str(&fixture("task_examples.jsonl")),
        "--tfs-eval",
        &path_str(&fixture("tfs_eval.jsonl")),
        "--test-arch",
        &path_str(&fixture("test_arch.json")),
        "--seed",
        "42",
        "--out",
        &path_str(&out),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let rendered = std::fs::read_to_string(&out).unwrap();
    let golden = std::fs::read_to_string(fixture("golden_prompt_full.txt")).unwrap();
    assert_eq!(rendered, golden, "prompt drifted from the frozen golden");
    // A manifest is written next to the output.
    assert!(dir.path().join("prompt.txt.manifest.json").exists());

    // Re-running reproduces byte-identical primary output.
    let again = dir.path().join("again.txt");
    let output = run(&[
        "prompt-render",
        "--space",
        &path_str(&fixture("space.json")),
        "--task-examples",
        &path_str(&fixture("task_examples.jsonl")),
        "--tfs-eval",
        &path_str(&fixture("tfs_eval.jsonl")),
        "--test-arch",
        &path_str(&fixture("test_arch.json")),
        "--seed",
        "42",
        "--out",
        &path_str(&again),
    ]);
    assert!(output.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn prompt_render_ablation_removes_components() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prompt.txt");
    let output = run(&[
        "prompt-render",
        "--space",
        &path_str(&fixture("space.json")),
        "--task-examples",
        &path_str(&fixture("task_examples.jsonl")),
        "--tfs-eval",
        &path_str(&fixture("tfs_eval.jsonl")),
        "--test-arch",
        &path_str(&fixture("test_arch.json")),
        "--seed",
        "42",
        "--ablate",
        "role,instr3",
        "--out",
        &path_str(&out),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let rendered = std::fs::read_to_string(&out).unwrap();
    assert!(!rendered.contains("You are a performance estimator"));
    assert!(!rendered.contains("backbone architecture"));
    assert!(rendered.contains("Hyperparameter definition:"));
}

#[test]
fn prompt_render_missing_test_arch_is_usage_error() {
    let output = run(&[
        "prompt-render",
        "--space",
        &path_str(&fixture("space.json")),
        "--task-examples",
        &path_str(&fixture("task_examples.jsonl")),
        "--tfs-eval",
        &path_str(&fixture("tfs_eval.jsonl")),
        "--out",
        "/tmp/never-written.txt",
    ]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
}

#[test]
fn eval_reproduces_worked_examples() {
    let close = run(&[
        "eval",
        "--pred-file",
        &path_str(&fixture("a2_preds_close.jsonl")),
        "--truth-file",
        &path_str(&fixture("a2_truth.jsonl")),
    ]);
    assert!(close.status.success(), "{}", stderr(&close));
    let text = stdout(&close);
    assert!(text.contains("MAE: 0.1000"), "{text}");

    let far = run(&[
        "eval",
        "--pred-file",
        &path_str(&fixture("a2_preds_far.jsonl")),
        "--truth-file",
        &path_str(&fixture("a2_truth.jsonl")),
    ]);
    let text = stdout(&far);
    assert!(text.contains("MAE: 3.3333"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("discordance.csv");
    let rank = run(&[
        "eval",
        "--pred-file",
        &path_str(&fixture("a2_preds_close.jsonl")),
        "--truth-file",
        &path_str(&fixture("a2_rank_truth.jsonl")),
        "--discordance-out",
        &path_str(&csv),
    ]);
    let text = stdout(&rank);
    assert!(text.contains("Kendall-Tau: -0.3333"), "{text}");
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("distance,count,cumulative_fraction"));
    assert!(csv_text.contains("1,1,0.5"));
    assert!(csv_text.contains("2,1,1"));
}

#[test]
fn eval_rejects_mismatched_architecture_sets() {
    // Truth file with one record removed.
    let dir = tempfile::tempdir().unwrap();
    let (metric, mut records) = formats::read_eval_records(&fixture("a2_truth.jsonl")).unwrap();
    records.pop();
    let truncated = dir.path().join("truth.jsonl");
    formats::write_eval_records(&truncated, metric.as_deref(), &records).unwrap();
    let output = run(&[
        "eval",
        "--pred-file",
        &path_str(&fixture("a2_preds_close.jsonl")),
        "--truth-file",
        &path_str(&truncated),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(
        stderr(&output).contains("missing from truth"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn distill_pipeline_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("dataset.jsonl");
    let output = run(&[
        "distill",
        "build-dataset",
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--teacher",
        "sim:sigma=0.1,bias=0,seed=5",
        "--n",
        "300",
        "--seed",
        "9",
        "--out",
        &path_str(&dataset),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(formats::read_dataset_rows(&dataset).unwrap().len(), 300);

    // Identical invocation reproduces the dataset byte for byte.
    let dataset2 = dir.path().join("dataset2.jsonl");
    run(&[
        "distill",
        "build-dataset",
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--teacher",
        "sim:sigma=0.1,bias=0,seed=5",
        "--n",
        "300",
        "--seed",
        "9",
        "--out",
        &path_str(&dataset2),
    ]);
    assert_eq!(
        std::fs::read(&dataset).unwrap(),
        std::fs::read(&dataset2).unwrap()
    );

    let model = dir.path().join("model.json");
    let output = run(&[
        "distill",
        "train",
        "--dataset",
        &path_str(&dataset),
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--seed",
        "4",
        "--steps",
        "300",
        "--batch-size",
        "64",
        "--learning-rate",
        "0.001",
        "--out",
        &path_str(&model),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert!(
        stdout(&output).contains("final training loss:"),
        "{}",
        stdout(&output)
    );

    let archs = dir.path().join("archs.jsonl");
    let space = formats::read_space(&fixture("tiny_space.json")).unwrap();
    let mut rng = <rand_chacha::ChaCha12Rng as rand::SeedableRng>::seed_from_u64(6);
    let sample: Vec<_> = (0..10).map(|_| space.sample(&mut rng)).collect();
    formats::write_architectures_jsonl(&archs, &sample).unwrap();
    let preds = dir.path().join("preds.jsonl");
    let output = run(&[
        "distill",
        "predict",
        "--model",
        &path_str(&model),
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--archs",
        &path_str(&archs),
        "--out",
        &path_str(&preds),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    assert_eq!(formats::read_predictions(&preds).unwrap().len(), 10);
}

#[test]
fn search_writes_trace_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("search.json");
    let config = perfsearch_core::search::SearchConfig {
        num_iterations: 6,
        population_size: 20,
        num_parents: 5,
        num_mutations: 8,
        num_crossover: 8,
        llm_end_iteration: 6,
        constraint: perfsearch_core::search::Constraint {
            metric: perfsearch_core::search::ConstraintMetric::Latency,
            threshold: 150.0,
        },
        seed: 3,
        ..Default::default()
    };
    formats::write_search_config(&config_path, &config).unwrap();
    let out_dir = dir.path().join("out");
    let output = run(&[
        "search",
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--config",
        &path_str(&config_path),
        "--predictor-a",
        "gold",
        "--predictor-b",
        "gold",
        "--out-dir",
        &path_str(&out_dir),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("score "), "{text}");
    assert!(text.contains("search_seconds"), "{text}");
    let trace = formats::read_trace_jsonl(&out_dir.join("trace.jsonl")).unwrap();
    assert_eq!(trace.len(), 6);
    let summary = formats::read_search_summary(&out_dir.join("summary.json")).unwrap();
    assert!(summary.efficiency.latency_ms <= 150.0);
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn search_with_bad_window_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("search.json");
    std::fs::write(
        &config_path,
        r#"{"format_version":1,"num_iterations":10,"llm_start_iteration":1,"llm_end_iteration":11}"#,
    )
    .unwrap();
    let output = run(&[
        "search",
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--config",
        &path_str(&config_path),
        "--predictor-a",
        "gold",
        "--predictor-b",
        "gold",
        "--out-dir",
        &path_str(&dir.path().join("out")),
    ]);
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    assert!(stderr(&output).contains("exceeds num_iterations"));
}

#[test]
fn infeasible_search_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("search.json");
    let config = perfsearch_core::search::SearchConfig {
        num_iterations: 3,
        population_size: 10,
        num_parents: 2,
        num_mutations: 4,
        num_crossover: 4,
        llm_end_iteration: 3,
        constraint: perfsearch_core::search::Constraint {
            metric: perfsearch_core::search::ConstraintMetric::Latency,
            threshold: 5.0,
        },
        seed: 1,
        ..Default::default()
    };
    formats::write_search_config(&config_path, &config).unwrap();
    let output = run(&[
        "search",
        "--space",
        &path_str(&fixture("tiny_space.json")),
        "--config",
        &path_str(&config_path),
        "--predictor-a",
        "gold",
        "--predictor-b",
        "gold",
        "--out-dir",
        &path_str(&dir.path().join("out")),
    ]);
    assert_eq!(output.status.code(), Some(4), "{}", stderr(&output));
}

#[test]
fn bench_sweep_standard_windows_emit_seven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let output = run(&[
        "bench",
        "sweep",
        "--windows",
        "standard",
        "--constraints",
        "150",
        "--seeds",
        "1",
        "--predictor-a",
        "gold",
        "--predictor-b",
        "gold",
        "--num-iterations",
        "30",
        "--filter-init-population",
        "--out-dir",
        &path_str(&out_dir),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 8, "header + 7 rows:\n{csv}");
    assert!(lines[1].starts_with("baseline,"));
    assert!(csv.contains("hybrid(1,15)"));
    assert!(out_dir.join("sweep.jsonl").exists());
}

#[test]
fn space_export_and_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let space_path = dir.path().join("tiny.json");
    let archs_path = dir.path().join("archs.jsonl");
    let output = run(&[
        "space",
        "--variant",
        "tiny",
        "--out",
        &path_str(&space_path),
        "--sample",
        "12",
        "--seed",
        "5",
        "--sample-out",
        &path_str(&archs_path),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let space = formats::read_space(&space_path).unwrap();
    let archs = formats::read_architectures_jsonl(&archs_path).unwrap();
    assert_eq!(archs.len(), 12);
    for arch in &archs {
        assert!(space.validate(arch).is_empty());
    }
}

#[test]
fn bench_report_scores_simulated_predictors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = run(&[
        "bench",
        "report",
        "--predictor",
        "sim:sigma=0,bias=-2",
        "--n-eval",
        "100",
        "--seeds",
        "1,2,3",
        "--out",
        &path_str(&out),
    ]);
    assert!(output.status.success(), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("mean MAE: 2.0000"), "{text}");
    assert!(text.contains("mean Kendall-Tau: 1.0000"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["seeds"].as_array().unwrap().len(), 3);
}
