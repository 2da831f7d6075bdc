//! On-disk file schemas and their readers/writers.
//!
//! Structured files we define carry a `format_version` field; files
//! whose shape is externally fixed (single-architecture JSON maps,
//! task-example and dataset JSONL rows) stay bare. Read errors carry
//! path and, for JSONL, line context.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use perfsearch_core::distill::{DistillRow, MlpRegressor, TrainingConfig};
use perfsearch_core::efficiency::LatencyModel;
use perfsearch_core::predictor::EvalRecord;
use perfsearch_core::prompt::{PromptConfig, TaskExample};
use perfsearch_core::search::{IterationRecord, SearchConfig, SearchOutcome};
use perfsearch_core::space::{Architecture, SearchSpace, SearchSpaceConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

fn check_version(path: &Path, found: u32) -> Result<(), CliError> {
    if found != FORMAT_VERSION {
        return Err(CliError::input_at(
            path,
            format!("expected format_version {FORMAT_VERSION}, found {found}"),
        ));
    }
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input_at(path, e))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::input_at(parent, e))?;
        }
    }
    let tmp = path.with_extension("tmp-write");
    fs::write(&tmp, bytes).map_err(|e| CliError::input_at(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::input_at(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::input_at(path, e))
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::input_at(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// --- search space -----------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct SpaceFile {
    format_version: u32,
    attributes: Vec<perfsearch_core::space::AttributeSpec>,
}

pub fn read_space(path: &Path) -> Result<SearchSpace, CliError> {
    let file: SpaceFile = read_json(path)?;
    check_version(path, file.format_version)?;
    SearchSpace::new(file.attributes).map_err(|e| CliError::input_at(path, e))
}

pub fn write_space(path: &Path, space: &SearchSpace) -> Result<(), CliError> {
    let config: SearchSpaceConfig = space.clone().into();
    let file = SpaceFile {
        format_version: FORMAT_VERSION,
        attributes: config.attributes,
    };
    write_json_pretty(path, &file)
}

// --- architectures ----------------------------------------------------

/// Single architecture: a bare JSON object keyed by attribute name.
pub fn read_architecture(path: &Path) -> Result<Architecture, CliError> {
    read_json(path)
}

pub fn write_architecture(path: &Path, arch: &Architecture) -> Result<(), CliError> {
    write_json_pretty(path, arch)
}

/// JSONL of bare architecture objects, one per line.
pub fn read_architectures_jsonl(path: &Path) -> Result<Vec<Architecture>, CliError> {
    read_jsonl_rows(path)
}

pub fn write_architectures_jsonl(path: &Path, archs: &[Architecture]) -> Result<(), CliError> {
    write_jsonl(path, None, archs)
}

// --- generic JSONL machinery -------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct JsonlHeader {
    format_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<String>,
}

fn open_lines(
    path: &Path,
) -> Result<impl Iterator<Item = (usize, Result<String, std::io::Error>)>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::input_at(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line)))
}

fn read_jsonl_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut rows = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| CliError::input_at_line(path, line_no, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row =
            serde_json::from_str(&line).map_err(|e| CliError::input_at_line(path, line_no, e))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads JSONL whose first non-empty line may be a header object with a
/// `format_version`; returns (metric from the header, rows).
fn read_jsonl_with_header<T: DeserializeOwned>(
    path: &Path,
    expected_kind: &str,
) -> Result<(Option<String>, Vec<T>), CliError> {
    let mut rows = Vec::new();
    let mut metric = None;
    let mut saw_first = false;
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| CliError::input_at_line(path, line_no, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_first {
            saw_first = true;
            if let Ok(header) = serde_json::from_str::<JsonlHeader>(&line) {
                check_version(path, header.format_version)?;
                if header.kind != expected_kind {
                    return Err(CliError::input_at_line(
                        path,
                        line_no,
                        format!("expected kind `{expected_kind}`, found `{}`", header.kind),
                    ));
                }
                metric = header.metric;
                continue;
            }
        }
        let row =
            serde_json::from_str(&line).map_err(|e| CliError::input_at_line(path, line_no, e))?;
        rows.push(row);
    }
    Ok((metric, rows))
}

fn write_jsonl<T: Serialize>(
    path: &Path,
    header: Option<&JsonlHeader>,
    rows: &[T],
) -> Result<(), CliError> {
    let mut out = Vec::new();
    if let Some(header) = header {
        serde_json::to_writer(&mut out, header).map_err(|e| CliError::input_at(path, e))?;
        out.push(b'\n');
    }
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| CliError::input_at(path, e))?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

// --- eval records and predictions ---------------------------------------

pub fn read_eval_records(path: &Path) -> Result<(Option<String>, Vec<EvalRecord>), CliError> {
    read_jsonl_with_header(path, "eval-records")
}

pub fn write_eval_records(
    path: &Path,
    metric: Option<&str>,
    records: &[EvalRecord],
) -> Result<(), CliError> {
    let header = JsonlHeader {
        format_version: FORMAT_VERSION,
        kind: "eval-records".to_string(),
        metric: metric.map(str::to_string),
    };
    write_jsonl(path, Some(&header), records)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRow {
    pub arch: Architecture,
    pub prediction: f64,
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, CliError> {
    let (_, rows) = read_jsonl_with_header(path, "predictions")?;
    Ok(rows)
}

pub fn write_predictions(
    path: &Path,
    metric: Option<&str>,
    rows: &[PredictionRow],
) -> Result<(), CliError> {
    let header = JsonlHeader {
        format_version: FORMAT_VERSION,
        kind: "predictions".to_string(),
        metric: metric.map(str::to_string),
    };
    write_jsonl(path, Some(&header), rows)
}

// --- task examples and distillation datasets ----------------------------

pub fn read_task_examples(path: &Path) -> Result<Vec<TaskExample>, CliError> {
    read_jsonl_rows(path)
}

pub fn write_task_examples(path: &Path, examples: &[TaskExample]) -> Result<(), CliError> {
    write_jsonl(path, None, examples)
}

pub fn read_dataset_rows(path: &Path) -> Result<Vec<DistillRow>, CliError> {
    read_jsonl_rows(path)
}

pub fn write_dataset_rows(path: &Path, rows: &[DistillRow]) -> Result<(), CliError> {
    write_jsonl(path, None, rows)
}

// --- regressor model ------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: MlpRegressor,
}

pub fn read_model(path: &Path) -> Result<MlpRegressor, CliError> {
    let file: ModelFile = read_json(path)?;
    check_version(path, file.format_version)?;
    file.model
        .validate_shape()
        .map_err(|e| CliError::input_at(path, e))?;
    Ok(file.model)
}

pub fn write_model(path: &Path, model: &MlpRegressor) -> Result<(), CliError> {
    write_json_pretty(
        path,
        &ModelFile {
            format_version: FORMAT_VERSION,
            model: model.clone(),
        },
    )
}

// --- latency model ---------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct LatencyModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: LatencyModel,
    /// Informational copy of the regressor's feature normalization, if
    /// any; the regressor itself remains authoritative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_normalization: Option<serde_json::Value>,
}

pub fn read_latency_model(path: &Path) -> Result<LatencyModel, CliError> {
    let file: LatencyModelFile = read_json(path)?;
    check_version(path, file.format_version)?;
    if let LatencyModel::Regressor(model) = &file.model {
        model
            .validate_shape()
            .map_err(|e| CliError::input_at(path, e))?;
    }
    Ok(file.model)
}

pub fn write_latency_model(path: &Path, model: &LatencyModel) -> Result<(), CliError> {
    let feature_normalization = match model {
        LatencyModel::Regressor(_) => serde_json::to_value(model).ok().and_then(|v| {
            v.get("parameters")
                .and_then(|p| p.get("feature_norm"))
                .cloned()
        }),
        LatencyModel::Analytic { .. } => None,
    };
    write_json_pretty(
        path,
        &LatencyModelFile {
            format_version: FORMAT_VERSION,
            model: model.clone(),
            feature_normalization,
        },
    )
}

// --- configs ---------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct SearchConfigFile {
    format_version: u32,
    #[serde(flatten)]
    config: SearchConfig,
}

pub fn read_search_config(path: &Path) -> Result<SearchConfig, CliError> {
    let file: SearchConfigFile = read_json(path)?;
    check_version(path, file.format_version)?;
    // Validation failures are config errors (exit 2), not input data.
    file.config
        .validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(file.config)
}

pub fn write_search_config(path: &Path, config: &SearchConfig) -> Result<(), CliError> {
    write_json_pretty(
        path,
        &SearchConfigFile {
            format_version: FORMAT_VERSION,
            config: config.clone(),
        },
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct PromptConfigFile {
    format_version: u32,
    #[serde(flatten)]
    config: PromptConfig,
}

pub fn read_prompt_config(path: &Path) -> Result<PromptConfig, CliError> {
    let file: PromptConfigFile = read_json(path)?;
    check_version(path, file.format_version)?;
    file.config
        .validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(file.config)
}

pub fn write_prompt_config(path: &Path, config: &PromptConfig) -> Result<(), CliError> {
    write_json_pretty(
        path,
        &PromptConfigFile {
            format_version: FORMAT_VERSION,
            config: config.clone(),
        },
    )
}

/// Training hyperparameters accepted by `distill train` config files.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainingConfigFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub config: TrainingConfig,
}

pub fn read_training_config(path: &Path) -> Result<TrainingConfig, CliError> {
    let file: TrainingConfigFile = read_json(path)?;
    check_version(path, file.format_version)?;
    Ok(file.config)
}

// --- search outputs ----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchSummaryFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub outcome: SearchOutcome,
}

pub fn write_search_summary(path: &Path, outcome: &SearchOutcome) -> Result<(), CliError> {
    write_json_pretty(
        path,
        &SearchSummaryFile {
            format_version: FORMAT_VERSION,
            outcome: outcome.clone(),
        },
    )
}

pub fn read_search_summary(path: &Path) -> Result<SearchOutcome, CliError> {
    let file: SearchSummaryFile = read_json(path)?;
    check_version(path, file.format_version)?;
    Ok(file.outcome)
}

pub fn write_trace_jsonl(path: &Path, records: &[IterationRecord]) -> Result<(), CliError> {
    let header = JsonlHeader {
        format_version: FORMAT_VERSION,
        kind: "search-trace".to_string(),
        metric: None,
    };
    write_jsonl(path, Some(&header), records)
}

pub fn read_trace_jsonl(path: &Path) -> Result<Vec<IterationRecord>, CliError> {
    let (_, rows) = read_jsonl_with_header(path, "search-trace")?;
    Ok(rows)
}

/// Writes raw text output through the same atomic path as JSON files.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use perfsearch_core::space::SearchSpace;

    #[test]
    fn version_mismatch_names_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("space.json");
        std::fs::write(&path, r#"{"format_version":9,"attributes":[]}"#).unwrap();
        let err = read_space(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("expected format_version 1"), "{text}");
        assert!(text.contains("found 9"), "{text}");
    }

    #[test]
    fn truncated_model_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{\"format_version\":1,\"layer_dims\":[10,4").unwrap();
        assert!(read_model(&path).is_err());
    }

    #[test]
    fn space_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("space.json");
        let space = SearchSpace::default_transformer();
        write_space(&path, &space).unwrap();
        let back = read_space(&path).unwrap();
        assert_eq!(space, back);
    }

    #[test]
    fn jsonl_line_errors_carry_context() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        std::fs::write(
            &path,
            "{\"format_version\":1,\"kind\":\"predictions\"}\nnot-json\n",
        )
        .unwrap();
        let err = read_predictions(&path).unwrap_err();
        assert!(err.to_string().contains("rows.jsonl:2"), "{err}");
    }
}
