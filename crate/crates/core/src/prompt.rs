//! Few-shot prompt construction for LLM-backed performance prediction,
//! plus reply parsing and demonstration/eval splitting.
//!
//! A rendered prompt contains, in order and depending on the enabled
//! components: a role sentence; up to five numbered instructions
//! (renumbered contiguously when some are disabled); hyperparameter
//! definitions; demonstrations, each listing hyperparameter lines
//! followed by a performance line (`BLEU: 24.30`) and an efficiency line
//! (`GFLOPS: 2.7`); and the test architecture block, ending with the
//! bare metric label (`BLEU:`). Rendering is byte-deterministic for
//! fixed inputs: lines are joined with `\n` and the prompt carries no
//! trailing newline.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng as _;
use rand::SeedableRng as _;
use serde::{Deserialize, Serialize};

use crate::predictor::EvalRecord;
use crate::space::{attr, Architecture, AttrValue};

/// Which prompt components to render. Demonstrations are mandatory: the
/// minimal supported variant is "demonstrations only".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentToggles {
    pub role: bool,
    pub instr1: bool,
    pub instr2: bool,
    pub instr3: bool,
    pub instr4: bool,
    pub instr5: bool,
    pub hyperparameters: bool,
    pub demonstrations: bool,
}

impl Default for ComponentToggles {
    fn default() -> Self {
        Self {
            role: true,
            instr1: true,
            instr2: true,
            instr3: true,
            instr4: true,
            instr5: true,
            hyperparameters: true,
            demonstrations: true,
        }
    }
}

impl ComponentToggles {
    pub fn demonstrations_only() -> Self {
        Self {
            role: false,
            instr1: false,
            instr2: false,
            instr3: false,
            instr4: false,
            instr5: false,
            hyperparameters: false,
            demonstrations: true,
        }
    }

    fn any_instruction(&self) -> bool {
        self.instr1 || self.instr2 || self.instr3 || self.instr4 || self.instr5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub task_name: String,
    pub dataset_name: String,
    pub source_lang: String,
    pub target_lang: String,
    pub performance_metric_name: String,
    pub efficiency_metric_name: String,
    /// Prose for the efficiency instruction, e.g. "gigaFLOPs required for
    /// the forward propagation of a single translation example".
    pub efficiency_metric_description: String,
    pub backbone_citation: String,
    /// Task examples quoted in the second instruction.
    pub n_task: usize,
    /// Demonstrations included before the test architecture.
    pub n_arch: usize,
    pub component_toggles: ComponentToggles,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            task_name: "machine translation".to_string(),
            dataset_name: "WMT'14".to_string(),
            source_lang: "English".to_string(),
            target_lang: "German".to_string(),
            performance_metric_name: "BLEU".to_string(),
            efficiency_metric_name: "GFLOPS".to_string(),
            efficiency_metric_description:
                "gigaFLOPs required for the forward propagation of a single translation example"
                    .to_string(),
            backbone_citation: "\"Attention Is All You Need\" (Vaswani et al., 2017)".to_string(),
            n_task: 5,
            n_arch: 10,
            component_toggles: ComponentToggles::default(),
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<(), PromptError> {
        if !self.component_toggles.demonstrations {
            return Err(PromptError::DemonstrationsMandatory);
        }
        if self.n_arch == 0 {
            return Err(PromptError::NArchZero);
        }
        Ok(())
    }

    fn task_phrase(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} {} to {} {}",
            self.dataset_name, self.source_lang, self.target_lang, self.task_name
        );
        s
    }
}

/// One input/output pair from the downstream task. Serialized as
/// `{"input": ..., "output": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExample {
    #[serde(rename = "input")]
    pub input_text: String,
    #[serde(rename = "output")]
    pub output_text: String,
}

/// A supervised in-prompt example: an architecture with its efficiency
/// metric and true task performance.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub arch: Architecture,
    pub performance: f64,
    pub efficiency: f64,
}

impl Demonstration {
    /// Pulls performance and GFLOPs out of an eval record; the record
    /// must carry efficiency metrics.
    pub fn from_record(record: &EvalRecord) -> Result<Self, PromptError> {
        let efficiency = record
            .efficiency
            .as_ref()
            .map(|e| e.gflops)
            .ok_or(PromptError::MissingEfficiency)?;
        Ok(Self {
            arch: record.arch.clone(),
            performance: record.score,
            efficiency,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("the demonstrations component cannot be disabled")]
    DemonstrationsMandatory,
    #[error("n_arch must be at least 1")]
    NArchZero,
    #[error("instruction 2 needs {needed} task examples, got {got}")]
    TooFewTaskExamples { needed: usize, got: usize },
    #[error("expected exactly {expected} demonstrations, got {got}")]
    DemonstrationCountMismatch { expected: usize, got: usize },
    #[error("architecture lacks glossary attribute `{0}`")]
    MissingAttribute(String),
    #[error("demonstration {index} has a non-finite value")]
    NonFiniteDemonstration { index: usize },
    #[error("task example {index} has an empty input or output")]
    EmptyTaskExample { index: usize },
    #[error("eval record carries no efficiency metrics")]
    MissingEfficiency,
    #[error("need more than {needed} records to split, got {got}")]
    TooFewRecords { needed: usize, got: usize },
}

/// The hyperparameter definitions rendered for the standard transformer
/// space, in prompt order.
pub fn default_hyperparameter_glossary() -> Vec<(String, String)> {
    [
        (
            attr::ENCODER_EMBED_DIM,
            "corresponds to encoder embedding dimension",
        ),
        (
            attr::ENCODER_LAYER_NUM,
            "corresponds to number of encoder layers",
        ),
        (
            attr::ENCODER_FFN_EMBED_DIM,
            "correspond to embedding dimension of each FFN layer in encoder",
        ),
        (
            attr::ENCODER_SELF_ATTN_HEADS,
            "correspond to number of self attention heads in each encoder layer",
        ),
        (
            attr::DECODER_EMBED_DIM,
            "corresponds to decoder embedding dimension",
        ),
        (
            attr::DECODER_LAYER_NUM,
            "corresponds to number of decoder layers",
        ),
        (
            attr::DECODER_FFN_EMBED_DIM,
            "correspond to embedding dimension of each FFN layer in decoder",
        ),
        (
            attr::DECODER_SELF_ATTN_HEADS,
            "correspond to number of self attention heads in each decoder layer",
        ),
        (
            attr::DECODER_CROSS_ATTN_HEADS,
            "correspond to number of cross attention heads in each decoder layer",
        ),
        (
            attr::DECODER_ARBITRARY_ATTN,
            "correspond to number of encoder layers attended by cross-attention heads in each \
             decoder layer (-1 means only attend to the last layer; 1 means attend to last two \
             layers, 2 means attend to last three layers)",
        ),
    ]
    .iter()
    .map(|(n, d)| (n.to_string(), d.to_string()))
    .collect()
}

fn push_architecture_lines(
    out: &mut String,
    glossary: &[(String, String)],
    arch: &Architecture,
) -> Result<(), PromptError> {
    for (name, _) in glossary {
        match arch.get(name) {
            Some(AttrValue::Scalar(v)) => {
                let _ = writeln!(out, "{name}: {v}");
            }
            Some(AttrValue::PerLayer(list)) => {
                let _ = write!(out, "{name}: [");
                for (i, v) in list.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{v}");
                }
                out.push_str("]\n");
            }
            None => return Err(PromptError::MissingAttribute(name.clone())),
        }
    }
    Ok(())
}

/// Renders the full prompt for one test architecture.
///
/// Preconditions: at least `n_task` task examples when instruction 2 is
/// enabled, and exactly `n_arch` demonstrations.
pub fn render_prompt(
    cfg: &PromptConfig,
    glossary: &[(String, String)],
    task_examples: &[TaskExample],
    demos: &[Demonstration],
    test_arch: &Architecture,
) -> Result<String, PromptError> {
    cfg.validate()?;
    let toggles = &cfg.component_toggles;
    if toggles.instr2 && task_examples.len() < cfg.n_task {
        return Err(PromptError::TooFewTaskExamples {
            needed: cfg.n_task,
            got: task_examples.len(),
        });
    }
    if demos.len() != cfg.n_arch {
        return Err(PromptError::DemonstrationCountMismatch {
            expected: cfg.n_arch,
            got: demos.len(),
        });
    }
    for (index, d) in demos.iter().enumerate() {
        if !d.performance.is_finite() || !d.efficiency.is_finite() {
            return Err(PromptError::NonFiniteDemonstration { index });
        }
    }
    for (index, e) in task_examples.iter().take(cfg.n_task).enumerate() {
        if e.input_text.is_empty() || e.output_text.is_empty() {
            return Err(PromptError::EmptyTaskExample { index });
        }
    }

    let perf = &cfg.performance_metric_name;
    let eff = &cfg.efficiency_metric_name;
    let mut out = String::new();

    if toggles.role {
        let _ = writeln!(
            out,
            "You are a performance estimator for {} task, where you will estimate the {} score \
             for the test architecture.",
            cfg.task_name, perf
        );
    }

    if toggles.any_instruction() {
        out.push_str("You should follow these instructions:\n");
        let mut number = 0;
        let mut next = || {
            number += 1;
            number
        };
        if toggles.instr1 {
            let _ = writeln!(
                out,
                "{}. You should understand that the {} task is {} and the quality of a \
                 configuration is measured based on {} score.",
                next(),
                cfg.task_name,
                cfg.task_phrase(),
                perf
            );
        }
        if toggles.instr2 {
            let _ = writeln!(
                out,
                "{}. Some examples for {} are as follows:",
                next(),
                cfg.task_phrase()
            );
            for (i, example) in task_examples.iter().take(cfg.n_task).enumerate() {
                let _ = writeln!(out, "Example {}:", i + 1);
                let _ = writeln!(out, "Input: {}", example.input_text);
                let _ = writeln!(out, "Output: {}", example.output_text);
            }
        }
        if toggles.instr3 {
            let _ = writeln!(
                out,
                "{}. You should understand that the backbone architecture is from {} paper, \
                 which is a Transformer based Encoder-Decoder architecture. We use the same \
                 hyperparameters and optimization algorithms.",
                next(),
                cfg.backbone_citation
            );
        }
        if toggles.instr4 {
            let _ = writeln!(
                out,
                "{}. You should understand that the efficiency of a configuration is measured \
                 in terms of {}.",
                next(),
                cfg.efficiency_metric_description
            );
        }
        if toggles.instr5 {
            let _ = writeln!(
                out,
                "{}. You should concentrate on the example configurations provided below along \
                 with their {} and {} to understand the complex relationships between \
                 architecture configuration, {} and {}.",
                next(),
                perf,
                eff,
                perf,
                eff
            );
        }
    }

    if toggles.hyperparameters {
        out.push_str("Hyperparameter definition:\n");
        for (name, description) in glossary {
            let _ = writeln!(out, "'{name}' {description}");
        }
    }

    for (i, demo) in demos.iter().enumerate() {
        let _ = writeln!(out, "Example {}:", i + 1);
        push_architecture_lines(&mut out, glossary, &demo.arch)?;
        let _ = writeln!(out, "{}: {:.2}", perf, demo.performance);
        let _ = writeln!(out, "{}: {:.1}", eff, demo.efficiency);
    }

    out.push_str("Test Architecture:\n");
    push_architecture_lines(&mut out, glossary, test_arch)?;
    let _ = write!(out, "{perf}:");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no numeric prediction in reply: {reply:?}")]
    NoNumber { reply: String },
}

/// Extracts the predicted score from an LLM reply: the first finite
/// decimal number, after stripping an optional leading
/// `<metric_name>:` label (which may itself contain digits).
///
/// A `-`/`+` directly preceded by an alphanumeric character is not
/// treated as a sign, so hyphenated names do not read as negatives.
pub fn parse_prediction(reply: &str, metric_name: &str) -> Result<f64, ParseError> {
    let mut text = reply.trim_start();
    if let Some(rest) = text.strip_prefix(metric_name) {
        let rest = rest.trim_start();
        text = rest.strip_prefix(':').unwrap_or(rest);
    }
    scan_first_number(text).ok_or_else(|| ParseError::NoNumber {
        reply: reply.to_string(),
    })
}

fn scan_first_number(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let is_sign = b == b'-' || b == b'+';
        let sign_ok = is_sign
            && i + 1 < bytes.len()
            && bytes[i + 1].is_ascii_digit()
            && (i == 0 || !bytes[i - 1].is_ascii_alphanumeric());
        if b.is_ascii_digit() || sign_ok {
            let start = i;
            if is_sign {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // Optional exponent.
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            if let Ok(v) = text[start..i].parse::<f64>() {
                if v.is_finite() {
                    return Some(v);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

/// Seeded split of eval records into `n_arch` demonstrations and the
/// disjoint remainder (kept in input order).
pub fn split_tfs_eval(
    records: &[EvalRecord],
    n_arch: usize,
    seed: u64,
) -> Result<(Vec<EvalRecord>, Vec<EvalRecord>), PromptError> {
    if records.len() <= n_arch {
        return Err(PromptError::TooFewRecords {
            needed: n_arch + 1,
            got: records.len(),
        });
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..records.len()).collect();
    // Partial Fisher-Yates: the first n_arch slots become the sample.
    for i in 0..n_arch {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    let chosen = &indices[..n_arch];
    let demos = chosen.iter().map(|&i| records[i].clone()).collect();
    let eval = (0..records.len())
        .filter(|i| !chosen.contains(i))
        .map(|i| records[i].clone())
        .collect();
    Ok((demos, eval))
}
