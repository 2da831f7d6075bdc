//! Synthetic ground truth and the experiment harness: a tiny enumerable
//! task with closed-form score and latency functions, brute-force
//! oracles, predictor-quality reports, and search sweeps. Everything
//! here runs at desk scale with no GPUs and no remote calls.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::SeedableRng as _;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::efficiency::{EfficiencyEvaluator, EfficiencyModelConfig, LatencyModel};
use crate::mathutil::sin;
use crate::metrics::{
    discordance_profile, kendall_tau, mae, DiscordanceProfile, ScorePairs, TauOutcome,
};
use crate::predictor::{EvalRecord, GoldFn, Predictor, SimulatedPredictor};
use crate::search::{run_search, Constraint, ConstraintMetric, SearchConfig, SearchTrace};
use crate::space::{
    attr, encode, feature_bounds, Architecture, AttributeSpec, SearchSpace, ENCODING_LEN,
};

/// Gold-score closed form, over features min-max normalized to [0, 1]
/// by the task space's bounds:
///
/// `gold(x) = BASE + sum_i W[i] * x[i]
///          + INTERACTION * x[5] * x[6]
///          + RIPPLE_AMPLITUDE * sin(R0*x[5] + R1*x[6] + R2*x[0])`
///
/// (x[0] encoder embed dim, x[5] decoder layer count, x[6] average
/// decoder FFN dim.) The coefficients below are frozen; the reference
/// numbers in the test suites depend on them, so any change is a
/// breaking version bump.
pub const GOLD_BASE: f64 = 20.0;
pub const GOLD_WEIGHTS: [f64; ENCODING_LEN] = [2.5, 0.0, 0.6, 0.3, 2.0, 1.5, 1.0, 0.3, 0.3, 0.15];
pub const GOLD_INTERACTION_WEIGHT: f64 = 0.6;
pub const GOLD_RIPPLE_AMPLITUDE: f64 = 0.3;
pub const GOLD_RIPPLE_COEFFS: [f64; 3] = [4.0, 3.0, 2.0];

/// Synthetic latency closed form over raw encoding values, affine in
/// decoder load (layers x average FFN width), mimicking
/// decoder-dominated inference:
/// `latency_ms = 40 + 30 * dec_layers * avg_dec_ffn / 1000`.
pub const LATENCY_BASE_MS: f64 = 40.0;
pub const LATENCY_SLOPE_MS: f64 = 30.0;

/// Cap used when enumerating the tiny space.
pub const TINY_SPACE_CAP: u128 = 20_000;

/// Analytic cardinality of [`SyntheticTask::tiny_space`]:
/// (2 embed dims)^2 x (2 FFN x 2 heads per encoder layer)
/// x sum over d in 1..=3 of (2 FFN x 2 heads x 1 cross x 2 arbitrary)^d
/// = 4 x 4 x (8 + 64 + 512) = 9,344.
pub const TINY_SPACE_CARDINALITY: u128 = 9_344;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("no architecture satisfies {metric} <= {threshold}")]
    Infeasible {
        metric: ConstraintMetric,
        threshold: f64,
    },
    #[error(transparent)]
    Space(crate::space::SpaceError),
    #[error(transparent)]
    Efficiency(crate::efficiency::EfficiencyError),
    #[error("eval set is empty")]
    EmptyEvalSet,
}

impl From<crate::space::SpaceError> for BenchError {
    fn from(e: crate::space::SpaceError) -> Self {
        BenchError::Space(e)
    }
}

impl From<crate::efficiency::EfficiencyError> for BenchError {
    fn from(e: crate::efficiency::EfficiencyError) -> Self {
        BenchError::Efficiency(e)
    }
}

/// A deterministic desk-scale task: a tiny enumerable search space with
/// closed-form gold scores and latencies standing in for measured
/// downstream performance.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    space: SearchSpace,
    bounds: [(f64, f64); ENCODING_LEN],
    pub seed: u64,
}

impl SyntheticTask {
    /// The reduced transformer space: one encoder layer, 1-3 decoder
    /// layers, embed dims {512, 640}, FFN dims {1024, 2048}, self
    /// attention heads {4, 8}, fixed cross attention, arbitrary
    /// attention {-1, 1}. See [`TINY_SPACE_CARDINALITY`].
    pub fn tiny_space() -> SearchSpace {
        SearchSpace::new(alloc::vec![
            AttributeSpec::global(attr::ENCODER_EMBED_DIM, &[512, 640]),
            AttributeSpec::global(attr::ENCODER_LAYER_NUM, &[1]),
            AttributeSpec::per_layer(
                attr::ENCODER_FFN_EMBED_DIM,
                &[1024, 2048],
                attr::ENCODER_LAYER_NUM
            ),
            AttributeSpec::per_layer(
                attr::ENCODER_SELF_ATTN_HEADS,
                &[4, 8],
                attr::ENCODER_LAYER_NUM
            ),
            AttributeSpec::global(attr::DECODER_EMBED_DIM, &[512, 640]),
            AttributeSpec::global(attr::DECODER_LAYER_NUM, &[1, 2, 3]),
            AttributeSpec::per_layer(
                attr::DECODER_FFN_EMBED_DIM,
                &[1024, 2048],
                attr::DECODER_LAYER_NUM
            ),
            AttributeSpec::per_layer(
                attr::DECODER_SELF_ATTN_HEADS,
                &[4, 8],
                attr::DECODER_LAYER_NUM
            ),
            AttributeSpec::per_layer(
                attr::DECODER_CROSS_ATTN_HEADS,
                &[4],
                attr::DECODER_LAYER_NUM
            ),
            AttributeSpec::per_layer(
                attr::DECODER_ARBITRARY_ATTN,
                &[-1, 1],
                attr::DECODER_LAYER_NUM
            ),
            AttributeSpec::global(attr::ENCODER_QKV_DIM, &[512]),
            AttributeSpec::global(attr::DECODER_QKV_DIM, &[512]),
        ])
        .expect("tiny space is well-formed")
    }

    pub fn new(seed: u64) -> Self {
        let space = Self::tiny_space();
        let bounds = feature_bounds(&space).expect("tiny space has the standard attributes");
        Self {
            space,
            bounds,
            seed,
        }
    }

    /// Builds the task over any space carrying the standard attributes;
    /// the gold function normalizes by that space's own bounds.
    pub fn over_space(space: SearchSpace, seed: u64) -> Result<Self, crate::space::EncodeError> {
        let bounds = feature_bounds(&space)?;
        Ok(Self {
            space,
            bounds,
            seed,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn normalized(&self, arch: &Architecture) -> [f64; ENCODING_LEN] {
        let encoded = encode(&self.space, arch).expect("gold called on a valid architecture");
        let mut x = [0.0; ENCODING_LEN];
        for (i, &f) in encoded.features().iter().enumerate() {
            let (lo, hi) = self.bounds[i];
            x[i] = if hi > lo { (f - lo) / (hi - lo) } else { 0.0 };
        }
        x
    }

    /// The closed-form gold score; see the module constants.
    pub fn gold(&self, arch: &Architecture) -> f64 {
        let x = self.normalized(arch);
        let mut score = GOLD_BASE;
        for (i, &w) in GOLD_WEIGHTS.iter().enumerate() {
            score += w * x[i];
        }
        score += GOLD_INTERACTION_WEIGHT * x[5] * x[6];
        score += GOLD_RIPPLE_AMPLITUDE
            * sin(GOLD_RIPPLE_COEFFS[0] * x[5]
                + GOLD_RIPPLE_COEFFS[1] * x[6]
                + GOLD_RIPPLE_COEFFS[2] * x[0]);
        score
    }

    pub fn gold_fn(&self) -> GoldFn {
        let task = self.clone();
        Arc::new(move |arch: &Architecture| task.gold(arch))
    }

    pub fn latency_model(&self) -> LatencyModel {
        LatencyModel::Analytic {
            base_ms: LATENCY_BASE_MS,
            slope_ms: LATENCY_SLOPE_MS,
        }
    }

    pub fn latency_ms(&self, arch: &Architecture) -> Result<f64, BenchError> {
        let encoded = encode(&self.space, arch)
            .map_err(crate::efficiency::EfficiencyError::InvalidArchitecture)?;
        Ok(self.latency_model().predict_latency(&encoded)?)
    }

    pub fn efficiency_evaluator(&self) -> EfficiencyEvaluator {
        EfficiencyEvaluator::new(
            self.space.clone(),
            EfficiencyModelConfig::default(),
            self.latency_model(),
        )
    }

    /// An exact (noise-free) teacher for this task.
    pub fn gold_predictor(&self) -> SimulatedPredictor {
        SimulatedPredictor::exact(self.space.clone(), self.gold_fn())
    }

    /// A noisy/biased teacher for this task.
    pub fn simulated_predictor(
        &self,
        noise_sigma: f64,
        bias: f64,
        seed: u64,
    ) -> SimulatedPredictor {
        SimulatedPredictor::new(self.space.clone(), self.gold_fn(), noise_sigma, bias, seed)
    }

    /// `n` distinct gold-labeled records with efficiency metrics.
    pub fn eval_records(&self, n: usize, seed: u64) -> Result<Vec<EvalRecord>, BenchError> {
        let evaluator = self.efficiency_evaluator();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut digests = alloc::collections::BTreeSet::new();
        let mut records = Vec::with_capacity(n);
        let mut attempts = 0usize;
        let budget = n.saturating_mul(100).max(1000);
        while records.len() < n && attempts < budget {
            attempts += 1;
            let arch = self.space.sample(&mut rng);
            if !digests.insert(self.space.arch_digest(&arch)) {
                continue;
            }
            let efficiency = evaluator.report(&arch)?;
            records.push(EvalRecord {
                score: self.gold(&arch),
                arch,
                efficiency: Some(efficiency),
            });
        }
        if records.len() < n {
            return Err(BenchError::EmptyEvalSet);
        }
        Ok(records)
    }
}

/// Exhaustive constrained argmax of the gold score. Ties break toward
/// the lexicographically smallest canonical serialization.
pub fn brute_force_optimum(
    task: &SyntheticTask,
    constraint: &Constraint,
) -> Result<(Architecture, f64), BenchError> {
    let evaluator = task.efficiency_evaluator();
    let all = task.space().enumerate(TINY_SPACE_CAP)?;
    let mut best: Option<(Architecture, f64)> = None;
    for arch in all {
        let value = match constraint.metric {
            ConstraintMetric::Latency => evaluator.latency_ms(&arch)?,
            ConstraintMetric::Gflops => evaluator.gflops(&arch)?,
        };
        if value > constraint.threshold {
            continue;
        }
        let score = task.gold(&arch);
        let replace = match &best {
            None => true,
            Some((cur, cur_score)) => {
                score > *cur_score
                    || (score == *cur_score
                        && task.space().canonical_string(&arch)
                            < task.space().canonical_string(cur))
            }
        };
        if replace {
            best = Some((arch, score));
        }
    }
    best.ok_or(BenchError::Infeasible {
        metric: constraint.metric,
        threshold: constraint.threshold,
    })
}

/// Per-seed metric outcomes for one predictor on one eval set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeedOutcome {
    Ok {
        seed: u64,
        mae: f64,
        tau: TauOutcome,
        profile: DiscordanceProfile,
    },
    Failed {
        seed: u64,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub predictor: String,
    pub eval_set: String,
    pub seeds: Vec<SeedOutcome>,
    /// Mean over completed seeds.
    pub mean_mae: Option<f64>,
    /// Mean over completed seeds with a defined tau.
    pub mean_tau: Option<f64>,
    pub warnings: Vec<String>,
}

/// Evaluates a predictor on a labeled eval set, re-instantiating
/// seed-dependent predictor state per seed and averaging the metrics.
/// A failing seed is recorded and skipped; metrics come exclusively
/// from the `metrics` module.
pub fn evaluate_predictor<P, F>(
    make_predictor: F,
    eval_set_label: &str,
    records: &[EvalRecord],
    seeds: &[u64],
) -> Result<PredictorReport, BenchError>
where
    P: Predictor,
    F: Fn(u64) -> P,
{
    if records.is_empty() {
        return Err(BenchError::EmptyEvalSet);
    }
    let archs: Vec<Architecture> = records.iter().map(|r| r.arch.clone()).collect();
    let truths: Vec<f64> = records.iter().map(|r| r.score).collect();
    let mut outcomes = Vec::with_capacity(seeds.len());
    let mut warnings = Vec::new();
    let mut name = String::new();
    for &seed in seeds {
        let predictor = make_predictor(seed);
        if name.is_empty() {
            name = predictor.name().to_string();
        }
        let result = predictor
            .predict_batch(&archs)
            .map_err(|e| e.to_string())
            .and_then(|preds| {
                let pairs = ScorePairs::new(preds, truths.clone()).map_err(|e| e.to_string())?;
                let tau = kendall_tau(&pairs).map_err(|e| e.to_string())?;
                let profile = discordance_profile(&pairs).map_err(|e| e.to_string())?;
                Ok((mae(&pairs), tau, profile))
            });
        match result {
            Ok((mae, tau, profile)) => outcomes.push(SeedOutcome::Ok {
                seed,
                mae,
                tau,
                profile,
            }),
            Err(error) => {
                warnings.push(format!("seed {seed} failed: {error}"));
                outcomes.push(SeedOutcome::Failed { seed, error });
            }
        }
    }
    let maes: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| match o {
            SeedOutcome::Ok { mae, .. } => Some(*mae),
            SeedOutcome::Failed { .. } => None,
        })
        .collect();
    let taus: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| match o {
            SeedOutcome::Ok { tau, .. } => tau.value(),
            SeedOutcome::Failed { .. } => None,
        })
        .collect();
    Ok(PredictorReport {
        predictor: name,
        eval_set: eval_set_label.to_string(),
        mean_mae: mean(&maes),
        mean_tau: mean(&taus),
        seeds: outcomes,
        warnings,
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// One labeled search configuration inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub label: String,
    pub config: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub predicted_score: f64,
    /// True task score of the returned architecture.
    pub score: f64,
    pub latency_ms: f64,
    pub gflops: f64,
    pub model_size_m: f64,
    pub search_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub constraint_metric: ConstraintMetric,
    pub constraint_threshold: f64,
    pub window_start: u32,
    pub window_end: u32,
    pub seed: u64,
    /// Summary on success, error text on failure; a failing row does not
    /// stop the sweep.
    pub outcome: Result<SweepSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Result-table CSV with the score column leading.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,constraint_metric,constraint_threshold,window_start,window_end,seed,\
             score,predicted_score,latency_ms,gflops,model_size_m,search_seconds,error\n",
        );
        for row in &self.rows {
            let label = csv_quote(&row.label);
            let _ = write!(
                out,
                "{label},{},{},{},{},{},",
                row.constraint_metric,
                row.constraint_threshold,
                row.window_start,
                row.window_end,
                row.seed
            );
            match &row.outcome {
                Ok(s) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},",
                        s.score,
                        s.predicted_score,
                        s.latency_ms,
                        s.gflops,
                        s.model_size_m,
                        s.search_seconds
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, ",,,,,,{}", csv_quote(e));
                }
            }
        }
        out
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        let mut s = String::from("\"");
        s.push_str(&field.replace('"', "\"\""));
        s.push('"');
        s
    } else {
        field.to_string()
    }
}

/// The schedule-window grid exercised by the sweep reports: full
/// window, early/late slices, first/second half, and three quarters.
pub fn standard_schedule_windows(num_iterations: u32) -> [(u32, u32); 6] {
    let n = num_iterations;
    [(1, n), (1, 5), (25, n), (1, 15), (16, n), (1, 25)]
}

/// Runs every config in order against the same predictor pair and task.
/// Row order matches config order; per-row failures are recorded and the
/// sweep continues.
pub fn sweep(
    task: &SyntheticTask,
    predictor_a: &dyn Predictor,
    predictor_b: &dyn Predictor,
    specs: &[SweepSpec],
) -> SweepTable {
    let evaluator = task.efficiency_evaluator();
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let cfg = &spec.config;
        let outcome = match run_search(task.space(), predictor_a, predictor_b, &evaluator, cfg) {
            Ok(trace) => Ok(summarize(task, &trace)),
            Err(failure) => Err(failure.to_string()),
        };
        rows.push(SweepRow {
            label: spec.label.clone(),
            constraint_metric: cfg.constraint.metric,
            constraint_threshold: cfg.constraint.threshold,
            window_start: cfg.llm_start_iteration,
            window_end: cfg.llm_end_iteration,
            seed: cfg.seed,
            outcome,
        });
    }
    SweepTable { rows }
}

fn summarize(task: &SyntheticTask, trace: &SearchTrace) -> SweepSummary {
    let outcome = &trace.outcome;
    SweepSummary {
        predicted_score: outcome.predicted_score,
        score: task.gold(&outcome.best_arch),
        latency_ms: outcome.efficiency.latency_ms,
        gflops: outcome.efficiency.gflops,
        model_size_m: outcome.efficiency.model_size_millions,
        search_seconds: outcome.search_seconds,
    }
}
