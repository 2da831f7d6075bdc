//! Distillation of a teacher predictor into a compact MLP regressor.
//!
//! The regressor maps the 10-value architecture encoding through ReLU
//! hidden layers (default 3 x 400) to one scalar. Features are min-max
//! normalized against the search-space bounds (not the dataset, so a
//! trained model transfers across datasets of the same space); labels
//! are z-scored against the training set. Training runs a fixed number
//! of Adam steps over shuffled minibatches; there is no early stopping
//! and no weight decay.
//!
//! Everything is seeded and single-threaded: identical (data, config,
//! seed) re-trains to bit-identical weights.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom as _;
use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::mathutil::{fnv1a64, sqrt};
use crate::predictor::{PredictError, Predictor};
use crate::space::{
    encode, feature_bounds, Architecture, EncodedArchitecture, SearchSpace, ENCODING_LEN,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistillError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("dataset row {index} has a non-finite label")]
    NonFiniteLabel { index: usize },
    #[error("could not sample {requested} distinct architectures (found {found})")]
    DistinctSamplingExhausted { requested: usize, found: usize },
    #[error("encoding failed: {0}")]
    Encode(crate::space::EncodeError),
    #[error("model layer dims {got:?} do not accept {expected}-value encodings")]
    BadInputWidth { expected: usize, got: Vec<usize> },
    #[error("training config invalid: {0}")]
    BadConfig(String),
}

impl From<crate::space::EncodeError> for DistillError {
    fn from(e: crate::space::EncodeError) -> Self {
        DistillError::Encode(e)
    }
}

/// One labeled training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillRow {
    pub features: EncodedArchitecture,
    pub label: f64,
}

/// Labeled encodings plus the provenance needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillDataset {
    pub rows: Vec<DistillRow>,
    /// Name of the teacher predictor that produced the labels.
    pub provenance: String,
    pub seed: u64,
    /// Per-feature (min, max) bounds of the originating space.
    pub feature_bounds: [(f64, f64); ENCODING_LEN],
}

/// Teacher failure during dataset construction; the rows labeled so far
/// are kept so callers can persist partial progress.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("teacher failed after {} rows: {error}", partial.rows.len())]
pub struct BuildFailure {
    pub error: PredictError,
    pub partial: DistillDataset,
}

/// Samples `n` distinct architectures i.i.d. (duplicates resampled, with
/// a bounded attempt budget) and labels each with the teacher.
/// Deterministic per seed for a deterministic teacher.
#[allow(clippy::result_large_err)] // the error intentionally carries partial progress
pub fn build_distill_dataset<P: Predictor + ?Sized>(
    space: &SearchSpace,
    teacher: &P,
    n: usize,
    seed: u64,
) -> Result<DistillDataset, BuildFailure> {
    let bounds = feature_bounds(space).map_err(|e| BuildFailure {
        error: PredictError::new(teacher.name(), e),
        partial: empty_dataset(teacher.name(), seed),
    })?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut digests = alloc::collections::BTreeSet::new();
    let mut archs = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let budget = n.saturating_mul(100).max(1000);
    while archs.len() < n && attempts < budget {
        attempts += 1;
        let arch = space.sample(&mut rng);
        if digests.insert(space.arch_digest(&arch)) {
            archs.push(arch);
        }
    }
    if archs.len() < n {
        return Err(BuildFailure {
            error: PredictError::new(
                teacher.name(),
                DistillError::DistinctSamplingExhausted {
                    requested: n,
                    found: archs.len(),
                },
            ),
            partial: empty_dataset(teacher.name(), seed),
        });
    }

    let mut rows = Vec::with_capacity(n);
    for arch in &archs {
        let encoded = match encode(space, arch) {
            Ok(e) => e,
            Err(e) => {
                return Err(BuildFailure {
                    error: PredictError::new(teacher.name(), e),
                    partial: dataset(rows, teacher.name(), seed, bounds),
                })
            }
        };
        match teacher.predict(arch) {
            Ok(label) => rows.push(DistillRow {
                features: encoded,
                label,
            }),
            Err(error) => {
                return Err(BuildFailure {
                    error,
                    partial: dataset(rows, teacher.name(), seed, bounds),
                })
            }
        }
    }
    Ok(dataset(rows, teacher.name(), seed, bounds))
}

fn dataset(
    rows: Vec<DistillRow>,
    provenance: &str,
    seed: u64,
    feature_bounds: [(f64, f64); ENCODING_LEN],
) -> DistillDataset {
    DistillDataset {
        rows,
        provenance: provenance.to_string(),
        seed,
        feature_bounds,
    }
}

fn empty_dataset(provenance: &str, seed: u64) -> DistillDataset {
    dataset(Vec::new(), provenance, seed, [(0.0, 1.0); ENCODING_LEN])
}

/// Fixed-step Adam training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub hidden_dims: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![400, 400, 400],
            batch_size: 128,
            learning_rate: 1e-5,
            steps: 5000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<(), DistillError> {
        if self.batch_size == 0 {
            return Err(DistillError::BadConfig("batch_size must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(DistillError::BadConfig("steps must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(DistillError::BadConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.hidden_dims.contains(&0) {
            return Err(DistillError::BadConfig("hidden dims must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelNorm {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub min: [f64; ENCODING_LEN],
    pub max: [f64; ENCODING_LEN],
}

impl FeatureNorm {
    fn from_bounds(bounds: &[(f64, f64); ENCODING_LEN]) -> Self {
        let mut min = [0.0; ENCODING_LEN];
        let mut max = [0.0; ENCODING_LEN];
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            min[i] = lo;
            max[i] = hi;
        }
        Self { min, max }
    }
}

/// A trained MLP regressor over architecture encodings.
///
/// Weights are stored row-major per layer (`out x in`). The struct is
/// immutable in normal use and safe for concurrent prediction; the only
/// interior state is a diagnostics counter of clamped features.
#[derive(Debug, Serialize, Deserialize)]
pub struct MlpRegressor {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    feature_norm: FeatureNorm,
    label_norm: LabelNorm,
    training_config: TrainingConfig,
    initial_loss: f64,
    final_loss: f64,
    #[serde(default)]
    warnings: Vec<String>,
    #[serde(skip)]
    clamped_features: AtomicU64,
}

impl Clone for MlpRegressor {
    fn clone(&self) -> Self {
        Self {
            layer_dims: self.layer_dims.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            feature_norm: self.feature_norm.clone(),
            label_norm: self.label_norm,
            training_config: self.training_config.clone(),
            initial_loss: self.initial_loss,
            final_loss: self.final_loss,
            warnings: self.warnings.clone(),
            clamped_features: AtomicU64::new(self.clamped_features.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for MlpRegressor {
    fn eq(&self, other: &Self) -> bool {
        self.layer_dims == other.layer_dims
            && self.weights == other.weights
            && self.biases == other.biases
            && self.feature_norm == other.feature_norm
            && self.label_norm == other.label_norm
    }
}

/// Trains the regressor for exactly `cfg.steps` minibatch steps.
pub fn train_regressor(
    data: &DistillDataset,
    cfg: &TrainingConfig,
    seed: u64,
) -> Result<MlpRegressor, DistillError> {
    cfg.validate()?;
    if data.rows.len() < 2 {
        return Err(DistillError::TooFewRows {
            needed: 2,
            got: data.rows.len(),
        });
    }
    for (index, row) in data.rows.iter().enumerate() {
        if !row.label.is_finite() {
            return Err(DistillError::NonFiniteLabel { index });
        }
    }

    let mut warnings = Vec::new();
    let n = data.rows.len();
    let mean = data.rows.iter().map(|r| r.label).sum::<f64>() / n as f64;
    let var = data
        .rows
        .iter()
        .map(|r| (r.label - mean) * (r.label - mean))
        .sum::<f64>()
        / n as f64;
    let mut std = sqrt(var);
    if std == 0.0 {
        warnings.push("degenerate labels: zero standard deviation, treated as 1".to_string());
        std = 1.0;
    }
    let label_norm = LabelNorm { mean, std };
    let feature_norm = FeatureNorm::from_bounds(&data.feature_bounds);

    let mut layer_dims = Vec::with_capacity(cfg.hidden_dims.len() + 2);
    layer_dims.push(ENCODING_LEN);
    layer_dims.extend_from_slice(&cfg.hidden_dims);
    layer_dims.push(1);

    let mut model = MlpRegressor {
        layer_dims: layer_dims.clone(),
        weights: Vec::new(),
        biases: Vec::new(),
        feature_norm,
        label_norm,
        training_config: cfg.clone(),
        initial_loss: 0.0,
        final_loss: 0.0,
        warnings,
        clamped_features: AtomicU64::new(0),
    };

    // He-style uniform init: U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases 0.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for l in 0..layer_dims.len() - 1 {
        let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
        let limit = sqrt(6.0 / fan_in as f64);
        let w: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        model.weights.push(w);
        model.biases.push(vec![0.0; fan_out]);
    }

    // Pre-normalize the dataset once.
    let inputs: Vec<Vec<f64>> = data
        .rows
        .iter()
        .map(|r| model.normalize_features(&r.features).to_vec())
        .collect();
    let targets: Vec<f64> = data.rows.iter().map(|r| (r.label - mean) / std).collect();

    model.initial_loss = model.loss(&inputs, &targets);

    let mut trainer = Trainer::new(&layer_dims, cfg);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n; // forces a shuffle before the first step
    let mut batch_inputs: Vec<f64> = Vec::new();
    let mut batch_targets: Vec<f64> = Vec::new();
    for step in 0..cfg.steps {
        if cursor >= n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let batch = &order[cursor..(cursor + cfg.batch_size).min(n)];
        cursor += batch.len();
        batch_inputs.clear();
        batch_targets.clear();
        for &i in batch {
            batch_inputs.extend_from_slice(&inputs[i]);
            batch_targets.push(targets[i]);
        }
        trainer.step(&mut model, &batch_inputs, &batch_targets, step);
    }

    model.final_loss = model.loss(&inputs, &targets);
    Ok(model)
}

impl MlpRegressor {
    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn training_config(&self) -> &TrainingConfig {
        &self.training_config
    }

    pub fn initial_loss(&self) -> f64 {
        self.initial_loss
    }

    pub fn final_loss(&self) -> f64 {
        self.final_loss
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// How many feature values fell outside the normalization range and
    /// were clamped during prediction.
    pub fn clamped_feature_count(&self) -> u64 {
        self.clamped_features.load(Ordering::Relaxed)
    }

    /// Structural soundness check used by loaders.
    pub fn validate_shape(&self) -> Result<(), DistillError> {
        let dims = &self.layer_dims;
        if dims.len() < 2 || dims[0] != ENCODING_LEN || *dims.last().unwrap() != 1 {
            return Err(DistillError::BadInputWidth {
                expected: ENCODING_LEN,
                got: dims.clone(),
            });
        }
        if self.weights.len() != dims.len() - 1 || self.biases.len() != dims.len() - 1 {
            return Err(DistillError::BadConfig("layer count mismatch".into()));
        }
        for l in 0..dims.len() - 1 {
            if self.weights[l].len() != dims[l] * dims[l + 1] || self.biases[l].len() != dims[l + 1]
            {
                return Err(DistillError::BadConfig("weight shape mismatch".into()));
            }
        }
        Ok(())
    }

    /// Min-max normalization with clamping to [0, 1]; constant features
    /// map to 0. Clamps are counted in the diagnostics counter.
    pub fn normalize_features(&self, encoded: &EncodedArchitecture) -> [f64; ENCODING_LEN] {
        let mut out = [0.0; ENCODING_LEN];
        let mut clamped = 0;
        for (i, &x) in encoded.features().iter().enumerate() {
            let (lo, hi) = (self.feature_norm.min[i], self.feature_norm.max[i]);
            if hi <= lo {
                out[i] = 0.0;
                continue;
            }
            let z = (x - lo) / (hi - lo);
            if !(0.0..=1.0).contains(&z) {
                clamped += 1;
            }
            out[i] = z.clamp(0.0, 1.0);
        }
        if clamped > 0 {
            self.clamped_features.fetch_add(clamped, Ordering::Relaxed);
        }
        out
    }

    /// Forward pass over a batch of normalized inputs; returns the raw
    /// (still label-normalized) outputs.
    fn forward_normalized(&self, inputs: &[f64], batch: usize) -> Vec<f64> {
        let mut activations = inputs.to_vec();
        let mut width = self.layer_dims[0];
        for l in 0..self.weights.len() {
            let out_width = self.layer_dims[l + 1];
            let mut next = vec![0.0; batch * out_width];
            linear_forward(
                &activations,
                &self.weights[l],
                &self.biases[l],
                batch,
                width,
                out_width,
                &mut next,
            );
            if l + 1 < self.weights.len() {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations = next;
            width = out_width;
        }
        activations
    }

    /// Denormalized prediction for one encoding.
    pub fn predict_encoded(&self, encoded: &EncodedArchitecture) -> Result<f64, DistillError> {
        self.validate_shape()?;
        let input = self.normalize_features(encoded);
        let raw = self.forward_normalized(&input, 1)[0];
        Ok(raw * self.label_norm.std + self.label_norm.mean)
    }

    /// Mean-squared error over normalized inputs and targets.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
        let batch = targets.len();
        let flat: Vec<f64> = inputs.iter().flat_map(|r| r.iter().copied()).collect();
        let outputs = self.forward_normalized(&flat, batch);
        outputs
            .iter()
            .zip(targets)
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>()
            / batch as f64
    }

    /// MSE loss and its gradients for a batch of normalized inputs.
    pub fn loss_and_gradients(&self, inputs: &[Vec<f64>], targets: &[f64]) -> (f64, Gradients) {
        let batch = targets.len();
        let flat: Vec<f64> = inputs.iter().flat_map(|r| r.iter().copied()).collect();
        let mut pass = BackwardPass::new(&self.layer_dims);
        let loss = pass.run(self, &flat, targets, batch);
        (loss, pass.into_gradients())
    }

    pub fn weight(&self, layer: usize, index: usize) -> f64 {
        self.weights[layer][index]
    }

    pub fn bias(&self, layer: usize, index: usize) -> f64 {
        self.biases[layer][index]
    }

    pub fn nudge_weight(&mut self, layer: usize, index: usize, delta: f64) {
        self.weights[layer][index] += delta;
    }

    pub fn nudge_bias(&mut self, layer: usize, index: usize, delta: f64) {
        self.biases[layer][index] += delta;
    }

    /// Stable digest of all weights and biases, for determinism checks.
    pub fn weight_checksum(&self) -> u64 {
        let mut bytes = Vec::new();
        for layer in self.weights.iter().chain(self.biases.iter()) {
            for v in layer {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fnv1a64(&bytes)
    }
}

/// Per-layer weight and bias gradients, in the model's storage layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Shared forward/backward machinery with reusable buffers.
struct BackwardPass {
    layer_dims: Vec<usize>,
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    grad_w: Vec<Vec<f64>>,
    grad_b: Vec<Vec<f64>>,
}

impl BackwardPass {
    fn new(layer_dims: &[usize]) -> Self {
        let layers = layer_dims.len() - 1;
        Self {
            layer_dims: layer_dims.to_vec(),
            activations: vec![Vec::new(); layers + 1],
            deltas: vec![Vec::new(); layers],
            grad_w: (0..layers)
                .map(|l| vec![0.0; layer_dims[l] * layer_dims[l + 1]])
                .collect(),
            grad_b: (0..layers).map(|l| vec![0.0; layer_dims[l + 1]]).collect(),
        }
    }

    /// Forward + backward over one batch; fills the gradient buffers and
    /// returns the batch MSE.
    fn run(&mut self, model: &MlpRegressor, inputs: &[f64], targets: &[f64], batch: usize) -> f64 {
        let layers = model.weights.len();
        self.activations[0] = inputs.to_vec();
        for l in 0..layers {
            let (w_in, w_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let mut next = vec![0.0; batch * w_out];
            linear_forward(
                &self.activations[l],
                &model.weights[l],
                &model.biases[l],
                batch,
                w_in,
                w_out,
                &mut next,
            );
            if l + 1 < layers {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            self.activations[l + 1] = next;
        }

        let outputs = &self.activations[layers];
        let mut loss = 0.0;
        let mut delta = vec![0.0; batch];
        for i in 0..batch {
            let diff = outputs[i] - targets[i];
            loss += diff * diff;
            delta[i] = 2.0 * diff / batch as f64;
        }
        loss /= batch as f64;
        self.deltas[layers - 1] = delta;

        for l in (0..layers).rev() {
            let (w_in, w_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            // dW = dZ^T . X, db = column sums of dZ.
            let delta_l = core::mem::take(&mut self.deltas[l]);
            grad_weights(
                &delta_l,
                &self.activations[l],
                batch,
                w_in,
                w_out,
                &mut self.grad_w[l],
            );
            for o in 0..w_out {
                let mut s = 0.0;
                for b in 0..batch {
                    s += delta_l[b * w_out + o];
                }
                self.grad_b[l][o] = s;
            }
            if l > 0 {
                // dX = dZ . W, gated by the ReLU mask of layer l's input.
                let mut dx = vec![0.0; batch * w_in];
                grad_input(&delta_l, &model.weights[l], batch, w_in, w_out, &mut dx);
                let acts = &self.activations[l];
                for (d, &a) in dx.iter_mut().zip(acts.iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
                self.deltas[l - 1] = dx;
            }
            self.deltas[l] = delta_l;
        }
        loss
    }

    fn into_gradients(self) -> Gradients {
        Gradients {
            weights: self.grad_w,
            biases: self.grad_b,
        }
    }
}

/// Adam state and step loop.
struct Trainer {
    pass: BackwardPass,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    learning_rate: f64,
}

impl Trainer {
    fn new(layer_dims: &[usize], cfg: &TrainingConfig) -> Self {
        let layers = layer_dims.len() - 1;
        Self {
            pass: BackwardPass::new(layer_dims),
            m_w: (0..layers)
                .map(|l| vec![0.0; layer_dims[l] * layer_dims[l + 1]])
                .collect(),
            v_w: (0..layers)
                .map(|l| vec![0.0; layer_dims[l] * layer_dims[l + 1]])
                .collect(),
            m_b: (0..layers).map(|l| vec![0.0; layer_dims[l + 1]]).collect(),
            v_b: (0..layers).map(|l| vec![0.0; layer_dims[l + 1]]).collect(),
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            epsilon: cfg.adam_epsilon,
            learning_rate: cfg.learning_rate,
        }
    }

    fn step(&mut self, model: &mut MlpRegressor, inputs: &[f64], targets: &[f64], step: usize) {
        let batch = targets.len();
        self.pass.run(model, inputs, targets, batch);
        let t = (step + 1) as i32;
        let bc1 = 1.0 - powi(self.beta1, t);
        let bc2 = 1.0 - powi(self.beta2, t);
        for l in 0..model.weights.len() {
            adam_update(
                &mut model.weights[l],
                &self.pass.grad_w[l],
                &mut self.m_w[l],
                &mut self.v_w[l],
                self.beta1,
                self.beta2,
                self.epsilon,
                self.learning_rate,
                bc1,
                bc2,
            );
            adam_update(
                &mut model.biases[l],
                &self.pass.grad_b[l],
                &mut self.m_b[l],
                &mut self.v_b[l],
                self.beta1,
                self.beta2,
                self.epsilon,
                self.learning_rate,
                bc1,
                bc2,
            );
        }
    }
}

fn powi(base: f64, exp: i32) -> f64 {
    let mut out = 1.0;
    for _ in 0..exp {
        out *= base;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
    bias_correction1: f64,
    bias_correction2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bias_correction1;
        let v_hat = v[i] / bias_correction2;
        params[i] -= lr * m_hat / (sqrt(v_hat) + epsilon);
    }
}

// --- matrix kernels -------------------------------------------------------
//
// Weights are row-major `out x in`. The three products below are the
// only dense kernels in the crate; with `std` they dispatch to
// matrixmultiply's dgemm through stride views, otherwise to plain loops.

/// C[batch x out] = X[batch x in] . W^T + b
fn linear_forward(
    x: &[f64],
    w: &[f64],
    b: &[f64],
    batch: usize,
    w_in: usize,
    w_out: usize,
    c: &mut [f64],
) {
    gemm(
        batch,
        w_in,
        w_out,
        x,
        (w_in as isize, 1),
        w,
        (1, w_in as isize),
        c,
    );
    for row in 0..batch {
        for o in 0..w_out {
            c[row * w_out + o] += b[o];
        }
    }
}

/// dW[out x in] = dZ^T[out x batch] . X[batch x in]
fn grad_weights(dz: &[f64], x: &[f64], batch: usize, w_in: usize, w_out: usize, dw: &mut [f64]) {
    gemm(
        w_out,
        batch,
        w_in,
        dz,
        (1, w_out as isize),
        x,
        (w_in as isize, 1),
        dw,
    );
}

/// dX[batch x in] = dZ[batch x out] . W[out x in]
fn grad_input(dz: &[f64], w: &[f64], batch: usize, w_in: usize, w_out: usize, dx: &mut [f64]) {
    gemm(
        batch,
        w_out,
        w_in,
        dz,
        (w_out as isize, 1),
        w,
        (w_in as isize, 1),
        dx,
    );
}

/// C[m x n] = A[m x k] . B[k x n] with explicit (row, col) strides for A
/// and B; C is dense row-major and fully overwritten.
#[allow(clippy::too_many_arguments)]
#[cfg(feature = "std")]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: (isize, isize),
    b: &[f64],
    sb: (isize, isize),
    c: &mut [f64],
) {
    debug_assert!(c.len() == m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0,
            sa.1,
            b.as_ptr(),
            sb.0,
            sb.1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[allow(clippy::too_many_arguments)]
#[cfg(not(feature = "std"))]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: (isize, isize),
    b: &[f64],
    sb: (isize, isize),
    c: &mut [f64],
) {
    debug_assert!(c.len() == m * n);
    let at = |i: usize, j: usize| a[(i as isize * sa.0 + j as isize * sa.1) as usize];
    let bt = |i: usize, j: usize| b[(i as isize * sb.0 + j as isize * sb.1) as usize];
    for v in c.iter_mut() {
        *v = 0.0;
    }
    for i in 0..m {
        for p in 0..k {
            let av = at(i, p);
            if av == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += av * bt(p, j);
            }
        }
    }
}

/// Adapts a trained regressor to the `Predictor` abstraction for a
/// particular space.
pub struct MlpPredictor {
    name: String,
    space: SearchSpace,
    model: Arc<MlpRegressor>,
}

impl MlpPredictor {
    pub fn new(space: SearchSpace, model: Arc<MlpRegressor>) -> Self {
        Self {
            name: "mlp-regressor".to_string(),
            space,
            model,
        }
    }

    pub fn model(&self) -> &MlpRegressor {
        &self.model
    }
}

impl Predictor for MlpPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError> {
        let encoded = encode(&self.space, arch).map_err(|e| PredictError::new(&self.name, e))?;
        self.model
            .predict_encoded(&encoded)
            .map_err(|e| PredictError::new(&self.name, e))
    }
}
