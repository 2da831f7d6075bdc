//! Analytic efficiency models for encoder-decoder transformer
//! architectures: parameter counts, forward-pass GFLOPs, and a pluggable
//! latency model.
//!
//! The formulas are documented below and checked in tests against
//! independent shape-enumeration oracles. They describe a standard
//! post-norm transformer and are not calibrated to any particular
//! framework's counter.
//!
//! Parameter count, with `V` the vocabulary size, `q` the QKV projection
//! width, `d_e`/`d_d` the encoder/decoder embedding dims, and `f` the
//! per-layer FFN dims:
//!
//! - embeddings: encoder table `V*d_e`, decoder table `V*d_d`, output
//!   projection `d_d*V` (no bias); with `share_embeddings` and equal
//!   dims, a single `V*d` table serves all three.
//! - per encoder layer: Q/K/V `3*(d_e*q + q)`, attention out
//!   `q*d_e + d_e`, FFN `d_e*f + f` and `f*d_e + d_e`, two layer norms
//!   `2*2*d_e`.
//! - per decoder layer: self-attention as above over `d_d`;
//!   cross-attention Q `d_d*q + q`, K and V `d_e*q + q` each, out
//!   `q*d_d + d_d`; FFN as above over `d_d`; three layer norms
//!   `3*2*d_d`.
//!
//! Positional encodings are sinusoidal and contribute no parameters.
//!
//! GFLOPs counts `2 * MAC` over every matrix product of one forward
//! pass at source length `s` and target length `t`, divided by 1e9.
//! The decoder runs teacher-forced over the full target. A decoder
//! layer whose arbitrary encoder-decoder attention code is `c` attends
//! to the last `1`, `2`, or `3` encoder layers for `c` in `{-1, 1, 2}`,
//! multiplying that layer's cross-attention key/value width.

use serde::{Deserialize, Serialize};

use alloc::boxed::Box;

use crate::distill::MlpRegressor;
use crate::space::{self, feature, Architecture, EncodedArchitecture, SearchSpace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EfficiencyError {
    #[error("architecture invalid for the space: {0}")]
    InvalidArchitecture(space::EncodeError),
    #[error("sequence lengths must be at least 1 (src {src}, tgt {tgt})")]
    ZeroLength { src: u64, tgt: u64 },
    #[error("latency regressor is not usable: {0}")]
    RegressorState(crate::distill::DistillError),
    #[error("unknown arbitrary-attention code {0} (expected -1, 1, or 2)")]
    BadArbitraryAttention(i64),
}

impl From<space::EncodeError> for EfficiencyError {
    fn from(e: space::EncodeError) -> Self {
        EfficiencyError::InvalidArchitecture(e)
    }
}

/// Shape conventions shared by the parameter and FLOPs models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyModelConfig {
    /// Vocabulary size of both embedding tables and the output projection.
    pub vocab_size: u64,
    /// QKV projection width used when the architecture does not carry
    /// explicit QKV-dim attributes.
    pub default_qkv_dim: u64,
    /// Count one shared embedding table (requires equal dims).
    pub share_embeddings: bool,
    /// Source sentence length for GFLOPs.
    pub src_len: u64,
    /// Target sentence length for GFLOPs.
    pub tgt_len: u64,
}

impl Default for EfficiencyModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 32_000,
            default_qkv_dim: 512,
            share_embeddings: false,
            src_len: 30,
            tgt_len: 30,
        }
    }
}

struct Shapes {
    enc_dim: u64,
    dec_dim: u64,
    enc_qkv: u64,
    dec_qkv: u64,
    enc_ffn: alloc::vec::Vec<u64>,
    dec_ffn: alloc::vec::Vec<u64>,
    dec_arbitrary: alloc::vec::Vec<i64>,
}

fn shapes(
    space: &SearchSpace,
    arch: &Architecture,
    cfg: &EfficiencyModelConfig,
) -> Result<Shapes, EfficiencyError> {
    let violations = space.validate(arch);
    if !violations.is_empty() {
        return Err(space::EncodeError::InvalidArchitecture(violations).into());
    }
    let scalar = |name: &str| -> Result<u64, EfficiencyError> {
        arch.scalar(name)
            .map(|v| v.max(0) as u64)
            .ok_or_else(|| space::EncodeError::MissingStandardAttribute(name.into()).into())
    };
    let list = |name: &str| -> Result<alloc::vec::Vec<u64>, EfficiencyError> {
        arch.per_layer(name)
            .map(|v| v.iter().map(|&x| x.max(0) as u64).collect())
            .ok_or_else(|| space::EncodeError::MissingStandardAttribute(name.into()).into())
    };
    Ok(Shapes {
        enc_dim: scalar(space::attr::ENCODER_EMBED_DIM)?,
        dec_dim: scalar(space::attr::DECODER_EMBED_DIM)?,
        enc_qkv: arch
            .scalar(space::attr::ENCODER_QKV_DIM)
            .map(|v| v.max(0) as u64)
            .unwrap_or(cfg.default_qkv_dim),
        dec_qkv: arch
            .scalar(space::attr::DECODER_QKV_DIM)
            .map(|v| v.max(0) as u64)
            .unwrap_or(cfg.default_qkv_dim),
        enc_ffn: list(space::attr::ENCODER_FFN_EMBED_DIM)?,
        dec_ffn: list(space::attr::DECODER_FFN_EMBED_DIM)?,
        dec_arbitrary: arch
            .per_layer(space::attr::DECODER_ARBITRARY_ATTN)
            .map(|v| v.to_vec())
            .ok_or_else(|| {
                EfficiencyError::from(space::EncodeError::MissingStandardAttribute(
                    space::attr::DECODER_ARBITRARY_ATTN.into(),
                ))
            })?,
    })
}

fn attended_encoder_layers(code: i64) -> Result<u64, EfficiencyError> {
    match code {
        -1 => Ok(1),
        1 => Ok(2),
        2 => Ok(3),
        other => Err(EfficiencyError::BadArbitraryAttention(other)),
    }
}

/// Exact architecture-specific parameter count.
pub fn param_count(
    space: &SearchSpace,
    arch: &Architecture,
    cfg: &EfficiencyModelConfig,
) -> Result<u64, EfficiencyError> {
    let s = shapes(space, arch, cfg)?;
    let v = cfg.vocab_size;
    let mut params = if cfg.share_embeddings && s.enc_dim == s.dec_dim {
        v * s.enc_dim
    } else {
        v * s.enc_dim + v * s.dec_dim + s.dec_dim * v
    };
    for &ffn in &s.enc_ffn {
        params += 3 * (s.enc_dim * s.enc_qkv + s.enc_qkv); // Q, K, V
        params += s.enc_qkv * s.enc_dim + s.enc_dim; // attention out
        params += s.enc_dim * ffn + ffn; // FFN in
        params += ffn * s.enc_dim + s.enc_dim; // FFN out
        params += 2 * 2 * s.enc_dim; // layer norms
    }
    for &ffn in &s.dec_ffn {
        params += 3 * (s.dec_dim * s.dec_qkv + s.dec_qkv);
        params += s.dec_qkv * s.dec_dim + s.dec_dim;
        params += s.dec_dim * s.dec_qkv + s.dec_qkv; // cross-attention Q
        params += 2 * (s.enc_dim * s.dec_qkv + s.dec_qkv); // cross K, V
        params += s.dec_qkv * s.dec_dim + s.dec_dim; // cross out
        params += s.dec_dim * ffn + ffn;
        params += ffn * s.dec_dim + s.dec_dim;
        params += 3 * 2 * s.dec_dim;
    }
    Ok(params)
}

/// Parameter count scaled to millions, as reported in result tables.
pub fn model_size_millions(
    space: &SearchSpace,
    arch: &Architecture,
    cfg: &EfficiencyModelConfig,
) -> Result<f64, EfficiencyError> {
    Ok(param_count(space, arch, cfg)? as f64 / 1e6)
}

/// Forward-pass gigaFLOPs for one (src_len, tgt_len) example.
pub fn gflops_estimate(
    space: &SearchSpace,
    arch: &Architecture,
    cfg: &EfficiencyModelConfig,
) -> Result<f64, EfficiencyError> {
    let (src, tgt) = (cfg.src_len, cfg.tgt_len);
    if src == 0 || tgt == 0 {
        return Err(EfficiencyError::ZeroLength { src, tgt });
    }
    let s = shapes(space, arch, cfg)?;
    let mut macs: u64 = 0;
    for &ffn in &s.enc_ffn {
        macs += 4 * src * s.enc_dim * s.enc_qkv; // Q, K, V, out projections
        macs += 2 * src * src * s.enc_qkv; // scores and weighted sum
        macs += 2 * src * s.enc_dim * ffn; // FFN in and out
    }
    for (i, &ffn) in s.dec_ffn.iter().enumerate() {
        let attended = attended_encoder_layers(s.dec_arbitrary[i])?;
        let kv_len = attended * src;
        macs += 4 * tgt * s.dec_dim * s.dec_qkv; // self-attention projections
        macs += 2 * tgt * tgt * s.dec_qkv; // self-attention scores + sum
        macs += tgt * s.dec_dim * s.dec_qkv; // cross Q
        macs += 2 * kv_len * s.enc_dim * s.dec_qkv; // cross K, V
        macs += 2 * tgt * kv_len * s.dec_qkv; // cross scores + sum
        macs += tgt * s.dec_qkv * s.dec_dim; // cross out
        macs += 2 * tgt * s.dec_dim * ffn; // FFN
    }
    macs += tgt * s.dec_dim * cfg.vocab_size; // output projection
    Ok(2.0 * macs as f64 / 1e9)
}

/// Predicts architecture latency from the 10-value encoding.
///
/// `Analytic` is the synthetic closed form
/// `base_ms + slope_ms * decoder_layers * avg_decoder_ffn / 1000`;
/// `Regressor` wraps a trained MLP over the same encoding.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "kebab-case")]
pub enum LatencyModel {
    #[serde(rename = "synthetic-analytic")]
    Analytic {
        base_ms: f64,
        slope_ms: f64,
    },
    Regressor(Box<MlpRegressor>),
}

impl LatencyModel {
    /// Predicted latency in milliseconds; finite and >= 0.
    pub fn predict_latency(&self, encoded: &EncodedArchitecture) -> Result<f64, EfficiencyError> {
        let f = encoded.features();
        match self {
            LatencyModel::Analytic { base_ms, slope_ms } => {
                let load = f[feature::DECODER_LAYER_NUM] * f[feature::DECODER_FFN_AVG] / 1000.0;
                Ok((base_ms + slope_ms * load).max(0.0))
            }
            LatencyModel::Regressor(model) => {
                let ms = model
                    .predict_encoded(encoded)
                    .map_err(EfficiencyError::RegressorState)?;
                Ok(ms.max(0.0))
            }
        }
    }
}

/// A full efficiency report for one architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    #[serde(rename = "size_millions")]
    pub model_size_millions: f64,
    pub gflops: f64,
    pub latency_ms: f64,
}

/// Bundles the analytic models and a latency model behind one evaluator,
/// the shape consumed by search constraints.
#[derive(Debug, Clone)]
pub struct EfficiencyEvaluator {
    space: SearchSpace,
    config: EfficiencyModelConfig,
    latency: LatencyModel,
}

impl EfficiencyEvaluator {
    pub fn new(space: SearchSpace, config: EfficiencyModelConfig, latency: LatencyModel) -> Self {
        Self {
            space,
            config,
            latency,
        }
    }

    pub fn latency_ms(&self, arch: &Architecture) -> Result<f64, EfficiencyError> {
        let encoded = space::encode(&self.space, arch)?;
        self.latency.predict_latency(&encoded)
    }

    pub fn gflops(&self, arch: &Architecture) -> Result<f64, EfficiencyError> {
        gflops_estimate(&self.space, arch, &self.config)
    }

    pub fn report(&self, arch: &Architecture) -> Result<EfficiencyReport, EfficiencyError> {
        Ok(EfficiencyReport {
            model_size_millions: model_size_millions(&self.space, arch, &self.config)?,
            gflops: self.gflops(arch)?,
            latency_ms: self.latency_ms(arch)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{attr, Architecture, AttributeSpec, SearchSpace};
    use alloc::vec;

    fn tiny_space() -> SearchSpace {
        SearchSpace::new(vec![
            AttributeSpec::global(attr::ENCODER_EMBED_DIM, &[4, 8]),
            AttributeSpec::global(attr::ENCODER_LAYER_NUM, &[1]),
            AttributeSpec::per_layer(
                attr::ENCODER_FFN_EMBED_DIM,
                &[8, 16],
                attr::ENCODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(attr::ENCODER_SELF_ATTN_HEADS, &[1], attr::ENCODER_LAYER_NUM),
            AttributeSpec::global(attr::DECODER_EMBED_DIM, &[4, 8]),
            AttributeSpec::global(attr::DECODER_LAYER_NUM, &[0, 1]),
            AttributeSpec::per_layer(
                attr::DECODER_FFN_EMBED_DIM,
                &[8, 16],
                attr::DECODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(attr::DECODER_SELF_ATTN_HEADS, &[1], attr::DECODER_LAYER_NUM),
            AttributeSpec::per_layer(
                attr::DECODER_CROSS_ATTN_HEADS,
                &[1],
                attr::DECODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(attr::DECODER_ARBITRARY_ATTN, &[-1], attr::DECODER_LAYER_NUM),
            AttributeSpec::global(attr::ENCODER_QKV_DIM, &[4]),
            AttributeSpec::global(attr::DECODER_QKV_DIM, &[4]),
        ])
        .unwrap()
    }

    fn tiny_arch(dec_layers: i64) -> Architecture {
        let mut arch = Architecture::default();
        arch.set_scalar(attr::ENCODER_EMBED_DIM, 4);
        arch.set_scalar(attr::ENCODER_LAYER_NUM, 1);
        arch.set_per_layer(attr::ENCODER_FFN_EMBED_DIM, vec![8]);
        arch.set_per_layer(attr::ENCODER_SELF_ATTN_HEADS, vec![1]);
        arch.set_scalar(attr::DECODER_EMBED_DIM, 4);
        arch.set_scalar(attr::DECODER_LAYER_NUM, dec_layers);
        arch.set_per_layer(attr::DECODER_FFN_EMBED_DIM, vec![8; dec_layers as usize]);
        arch.set_per_layer(attr::DECODER_SELF_ATTN_HEADS, vec![1; dec_layers as usize]);
        arch.set_per_layer(attr::DECODER_CROSS_ATTN_HEADS, vec![1; dec_layers as usize]);
        arch.set_per_layer(attr::DECODER_ARBITRARY_ATTN, vec![-1; dec_layers as usize]);
        arch.set_scalar(attr::ENCODER_QKV_DIM, 4);
        arch.set_scalar(attr::DECODER_QKV_DIM, 4);
        arch
    }

    fn tiny_cfg() -> EfficiencyModelConfig {
        EfficiencyModelConfig {
            vocab_size: 10,
            default_qkv_dim: 4,
            share_embeddings: false,
            src_len: 2,
            tgt_len: 2,
        }
    }

    #[test]
    fn gflops_matches_hand_count() {
        // dims 4, qkv 4, ffn 8, one layer each side, vocab 10, lengths 2.
        // Encoder: projections 4*2*4*4 = 128, attention 2*4*4 = 32,
        // FFN 2*2*4*8 = 128 -> 288 MACs.
        // Decoder: self 4*2*4*4 + 2*4*4 = 160; cross Q 2*4*4 = 32,
        // K/V 2*2*4*4 = 64, scores 2*2*2*4 = 32, out 2*4*4 = 32 -> 160;
        // FFN 128 -> 448 MACs.
        // Output projection 2*4*10 = 80. Total 816 MACs = 1632 FLOPs.
        let space = tiny_space();
        let arch = tiny_arch(1);
        let gflops = gflops_estimate(&space, &arch, &tiny_cfg()).unwrap();
        assert!((gflops - 1632.0 / 1e9).abs() < 1e-18);
    }

    #[test]
    fn zero_decoder_layers_drop_decoder_terms() {
        let space = tiny_space();
        let with = tiny_arch(1);
        let without = tiny_arch(0);
        let cfg = tiny_cfg();
        let p_with = param_count(&space, &with, &cfg).unwrap();
        let p_without = param_count(&space, &without, &cfg).unwrap();
        // Only embeddings + the encoder layer remain.
        let embeddings = 10 * 4 + 10 * 4 + 4 * 10;
        let encoder = 3 * (4 * 4 + 4) + (4 * 4 + 4) + (4 * 8 + 8) + (8 * 4 + 4) + 2 * 2 * 4;
        assert_eq!(p_without, embeddings + encoder);
        assert!(p_with > p_without);
    }

    #[test]
    fn param_count_is_monotone_in_dims() {
        let space = tiny_space();
        let cfg = tiny_cfg();
        let base = tiny_arch(1);
        let mut bigger = base.clone();
        bigger.set_scalar(attr::ENCODER_EMBED_DIM, 8);
        assert!(
            param_count(&space, &bigger, &cfg).unwrap() > param_count(&space, &base, &cfg).unwrap()
        );
        let mut wider_ffn = base.clone();
        wider_ffn.set_per_layer(attr::DECODER_FFN_EMBED_DIM, vec![16]);
        assert!(
            param_count(&space, &wider_ffn, &cfg).unwrap()
                > param_count(&space, &base, &cfg).unwrap()
        );
    }

    #[test]
    fn flops_grow_superlinearly_in_target_length() {
        // Decoder self-attention is quadratic in tgt_len, every other
        // term linear or constant, so g(tgt) is strictly convex.
        let space = tiny_space();
        let arch = tiny_arch(1);
        let g = |tgt: u64| {
            let mut cfg = tiny_cfg();
            cfg.tgt_len = tgt;
            gflops_estimate(&space, &arch, &cfg).unwrap()
        };
        assert!(g(4) > g(2));
        assert!(g(6) - g(4) > g(4) - g(2));
    }

    #[test]
    fn zero_lengths_are_rejected() {
        let space = tiny_space();
        let arch = tiny_arch(1);
        let mut cfg = tiny_cfg();
        cfg.src_len = 0;
        cfg.tgt_len = 0;
        assert!(matches!(
            gflops_estimate(&space, &arch, &cfg),
            Err(EfficiencyError::ZeroLength { .. })
        ));
    }

    #[test]
    fn analytic_latency_matches_declared_formula() {
        // 3 decoder layers at average FFN 2048 with base 10, slope 5:
        // 10 + 5 * 3 * 2.048 = 40.72 ms.
        let model = LatencyModel::Analytic {
            base_ms: 10.0,
            slope_ms: 5.0,
        };
        let mut features = [0.0; crate::space::ENCODING_LEN];
        features[feature::DECODER_LAYER_NUM] = 3.0;
        features[feature::DECODER_FFN_AVG] = 2048.0;
        let encoded = EncodedArchitecture::from_features(features);
        let ms = model.predict_latency(&encoded).unwrap();
        assert!((ms - 40.72).abs() < 1e-12);
    }

    #[test]
    fn constant_latency_model_is_constant() {
        let model = LatencyModel::Analytic {
            base_ms: 25.0,
            slope_ms: 0.0,
        };
        for layers in [0.0, 2.0, 6.0] {
            let mut features = [0.0; crate::space::ENCODING_LEN];
            features[feature::DECODER_LAYER_NUM] = layers;
            features[feature::DECODER_FFN_AVG] = 3072.0;
            let encoded = EncodedArchitecture::from_features(features);
            assert_eq!(model.predict_latency(&encoded).unwrap(), 25.0);
        }
    }

    #[test]
    fn shared_embeddings_count_once() {
        let space = tiny_space();
        let arch = tiny_arch(1);
        let mut cfg = tiny_cfg();
        let separate = param_count(&space, &arch, &cfg).unwrap();
        cfg.share_embeddings = true;
        let shared = param_count(&space, &arch, &cfg).unwrap();
        assert_eq!(separate - shared, 2 * 10 * 4);
    }
}
