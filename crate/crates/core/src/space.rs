//! Hyperparameter search spaces for transformer encoder-decoder
//! architectures.
//!
//! A [`SearchSpace`] is an ordered list of attributes, each either global
//! (one integer per architecture) or per-layer (one integer per active
//! layer, where the layer count is read from another, global attribute).
//! An [`Architecture`] is one concrete assignment. Architectures carry no
//! weights; they are pure hyperparameter records.
//!
//! The canonical serialization of an architecture lists attributes in
//! space declaration order (`name=value;...`), giving stable equality,
//! ordering, and hash keys.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mathutil::fnv1a64;

/// Well-known attribute names. Prompt rendering, feature encoding, and
/// the efficiency models identify attribute roles by these names.
pub mod attr {
    pub const ENCODER_EMBED_DIM: &str = "encoder-embed-dim-subtransformer";
    pub const ENCODER_LAYER_NUM: &str = "encoder-layer-num-subtransformer";
    pub const ENCODER_FFN_EMBED_DIM: &str = "encoder-ffn-embed-dim-all-subtransformer";
    pub const ENCODER_SELF_ATTN_HEADS: &str = "encoder-self-attention-heads-all-subtransformer";
    pub const DECODER_EMBED_DIM: &str = "decoder-embed-dim-subtransformer";
    pub const DECODER_LAYER_NUM: &str = "decoder-layer-num-subtransformer";
    pub const DECODER_FFN_EMBED_DIM: &str = "decoder-ffn-embed-dim-all-subtransformer";
    pub const DECODER_SELF_ATTN_HEADS: &str = "decoder-self-attention-heads-all-subtransformer";
    pub const DECODER_CROSS_ATTN_HEADS: &str = "decoder-ende-attention-heads-all-subtransformer";
    pub const DECODER_ARBITRARY_ATTN: &str = "decoder-arbitrary-ende-attn-all-subtransformer";
    pub const ENCODER_QKV_DIM: &str = "encoder-qkv-dim-subtransformer";
    pub const DECODER_QKV_DIM: &str = "decoder-qkv-dim-subtransformer";
}

/// One attribute of a search space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    /// Legal values; non-empty and duplicate-free.
    pub choices: Vec<i64>,
    #[serde(default)]
    pub per_layer: bool,
    /// For per-layer attributes: name of the global attribute holding the
    /// active layer count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_count_source: Option<String>,
}

impl AttributeSpec {
    pub fn global(name: &str, choices: &[i64]) -> Self {
        Self {
            name: name.to_string(),
            choices: choices.to_vec(),
            per_layer: false,
            layer_count_source: None,
        }
    }

    pub fn per_layer(name: &str, choices: &[i64], layer_count_source: &str) -> Self {
        Self {
            name: name.to_string(),
            choices: choices.to_vec(),
            per_layer: true,
            layer_count_source: Some(layer_count_source.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("attribute `{0}` declared more than once")]
    DuplicateAttribute(String),
    #[error("attribute `{0}` has an empty choice list")]
    EmptyChoices(String),
    #[error("attribute `{0}` has duplicate choices")]
    DuplicateChoices(String),
    #[error("per-layer attribute `{attribute}` has no layer-count source")]
    NoLayerCountSource { attribute: String },
    #[error("attribute `{attribute}` names unknown layer-count source `{source_attribute}`")]
    UnknownLayerCountSource {
        attribute: String,
        source_attribute: String,
    },
    #[error("attribute `{attribute}` uses per-layer attribute `{source_attribute}` as a layer-count source")]
    PerLayerLayerCountSource {
        attribute: String,
        source_attribute: String,
    },
    #[error("layer-count attribute `{attribute}` has a negative choice {value}")]
    NegativeLayerCount { attribute: String, value: i64 },
    #[error("space cardinality {cardinality} exceeds the enumeration cap {cap}")]
    EnumerationRefused { cardinality: Cardinality, cap: u128 },
}

/// Exact member count of a space, or `Overflow` past `u128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    Exact(u128),
    Overflow,
}

impl Cardinality {
    pub fn exceeds(&self, cap: u128) -> bool {
        match *self {
            Cardinality::Exact(n) => n > cap,
            Cardinality::Overflow => true,
        }
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cardinality::Exact(n) => write!(f, "{n}"),
            Cardinality::Overflow => write!(f, "more than 2^128"),
        }
    }
}

/// An ordered, validated set of attributes.
///
/// Immutable after construction; all randomness enters through
/// caller-supplied RNG streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(into = "SearchSpaceConfig")]
pub struct SearchSpace {
    attributes: Vec<AttributeSpec>,
}

/// Wire form of a search space (`{"attributes": [...]}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpaceConfig {
    pub attributes: Vec<AttributeSpec>,
}

impl From<SearchSpace> for SearchSpaceConfig {
    fn from(space: SearchSpace) -> Self {
        Self {
            attributes: space.attributes,
        }
    }
}

impl TryFrom<SearchSpaceConfig> for SearchSpace {
    type Error = SpaceError;

    fn try_from(config: SearchSpaceConfig) -> Result<Self, SpaceError> {
        SearchSpace::new(config.attributes)
    }
}

impl SearchSpace {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self, SpaceError> {
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(SpaceError::DuplicateAttribute(a.name.clone()));
            }
            if a.choices.is_empty() {
                return Err(SpaceError::EmptyChoices(a.name.clone()));
            }
            for (j, c) in a.choices.iter().enumerate() {
                if a.choices[..j].contains(c) {
                    return Err(SpaceError::DuplicateChoices(a.name.clone()));
                }
            }
            if a.per_layer {
                let source = a.layer_count_source.as_ref().ok_or_else(|| {
                    SpaceError::NoLayerCountSource {
                        attribute: a.name.clone(),
                    }
                })?;
                let src = attributes
                    .iter()
                    .find(|b| &b.name == source)
                    .ok_or_else(|| SpaceError::UnknownLayerCountSource {
                        attribute: a.name.clone(),
                        source_attribute: source.clone(),
                    })?;
                if src.per_layer {
                    return Err(SpaceError::PerLayerLayerCountSource {
                        attribute: a.name.clone(),
                        source_attribute: source.clone(),
                    });
                }
                if let Some(&v) = src.choices.iter().find(|&&v| v < 0) {
                    return Err(SpaceError::NegativeLayerCount {
                        attribute: src.name.clone(),
                        value: v,
                    });
                }
            } else if a.layer_count_source.is_some() {
                return Err(SpaceError::NoLayerCountSource {
                    attribute: a.name.clone(),
                });
            }
        }
        Ok(Self { attributes })
    }

    /// Attributes in declaration order.
    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// The transformer search space used throughout: embedding dims
    /// {512, 640}, 6 encoder layers, 1-6 decoder layers, QKV dim 512,
    /// per-layer attention heads {4, 8}, per-layer arbitrary
    /// encoder-decoder attention {-1, 1, 2}, per-layer FFN dims
    /// {1024, 2048, 3072}.
    pub fn default_transformer() -> Self {
        Self::new(vec![
            AttributeSpec::global(attr::ENCODER_EMBED_DIM, &[512, 640]),
            AttributeSpec::global(attr::ENCODER_LAYER_NUM, &[6]),
            AttributeSpec::per_layer(
                attr::ENCODER_FFN_EMBED_DIM,
                &[1024, 2048, 3072],
                attr::ENCODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(
                attr::ENCODER_SELF_ATTN_HEADS,
                &[4, 8],
                attr::ENCODER_LAYER_NUM,
            ),
            AttributeSpec::global(attr::DECODER_EMBED_DIM, &[512, 640]),
            AttributeSpec::global(attr::DECODER_LAYER_NUM, &[1, 2, 3, 4, 5, 6]),
            AttributeSpec::per_layer(
                attr::DECODER_FFN_EMBED_DIM,
                &[1024, 2048, 3072],
                attr::DECODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(
                attr::DECODER_SELF_ATTN_HEADS,
                &[4, 8],
                attr::DECODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(
                attr::DECODER_CROSS_ATTN_HEADS,
                &[4, 8],
                attr::DECODER_LAYER_NUM,
            ),
            AttributeSpec::per_layer(
                attr::DECODER_ARBITRARY_ATTN,
                &[-1, 1, 2],
                attr::DECODER_LAYER_NUM,
            ),
            AttributeSpec::global(attr::ENCODER_QKV_DIM, &[512]),
            AttributeSpec::global(attr::DECODER_QKV_DIM, &[512]),
        ])
        .expect("default space is well-formed")
    }

    /// Uniform sample: globals first in declaration order, then per-layer
    /// attributes in declaration order with one independent draw per
    /// active layer.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Architecture {
        let mut values = BTreeMap::new();
        for a in self.attributes.iter().filter(|a| !a.per_layer) {
            let v = a.choices[rng.gen_range(0..a.choices.len())];
            values.insert(a.name.clone(), AttrValue::Scalar(v));
        }
        for a in self.attributes.iter().filter(|a| a.per_layer) {
            let layers = Self::layer_count(&values, a);
            let list = (0..layers)
                .map(|_| a.choices[rng.gen_range(0..a.choices.len())])
                .collect();
            values.insert(a.name.clone(), AttrValue::PerLayer(list));
        }
        Architecture { values }
    }

    fn layer_count(values: &BTreeMap<String, AttrValue>, a: &AttributeSpec) -> usize {
        let source = a
            .layer_count_source
            .as_deref()
            .expect("validated per-layer attribute");
        match values.get(source) {
            Some(AttrValue::Scalar(n)) if *n >= 0 => *n as usize,
            _ => 0,
        }
    }

    /// Checks an architecture against this space. Empty result means the
    /// architecture is valid.
    pub fn validate(&self, arch: &Architecture) -> Vec<Violation> {
        let mut out = Vec::new();
        for a in &self.attributes {
            match (arch.values.get(&a.name), a.per_layer) {
                (None, _) => out.push(Violation {
                    attribute: a.name.clone(),
                    problem: ViolationKind::MissingAttribute,
                }),
                (Some(AttrValue::Scalar(v)), false) => {
                    if !a.choices.contains(v) {
                        out.push(Violation {
                            attribute: a.name.clone(),
                            problem: ViolationKind::OutOfChoices { value: *v },
                        });
                    }
                }
                (Some(AttrValue::PerLayer(list)), true) => {
                    let expected = Self::layer_count(&arch.values, a);
                    if list.len() != expected {
                        out.push(Violation {
                            attribute: a.name.clone(),
                            problem: ViolationKind::WrongLength {
                                expected,
                                actual: list.len(),
                            },
                        });
                    }
                    for v in list {
                        if !a.choices.contains(v) {
                            out.push(Violation {
                                attribute: a.name.clone(),
                                problem: ViolationKind::OutOfChoices { value: *v },
                            });
                            break;
                        }
                    }
                }
                (Some(_), _) => out.push(Violation {
                    attribute: a.name.clone(),
                    problem: ViolationKind::WrongShape,
                }),
            }
        }
        for name in arch.values.keys() {
            if self.attribute(name).is_none() {
                out.push(Violation {
                    attribute: name.clone(),
                    problem: ViolationKind::UnexpectedAttribute,
                });
            }
        }
        out
    }

    pub fn is_valid(&self, arch: &Architecture) -> bool {
        self.validate(arch).is_empty()
    }

    /// Canonical serialization: attributes in declaration order,
    /// `name=value` joined by `;`, per-layer lists as `[a,b,c]`.
    /// Attributes the space does not declare are ignored.
    pub fn canonical_string(&self, arch: &Architecture) -> String {
        let mut s = String::new();
        for (i, a) in self.attributes.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            let _ = write!(s, "{}=", a.name);
            match arch.values.get(&a.name) {
                Some(AttrValue::Scalar(v)) => {
                    let _ = write!(s, "{v}");
                }
                Some(AttrValue::PerLayer(list)) => {
                    s.push('[');
                    for (j, v) in list.iter().enumerate() {
                        if j > 0 {
                            s.push(',');
                        }
                        let _ = write!(s, "{v}");
                    }
                    s.push(']');
                }
                None => s.push('?'),
            }
        }
        s
    }

    /// Stable 64-bit digest of the canonical serialization.
    pub fn arch_digest(&self, arch: &Architecture) -> u64 {
        fnv1a64(self.canonical_string(arch).as_bytes())
    }

    /// Exact number of architectures in this space.
    pub fn cardinality(&self) -> Cardinality {
        // Global attributes that act as a layer-count source must be
        // summed over rather than multiplied, because the number of
        // per-layer completions depends on their value.
        let sources: Vec<&str> = self
            .attributes
            .iter()
            .filter_map(|a| a.layer_count_source.as_deref())
            .collect();
        let mut base: u128 = 1;
        for a in self.attributes.iter().filter(|a| !a.per_layer) {
            if sources.contains(&a.name.as_str()) {
                continue;
            }
            match base.checked_mul(a.choices.len() as u128) {
                Some(v) => base = v,
                None => return Cardinality::Overflow,
            }
        }
        let source_attrs: Vec<&AttributeSpec> = self
            .attributes
            .iter()
            .filter(|a| !a.per_layer && sources.contains(&a.name.as_str()))
            .collect();
        let mut sum: u128 = 0;
        let mut combo = vec![0usize; source_attrs.len()];
        loop {
            let mut term: u128 = 1;
            for a in self.attributes.iter().filter(|a| a.per_layer) {
                let src = a.layer_count_source.as_deref().unwrap();
                let idx = source_attrs.iter().position(|s| s.name == src).unwrap();
                let layers = source_attrs[idx].choices[combo[idx]].max(0) as u32;
                match (a.choices.len() as u128).checked_pow(layers) {
                    Some(p) => match term.checked_mul(p) {
                        Some(v) => term = v,
                        None => return Cardinality::Overflow,
                    },
                    None => return Cardinality::Overflow,
                }
            }
            match sum.checked_add(term) {
                Some(v) => sum = v,
                None => return Cardinality::Overflow,
            }
            // Advance the odometer over layer-count combinations.
            let mut pos = 0;
            loop {
                if pos == combo.len() {
                    return match base.checked_mul(sum) {
                        Some(v) => Cardinality::Exact(v),
                        None => Cardinality::Overflow,
                    };
                }
                combo[pos] += 1;
                if combo[pos] < source_attrs[pos].choices.len() {
                    break;
                }
                combo[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Every architecture of the space exactly once, eagerly collected.
    ///
    /// Order: an odometer over globals (declaration order) followed by
    /// per-layer attributes (declaration order, layer 0 first); the
    /// last position varies fastest and choices cycle in declaration
    /// order. Refused when the cardinality exceeds `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<Vec<Architecture>, SpaceError> {
        let cardinality = self.cardinality();
        if cardinality.exceeds(cap) {
            return Err(SpaceError::EnumerationRefused { cardinality, cap });
        }
        let globals: Vec<&AttributeSpec> =
            self.attributes.iter().filter(|a| !a.per_layer).collect();
        let per_layer: Vec<&AttributeSpec> =
            self.attributes.iter().filter(|a| a.per_layer).collect();
        let mut out = Vec::new();
        let mut values = BTreeMap::new();
        self.enumerate_globals(&globals, &per_layer, 0, &mut values, &mut out);
        Ok(out)
    }

    fn enumerate_globals(
        &self,
        globals: &[&AttributeSpec],
        per_layer: &[&AttributeSpec],
        depth: usize,
        values: &mut BTreeMap<String, AttrValue>,
        out: &mut Vec<Architecture>,
    ) {
        if depth == globals.len() {
            self.enumerate_per_layer(per_layer, 0, values, out);
            return;
        }
        let a = globals[depth];
        for &c in &a.choices {
            values.insert(a.name.clone(), AttrValue::Scalar(c));
            self.enumerate_globals(globals, per_layer, depth + 1, values, out);
        }
        values.remove(&a.name);
    }

    fn enumerate_per_layer(
        &self,
        per_layer: &[&AttributeSpec],
        depth: usize,
        values: &mut BTreeMap<String, AttrValue>,
        out: &mut Vec<Architecture>,
    ) {
        if depth == per_layer.len() {
            out.push(Architecture {
                values: values.clone(),
            });
            return;
        }
        let a = per_layer[depth];
        let layers = Self::layer_count(values, a);
        let mut list = vec![a.choices[0]; layers];
        if layers == 0 {
            values.insert(a.name.clone(), AttrValue::PerLayer(Vec::new()));
            self.enumerate_per_layer(per_layer, depth + 1, values, out);
            values.remove(&a.name);
            return;
        }
        loop {
            values.insert(a.name.clone(), AttrValue::PerLayer(list.clone()));
            self.enumerate_per_layer(per_layer, depth + 1, values, out);
            // Advance this attribute's layer odometer, last layer fastest.
            let mut pos = layers;
            loop {
                if pos == 0 {
                    values.remove(&a.name);
                    return;
                }
                pos -= 1;
                let idx = a.choices.iter().position(|c| *c == list[pos]).unwrap();
                if idx + 1 < a.choices.len() {
                    list[pos] = a.choices[idx + 1];
                    break;
                }
                list[pos] = a.choices[0];
            }
        }
    }
}

/// One concrete assignment of a search space's attributes.
///
/// Value semantics: two architectures compare equal iff their canonical
/// serializations agree, which for validated architectures coincides
/// with map equality.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Architecture {
    values: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Scalar(i64),
    PerLayer(Vec<i64>),
}

impl Architecture {
    pub fn new(values: BTreeMap<String, AttrValue>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &BTreeMap<String, AttrValue> {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<&AttrValue> {
        self.values.get(name)
    }

    pub fn scalar(&self, name: &str) -> Option<i64> {
        match self.values.get(name) {
            Some(AttrValue::Scalar(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn per_layer(&self, name: &str) -> Option<&[i64]> {
        match self.values.get(name) {
            Some(AttrValue::PerLayer(v)) => Some(v.as_slice()),
            _ => None,
        }
    }

    pub fn set_scalar(&mut self, name: &str, value: i64) {
        self.values
            .insert(name.to_string(), AttrValue::Scalar(value));
    }

    pub fn set_per_layer(&mut self, name: &str, values: Vec<i64>) {
        self.values
            .insert(name.to_string(), AttrValue::PerLayer(values));
    }
}

/// A single validation failure, naming the offending attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub attribute: String,
    pub problem: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    MissingAttribute,
    UnexpectedAttribute,
    /// Scalar where a list was expected, or vice versa.
    WrongShape,
    OutOfChoices {
        value: i64,
    },
    WrongLength {
        expected: usize,
        actual: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.problem {
            ViolationKind::MissingAttribute => write!(f, "`{}`: missing", self.attribute),
            ViolationKind::UnexpectedAttribute => {
                write!(f, "`{}`: not declared by the space", self.attribute)
            }
            ViolationKind::WrongShape => {
                write!(f, "`{}`: scalar/per-layer shape mismatch", self.attribute)
            }
            ViolationKind::OutOfChoices { value } => {
                write!(
                    f,
                    "`{}`: value {} not among the choices",
                    self.attribute, value
                )
            }
            ViolationKind::WrongLength { expected, actual } => write!(
                f,
                "`{}`: {} layer values, layer count says {}",
                self.attribute, actual, expected
            ),
        }
    }
}

/// Feature indices of [`EncodedArchitecture`].
pub mod feature {
    pub const ENCODER_EMBED_DIM: usize = 0;
    pub const ENCODER_LAYER_NUM: usize = 1;
    pub const ENCODER_FFN_AVG: usize = 2;
    pub const ENCODER_SELF_HEADS_AVG: usize = 3;
    pub const DECODER_EMBED_DIM: usize = 4;
    pub const DECODER_LAYER_NUM: usize = 5;
    pub const DECODER_FFN_AVG: usize = 6;
    pub const DECODER_SELF_HEADS_AVG: usize = 7;
    pub const DECODER_CROSS_HEADS_AVG: usize = 8;
    pub const DECODER_ARBITRARY_ATTN_AVG: usize = 9;
}

pub const ENCODING_LEN: usize = 10;

/// The fixed 10-value feature vector of an architecture: encoder
/// embedding dim, encoder layer count, average encoder FFN dim, average
/// encoder self-attention heads, then the decoder embedding dim, layer
/// count, average FFN dim, average self-attention heads, average
/// cross-attention heads, and average arbitrary encoder-decoder
/// attention code. Averages are arithmetic means over active layers
/// only; with zero active layers an average is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodedArchitecture {
    features: [f64; ENCODING_LEN],
}

impl EncodedArchitecture {
    pub fn from_features(features: [f64; ENCODING_LEN]) -> Self {
        Self { features }
    }

    pub fn features(&self) -> &[f64; ENCODING_LEN] {
        &self.features
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("architecture is invalid for the space: {}", format_violations(.0))]
    InvalidArchitecture(Vec<Violation>),
    #[error("space lacks the standard attribute `{0}` required by the encoding")]
    MissingStandardAttribute(String),
}

fn format_violations(violations: &[Violation]) -> String {
    let mut s = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{v}");
    }
    s
}

/// Encodes a validated architecture into its 10-value feature vector.
pub fn encode(
    space: &SearchSpace,
    arch: &Architecture,
) -> Result<EncodedArchitecture, EncodeError> {
    let violations = space.validate(arch);
    if !violations.is_empty() {
        return Err(EncodeError::InvalidArchitecture(violations));
    }
    let scalar = |name: &str| -> Result<f64, EncodeError> {
        arch.scalar(name)
            .map(|v| v as f64)
            .ok_or_else(|| EncodeError::MissingStandardAttribute(name.to_string()))
    };
    let average = |name: &str| -> Result<f64, EncodeError> {
        let list = arch
            .per_layer(name)
            .ok_or_else(|| EncodeError::MissingStandardAttribute(name.to_string()))?;
        if list.is_empty() {
            return Ok(0.0);
        }
        Ok(list.iter().map(|&v| v as f64).sum::<f64>() / list.len() as f64)
    };
    Ok(EncodedArchitecture {
        features: [
            scalar(attr::ENCODER_EMBED_DIM)?,
            scalar(attr::ENCODER_LAYER_NUM)?,
            average(attr::ENCODER_FFN_EMBED_DIM)?,
            average(attr::ENCODER_SELF_ATTN_HEADS)?,
            scalar(attr::DECODER_EMBED_DIM)?,
            scalar(attr::DECODER_LAYER_NUM)?,
            average(attr::DECODER_FFN_EMBED_DIM)?,
            average(attr::DECODER_SELF_ATTN_HEADS)?,
            average(attr::DECODER_CROSS_ATTN_HEADS)?,
            average(attr::DECODER_ARBITRARY_ATTN)?,
        ],
    })
}

/// Per-feature (min, max) bounds implied by the space's choice lists.
///
/// Per-layer averages are bounded by the smallest and largest choice, so
/// these bounds hold for every architecture of the space. Derived from
/// the space rather than any dataset so that normalization transfers
/// across datasets of the same space.
pub fn feature_bounds(space: &SearchSpace) -> Result<[(f64, f64); ENCODING_LEN], EncodeError> {
    let range = |name: &str| -> Result<(f64, f64), EncodeError> {
        let a = space
            .attribute(name)
            .ok_or_else(|| EncodeError::MissingStandardAttribute(name.to_string()))?;
        let min = *a.choices.iter().min().unwrap() as f64;
        let max = *a.choices.iter().max().unwrap() as f64;
        Ok((min, max))
    };
    Ok([
        range(attr::ENCODER_EMBED_DIM)?,
        range(attr::ENCODER_LAYER_NUM)?,
        range(attr::ENCODER_FFN_EMBED_DIM)?,
        range(attr::ENCODER_SELF_ATTN_HEADS)?,
        range(attr::DECODER_EMBED_DIM)?,
        range(attr::DECODER_LAYER_NUM)?,
        range(attr::DECODER_FFN_EMBED_DIM)?,
        range(attr::DECODER_SELF_ATTN_HEADS)?,
        range(attr::DECODER_CROSS_ATTN_HEADS)?,
        range(attr::DECODER_ARBITRARY_ATTN)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn singleton_space_samples_its_unique_member() {
        let space = SearchSpace::new(vec![
            AttributeSpec::global("a", &[3]),
            AttributeSpec::global("layers", &[2]),
            AttributeSpec::per_layer("b", &[7], "layers"),
        ])
        .unwrap();
        let arch = space.sample(&mut rng(0));
        assert_eq!(arch.scalar("a"), Some(3));
        assert_eq!(arch.per_layer("b"), Some(&[7, 7][..]));
        assert!(space.is_valid(&arch));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let space = SearchSpace::default_transformer();
        let a = space.sample(&mut rng(42));
        let b = space.sample(&mut rng(42));
        assert_eq!(a, b);
        assert_eq!(space.canonical_string(&a), space.canonical_string(&b));
    }

    #[test]
    fn decoder_layer_counts_are_uniform() {
        let space = SearchSpace::default_transformer();
        let mut counts = [0u32; 6];
        let mut r = rng(7);
        for _ in 0..10_000 {
            let arch = space.sample(&mut r);
            let layers = arch.scalar(attr::DECODER_LAYER_NUM).unwrap();
            counts[(layers - 1) as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = f64::from(c) / 10_000.0;
            assert!(
                (freq - 1.0 / 6.0).abs() <= 0.02,
                "layer count {} frequency {} off uniform",
                i + 1,
                freq
            );
        }
    }

    #[test]
    fn validate_flags_out_of_choices_and_length() {
        let space = SearchSpace::default_transformer();
        let mut arch = space.sample(&mut rng(1));
        arch.set_scalar(attr::ENCODER_EMBED_DIM, 768);
        let violations = space.validate(&arch);
        assert!(violations
            .iter()
            .any(|v| v.attribute == attr::ENCODER_EMBED_DIM
                && v.problem == ViolationKind::OutOfChoices { value: 768 }));

        let mut arch = space.sample(&mut rng(2));
        arch.set_scalar(attr::DECODER_LAYER_NUM, 3);
        arch.set_per_layer(attr::DECODER_FFN_EMBED_DIM, vec![1024, 2048]);
        let violations = space.validate(&arch);
        assert!(violations
            .iter()
            .any(|v| v.attribute == attr::DECODER_FFN_EMBED_DIM
                && matches!(
                    v.problem,
                    ViolationKind::WrongLength {
                        expected: 3,
                        actual: 2
                    }
                )));
    }

    #[test]
    fn figure_style_architecture_is_valid_and_encodes() {
        // The demonstration architecture: 512-dim 6-layer encoder with
        // FFN dims [1024, 1024, 2048, 2048, 2048, 1024]; 3-layer decoder
        // with arbitrary-attention codes [-1, 1, -1].
        let space = SearchSpace::default_transformer();
        let mut arch = Architecture::default();
        arch.set_scalar(attr::ENCODER_EMBED_DIM, 512);
        arch.set_scalar(attr::ENCODER_LAYER_NUM, 6);
        arch.set_per_layer(
            attr::ENCODER_FFN_EMBED_DIM,
            vec![1024, 1024, 2048, 2048, 2048, 1024],
        );
        arch.set_per_layer(attr::ENCODER_SELF_ATTN_HEADS, vec![8, 8, 8, 8, 4, 4]);
        arch.set_scalar(attr::DECODER_EMBED_DIM, 512);
        arch.set_scalar(attr::DECODER_LAYER_NUM, 3);
        arch.set_per_layer(attr::DECODER_FFN_EMBED_DIM, vec![2048, 2048, 1024]);
        arch.set_per_layer(attr::DECODER_SELF_ATTN_HEADS, vec![8, 4, 8]);
        arch.set_per_layer(attr::DECODER_CROSS_ATTN_HEADS, vec![8, 8, 4]);
        arch.set_per_layer(attr::DECODER_ARBITRARY_ATTN, vec![-1, 1, -1]);
        arch.set_scalar(attr::ENCODER_QKV_DIM, 512);
        arch.set_scalar(attr::DECODER_QKV_DIM, 512);
        assert!(space.validate(&arch).is_empty());

        let enc = encode(&space, &arch).unwrap();
        assert_eq!(enc.features()[feature::ENCODER_FFN_AVG], 1536.0);
        let expected = -1.0 / 3.0;
        assert!((enc.features()[feature::DECODER_ARBITRARY_ATTN_AVG] - expected).abs() < 1e-12);
    }

    #[test]
    fn encode_round_trips_through_json() {
        let space = SearchSpace::default_transformer();
        let arch = space.sample(&mut rng(99));
        let json = serde_json::to_string(&arch).unwrap();
        let back: Architecture = serde_json::from_str(&json).unwrap();
        assert_eq!(arch, back);
        assert_eq!(
            encode(&space, &arch).unwrap(),
            encode(&space, &back).unwrap()
        );
    }

    #[test]
    fn enumerate_counts_products() {
        let space = SearchSpace::new(vec![
            AttributeSpec::global("a", &[1, 2]),
            AttributeSpec::global("b", &[1, 2, 3]),
        ])
        .unwrap();
        assert_eq!(space.cardinality(), Cardinality::Exact(6));
        let all = space.enumerate(10).unwrap();
        assert_eq!(all.len(), 6);
        // Every member distinct.
        for (i, x) in all.iter().enumerate() {
            for y in &all[..i] {
                assert_ne!(x, y);
            }
        }
    }

    #[test]
    fn enumerate_refuses_the_default_space() {
        // Closed form, computed independently: 4 free globals
        // (2 embed dims each side), 6^6 encoder per-layer combinations
        // (3 FFN x 2 heads over 6 layers), and sum over 1..=6 decoder
        // layers of 36^d per-layer combinations (3 FFN x 2 self x
        // 2 cross x 3 arbitrary).
        let expected: u128 = 4 * 6u128.pow(6) * (1..=6u32).map(|d| 36u128.pow(d)).sum::<u128>();
        let space = SearchSpace::default_transformer();
        assert_eq!(space.cardinality(), Cardinality::Exact(expected));
        let err = space.enumerate(1_000_000).unwrap_err();
        match err {
            SpaceError::EnumerationRefused { cardinality, cap } => {
                assert_eq!(cap, 1_000_000);
                assert_eq!(cardinality, Cardinality::Exact(expected));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn per_layer_cardinality_sums_over_layer_counts() {
        let space = SearchSpace::new(vec![
            AttributeSpec::global("layers", &[1, 2]),
            AttributeSpec::per_layer("x", &[10, 20], "layers"),
            AttributeSpec::global("g", &[5, 6, 7]),
        ])
        .unwrap();
        // 3 * (2^1 + 2^2) = 18
        assert_eq!(space.cardinality(), Cardinality::Exact(18));
        assert_eq!(space.enumerate(100).unwrap().len(), 18);
    }

    #[test]
    fn rejects_malformed_spaces() {
        assert!(matches!(
            SearchSpace::new(vec![AttributeSpec::global("a", &[])]),
            Err(SpaceError::EmptyChoices(_))
        ));
        assert!(matches!(
            SearchSpace::new(vec![AttributeSpec::global("a", &[1, 1])]),
            Err(SpaceError::DuplicateChoices(_))
        ));
        assert!(matches!(
            SearchSpace::new(vec![AttributeSpec::per_layer("p", &[1], "nope")]),
            Err(SpaceError::UnknownLayerCountSource { .. })
        ));
        assert!(matches!(
            SearchSpace::new(vec![
                AttributeSpec::global("layers", &[-1, 2]),
                AttributeSpec::per_layer("p", &[1], "layers"),
            ]),
            Err(SpaceError::NegativeLayerCount { .. })
        ));
    }
}
