//! The performance-predictor abstraction and its in-process
//! realizations, plus query-cost accounting.
//!
//! A predictor maps an architecture to a scalar predicted score. All
//! implementations must be deterministic per architecture: calling
//! `predict` twice on the same architecture returns identical values.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng as _;
use serde::{Deserialize, Serialize};

use crate::efficiency::EfficiencyReport;
use crate::mathutil::{mix64, standard_normal};
use crate::space::{Architecture, SearchSpace};

/// One labeled evaluation example: an architecture with its true score
/// and, optionally, measured efficiency metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub arch: Architecture,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencyReport>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error("predictor `{predictor}` failed: {message}")]
    Failed { predictor: String, message: String },
}

impl PredictError {
    pub fn new(predictor: &str, message: impl fmt::Display) -> Self {
        let mut text = String::new();
        let _ = core::fmt::write(&mut text, format_args!("{message}"));
        Self::Failed {
            predictor: predictor.to_string(),
            message: text,
        }
    }
}

/// Maps architectures to predicted performance scores.
///
/// Implementations must be safe to call from multiple threads and
/// deterministic per architecture. `predict_batch` must agree pointwise
/// with `predict`; implementations may parallelize internally but return
/// results in input order.
pub trait Predictor: Send + Sync {
    /// Stable descriptive name, used in traces and reports.
    fn name(&self) -> &str;

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError>;

    fn predict_batch(&self, archs: &[Architecture]) -> Result<Vec<f64>, PredictError> {
        archs.iter().map(|a| self.predict(a)).collect()
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError> {
        (**self).predict(arch)
    }

    fn predict_batch(&self, archs: &[Architecture]) -> Result<Vec<f64>, PredictError> {
        (**self).predict_batch(archs)
    }
}

impl Predictor for Box<dyn Predictor> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError> {
        (**self).predict(arch)
    }

    fn predict_batch(&self, archs: &[Architecture]) -> Result<Vec<f64>, PredictError> {
        (**self).predict_batch(archs)
    }
}

/// A ground-truth scoring function.
pub type GoldFn = Arc<dyn Fn(&Architecture) -> f64 + Send + Sync>;

/// Wraps a gold function with optional bias and Gaussian noise.
///
/// The noise is seeded by (seed, architecture digest), so every query of
/// the same architecture sees the same perturbation and the predictor
/// stays deterministic while still behaving like an imperfect teacher.
/// `bias` alone models a predictor that consistently under- or
/// over-estimates; it shifts scores without disturbing ranks.
pub struct SimulatedPredictor {
    name: String,
    space: SearchSpace,
    gold: GoldFn,
    noise_sigma: f64,
    bias: f64,
    seed: u64,
}

impl SimulatedPredictor {
    pub fn new(space: SearchSpace, gold: GoldFn, noise_sigma: f64, bias: f64, seed: u64) -> Self {
        assert!(noise_sigma >= 0.0, "noise_sigma must be nonnegative");
        let mut name = String::from("simulated");
        let _ = core::fmt::write(
            &mut name,
            format_args!("(sigma={noise_sigma},bias={bias},seed={seed})"),
        );
        Self {
            name,
            space,
            gold,
            noise_sigma,
            bias,
            seed,
        }
    }

    pub fn exact(space: SearchSpace, gold: GoldFn) -> Self {
        Self::new(space, gold, 0.0, 0.0, 0)
    }
}

impl Predictor for SimulatedPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError> {
        let mut value = (self.gold)(arch) + self.bias;
        if self.noise_sigma > 0.0 {
            let digest = self.space.arch_digest(arch);
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(mix64(self.seed) ^ digest);
            value += self.noise_sigma * standard_normal(&mut rng);
        }
        Ok(value)
    }
}

/// Decorates a predictor with call counters; used to verify predictor
/// schedules and cache behavior.
pub struct CountingPredictor<P> {
    inner: P,
    calls: AtomicU64,
    architectures_scored: AtomicU64,
}

impl<P: Predictor> CountingPredictor<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
            architectures_scored: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn architectures_scored(&self) -> u64 {
        self.architectures_scored.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Predictor> Predictor for CountingPredictor<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn predict(&self, arch: &Architecture) -> Result<f64, PredictError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.architectures_scored.fetch_add(1, Ordering::Relaxed);
        self.inner.predict(arch)
    }

    fn predict_batch(&self, archs: &[Architecture]) -> Result<Vec<f64>, PredictError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.architectures_scored
            .fetch_add(archs.len() as u64, Ordering::Relaxed);
        self.inner.predict_batch(archs)
    }
}

/// Money in integer cents, so the advertised price arithmetic is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Currency {
    cents: u64,
}

impl Currency {
    pub fn from_cents(cents: u64) -> Self {
        Self { cents }
    }

    /// Rounds to the nearest cent.
    pub fn from_dollars(dollars: f64) -> Self {
        assert!(dollars >= 0.0 && dollars.is_finite());
        Self {
            cents: (dollars * 100.0 + 0.5) as u64,
        }
    }

    pub fn cents(&self) -> u64 {
        self.cents
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.cents / 100, self.cents % 100)
    }
}

/// Per-query token usage assumed by the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenEstimate {
    /// Exactly one third of 1K tokens per query (the default working
    /// assumption; displayed as ~334 tokens).
    OneThirdOfK,
    /// A fixed measured token count per query.
    Tokens(u64),
}

/// Price model for remote LLM queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub price_per_1k_tokens: Currency,
    pub tokens_per_query: TokenEstimate,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            price_per_1k_tokens: Currency::from_cents(3),
            tokens_per_query: TokenEstimate::OneThirdOfK,
        }
    }
}

impl CostModel {
    /// Total price of `n_queries` queries, rounded to the nearest cent.
    ///
    /// With the defaults (3 cents per 1K tokens, one third of 1K tokens
    /// per query) the result is `0.03 * n / 3` dollars computed exactly:
    /// 3,000 queries cost $30.00 and 180,000 cost $1,800.00.
    pub fn estimate_cost(&self, n_queries: u64) -> Currency {
        let price = u128::from(self.price_per_1k_tokens.cents());
        let n = u128::from(n_queries);
        let cents = match self.tokens_per_query {
            TokenEstimate::OneThirdOfK => div_round(price * n, 3),
            TokenEstimate::Tokens(t) => div_round(price * n * u128::from(t), 1000),
        };
        Currency::from_cents(cents as u64)
    }
}

fn div_round(numerator: u128, denominator: u128) -> u128 {
    (numerator + denominator / 2) / denominator
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathutil::abs;
    use crate::space::SearchSpace;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn space_and_archs(n: usize) -> (SearchSpace, Vec<Architecture>) {
        let space = SearchSpace::default_transformer();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let archs = (0..n).map(|_| space.sample(&mut rng)).collect();
        (space, archs)
    }

    fn constant_gold(value: f64) -> GoldFn {
        Arc::new(move |_| value)
    }

    #[test]
    fn exact_simulated_predictor_is_gold() {
        let (space, archs) = space_and_archs(50);
        let pred = SimulatedPredictor::exact(space, constant_gold(25.0));
        for a in &archs {
            assert_eq!(pred.predict(a).unwrap(), 25.0);
        }
    }

    #[test]
    fn noise_is_deterministic_per_architecture() {
        let (space, archs) = space_and_archs(20);
        let pred = SimulatedPredictor::new(space, constant_gold(25.0), 0.5, 0.0, 3);
        for a in &archs {
            let first = pred.predict(a).unwrap();
            let second = pred.predict(a).unwrap();
            assert_eq!(first, second);
        }
        let batch = pred.predict_batch(&archs).unwrap();
        for (a, b) in archs.iter().zip(&batch) {
            assert_eq!(pred.predict(a).unwrap(), *b);
        }
    }

    #[test]
    fn noisy_mae_matches_half_normal_mean() {
        // E|N(0, sigma^2)| = sigma * sqrt(2/pi); 0.5 * 0.79788 = 0.39894.
        let (space, archs) = space_and_archs(1000);
        let pred = SimulatedPredictor::new(space, constant_gold(25.0), 0.5, 0.0, 17);
        let mean_abs = archs
            .iter()
            .map(|a| abs(pred.predict(a).unwrap() - 25.0))
            .sum::<f64>()
            / archs.len() as f64;
        assert!(
            abs(mean_abs - 0.398_942_280_4) < 0.05,
            "sample mean {mean_abs}"
        );
    }

    #[test]
    fn bias_shifts_without_noise() {
        let (space, archs) = space_and_archs(10);
        let pred = SimulatedPredictor::new(space, constant_gold(25.0), 0.0, -2.0, 0);
        for a in &archs {
            assert_eq!(pred.predict(a).unwrap(), 23.0);
        }
    }

    #[test]
    fn counting_wrapper_counts() {
        let (space, archs) = space_and_archs(4);
        let pred = CountingPredictor::new(SimulatedPredictor::exact(space, constant_gold(1.0)));
        pred.predict(&archs[0]).unwrap();
        pred.predict_batch(&archs).unwrap();
        assert_eq!(pred.calls(), 2);
        assert_eq!(pred.architectures_scored(), 5);
    }

    #[test]
    fn cost_model_matches_reference_estimates() {
        let model = CostModel::default();
        assert_eq!(model.estimate_cost(3000), Currency::from_cents(3000));
        assert_eq!(model.estimate_cost(3000).to_string(), "30.00");
        assert_eq!(model.estimate_cost(180_000).to_string(), "1800.00");
        assert_eq!(model.estimate_cost(0).to_string(), "0.00");
    }

    #[test]
    fn fixed_token_estimate() {
        let model = CostModel {
            price_per_1k_tokens: Currency::from_cents(3),
            tokens_per_query: TokenEstimate::Tokens(334),
        };
        // 3000 * 334 / 1000 * 3 cents = 3006 cents.
        assert_eq!(model.estimate_cost(3000).to_string(), "30.06");
    }
}
