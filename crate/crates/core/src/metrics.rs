//! Predictor-quality metrics: mean absolute error, tie-corrected Kendall
//! rank correlation, and the gold-rank distance profile of discordant
//! pairs.
//!
//! All functions are pure. `kendall_tau` counts concordant/discordant
//! pairs with a Fenwick tree in O(n log n); the brute-force O(n^2) pair
//! count lives only in tests, as an independent oracle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mathutil::{abs, sqrt};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("prediction and truth lists differ in length ({predictions} vs {truths})")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("empty score lists")]
    Empty,
    #[error("need at least {needed} scored items, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("non-finite score in {which} at index {index}")]
    NonFinite { which: &'static str, index: usize },
}

/// Paired predicted and true scores. Construction enforces equal,
/// nonzero lengths and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePairs {
    predictions: Vec<f64>,
    truths: Vec<f64>,
}

impl ScorePairs {
    pub fn new(predictions: Vec<f64>, truths: Vec<f64>) -> Result<Self, MetricError> {
        if predictions.len() != truths.len() {
            return Err(MetricError::LengthMismatch {
                predictions: predictions.len(),
                truths: truths.len(),
            });
        }
        if predictions.is_empty() {
            return Err(MetricError::Empty);
        }
        for (index, v) in predictions.iter().enumerate() {
            if !v.is_finite() {
                return Err(MetricError::NonFinite {
                    which: "predictions",
                    index,
                });
            }
        }
        for (index, v) in truths.iter().enumerate() {
            if !v.is_finite() {
                return Err(MetricError::NonFinite {
                    which: "truths",
                    index,
                });
            }
        }
        Ok(Self {
            predictions,
            truths,
        })
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }

    pub fn truths(&self) -> &[f64] {
        &self.truths
    }
}

/// Mean absolute difference between predictions and truths.
pub fn mae(pairs: &ScorePairs) -> f64 {
    let m = pairs.len() as f64;
    pairs
        .predictions
        .iter()
        .zip(&pairs.truths)
        .map(|(p, t)| abs(p - t))
        .sum::<f64>()
        / m
}

/// Outcome of a Kendall correlation: a value in [-1, 1], or `Degenerate`
/// when a side has no rank variation (zero tie-corrected denominator),
/// in which case no number is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TauOutcome {
    Value(f64),
    Degenerate,
}

impl TauOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            TauOutcome::Value(v) => Some(*v),
            TauOutcome::Degenerate => None,
        }
    }
}

/// Tie-corrected Kendall rank correlation (the tau-b variant):
///
/// `tau_b = (C - D) / sqrt((n0 - n1) (n0 - n2))`
///
/// with `C`/`D` the concordant/discordant pair counts, `n0 = m(m-1)/2`,
/// and `n1`/`n2` the tied-pair counts within predictions and truths.
/// Without ties this reduces to `(C - D) / n0`.
pub fn kendall_tau(pairs: &ScorePairs) -> Result<TauOutcome, MetricError> {
    if pairs.len() < 2 {
        return Err(MetricError::TooFew {
            needed: 2,
            got: pairs.len(),
        });
    }
    let counts = PairCounts::count(&pairs.predictions, &pairs.truths);
    Ok(counts.tau_b())
}

/// Concordant/discordant/tie pair counts for two equal-length score lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub total: u64,
    pub pred_ties: u64,
    pub truth_ties: u64,
}

impl PairCounts {
    /// Fenwick-tree pair counting. Items are processed in ascending
    /// prediction order; within a tied-prediction group all queries run
    /// before any insert, so tied-prediction pairs count as neither
    /// concordant nor discordant.
    pub fn count(predictions: &[f64], truths: &[f64]) -> Self {
        let n = predictions.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            predictions[a]
                .total_cmp(&predictions[b])
                .then(truths[a].total_cmp(&truths[b]))
        });

        // Dense ranks of truth values, 1-based for the Fenwick tree.
        let mut truth_sorted: Vec<usize> = (0..n).collect();
        truth_sorted.sort_by(|&a, &b| truths[a].total_cmp(&truths[b]));
        let mut truth_rank = vec![0usize; n];
        let mut distinct = 0usize;
        for (i, &idx) in truth_sorted.iter().enumerate() {
            if i == 0 || truths[idx] != truths[truth_sorted[i - 1]] {
                distinct += 1;
            }
            truth_rank[idx] = distinct;
        }

        let mut tree = Fenwick::new(distinct);
        let (mut concordant, mut discordant) = (0u64, 0u64);
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && predictions[order[j]] == predictions[order[i]] {
                j += 1;
            }
            let inserted = i as u64;
            for &idx in &order[i..j] {
                let r = truth_rank[idx];
                let below = tree.prefix_sum(r - 1);
                let at_or_below = tree.prefix_sum(r);
                concordant += below;
                discordant += inserted - at_or_below;
            }
            for &idx in &order[i..j] {
                tree.add(truth_rank[idx], 1);
            }
            i = j;
        }

        Self {
            concordant,
            discordant,
            total: (n as u64) * (n as u64 - 1) / 2,
            pred_ties: tie_pairs(predictions),
            truth_ties: tie_pairs(truths),
        }
    }

    pub fn tau_b(&self) -> TauOutcome {
        let d1 = self.total - self.pred_ties;
        let d2 = self.total - self.truth_ties;
        if d1 == 0 || d2 == 0 {
            return TauOutcome::Degenerate;
        }
        let num = self.concordant as f64 - self.discordant as f64;
        // One sqrt of the product, so tie-free data reduces exactly to
        // (C - D) / n0.
        TauOutcome::Value(num / sqrt(d1 as f64 * d2 as f64))
    }
}

fn tie_pairs(values: &[f64]) -> u64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0u64;
    let mut run = 1u64;
    for i in 1..sorted.len() {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties + run * (run - 1) / 2
}

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(size: usize) -> Self {
        Self {
            tree: vec![0; size + 1],
        }
    }

    fn add(&mut self, mut pos: usize, delta: u64) {
        while pos < self.tree.len() {
            self.tree[pos] += delta;
            pos += pos & pos.wrapping_neg();
        }
    }

    fn prefix_sum(&self, mut pos: usize) -> u64 {
        let mut sum = 0;
        while pos > 0 {
            sum += self.tree[pos];
            pos -= pos & pos.wrapping_neg();
        }
        sum
    }
}

/// Histogram and CDF of gold-rank distances between the members of each
/// discordant pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscordanceProfile {
    /// gold-rank distance (>= 1) -> number of discordant pairs.
    pub histogram: BTreeMap<u64, u64>,
    /// (distance, cumulative fraction); nondecreasing, ends at 1 when any
    /// discordant pair exists.
    pub cdf: Vec<(u64, f64)>,
}

impl DiscordanceProfile {
    pub fn discordant_pairs(&self) -> u64 {
        self.histogram.values().sum()
    }

    pub fn to_csv(&self) -> String {
        use core::fmt::Write as _;
        let mut s = String::from("distance,count,cumulative_fraction\n");
        let mut cdf = self.cdf.iter();
        for (&d, &c) in &self.histogram {
            let frac = cdf.next().map(|(_, f)| *f).unwrap_or(1.0);
            let _ = writeln!(s, "{d},{c},{frac}");
        }
        s
    }
}

/// Gold ranking positions: ascending truth value, ties broken by index
/// order (so the ranking is always a permutation).
fn gold_ranks(truths: &[f64]) -> Vec<u64> {
    let n = truths.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| truths[a].total_cmp(&truths[b]).then(a.cmp(&b)));
    let mut rank = vec![0u64; n];
    for (pos, &idx) in order.iter().enumerate() {
        rank[idx] = pos as u64 + 1;
    }
    rank
}

/// Profiles every discordant pair by the distance between its members in
/// the gold ranking. A pair is discordant when the strict prediction
/// order opposes the gold order; tied predictions are never discordant.
pub fn discordance_profile(pairs: &ScorePairs) -> Result<DiscordanceProfile, MetricError> {
    if pairs.len() < 2 {
        return Err(MetricError::TooFew {
            needed: 2,
            got: pairs.len(),
        });
    }
    let rank = gold_ranks(&pairs.truths);
    let preds = &pairs.predictions;
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total = 0u64;
    for i in 0..preds.len() {
        for j in (i + 1)..preds.len() {
            let pred_cmp = preds[i].total_cmp(&preds[j]);
            if pred_cmp == core::cmp::Ordering::Equal {
                continue;
            }
            let gold_up = rank[i] < rank[j];
            let pred_up = pred_cmp == core::cmp::Ordering::Less;
            if gold_up != pred_up {
                let distance = rank[i].abs_diff(rank[j]);
                *histogram.entry(distance).or_insert(0) += 1;
                total += 1;
            }
        }
    }
    let mut cdf = Vec::with_capacity(histogram.len());
    let mut cumulative = 0u64;
    for (&d, &c) in &histogram {
        cumulative += c;
        cdf.push((d, cumulative as f64 / total as f64));
    }
    Ok(DiscordanceProfile { histogram, cdf })
}
