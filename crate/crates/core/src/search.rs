//! Constraint-aware evolutionary architecture search with a
//! two-predictor iteration schedule.
//!
//! Each iteration scores the current population with the scheduled
//! predictor (predictor A inside the `[llm_start, llm_end]` window,
//! predictor B outside it), keeps the top `num_parents`, then generates
//! mutation and crossover candidates from the current population.
//! Candidates enter the next population only if their predicted
//! efficiency metric satisfies the constraint; the next population is
//! parents + admitted mutants + admitted crossovers. After the last
//! iteration the population is ranked once more by the predictor active
//! at that iteration and the best constraint-satisfying member is
//! returned.
//!
//! The engine is single-threaded and fully deterministic for a fixed
//! seed and deterministic predictors; all randomness flows through one
//! seeded stream in a fixed draw order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng as _;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::efficiency::{EfficiencyError, EfficiencyEvaluator, EfficiencyReport};
use crate::predictor::{PredictError, Predictor};
use crate::space::{Architecture, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMetric {
    Latency,
    Gflops,
}

impl core::fmt::Display for ConstraintMetric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConstraintMetric::Latency => write!(f, "latency"),
            ConstraintMetric::Gflops => write!(f, "gflops"),
        }
    }
}

/// An upper bound on a predicted efficiency metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub metric: ConstraintMetric,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub num_iterations: u32,
    pub population_size: u32,
    pub num_parents: u32,
    pub num_mutations: u32,
    pub num_crossover: u32,
    pub mutate_prob: f64,
    pub constraint: Constraint,
    /// First iteration (1-based, inclusive) scored by predictor A.
    pub llm_start_iteration: u32,
    /// Last iteration (inclusive) scored by predictor A. A start past
    /// the end denotes an empty window (predictor B everywhere).
    pub llm_end_iteration: u32,
    /// Keep generating candidates until the mutation/crossover quotas
    /// are filled (bounded at 100x attempts) instead of dropping
    /// constraint violators without replacement.
    pub retry_until_quota: bool,
    /// Resample the initial population until every member satisfies the
    /// constraint (bounded at 100x attempts).
    pub filter_init_population: bool,
    /// Drop duplicate architectures when forming the next population.
    pub dedup_population: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            num_iterations: 30,
            population_size: 125,
            num_parents: 25,
            num_mutations: 50,
            num_crossover: 50,
            mutate_prob: 0.3,
            constraint: Constraint {
                metric: ConstraintMetric::Latency,
                threshold: f64::INFINITY,
            },
            llm_start_iteration: 1,
            llm_end_iteration: 30,
            retry_until_quota: false,
            filter_init_population: false,
            dedup_population: false,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.num_iterations == 0 {
            return Err(SearchError::BadConfig("num_iterations must be >= 1".into()));
        }
        if self.population_size == 0 {
            return Err(SearchError::BadConfig(
                "population_size must be >= 1".into(),
            ));
        }
        if self.num_parents == 0 || self.num_parents > self.population_size {
            return Err(SearchError::BadConfig(format!(
                "num_parents must be in 1..=population_size ({})",
                self.population_size
            )));
        }
        if !(0.0..=1.0).contains(&self.mutate_prob) {
            return Err(SearchError::BadConfig(
                "mutate_prob must be in [0, 1]".into(),
            ));
        }
        if !self.constraint.threshold.is_finite() && self.constraint.threshold != f64::INFINITY {
            return Err(SearchError::BadConfig(
                "constraint threshold must be finite".into(),
            ));
        }
        if self.llm_start_iteration <= self.llm_end_iteration {
            if self.llm_start_iteration == 0 {
                return Err(SearchError::BadConfig(
                    "llm_start_iteration is 1-based; 0 is invalid".into(),
                ));
            }
            if self.llm_end_iteration > self.num_iterations {
                return Err(SearchError::BadConfig(format!(
                    "llm_end_iteration {} exceeds num_iterations {}",
                    self.llm_end_iteration, self.num_iterations
                )));
            }
        }
        Ok(())
    }

    /// True when iteration `iter` (1-based) is scored by predictor A.
    pub fn window_contains(&self, iter: u32) -> bool {
        self.llm_start_iteration <= iter && iter <= self.llm_end_iteration
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    BadConfig(String),
    #[error("no candidate satisfies {metric} <= {threshold}")]
    ConstraintInfeasible {
        metric: ConstraintMetric,
        threshold: f64,
    },
    #[error(transparent)]
    Predictor(#[from] PredictError),
    #[error(transparent)]
    Efficiency(#[from] EfficiencyError),
}

/// A failed run, carrying the per-iteration records completed before the
/// failure so callers can persist the partial trace.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error} (after {} completed iterations)", partial.len())]
pub struct SearchFailure {
    pub error: SearchError,
    pub partial: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub predictor_name: String,
    /// Population size scored at the start of this iteration.
    pub population_size: u32,
    /// Scores of the selected parents, best first.
    pub parent_scores: Vec<f64>,
    pub best_predicted: f64,
    pub mutants_admitted: u32,
    pub mutation_rejections: u32,
    pub crossovers_admitted: u32,
    pub crossover_rejections: u32,
    /// Largest predicted constraint value among candidates admitted this
    /// iteration; `None` when nothing was admitted.
    pub worst_admitted_constraint_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best_arch: Architecture,
    pub predicted_score: f64,
    pub efficiency: EfficiencyReport,
    pub search_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub iterations: Vec<IterationRecord>,
    pub outcome: SearchOutcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MutationStats {
    /// Gene positions that tossed the mutation coin.
    pub coin_flips: u64,
    /// Coin flips that came up heads (value redrawn from its choices).
    pub resampled: u64,
}

/// Mutates one architecture: every global gene and every surviving
/// per-layer gene independently redraws from its choices with
/// probability `prob`. When a layer-count gene changes, that attribute's
/// per-layer lists shrink by truncation or grow with fresh uniform
/// draws (grown positions are forced draws, not coin flips).
pub fn mutate_architecture<R: Rng>(
    space: &SearchSpace,
    arch: &Architecture,
    prob: f64,
    rng: &mut R,
) -> (Architecture, MutationStats) {
    let mut stats = MutationStats::default();
    let mut out = arch.clone();
    for a in space.attributes().iter().filter(|a| !a.per_layer) {
        stats.coin_flips += 1;
        if rng.gen::<f64>() < prob {
            stats.resampled += 1;
            out.set_scalar(&a.name, a.choices[rng.gen_range(0..a.choices.len())]);
        }
    }
    for a in space.attributes().iter().filter(|a| a.per_layer) {
        let source = a
            .layer_count_source
            .as_deref()
            .expect("validated per-layer attribute");
        let layers = out.scalar(source).unwrap_or(0).max(0) as usize;
        let old: Vec<i64> = arch.per_layer(&a.name).unwrap_or(&[]).to_vec();
        let mut list = Vec::with_capacity(layers);
        for layer in 0..layers {
            if layer < old.len() {
                stats.coin_flips += 1;
                if rng.gen::<f64>() < prob {
                    stats.resampled += 1;
                    list.push(a.choices[rng.gen_range(0..a.choices.len())]);
                } else {
                    list.push(old[layer]);
                }
            } else {
                list.push(a.choices[rng.gen_range(0..a.choices.len())]);
            }
        }
        out.set_per_layer(&a.name, list);
    }
    (out, stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrossoverStats {
    pub coin_flips: u64,
    /// Coins that picked the first parent as donor.
    pub from_first: u64,
}

/// Uniform crossover: layer-count genes are drawn first (each from
/// either parent with probability 1/2), then every other attribute
/// comes whole from a coin-chosen parent; a per-layer list whose length
/// does not match the child's layer count falls back to the parent
/// whose list does.
pub fn crossover_architectures<R: Rng>(
    space: &SearchSpace,
    first: &Architecture,
    second: &Architecture,
    rng: &mut R,
) -> (Architecture, CrossoverStats) {
    let mut stats = CrossoverStats::default();
    let mut out = Architecture::default();
    let coin = |rng: &mut R, stats: &mut CrossoverStats| {
        stats.coin_flips += 1;
        let first_wins = rng.gen::<f64>() < 0.5;
        if first_wins {
            stats.from_first += 1;
        }
        first_wins
    };

    let sources: Vec<&str> = space
        .attributes()
        .iter()
        .filter_map(|a| a.layer_count_source.as_deref())
        .collect();
    for a in space.attributes().iter().filter(|a| !a.per_layer) {
        if !sources.contains(&a.name.as_str()) {
            continue;
        }
        let donor = if coin(rng, &mut stats) { first } else { second };
        if let Some(v) = donor.scalar(&a.name) {
            out.set_scalar(&a.name, v);
        }
    }
    for a in space.attributes().iter() {
        if !a.per_layer && sources.contains(&a.name.as_str()) {
            continue;
        }
        let first_wins = coin(rng, &mut stats);
        if a.per_layer {
            let layers = a
                .layer_count_source
                .as_deref()
                .and_then(|s| out.scalar(s))
                .unwrap_or(0)
                .max(0) as usize;
            let (preferred, other) = if first_wins {
                (first, second)
            } else {
                (second, first)
            };
            let list = match preferred.per_layer(&a.name) {
                Some(l) if l.len() == layers => l.to_vec(),
                _ => other.per_layer(&a.name).unwrap_or(&[]).to_vec(),
            };
            out.set_per_layer(&a.name, list);
        } else {
            let donor = if first_wins { first } else { second };
            if let Some(v) = donor.scalar(&a.name) {
                out.set_scalar(&a.name, v);
            }
        }
    }
    (out, stats)
}

/// Attempt multiplier before giving up on constraint-satisfying
/// candidates in retry/filter modes.
const RETRY_CAP_FACTOR: u64 = 100;

struct Engine<'a> {
    space: &'a SearchSpace,
    efficiency: &'a EfficiencyEvaluator,
    cfg: &'a SearchConfig,
    rng: ChaCha12Rng,
}

impl<'a> Engine<'a> {
    fn constraint_value(&self, arch: &Architecture) -> Result<f64, SearchError> {
        Ok(match self.cfg.constraint.metric {
            ConstraintMetric::Latency => self.efficiency.latency_ms(arch)?,
            ConstraintMetric::Gflops => self.efficiency.gflops(arch)?,
        })
    }

    fn satisfies_constraint(&self, arch: &Architecture) -> Result<bool, SearchError> {
        Ok(self.constraint_value(arch)? <= self.cfg.constraint.threshold)
    }

    fn infeasible(&self) -> SearchError {
        SearchError::ConstraintInfeasible {
            metric: self.cfg.constraint.metric,
            threshold: self.cfg.constraint.threshold,
        }
    }

    fn initial_population(&mut self) -> Result<Vec<Architecture>, SearchError> {
        let target = self.cfg.population_size as usize;
        let mut popu = Vec::with_capacity(target);
        if !self.cfg.filter_init_population {
            for _ in 0..target {
                popu.push(self.space.sample(&mut self.rng));
            }
            return Ok(popu);
        }
        let cap = RETRY_CAP_FACTOR * self.cfg.population_size as u64;
        let mut attempts = 0;
        while popu.len() < target {
            if attempts >= cap {
                return Err(self.infeasible());
            }
            attempts += 1;
            let arch = self.space.sample(&mut self.rng);
            if self.satisfies_constraint(&arch)? {
                popu.push(arch);
            }
        }
        Ok(popu)
    }

    /// Runs `quota` candidate attempts (or retries until `quota`
    /// admissions when configured), returning admitted candidates, the
    /// rejection count, and the worst constraint value admitted.
    fn offspring<F>(
        &mut self,
        quota: u32,
        mut make: F,
    ) -> Result<(Vec<Architecture>, u32, Option<f64>), SearchError>
    where
        F: FnMut(&mut ChaCha12Rng) -> Architecture,
    {
        let mut admitted = Vec::with_capacity(quota as usize);
        let mut rejections = 0u32;
        let mut worst: Option<f64> = None;
        let cap = RETRY_CAP_FACTOR * u64::from(quota);
        let mut attempts = 0u64;
        loop {
            let done = if self.cfg.retry_until_quota {
                (admitted.len() as u32) >= quota
            } else {
                attempts >= u64::from(quota)
            };
            if done {
                break;
            }
            if self.cfg.retry_until_quota && attempts >= cap {
                return Err(self.infeasible());
            }
            attempts += 1;
            let candidate = make(&mut self.rng);
            let value = self.constraint_value(&candidate)?;
            if value <= self.cfg.constraint.threshold {
                worst = Some(worst.map_or(value, |w| w.max(value)));
                admitted.push(candidate);
            } else {
                rejections += 1;
            }
        }
        Ok((admitted, rejections, worst))
    }
}

/// Ranks scored architectures best-first: descending score, ties broken
/// by canonical serialization.
fn ranked_indices(space: &SearchSpace, popu: &[Architecture], scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..popu.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b].total_cmp(&scores[a]).then_with(|| {
            space
                .canonical_string(&popu[a])
                .cmp(&space.canonical_string(&popu[b]))
        })
    });
    idx
}

/// Runs the full search. Predictor A scores parent selection inside the
/// configured window, predictor B outside it; the architecture returned
/// is the best constraint-satisfying member of the final population
/// under the predictor active at the last iteration.
pub fn run_search(
    space: &SearchSpace,
    predictor_a: &dyn Predictor,
    predictor_b: &dyn Predictor,
    efficiency: &EfficiencyEvaluator,
    cfg: &SearchConfig,
) -> Result<SearchTrace, SearchFailure> {
    let fail = |error: SearchError, partial: &[IterationRecord]| SearchFailure {
        error,
        partial: partial.to_vec(),
    };
    let mut records: Vec<IterationRecord> = Vec::new();
    cfg.validate().map_err(|e| fail(e, &records))?;

    #[cfg(feature = "std")]
    let started = std::time::Instant::now();

    let mut engine = Engine {
        space,
        efficiency,
        cfg,
        rng: ChaCha12Rng::seed_from_u64(cfg.seed),
    };

    let mut popu = engine.initial_population().map_err(|e| fail(e, &records))?;
    for iter in 1..=cfg.num_iterations {
        let predictor: &dyn Predictor = if cfg.window_contains(iter) {
            predictor_a
        } else {
            predictor_b
        };
        let scores = predictor
            .predict_batch(&popu)
            .map_err(|e| fail(e.into(), &records))?;
        let ranking = ranked_indices(space, &popu, &scores);
        let parents: Vec<Architecture> = ranking[..cfg.num_parents as usize]
            .iter()
            .map(|&i| popu[i].clone())
            .collect();
        let parent_scores: Vec<f64> = ranking[..cfg.num_parents as usize]
            .iter()
            .map(|&i| scores[i])
            .collect();
        let best_predicted = parent_scores[0];

        let (mutants, mutation_rejections, worst_mutant) = engine
            .offspring(cfg.num_mutations, |rng| {
                let source = &popu[rng.gen_range(0..popu.len())];
                mutate_architecture(space, source, cfg.mutate_prob, rng).0
            })
            .map_err(|e| fail(e, &records))?;

        let (crossovers, crossover_rejections, worst_crossover) = if popu.len() >= 2 {
            engine
                .offspring(cfg.num_crossover, |rng| {
                    let i = rng.gen_range(0..popu.len());
                    let mut j = rng.gen_range(0..popu.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    crossover_architectures(space, &popu[i], &popu[j], rng).0
                })
                .map_err(|e| fail(e, &records))?
        } else {
            (Vec::new(), 0, None)
        };

        let worst_admitted_constraint_value = match (worst_mutant, worst_crossover) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        records.push(IterationRecord {
            iteration: iter,
            predictor_name: predictor.name().to_string(),
            population_size: popu.len() as u32,
            parent_scores,
            best_predicted,
            mutants_admitted: mutants.len() as u32,
            mutation_rejections,
            crossovers_admitted: crossovers.len() as u32,
            crossover_rejections,
            worst_admitted_constraint_value,
        });

        let mut next = parents;
        next.extend(mutants);
        next.extend(crossovers);
        if cfg.dedup_population {
            let mut seen = alloc::collections::BTreeSet::new();
            next.retain(|a| seen.insert(space.arch_digest(a)));
        }
        popu = next;
    }

    // Final selection: rank the last population with the predictor that
    // was active at the last iteration, then pick the best member that
    // satisfies the constraint.
    let final_predictor: &dyn Predictor = if cfg.window_contains(cfg.num_iterations) {
        predictor_a
    } else {
        predictor_b
    };
    let scores = final_predictor
        .predict_batch(&popu)
        .map_err(|e| fail(e.into(), &records))?;
    let ranking = ranked_indices(space, &popu, &scores);
    let mut best: Option<(usize, f64)> = None;
    for &i in &ranking {
        match engine.satisfies_constraint(&popu[i]) {
            Ok(true) => {
                best = Some((i, scores[i]));
                break;
            }
            Ok(false) => continue,
            Err(e) => return Err(fail(e, &records)),
        }
    }
    let (best_index, predicted_score) = match best {
        Some(found) => found,
        None => return Err(fail(engine.infeasible(), &records)),
    };
    let best_arch = popu[best_index].clone();
    let efficiency_report = efficiency
        .report(&best_arch)
        .map_err(|e| fail(e.into(), &records))?;

    #[cfg(feature = "std")]
    let search_seconds = started.elapsed().as_secs_f64();
    #[cfg(not(feature = "std"))]
    let search_seconds = 0.0;

    Ok(SearchTrace {
        iterations: records,
        outcome: SearchOutcome {
            best_arch,
            predicted_score,
            efficiency: efficiency_report,
            search_seconds,
        },
    })
}
