//! Performance-predictor-driven architecture search for transformer
//! encoder-decoder models.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`space`] — hyperparameter search spaces, sampling, validation,
//!   enumeration, and the fixed 10-value feature encoding.
//! - [`metrics`] — predictor-quality metrics: mean absolute error,
//!   tie-corrected Kendall rank correlation, and the discordant-pair
//!   distance profile.
//! - [`efficiency`] — analytic parameter-count / GFLOPs models and a
//!   pluggable latency model.
//! - [`prompt`] — few-shot prompt construction for LLM-backed predictors
//!   and reply parsing.
//! - [`predictor`] — the `Predictor` abstraction, simulated predictors,
//!   and query-cost accounting.
//! - [`distill`] — distillation datasets and a small MLP regressor
//!   trained on feature encodings.
//! - [`search`] — constraint-aware evolutionary search with a
//!   two-predictor iteration schedule.
//! - [`bench`] — synthetic ground-truth tasks, brute-force oracles,
//!   predictor reports, and search sweeps.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature enables wall-clock timing in search traces and a fast matrix
//! backend for regressor training.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bench;
pub mod distill;
pub mod efficiency;
pub mod metrics;
pub mod predictor;
pub mod prompt;
pub mod search;
pub mod space;

mod mathutil;
