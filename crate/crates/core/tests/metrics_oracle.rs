//! Independent O(n^2) pair-counting oracle for the Kendall
//! implementation. The library counts pairs with a Fenwick tree; the
//! oracle here compares every pair directly, so agreement checks the
//! whole algorithm, ties included.

use perfsearch_core::metrics::{
    discordance_profile, kendall_tau, mae, PairCounts, ScorePairs, TauOutcome,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Brute-force tau-b: direct pair comparison, same final formula.
fn brute_force_tau(x: &[f64], y: &[f64]) -> TauOutcome {
    let n = x.len();
    let (mut concordant, mut discordant, mut x_ties, mut y_ties) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    x_ties += 1;
                    y_ties += 1;
                }
                (Equal, _) => x_ties += 1,
                (_, Equal) => y_ties += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let d1 = total - x_ties;
    let d2 = total - y_ties;
    if d1 == 0 || d2 == 0 {
        return TauOutcome::Degenerate;
    }
    TauOutcome::Value((concordant as f64 - discordant as f64) / (d1 as f64 * d2 as f64).sqrt())
}

fn brute_force_counts(x: &[f64], y: &[f64]) -> (u64, u64) {
    let n = x.len();
    let (mut concordant, mut discordant) = (0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if x[i] != x[j] && y[i] != y[j] {
                if (dx > 0.0) == (dy > 0.0) {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    (concordant, discordant)
}

#[test]
fn tau_matches_brute_force_on_random_tie_free_lists() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let preds: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let truths: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let pairs = ScorePairs::new(preds.clone(), truths.clone()).unwrap();
        let fast = kendall_tau(&pairs).unwrap();
        let slow = brute_force_tau(&preds, &truths);
        assert_eq!(fast, slow, "preds {preds:?} truths {truths:?}");
        let counts = PairCounts::count(&preds, &truths);
        let (c, d) = brute_force_counts(&preds, &truths);
        assert_eq!((counts.concordant, counts.discordant), (c, d));
    }
}

#[test]
fn tau_matches_brute_force_with_injected_ties() {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        // Small integer grids force heavy tying on both sides.
        let preds: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        let truths: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        let pairs = ScorePairs::new(preds.clone(), truths.clone()).unwrap();
        let fast = kendall_tau(&pairs).unwrap();
        let slow = brute_force_tau(&preds, &truths);
        assert_eq!(fast, slow, "preds {preds:?} truths {truths:?}");
    }
}

#[test]
fn discordant_counts_agree_with_profile_totals() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    for _ in 0..200 {
        let n = rng.gen_range(2..=30);
        let preds: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        // Tie-free truths, as the profile expects.
        let truths: Vec<f64> = (0..n).map(|i| i as f64 + rng.gen_range(0.0..0.5)).collect();
        let pairs = ScorePairs::new(preds.clone(), truths.clone()).unwrap();
        let profile = discordance_profile(&pairs).unwrap();
        let (_, discordant) = brute_force_counts(&preds, &truths);
        assert_eq!(profile.discordant_pairs(), discordant);
        if let Some(&(_, last)) = profile.cdf.last() {
            assert!((last - 1.0).abs() < 1e-12);
        }
        for window in profile.cdf.windows(2) {
            assert!(window[1].1 >= window[0].1, "cdf must be nondecreasing");
        }
    }
}

proptest! {
    #[test]
    fn mae_is_symmetric_and_shift_invariant(
        values in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..40),
        shift in -50.0f64..50.0,
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let ab = mae(&ScorePairs::new(xs.clone(), ys.clone()).unwrap());
        let ba = mae(&ScorePairs::new(ys.clone(), xs.clone()).unwrap());
        prop_assert!((ab - ba).abs() < 1e-12);
        let xs_shifted: Vec<f64> = xs.iter().map(|v| v + shift).collect();
        let ys_shifted: Vec<f64> = ys.iter().map(|v| v + shift).collect();
        let shifted = mae(&ScorePairs::new(xs_shifted, ys_shifted).unwrap());
        prop_assert!((ab - shifted).abs() < 1e-9);
    }

    #[test]
    fn tau_is_invariant_under_monotone_transforms(
        values in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..30),
    ) {
        let (xs, ys): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
        let base = kendall_tau(&ScorePairs::new(xs.clone(), ys.clone()).unwrap()).unwrap();
        // exp is strictly increasing; scale+shift likewise.
        let xs_t: Vec<f64> = xs.iter().map(|v| (v / 30.0).exp()).collect();
        let ys_t: Vec<f64> = ys.iter().map(|v| 3.0 * v + 11.0).collect();
        let transformed = kendall_tau(&ScorePairs::new(xs_t, ys_t).unwrap()).unwrap();
        match (base, transformed) {
            (TauOutcome::Value(a), TauOutcome::Value(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn tau_extremes_on_sorted_data(
        mut xs in proptest::collection::vec(-1000.0f64..1000.0, 2..40),
    ) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        prop_assume!(xs.len() >= 2);
        let fwd = kendall_tau(&ScorePairs::new(xs.clone(), xs.clone()).unwrap()).unwrap();
        prop_assert_eq!(fwd, TauOutcome::Value(1.0));
        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        let bwd = kendall_tau(&ScorePairs::new(xs.clone(), rev).unwrap()).unwrap();
        prop_assert_eq!(bwd, TauOutcome::Value(-1.0));
    }
}
