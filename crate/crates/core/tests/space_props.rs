//! Property tests for search-space sampling, validation, enumeration,
//! and the feature encoding.

use perfsearch_core::bench::SyntheticTask;
use perfsearch_core::space::{encode, AttributeSpec, Cardinality, SearchSpace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;

/// Strategy producing small well-formed spaces, some with per-layer
/// attributes.
fn small_space() -> impl Strategy<Value = SearchSpace> {
    (
        proptest::collection::vec(proptest::collection::btree_set(-4i64..50, 1..4), 1..4),
        proptest::collection::btree_set(0i64..4, 1..3),
        proptest::collection::vec(proptest::collection::btree_set(-4i64..50, 1..3), 0..3),
    )
        .prop_map(|(globals, layer_counts, per_layer)| {
            let mut attrs = Vec::new();
            for (i, choices) in globals.iter().enumerate() {
                let choices: Vec<i64> = choices.iter().copied().collect();
                attrs.push(AttributeSpec::global(&format!("g{i}"), &choices));
            }
            let counts: Vec<i64> = layer_counts.iter().copied().collect();
            attrs.push(AttributeSpec::global("layers", &counts));
            for (i, choices) in per_layer.iter().enumerate() {
                let choices: Vec<i64> = choices.iter().copied().collect();
                attrs.push(AttributeSpec::per_layer(
                    &format!("p{i}"),
                    &choices,
                    "layers",
                ));
            }
            SearchSpace::new(attrs).expect("generated space is well-formed")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_architectures_always_validate(space in small_space(), seed in 0u64..1000) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let arch = space.sample(&mut rng);
            let violations = space.validate(&arch);
            prop_assert!(violations.is_empty(), "violations: {violations:?}");
        }
    }

    #[test]
    fn enumeration_matches_cardinality_and_sampling(space in small_space(), seed in 0u64..1000) {
        let cardinality = match space.cardinality() {
            Cardinality::Exact(n) => n,
            Cardinality::Overflow => unreachable!("small spaces fit u128"),
        };
        prop_assume!(cardinality <= 5000);
        let all = space.enumerate(5000).unwrap();
        prop_assert_eq!(all.len() as u128, cardinality);
        let digests: BTreeSet<u64> = all.iter().map(|a| space.arch_digest(a)).collect();
        prop_assert_eq!(digests.len(), all.len(), "enumeration produced duplicates");
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let sampled = space.sample(&mut rng);
            prop_assert!(digests.contains(&space.arch_digest(&sampled)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn encoding_is_pure_and_json_stable(seed in 0u64..10_000) {
        let space = SearchSpace::default_transformer();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let arch = space.sample(&mut rng);
        let first = encode(&space, &arch).unwrap();
        let second = encode(&space, &arch).unwrap();
        prop_assert_eq!(first, second);
        let json = serde_json::to_string(&arch).unwrap();
        let back = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&arch, &back);
        prop_assert_eq!(first, encode(&space, &back).unwrap());
        prop_assert_eq!(
            space.canonical_string(&arch),
            space.canonical_string(&back)
        );
    }

    #[test]
    fn distinct_architectures_have_distinct_prompts(seed in 0u64..10_000) {
        // Prompt injectivity over the test architecture.
        use perfsearch_core::prompt::{
            default_hyperparameter_glossary, render_prompt, Demonstration, PromptConfig,
        };
        let space = SearchSpace::default_transformer();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = space.sample(&mut rng);
        let b = space.sample(&mut rng);
        prop_assume!(a != b);
        let toggles = perfsearch_core::prompt::ComponentToggles {
            instr2: false,
            ..Default::default()
        };
        let cfg = PromptConfig {
            n_task: 0,
            n_arch: 1,
            component_toggles: toggles,
            ..PromptConfig::default()
        };
        let glossary = default_hyperparameter_glossary();
        let demo = Demonstration {
            arch: space.sample(&mut rng),
            performance: 25.0,
            efficiency: 3.0,
        };
        let demos = [demo];
        let pa = render_prompt(&cfg, &glossary, &[], &demos, &a).unwrap();
        let pb = render_prompt(&cfg, &glossary, &[], &demos, &b).unwrap();
        prop_assert_ne!(pa, pb);
    }
}

#[test]
fn tiny_space_enumeration_is_exhaustive_and_distinct() {
    let space = SyntheticTask::tiny_space();
    let all = space.enumerate(20_000).unwrap();
    let digests: BTreeSet<u64> = all.iter().map(|a| space.arch_digest(a)).collect();
    assert_eq!(digests.len(), all.len());
    let canonical: BTreeSet<String> = all.iter().map(|a| space.canonical_string(a)).collect();
    assert_eq!(canonical.len(), all.len());
}
