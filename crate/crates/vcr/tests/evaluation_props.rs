use proptest::prelude::*;
use vcr::evaluation::{effect_from_probabilities, run_correlation_grid, sign_concordance, GridConfig};
use vcr::report::{write_grid, Header};
use vcr::synthgen::{build_balanced_test_set, DatasetConfig, Feature, FeaturePair};
use vcr::toy_lmm::TrainConfig;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn a_only_model_has_no_b_effect(p_with in 0.0f64..1.0, p_without in 0.0f64..1.0, seed in any::<u64>()) {
        let images = build_balanced_test_set(&DatasetConfig { n_test: 40, ..DatasetConfig::grid(FeaturePair::OneMany, 0.0, seed) }).unwrap().images();
        let probs: Vec<f64> = images.iter().map(|i| if i.has_a { p_with } else { p_without }).collect();
        prop_assert_eq!(effect_from_probabilities(&images, &probs, Feature::B).unwrap().delta, 0.0);
        let da = effect_from_probabilities(&images, &probs, Feature::A).unwrap().delta;
        prop_assert!((da - (p_with - p_without)).abs() < 1e-12);
    }

    #[test]
    fn oracle_scores_are_fully_concordant(effects in prop::collection::vec(prop_oneof![-1.0f64..-1e-6, 1e-6f64..1.0], 1..30)) {
        prop_assert_eq!(sign_concordance(&effects, &effects).unwrap(), 1.0);
    }
}

fn tiny_grid(seed: u64) -> GridConfig {
    GridConfig {
        pairs: vec![FeaturePair::RedGreen],
        rhos: vec![1.0, -1.0],
        replicates: 2,
        n_train: 40,
        n_test: 40,
        base_seed: seed,
        train: TrainConfig { epochs: 2, ..TrainConfig::benchmark() },
        vcr: vcr::ranking::VcrConfig { bootstrap_b: 3, ..Default::default() },
        ..GridConfig::default()
    }
}

#[test]
fn grid_rows_are_counted_and_reproducible() {
    let rows = run_correlation_grid(&tiny_grid(1)).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let dir = tempfile::tempdir().unwrap();
    let header = Header::new(&tiny_grid(1)).unwrap();
    write_grid(&rows, &header, &dir.path().join("a")).unwrap();
    write_grid(&run_correlation_grid(&tiny_grid(1)).unwrap(), &header, &dir.path().join("b")).unwrap();
    for f in ["grid.csv", "grid_summary.json", "grid_scatter.svg"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    assert_ne!(run_correlation_grid(&tiny_grid(2)).unwrap(), rows);
}
