use proptest::prelude::*;
use vcr::concept_oracle::{concept_embedding, concept_label_matrix, embed_name, ConceptVocabulary};
use vcr::synthgen::{build_balanced_test_set, DatasetConfig, FeaturePair};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_are_unit(name in "[a-z]{1,12}") {
        let (e, _) = embed_name(&name);
        let self_cos: f64 = e.iter().map(|v| v * v).sum();
        prop_assert!((self_cos - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn labels_are_bounded(pair in 0usize..8, seed in any::<u64>(), k in 1usize..60) {
        let cfg = DatasetConfig { n_test: 16, ..DatasetConfig::grid(FeaturePair::ALL[pair], 0.0, seed) };
        let images = build_balanced_test_set(&cfg).unwrap().images();
        let y = concept_label_matrix(&images, &ConceptVocabulary::with_size(16 + k)).unwrap();
        prop_assert!(y.values.iter().all(|v| v.abs() <= 1.0));
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

#[test]
fn canonical_concepts_discriminate_their_feature() {
    let vocab = ConceptVocabulary::default_vocabulary();
    for pair in FeaturePair::ALL {
        let images = build_balanced_test_set(&DatasetConfig::grid(pair, 0.0, 21)).unwrap().images();
        assert_eq!(images.len(), 200);
        let y = concept_label_matrix(&images, &vocab).unwrap();
        let (na, nb) = pair.concept_names();
        for (name, has) in [(na, &(|i: &vcr::image::Image| i.has_a) as &dyn Fn(&vcr::image::Image) -> bool), (nb, &|i: &vcr::image::Image| i.has_b)] {
            let col = y.column(vocab.position(name).unwrap());
            let on: Vec<f64> = images.iter().zip(&col).filter(|(i, _)| has(i)).map(|(_, v)| *v).collect();
            let off: Vec<f64> = images.iter().zip(&col).filter(|(i, _)| !has(i)).map(|(_, v)| *v).collect();
            assert!(mean(&on) > mean(&off), "{pair} {name}: {} vs {}", mean(&on), mean(&off));
        }
        assert!(concept_embedding(na, &vocab).is_ok());
    }
}

/// Welch's t statistic.
fn welch(a: &[f64], b: &[f64]) -> f64 {
    let var = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    };
    (mean(a) - mean(b)) / (var(a) / a.len() as f64 + var(b) / b.len() as f64).sqrt()
}

#[test]
fn distractor_labels_do_not_depend_on_the_class() {
    // |t| > 2.6 is the two-sided 0.01 cut for ~200 df.
    let vocab = ConceptVocabulary::distractors_only(30);
    let mut rejections = 0;
    for pair in FeaturePair::ALL {
        let d = build_balanced_test_set(&DatasetConfig::grid(pair, 0.0, 5)).unwrap();
        let y = concept_label_matrix(&d.images(), &vocab).unwrap();
        let labels = d.labels();
        for k in 0..30 {
            let col = y.column(k);
            let pos: Vec<f64> = col.iter().zip(&labels).filter(|(_, l)| l.is_positive()).map(|(v, _)| *v).collect();
            let neg: Vec<f64> = col.iter().zip(&labels).filter(|(_, l)| !l.is_positive()).map(|(v, _)| *v).collect();
            if welch(&pos, &neg).abs() > 2.6 {
                rejections += 1;
            }
        }
    }
    // 240 tests at 0.01: more than 8 rejections would be implausible under the null.
    assert!(rejections <= 8, "{rejections} of 240");
}
