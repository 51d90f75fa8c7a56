//! Correlation-controlled training sets, balanced test sets and the
//! adversarial shifted pair.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::render::render_feature_image;
use super::{FeaturePair, SynthError};
use crate::image::Image;
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GridTrain,
    GridTest,
    AdversarialTrain,
    AdversarialTest,
    Intervention,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledItem {
    pub image: Image,
    pub label: Label,
}

#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub items: Vec<LabeledItem>,
    pub pair: FeaturePair,
    pub provenance: Provenance,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn images(&self) -> Vec<Image> {
        self.items.iter().map(|it| it.image.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|it| it.label).collect()
    }

    /// Number of items with the given label whose flags satisfy `pred`.
    pub fn count(&self, label: Label, pred: impl Fn(&Image) -> bool) -> usize {
        self.items
            .iter()
            .filter(|it| it.label == label && pred(&it.image))
            .count()
    }

    /// Bootstrap copy: `len()` items drawn with replacement.
    pub fn resample(&self, rng: &mut Stream) -> LabeledDataset {
        let items = rng
            .resample(self.len(), self.len())
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect();
        LabeledDataset {
            items,
            pair: self.pair,
            provenance: self.provenance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub pair: FeaturePair,
    pub n_train: usize,
    pub n_test: usize,
    pub rho_a: f64,
    pub rho_b: f64,
    pub base_seed: u64,
    pub test_seed_offset: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            pair: FeaturePair::RedGreen,
            n_train: 400,
            n_test: 200,
            rho_a: 0.0,
            rho_b: 0.0,
            base_seed: 0,
            test_seed_offset: 10_000,
        }
    }
}

impl DatasetConfig {
    /// Grid condition: feature B is anticorrelated with feature A.
    pub fn grid(pair: FeaturePair, rho_a: f64, base_seed: u64) -> Self {
        Self {
            pair,
            rho_a,
            rho_b: -rho_a,
            base_seed,
            ..Self::default()
        }
    }

    fn check_rho(name: &'static str, value: f64) -> Result<(), SynthError> {
        if (-1.0..=1.0).contains(&value) {
            Ok(())
        } else {
            Err(SynthError::RhoOutOfRange { name, value })
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        Self::check_rho("rho_a", self.rho_a)?;
        Self::check_rho("rho_b", self.rho_b)?;
        if self.n_train == 0 || self.n_train % 2 != 0 {
            return Err(SynthError::OddTrainSize(self.n_train));
        }
        if self.n_test == 0 || self.n_test % 4 != 0 {
            return Err(SynthError::TestSizeNotDivisible(self.n_test));
        }
        if self.n_train as u64 > self.test_seed_offset {
            return Err(SynthError::SeedOverlap {
                n_train: self.n_train,
                offset: self.test_seed_offset,
            });
        }
        Ok(())
    }
}

// A tiny tolerance keeps products such as 100 * 1.5 from flooring to 149
// when rho carries representation error.
fn floor_count(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

/// Positive-labeled images carrying a feature with correlation `rho`.
pub fn feature_count_positive(n_pos: usize, rho: f64) -> usize {
    floor_count(n_pos as f64 / 2.0 * (rho + 1.0))
}

/// Negative-labeled images carrying a feature with correlation `rho`.
pub fn feature_count_negative(n_neg: usize, rho: f64) -> usize {
    floor_count(n_neg as f64 / 2.0 * (1.0 - (rho + 1.0) / 2.0))
}

/// Flags for a group of `n` items of which exactly `k` carry the feature,
/// chosen by a seeded permutation.
fn choose_flags(n: usize, k: usize, rng: &mut Stream) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut flags = vec![false; n];
    for &i in order.iter().take(k) {
        flags[i] = true;
    }
    flags
}

/// Items laid out as `n_pos` positives followed by `n_neg` negatives, with
/// the given per-label feature counts and seeds `first_seed + index`.
#[allow(clippy::too_many_arguments)]
fn assemble(
    pair: FeaturePair,
    n_pos: usize,
    n_neg: usize,
    a_counts: (usize, usize),
    b_counts: (usize, usize),
    first_seed: u64,
    flag_key: u64,
    provenance: Provenance,
) -> LabeledDataset {
    let mut a_rng = Stream::keyed(flag_key, &[0xA]);
    let mut b_rng = Stream::keyed(flag_key, &[0xB]);
    let mut a = choose_flags(n_pos, a_counts.0, &mut a_rng);
    a.extend(choose_flags(n_neg, a_counts.1, &mut a_rng));
    let mut b = choose_flags(n_pos, b_counts.0, &mut b_rng);
    b.extend(choose_flags(n_neg, b_counts.1, &mut b_rng));

    let items = (0..n_pos + n_neg)
        .map(|i| {
            let seed = first_seed.wrapping_add(i as u64);
            LabeledItem {
                image: render_feature_image(pair, a[i], b[i], seed),
                label: if i < n_pos { Label::Positive } else { Label::Negative },
            }
        })
        .collect();
    LabeledDataset {
        items,
        pair,
        provenance,
    }
}

pub fn build_training_set(cfg: &DatasetConfig) -> Result<LabeledDataset, SynthError> {
    cfg.validate()?;
    let n_pos = cfg.n_train / 2;
    let n_neg = cfg.n_train - n_pos;
    let a = (
        feature_count_positive(n_pos, cfg.rho_a),
        feature_count_negative(n_neg, cfg.rho_a),
    );
    let b = (
        feature_count_positive(n_pos, cfg.rho_b),
        feature_count_negative(n_neg, cfg.rho_b),
    );
    let key = crate::rng::derive_seed(cfg.base_seed, &[cfg.pair.index(), cfg.rho_a.to_bits(), cfg.rho_b.to_bits()]);
    Ok(assemble(cfg.pair, n_pos, n_neg, a, b, cfg.base_seed, key, Provenance::GridTrain))
}

/// Cell order used by balanced test sets.
pub const CELLS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

/// `n_test / 4` images per `(has_a, has_b)` cell. Within a cell, items
/// alternate positive/negative by index, starting with positive.
pub fn build_balanced_test_set(cfg: &DatasetConfig) -> Result<LabeledDataset, SynthError> {
    cfg.validate()?;
    let per_cell = cfg.n_test / 4;
    let first_seed = cfg.base_seed.wrapping_add(cfg.test_seed_offset);
    let mut items = Vec::with_capacity(cfg.n_test);
    for (c, &(has_a, has_b)) in CELLS.iter().enumerate() {
        for j in 0..per_cell {
            let seed = first_seed.wrapping_add((c * per_cell + j) as u64);
            items.push(LabeledItem {
                image: render_feature_image(cfg.pair, has_a, has_b, seed),
                label: if j % 2 == 0 { Label::Positive } else { Label::Negative },
            });
        }
    }
    Ok(LabeledDataset {
        items,
        pair: cfg.pair,
        provenance: Provenance::GridTest,
    })
}

/// Shifted train/probe pair for a non-positional feature pair.
///
/// Train (400): A in every positive and no negative; B in 10% of positives
/// and 90% of negatives. Test (200): A still perfectly predictive; B in 80%
/// of positives and 20% of negatives.
pub fn build_adversarial_sets(pair: FeaturePair, base_seed: u64) -> Result<(LabeledDataset, LabeledDataset), SynthError> {
    build_adversarial_sets_sized(pair, base_seed, 400, 200)
}

pub fn build_adversarial_sets_sized(
    pair: FeaturePair,
    base_seed: u64,
    n_train: usize,
    n_test: usize,
) -> Result<(LabeledDataset, LabeledDataset), SynthError> {
    if pair.is_positional() {
        return Err(SynthError::PositionalPair(pair));
    }
    if n_train == 0 || n_train % 2 != 0 {
        return Err(SynthError::OddTrainSize(n_train));
    }
    if n_test == 0 || n_test % 2 != 0 {
        return Err(SynthError::TestSizeNotDivisible(n_test));
    }
    let frac = |n: usize, f: f64| floor_count(n as f64 * f);

    let (tp, tn) = (n_train / 2, n_train / 2);
    let key = crate::rng::derive_seed(base_seed, &[pair.index(), 0xAD]);
    let train = assemble(pair, tp, tn, (tp, 0), (frac(tp, 0.1), frac(tn, 0.9)), base_seed, key, Provenance::AdversarialTrain);

    let (sp, sn) = (n_test / 2, n_test / 2);
    let key = crate::rng::derive_seed(base_seed, &[pair.index(), 0xAE]);
    let test = assemble(
        pair,
        sp,
        sn,
        (sp, 0),
        (frac(sp, 0.8), frac(sn, 0.2)),
        base_seed.wrapping_add(10_000),
        key,
        Provenance::AdversarialTest,
    );
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell_counts(d: &LabeledDataset) -> [usize; 4] {
        let mut c = [0; 4];
        for it in &d.items {
            let idx = CELLS.iter().position(|&f| f == (it.image.has_a, it.image.has_b)).unwrap();
            c[idx] += 1;
        }
        c
    }

    #[test]
    fn count_formula_examples() {
        assert_eq!(feature_count_positive(200, 1.0), 200);
        assert_eq!(feature_count_positive(200, 0.0), 100);
        assert_eq!(feature_count_positive(200, 0.5), 150);
        assert_eq!(feature_count_positive(200, -1.0), 0);
        assert_eq!(feature_count_negative(200, 1.0), 0);
        assert_eq!(feature_count_negative(200, 0.0), 50);
        assert_eq!(feature_count_negative(200, -1.0), 100);
    }

    #[test]
    fn training_set_counts_and_seeds() {
        let cfg = DatasetConfig::grid(FeaturePair::SquareCircle, 0.5, 77);
        let d = build_training_set(&cfg).unwrap();
        assert_eq!(d.len(), 400);
        assert_eq!(d.count(Label::Positive, |_| true), 200);
        assert_eq!(d.count(Label::Positive, |i| i.has_a), 150);
        assert_eq!(d.count(Label::Negative, |i| i.has_a), 25);
        assert_eq!(d.count(Label::Positive, |i| i.has_b), 50);
        assert_eq!(d.count(Label::Negative, |i| i.has_b), 75);
        for (i, it) in d.items.iter().enumerate() {
            assert_eq!(it.image.seed, 77 + i as u64);
        }
    }

    #[test]
    fn rejects_bad_rho() {
        let cfg = DatasetConfig::grid(FeaturePair::RedGreen, 1.5, 0);
        assert!(matches!(build_training_set(&cfg), Err(SynthError::RhoOutOfRange { name: "rho_a", .. })));
    }

    #[test]
    fn balanced_cells() {
        let mut cfg = DatasetConfig::grid(FeaturePair::OneMany, 0.0, 3);
        assert_eq!(cell_counts(&build_balanced_test_set(&cfg).unwrap()), [50; 4]);
        cfg.n_test = 8;
        let d = build_balanced_test_set(&cfg).unwrap();
        assert_eq!(cell_counts(&d), [2; 4]);
        assert_eq!(d.count(Label::Positive, |_| true), 4);
        cfg.n_test = 10;
        assert!(matches!(build_balanced_test_set(&cfg), Err(SynthError::TestSizeNotDivisible(10))));
    }

    #[test]
    fn train_and_test_seeds_are_disjoint() {
        let cfg = DatasetConfig::grid(FeaturePair::RedGreen, 0.0, 1000);
        let train: std::collections::HashSet<u64> = build_training_set(&cfg).unwrap().items.iter().map(|i| i.image.seed).collect();
        let test = build_balanced_test_set(&cfg).unwrap();
        assert!(test.items.iter().all(|i| !train.contains(&i.image.seed)));
        assert_eq!(test.items[0].image.seed, 11_000);
    }

    #[test]
    fn adversarial_counts() {
        let (train, test) = build_adversarial_sets(FeaturePair::SquareCircle, 9).unwrap();
        assert_eq!(train.count(Label::Positive, |i| i.has_a), 200);
        assert_eq!(train.count(Label::Negative, |i| i.has_a), 0);
        assert_eq!(train.count(Label::Positive, |i| i.has_b), 20);
        assert_eq!(train.count(Label::Negative, |i| i.has_b), 180);
        assert_eq!(test.count(Label::Positive, |i| i.has_a), 100);
        assert_eq!(test.count(Label::Negative, |i| i.has_a), 0);
        assert_eq!(test.count(Label::Positive, |i| i.has_b), 80);
        assert_eq!(test.count(Label::Negative, |i| i.has_b), 20);
        assert!(matches!(
            build_adversarial_sets(FeaturePair::TopBottom, 9),
            Err(SynthError::PositionalPair(FeaturePair::TopBottom))
        ));
    }
}
