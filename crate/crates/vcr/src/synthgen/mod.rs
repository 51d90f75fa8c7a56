//! Synthetic feature-pair benchmarks.

pub mod augment;
pub mod dataset;
pub mod draw;
pub mod intervention;
pub mod manifest;
pub mod pairs;
pub mod render;

pub use augment::{augment, augment_with, AugmentParams};
pub use dataset::{
    build_adversarial_sets, build_adversarial_sets_sized, build_balanced_test_set, build_training_set,
    feature_count_negative, feature_count_positive, DatasetConfig, Label, LabeledDataset, LabeledItem, Provenance,
    CELLS,
};
pub use intervention::{apply_dot_intervention, DotIntervention};
pub use pairs::{Feature, FeaturePair};
pub use render::render_feature_image;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("{name} = {value} is outside [-1, 1]")]
    RhoOutOfRange { name: &'static str, value: f64 },
    #[error("n_train = {0} must be positive and even")]
    OddTrainSize(usize),
    #[error("n_test = {0} does not split evenly into label or feature cells")]
    TestSizeNotDivisible(usize),
    #[error("n_train = {n_train} exceeds the test seed offset {offset}")]
    SeedOverlap { n_train: usize, offset: u64 },
    #[error("{0} is positional and has no adversarial variant")]
    PositionalPair(FeaturePair),
    #[error("dot radius {0} must be positive and below half the image width")]
    InvalidRadius(f64),
}
