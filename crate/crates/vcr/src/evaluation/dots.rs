//! Dot-intervention study: does pasting marker dots onto test images shift
//! the task score of a model that saw dots correlated with the label?

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::train_replicate;
use super::EvalError;
use crate::image::Image;
use crate::ranking::mean_std;
use crate::rng::{derive_seed, Stream};
use crate::synthgen::{build_balanced_test_set, build_training_set, DatasetConfig, DotIntervention, FeaturePair, Label, LabeledDataset};
use crate::toy_lmm::{ModelConfig, ToyModel, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DotStudyConfig {
    pub pair: FeaturePair,
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of training positives and negatives that receive dots.
    pub dot_rate_positive: f64,
    pub dot_rate_negative: f64,
    pub replicates: usize,
    pub base_seed: u64,
    pub dots: DotIntervention,
    pub train: TrainConfig,
    pub model: ModelConfig,
}

impl Default for DotStudyConfig {
    fn default() -> Self {
        Self {
            pair: FeaturePair::RedGreen,
            n_train: 400,
            n_test: 200,
            dot_rate_positive: 0.8,
            dot_rate_negative: 0.2,
            replicates: 5,
            base_seed: 0,
            dots: DotIntervention::default(),
            train: TrainConfig::benchmark(),
            model: ModelConfig::default(),
        }
    }
}

impl DotStudyConfig {
    /// Same setup with dots independent of the label.
    pub fn uncorrelated(&self) -> Self {
        Self {
            dot_rate_positive: 0.5,
            dot_rate_negative: 0.5,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DotStudyResult {
    /// Per replicate: mean positive-class score on dotted minus clean test images.
    pub deltas: Vec<f64>,
    /// Per replicate: mean positive-class score on clean test images.
    pub clean_means: Vec<f64>,
    pub mean_delta: f64,
    /// Standard deviation of `clean_means` across replicates.
    pub clean_spread: f64,
}

/// Dots go on exactly `round(rate · n)` items of each label, chosen by a
/// seeded permutation. Item `i` is dotted with seed `(key, i)`.
fn add_dots(data: &LabeledDataset, cfg: &DotStudyConfig, key: u64) -> Result<LabeledDataset, EvalError> {
    let mut out = data.clone();
    let mut rng = Stream::keyed(key, &[0xD0]);
    for (label, rate) in [(Label::Positive, cfg.dot_rate_positive), (Label::Negative, cfg.dot_rate_negative)] {
        let mut idx: Vec<usize> = (0..out.len()).filter(|&i| out.items[i].label == label).collect();
        rng.shuffle(&mut idx);
        let k = (rate.clamp(0.0, 1.0) * idx.len() as f64).round() as usize;
        for &i in &idx[..k] {
            out.items[i].image = cfg.dots.apply(&out.items[i].image, derive_seed(key, &[i as u64]))?;
        }
    }
    Ok(out)
}

fn mean_positive_score(model: &ToyModel, images: &[Image]) -> f64 {
    images.iter().map(|i| model.task_score(i, Label::Positive)).sum::<f64>() / images.len() as f64
}

/// Training data carries no feature signal (ρ = 0 for both features), so
/// dots are the only label-correlated cue when the rates differ.
pub fn run_dot_study(cfg: &DotStudyConfig) -> Result<DotStudyResult, EvalError> {
    if cfg.replicates < 2 {
        return Err(EvalError::NoReplicates);
    }
    let dcfg = DatasetConfig {
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        ..DatasetConfig::grid(cfg.pair, 0.0, cfg.base_seed)
    };
    let train = add_dots(&build_training_set(&dcfg)?, cfg, derive_seed(cfg.base_seed, &[0xD1]))?;
    let clean = build_balanced_test_set(&dcfg)?.images();
    let dotted = clean
        .iter()
        .enumerate()
        .map(|(i, img)| cfg.dots.apply(img, derive_seed(cfg.base_seed, &[0xD2, i as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    let per_rep: Vec<(f64, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64), EvalError> {
            let (model, _) = train_replicate(&train, derive_seed(cfg.base_seed, &[0xD3, r as u64]), &cfg.model, &cfg.train)?;
            let c = mean_positive_score(&model, &clean);
            Ok((mean_positive_score(&model, &dotted) - c, c))
        })
        .collect::<Result<_, _>>()?;
    let (deltas, clean_means): (Vec<f64>, Vec<f64>) = per_rep.into_iter().unzip();
    let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    Ok(DotStudyResult {
        mean_delta,
        clean_spread: mean_std(&clean_means).1,
        deltas,
        clean_means,
    })
}
