//! How audit time scales with vocabulary size and probe size.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::concept_oracle::ConceptVocabulary;
use crate::ranking::{run_vcr, VcrConfig};
use crate::synthgen::{build_balanced_test_set, DatasetConfig, FeaturePair};
use crate::timing::TimingBreakdown;
use crate::toy_lmm::{ModelConfig, ToyModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub n_probe: usize,
    pub k_small: usize,
    pub k_large: usize,
    pub seed: u64,
    pub model: ModelConfig,
    pub vcr: VcrConfig,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            n_probe: 200,
            k_small: 500,
            k_large: 20_000,
            seed: 0,
            model: ModelConfig {
                head_init_scale: 0.1,
                ..ModelConfig::default()
            },
            vcr: VcrConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    /// `n_probe` images, `k_small` concepts.
    pub base: TimingBreakdown,
    /// `n_probe` images, `k_large` concepts.
    pub large_vocab: TimingBreakdown,
    /// `2 · n_probe` images, `k_small` concepts.
    pub double_probe: TimingBreakdown,
}

impl ScalingResult {
    /// Relative growth of total time from the small to the large vocabulary.
    pub fn vocab_growth(&self) -> f64 {
        self.large_vocab.total() / self.base.total() - 1.0
    }

    /// Ratio of derivative plus activation time after doubling the probe.
    pub fn probe_ratio(&self) -> f64 {
        self.double_probe.per_image_work() / self.base.per_image_work()
    }
}

/// Runs the three audits sequentially so their timings do not compete.
pub fn run_scaling_study(cfg: &ScalingConfig) -> Result<ScalingResult, EvalError> {
    let model = ToyModel::init_with(cfg.seed, &cfg.model)?;
    let probe = |n: usize| -> Result<Vec<crate::image::Image>, EvalError> {
        Ok(build_balanced_test_set(&DatasetConfig {
            n_test: n,
            ..DatasetConfig::grid(FeaturePair::RedGreen, 0.0, cfg.seed)
        })?
        .images())
    };
    let small = probe(cfg.n_probe)?;
    let double = probe(2 * cfg.n_probe)?;
    let time = |images: &[crate::image::Image], k: usize| -> Result<TimingBreakdown, EvalError> {
        Ok(run_vcr(&model, images, &ConceptVocabulary::with_size(k), &cfg.vcr)?.timing)
    };
    Ok(ScalingResult {
        base: time(&small, cfg.k_small)?,
        large_vocab: time(&small, cfg.k_large)?,
        double_probe: time(&double, cfg.k_small)?,
    })
}
