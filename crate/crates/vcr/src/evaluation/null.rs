//! Null calibration: distractor-only vocabularies on untrained models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::concept_oracle::ConceptVocabulary;
use crate::ranking::{run_vcr, VcrConfig};
use crate::rng::derive_seed;
use crate::synthgen::{build_balanced_test_set, DatasetConfig, FeaturePair};
use crate::toy_lmm::{ModelConfig, ToyModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NullConfig {
    pub seeds: usize,
    pub k: usize,
    pub n_probe: usize,
    pub base_seed: u64,
    pub model: ModelConfig,
    pub vcr: VcrConfig,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            k: 1000,
            n_probe: 60,
            base_seed: 0,
            model: ModelConfig::default(),
            vcr: VcrConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullResult {
    /// Significant concepts per seed.
    pub significant: Vec<usize>,
    /// Fraction of seeds with at least one significant concept.
    pub family_wise_rate: f64,
}

/// Seed `s` audits a freshly initialized model on a balanced probe drawn
/// from pair `s mod 8`.
pub fn run_null_calibration(cfg: &NullConfig) -> Result<NullResult, EvalError> {
    if cfg.seeds == 0 {
        return Err(EvalError::NoReplicates);
    }
    let vocab = ConceptVocabulary::distractors_only(cfg.k);
    let significant = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| -> Result<usize, EvalError> {
            let seed = derive_seed(cfg.base_seed, &[0x4E11, s as u64]);
            let model = ToyModel::init_with(seed, &cfg.model)?;
            let pair = FeaturePair::ALL[s % FeaturePair::ALL.len()];
            let probe = build_balanced_test_set(&DatasetConfig {
                n_test: cfg.n_probe,
                ..DatasetConfig::grid(pair, 0.0, seed)
            })?
            .images();
            let run = run_vcr(&model, &probe, &vocab, &VcrConfig { seed, ..cfg.vcr })?;
            Ok(run.records.iter().filter(|r| r.significant).count())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let hits = significant.iter().filter(|&&n| n > 0).count();
    Ok(NullResult {
        family_wise_rate: hits as f64 / significant.len() as f64,
        significant,
    })
}
