//! Shifted-correlation benchmark: a reliable feature that stays predictive
//! and a spurious one whose correlation with the label flips between the
//! training set and the probe.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{score_pair, train_replicate, Probe};
use super::{designated_concordance, DesignatedConcordance, EvalError};
use crate::ranking::VcrConfig;
use crate::rng::derive_seed;
use crate::image::Image;
use crate::synthgen::{build_adversarial_sets_sized, build_balanced_test_set, DatasetConfig, Feature, FeaturePair, LabeledDataset, SynthError};
use crate::toy_lmm::{ModelConfig, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversarialConfig {
    pub pairs: Vec<FeaturePair>,
    pub replicates: usize,
    pub base_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub vcr: VcrConfig,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        Self {
            pairs: FeaturePair::NON_POSITIONAL.to_vec(),
            replicates: 10,
            base_seed: 0,
            n_train: 400,
            n_test: 200,
            train: TrainConfig::benchmark(),
            model: ModelConfig::default(),
            vcr: VcrConfig::default(),
        }
    }
}

/// Feature A is reliable, feature B spurious.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialRow {
    pub pair_id: FeaturePair,
    pub replicate: usize,
    pub feature: Feature,
    pub concept: String,
    pub reliable: bool,
    pub vcr_psi: f64,
    pub clip_r: f64,
    pub clip_flagged: bool,
    /// Measured on the pair's balanced test set.
    pub interventional_delta: f64,
    pub train_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialSummary {
    pub n_conditions: usize,
    /// Sign agreement with the measured interventional delta.
    pub vcr: DesignatedConcordance,
    pub baseline: DesignatedConcordance,
    /// Sign agreement with the designed direction of each feature:
    /// positive for the reliable one, negative for the spurious one.
    pub vcr_designed: DesignatedConcordance,
    pub baseline_designed: DesignatedConcordance,
    /// Fraction of conditions whose measured delta has the designed sign.
    pub reliable_positive_fraction: f64,
    pub spurious_negative_fraction: f64,
}

/// Data shared by every replicate of one pair.
struct PairData {
    train: LabeledDataset,
    probe: Probe,
    balanced: Vec<Image>,
}

fn pair_data(cfg: &AdversarialConfig, pair: FeaturePair) -> Result<PairData, EvalError> {
    let (train, probe) = build_adversarial_sets_sized(pair, cfg.base_seed, cfg.n_train, cfg.n_test)?;
    let balanced = build_balanced_test_set(&DatasetConfig {
        n_test: cfg.n_test,
        ..DatasetConfig::grid(pair, 0.0, derive_seed(cfg.base_seed, &[pair.index()]))
    })?;
    Ok(PairData {
        train,
        probe: Probe::new(pair, probe.images())?,
        balanced: balanced.images(),
    })
}

fn run_one(cfg: &AdversarialConfig, pair: FeaturePair, data: &PairData, replicate: usize) -> Result<Vec<AdversarialRow>, EvalError> {
    let cond_seed = derive_seed(cfg.base_seed, &[0xADE, pair.index(), replicate as u64]);
    let (model, model_seed) = train_replicate(&data.train, cond_seed, &cfg.model, &cfg.train)?;
    let s = score_pair(&model, &data.probe, &data.balanced, &cfg.vcr)?;
    let (na, nb) = pair.concept_names();
    Ok([(Feature::A, na), (Feature::B, nb)]
        .into_iter()
        .enumerate()
        .map(|(i, (feature, concept))| AdversarialRow {
            pair_id: pair,
            replicate,
            feature,
            concept: concept.to_string(),
            reliable: feature == Feature::A,
            vcr_psi: s.psi[i],
            clip_r: s.clip_r[i],
            clip_flagged: s.clip_flagged[i],
            interventional_delta: s.delta[i],
            train_seed: model_seed,
        })
        .collect())
}

/// Rows sorted by pair, replicate and feature.
pub fn run_adversarial_benchmark(cfg: &AdversarialConfig) -> Result<Vec<AdversarialRow>, EvalError> {
    if cfg.replicates == 0 {
        return Err(EvalError::NoReplicates);
    }
    if let Some(&p) = cfg.pairs.iter().find(|p| p.is_positional()) {
        return Err(SynthError::PositionalPair(p).into());
    }
    let mut data = BTreeMap::new();
    for &p in &cfg.pairs {
        data.insert(p, pair_data(cfg, p)?);
    }
    let conds: Vec<(FeaturePair, usize)> = cfg.pairs.iter().flat_map(|&p| (0..cfg.replicates).map(move |r| (p, r))).collect();
    let results: Vec<_> = conds
        .par_iter()
        .map(|&(p, r)| run_one(cfg, p, &data[&p], r).map_err(|e| e.in_condition(format!("{p} replicate={r}"))))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        a.pair_id
            .index()
            .cmp(&b.pair_id.index())
            .then(a.replicate.cmp(&b.replicate))
            .then(a.feature.cmp(&b.feature))
    });
    Ok(rows)
}

pub fn summarize_adversarial(rows: &[AdversarialRow]) -> Result<AdversarialSummary, EvalError> {
    let psi: Vec<f64> = rows.iter().map(|r| r.vcr_psi).collect();
    let clip: Vec<f64> = rows.iter().map(|r| r.clip_r).collect();
    let delta: Vec<f64> = rows.iter().map(|r| r.interventional_delta).collect();
    let reliable: Vec<bool> = rows.iter().map(|r| r.reliable).collect();
    let designed: Vec<f64> = reliable.iter().map(|&r| if r { 1.0 } else { -1.0 }).collect();
    let m = designated_concordance(&delta, &designed, &reliable)?;
    Ok(AdversarialSummary {
        n_conditions: rows.len() / 2,
        vcr: designated_concordance(&psi, &delta, &reliable)?,
        baseline: designated_concordance(&clip, &delta, &reliable)?,
        vcr_designed: designated_concordance(&psi, &designed, &reliable)?,
        baseline_designed: designated_concordance(&clip, &designed, &reliable)?,
        reliable_positive_fraction: m.reliable,
        spurious_negative_fraction: m.spurious,
    })
}
