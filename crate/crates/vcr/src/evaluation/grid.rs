//! Correlation-grid benchmark: pairs × correlation levels × replicates.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{correlational_baseline, effect_from_probabilities, fisher_mean, pearson, EvalError};
use crate::concept_oracle::{concept_label_matrix, ConceptLabelMatrix, ConceptVocabulary};
use crate::image::Image;
use crate::ranking::{point_sensitivities_with_labels, VcrConfig};
use crate::rng::{derive_seed, Stream};
use crate::synthgen::{build_balanced_test_set, build_training_set, DatasetConfig, Feature, FeaturePair, LabeledDataset};
use crate::toy_lmm::{fine_tune, ModelConfig, ToyModel, TrainConfig};

pub const GRID_RHOS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub pairs: Vec<FeaturePair>,
    pub rhos: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub vcr: VcrConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            pairs: FeaturePair::ALL.to_vec(),
            rhos: GRID_RHOS.to_vec(),
            replicates: 5,
            base_seed: 0,
            n_train: 400,
            n_test: 200,
            train: TrainConfig::benchmark(),
            model: ModelConfig::default(),
            vcr: VcrConfig::default(),
        }
    }
}

/// One (condition, feature) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub pair_id: FeaturePair,
    pub rho_a: f64,
    pub replicate: usize,
    pub feature: Feature,
    pub concept: String,
    pub vcr_psi: f64,
    pub clip_r: f64,
    pub clip_flagged: bool,
    pub interventional_delta: f64,
    pub train_seed: u64,
}

/// Scores for features A and B of a trained model: ψ on `probe`,
/// correlational r on `probe`, and interventional deltas on `balanced`.
pub(crate) struct PairScores {
    pub psi: [f64; 2],
    pub clip_r: [f64; 2],
    pub clip_flagged: [bool; 2],
    pub delta: [f64; 2],
}

/// The probe with its two canonical concept-label columns.
pub(crate) struct Probe {
    pub images: Vec<Image>,
    pub y: ConceptLabelMatrix,
}

impl Probe {
    pub fn new(pair: FeaturePair, images: Vec<Image>) -> Result<Self, EvalError> {
        let (a, b) = pair.concept_names();
        let vocab = ConceptVocabulary::from_names([a, b])?;
        let y = concept_label_matrix(&images, &vocab)?;
        Ok(Self { images, y })
    }
}

pub(crate) fn score_pair(model: &ToyModel, probe: &Probe, balanced: &[Image], vcr: &VcrConfig) -> Result<PairScores, EvalError> {
    let psi = point_sensitivities_with_labels(model, &probe.images, &probe.y.values, vcr)?;
    let y = &probe.y;
    let probe = &probe.images[..];
    let p_probe: Vec<f64> = probe.iter().map(|i| model.class_probability(i)).collect();
    let base = correlational_baseline(y, &p_probe)?;
    let p_bal: Vec<f64> = balanced.iter().map(|i| model.class_probability(i)).collect();
    let da = effect_from_probabilities(balanced, &p_bal, Feature::A)?;
    let db = effect_from_probabilities(balanced, &p_bal, Feature::B)?;
    Ok(PairScores {
        psi: [psi[0], psi[1]],
        clip_r: [base[0].r, base[1].r],
        clip_flagged: [base[0].flagged, base[1].flagged],
        delta: [da.delta, db.delta],
    })
}

/// Trains a fresh model on a bootstrap resample of `train`.
pub(crate) fn train_replicate(train: &LabeledDataset, cond_seed: u64, model_cfg: &ModelConfig, train_cfg: &TrainConfig) -> Result<(ToyModel, u64), EvalError> {
    let boot = train.resample(&mut Stream::keyed(cond_seed, &[1]));
    let model_seed = derive_seed(cond_seed, &[2]);
    let init = ToyModel::init_with(model_seed, model_cfg)?;
    let cfg = TrainConfig {
        seed: derive_seed(cond_seed, &[3]),
        ..*train_cfg
    };
    Ok((fine_tune(&init, &boot, &cfg)?, model_seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCondition {
    pub pair: FeaturePair,
    pub rho_a: f64,
    pub replicate: usize,
}

impl GridCondition {
    pub fn label(&self) -> String {
        format!("{} rho_a={} replicate={}", self.pair, self.rho_a, self.replicate)
    }
}

pub fn grid_conditions(cfg: &GridConfig) -> Vec<GridCondition> {
    let mut out = Vec::new();
    for &pair in &cfg.pairs {
        for &rho_a in &cfg.rhos {
            for replicate in 0..cfg.replicates {
                out.push(GridCondition { pair, rho_a, replicate });
            }
        }
    }
    out
}

fn dataset_config(cfg: &GridConfig, pair: FeaturePair, rho_a: f64) -> DatasetConfig {
    DatasetConfig {
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        ..DatasetConfig::grid(pair, rho_a, derive_seed(cfg.base_seed, &[pair.index()]))
    }
}

fn run_condition(cfg: &GridConfig, c: &GridCondition, tests: &BTreeMap<FeaturePair, Probe>) -> Result<Vec<ExperimentRow>, EvalError> {
    let dcfg = dataset_config(cfg, c.pair, c.rho_a);
    let train = build_training_set(&dcfg)?;
    let cond_seed = derive_seed(cfg.base_seed, &[c.pair.index(), c.rho_a.to_bits(), c.replicate as u64]);
    let (model, model_seed) = train_replicate(&train, cond_seed, &cfg.model, &cfg.train)?;
    let test = &tests[&c.pair];
    let s = score_pair(&model, test, &test.images, &cfg.vcr)?;
    let (na, nb) = c.pair.concept_names();
    Ok([(Feature::A, na), (Feature::B, nb)]
        .into_iter()
        .enumerate()
        .map(|(i, (feature, concept))| ExperimentRow {
            pair_id: c.pair,
            rho_a: c.rho_a,
            replicate: c.replicate,
            feature,
            concept: concept.to_string(),
            vcr_psi: s.psi[i],
            clip_r: s.clip_r[i],
            clip_flagged: s.clip_flagged[i],
            interventional_delta: s.delta[i],
            train_seed: model_seed,
        })
        .collect())
}

/// Per-condition outcomes in canonical order, for callers that need to
/// report partial progress.
pub fn run_grid_conditions(cfg: &GridConfig) -> Result<Vec<(GridCondition, Result<Vec<ExperimentRow>, EvalError>)>, EvalError> {
    if cfg.replicates == 0 {
        return Err(EvalError::NoReplicates);
    }
    let mut tests = BTreeMap::new();
    for &pair in &cfg.pairs {
        // The balanced test set depends on the pair only.
        tests.insert(pair, Probe::new(pair, build_balanced_test_set(&dataset_config(cfg, pair, 0.0))?.images())?);
    }
    let conds = grid_conditions(cfg);
    Ok(conds.par_iter().map(|c| (*c, run_condition(cfg, c, &tests))).collect())
}

/// Emits `pairs × rhos × replicates × 2` rows sorted by pair, ρ,
/// replicate and feature.
pub fn run_correlation_grid(cfg: &GridConfig) -> Result<Vec<ExperimentRow>, EvalError> {
    let mut rows = Vec::new();
    for (c, r) in run_grid_conditions(cfg)? {
        rows.extend(r.map_err(|e| e.in_condition(c.label()))?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [ExperimentRow]) {
    rows.sort_by(|a, b| {
        a.pair_id
            .index()
            .cmp(&b.pair_id.index())
            .then(a.rho_a.total_cmp(&b.rho_a))
            .then(a.replicate.cmp(&b.replicate))
            .then(a.feature.cmp(&b.feature))
    });
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n_rows: usize,
    /// Pearson r between ψ and delta over all rows.
    pub pooled_r: f64,
    pub per_pair_r: BTreeMap<String, f64>,
    /// Fisher z-average of the per-pair r values.
    pub fisher_mean_r: f64,
    /// Pearson r between the correlational score and delta over all rows.
    pub baseline_pooled_r: f64,
}

fn r_or_zero(x: &[f64], y: &[f64]) -> f64 {
    pearson(x, y).unwrap_or(0.0)
}

pub fn summarize_grid(rows: &[ExperimentRow]) -> GridSummary {
    let psi: Vec<f64> = rows.iter().map(|r| r.vcr_psi).collect();
    let clip: Vec<f64> = rows.iter().map(|r| r.clip_r).collect();
    let delta: Vec<f64> = rows.iter().map(|r| r.interventional_delta).collect();
    let mut per_pair = BTreeMap::new();
    for pair in FeaturePair::ALL {
        let sel: Vec<&ExperimentRow> = rows.iter().filter(|r| r.pair_id == pair).collect();
        if sel.len() >= 2 {
            let x: Vec<f64> = sel.iter().map(|r| r.vcr_psi).collect();
            let y: Vec<f64> = sel.iter().map(|r| r.interventional_delta).collect();
            per_pair.insert(pair.id().to_string(), r_or_zero(&x, &y));
        }
    }
    let rs: Vec<f64> = per_pair.values().copied().collect();
    GridSummary {
        n_rows: rows.len(),
        pooled_r: r_or_zero(&psi, &delta),
        fisher_mean_r: fisher_mean(&rs),
        per_pair_r: per_pair,
        baseline_pooled_r: r_or_zero(&clip, &delta),
    }
}
