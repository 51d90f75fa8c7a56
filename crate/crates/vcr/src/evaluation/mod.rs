//! Ground-truth oracles and benchmark drivers.

pub mod adversarial;
pub mod dots;
pub mod grid;
pub mod null;
pub mod scaling;

use serde::{Deserialize, Serialize};

pub use adversarial::{run_adversarial_benchmark, summarize_adversarial, AdversarialConfig, AdversarialRow, AdversarialSummary};
pub use dots::{run_dot_study, DotStudyConfig, DotStudyResult};
pub use grid::{run_correlation_grid, summarize_grid, ExperimentRow, GridConfig, GridSummary};
pub use null::{run_null_calibration, NullConfig, NullResult};
pub use scaling::{run_scaling_study, ScalingConfig, ScalingResult};
pub use crate::timing::{timing_breakdown, TimingBreakdown};

use crate::concept_oracle::ConceptLabelMatrix;
use crate::image::Image;
use crate::ranking::{sign, VcrError};
use crate::synthgen::{Feature, LabeledDataset, SynthError};
use crate::toy_lmm::{ModelError, ToyModel};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("lengths differ: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error("feature {0} has an empty present or absent cell")]
    EmptyCell(Feature),
    #[error("too few replicates")]
    NoReplicates,
    #[error("{context}: {source}")]
    Condition { context: String, source: Box<EvalError> },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Vcr(#[from] VcrError),
    #[error(transparent)]
    Oracle(#[from] crate::concept_oracle::OracleError),
}

impl EvalError {
    pub fn in_condition(self, context: impl Into<String>) -> Self {
        EvalError::Condition {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionalEffect {
    pub feature: Feature,
    pub delta: f64,
    pub n_present: usize,
    pub n_absent: usize,
}

fn has(img: &Image, f: Feature) -> bool {
    match f {
        Feature::A => img.has_a,
        Feature::B => img.has_b,
    }
}

/// Mean P(positive) with the feature present minus with it absent.
pub fn effect_from_probabilities(images: &[Image], probs: &[f64], feature: Feature) -> Result<InterventionalEffect, EvalError> {
    if images.len() != probs.len() {
        return Err(EvalError::Length(images.len(), probs.len()));
    }
    let (mut sp, mut np, mut sa, mut na) = (0.0, 0usize, 0.0, 0usize);
    for (img, &p) in images.iter().zip(probs) {
        if has(img, feature) {
            sp += p;
            np += 1;
        } else {
            sa += p;
            na += 1;
        }
    }
    if np == 0 || na == 0 {
        return Err(EvalError::EmptyCell(feature));
    }
    Ok(InterventionalEffect {
        feature,
        delta: sp / np as f64 - sa / na as f64,
        n_present: np,
        n_absent: na,
    })
}

pub fn interventional_effect(model: &ToyModel, test: &LabeledDataset, feature: Feature) -> Result<InterventionalEffect, EvalError> {
    let images = test.images();
    let probs: Vec<f64> = images.iter().map(|i| model.class_probability(i)).collect();
    effect_from_probabilities(&images, &probs, feature)
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Length(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewPoints(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlational score for one concept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub concept: String,
    pub r: f64,
    /// Set when the correlation was undefined and `r` was recorded as 0.
    pub flagged: bool,
}

/// Pearson correlation of each concept-label column with the model's test
/// probabilities. No model internals are used.
pub fn correlational_baseline(y: &ConceptLabelMatrix, p: &[f64]) -> Result<Vec<BaselineScore>, EvalError> {
    if y.values.nrows() != p.len() {
        return Err(EvalError::Length(y.values.nrows(), p.len()));
    }
    Ok(y
        .concept_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let (r, flagged) = match pearson(&y.column(k), p) {
                Ok(r) => (r, false),
                Err(_) => (0.0, true),
            };
            BaselineScore {
                concept: name.clone(),
                r,
                flagged,
            }
        })
        .collect())
}

/// Fraction of positions where the score's sign matches the effect's sign.
/// A zero score never matches.
pub fn sign_concordance(scores: &[f64], effects: &[f64]) -> Result<f64, EvalError> {
    if scores.len() != effects.len() {
        return Err(EvalError::Length(scores.len(), effects.len()));
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let hits = scores.iter().zip(effects).filter(|(s, e)| sign(**s) != 0 && sign(**s) == sign(**e)).count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Concordance computed separately for features designated reliable and
/// spurious.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignatedConcordance {
    pub reliable: f64,
    pub spurious: f64,
}

pub fn designated_concordance(scores: &[f64], effects: &[f64], reliable: &[bool]) -> Result<DesignatedConcordance, EvalError> {
    if reliable.len() != scores.len() {
        return Err(EvalError::Length(reliable.len(), scores.len()));
    }
    let pick = |want: bool| -> (Vec<f64>, Vec<f64>) {
        scores
            .iter()
            .zip(effects)
            .zip(reliable)
            .filter(|(_, &r)| r == want)
            .map(|((s, e), _)| (*s, *e))
            .unzip()
    };
    let (rs, re) = pick(true);
    let (ss, se) = pick(false);
    Ok(DesignatedConcordance {
        reliable: sign_concordance(&rs, &re)?,
        spurious: sign_concordance(&ss, &se)?,
    })
}

/// Fisher z-average of correlations, mapped back to r.
pub fn fisher_mean(rs: &[f64]) -> f64 {
    if rs.is_empty() {
        return 0.0;
    }
    let z: f64 = rs.iter().map(|r| r.clamp(-0.999_999, 0.999_999).atanh()).sum::<f64>() / rs.len() as f64;
    z.tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[1.0, 2.0, 4.0]).unwrap() - 0.981_980_506).abs() < 1e-6);
        assert!(matches!(pearson(&x, &[1.0; 3]), Err(EvalError::ZeroVariance)));
    }

    #[test]
    fn concordance_examples() {
        assert_eq!(sign_concordance(&[1.0, -1.0], &[0.3, -0.2]).unwrap(), 1.0);
        let d = designated_concordance(&[1.0, 1.0], &[0.3, -0.2], &[true, false]).unwrap();
        assert_eq!((d.reliable, d.spurious), (1.0, 0.0));
        assert_eq!(sign_concordance(&[0.0, 0.0], &[0.3, -0.2]).unwrap(), 0.0);
    }

    #[test]
    fn oracle_probabilities() {
        use crate::synthgen::{build_balanced_test_set, DatasetConfig, FeaturePair};
        let cfg = DatasetConfig::grid(FeaturePair::SquareCircle, 0.0, 5);
        let images = build_balanced_test_set(&cfg).unwrap().images();
        let probs: Vec<f64> = images.iter().map(|i| if i.has_a { 1.0 } else { 0.0 }).collect();
        let a = effect_from_probabilities(&images, &probs, Feature::A).unwrap();
        let b = effect_from_probabilities(&images, &probs, Feature::B).unwrap();
        assert_eq!((a.delta, a.n_present, a.n_absent), (1.0, 100, 100));
        assert_eq!(b.delta, 0.0);
        let flat = vec![0.5; images.len()];
        assert_eq!(effect_from_probabilities(&images, &flat, Feature::A).unwrap().delta, 0.0);
    }

    #[test]
    fn fisher_mean_of_equal_values() {
        assert!((fisher_mean(&[0.5, 0.5]) - 0.5).abs() < 1e-12);
    }
}
