//! Concept ranking: ridge concept directions, directional-derivative
//! sensitivities, bootstrap t-tests and Bonferroni gating.

pub mod ridge;
pub mod stats;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

pub use ridge::{cho_solve, cholesky, fit_cav, fit_cav_named, sensitivity, ConceptVector, RidgeError, RidgeSolver};
pub use stats::{bonferroni_rank, mean_std, sign, student_t_sf, t_test_one_sample, SensitivityRecord, StatsError};

use crate::concept_oracle::{image_descriptor, normalized_descriptors, ConceptVocabulary, Descriptor};
use crate::image::Image;
use crate::rng::Stream;
use crate::synthgen::Label;
use crate::timing::{timing_breakdown, Component, ComponentTimer, TimingBreakdown};
use crate::toy_lmm::{ToyModel, WIDTH_D};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VcrError {
    #[error("bootstrap_b must be at least 2, got {0}")]
    TooFewReplicates(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Ridge(#[from] RidgeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VcrConfig {
    pub lambda: f64,
    pub bootstrap_b: usize,
    pub alpha: f64,
    pub center_features: bool,
    pub seed: u64,
    /// Refit concept directions on every bootstrap replicate; when false
    /// they are fit once on the full probe.
    pub refit_per_replicate: bool,
    /// Scale each ψ by the variance of its concept-label column.
    pub variance_weighting: bool,
    /// Class whose task score is differentiated.
    pub target: Label,
}

impl Default for VcrConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            bootstrap_b: 30,
            alpha: 0.05,
            center_features: true,
            seed: 0,
            refit_per_replicate: true,
            variance_weighting: false,
            target: Label::Positive,
        }
    }
}

impl VcrConfig {
    pub fn validate(&self) -> Result<(), VcrError> {
        if self.bootstrap_b < 2 {
            return Err(VcrError::TooFewReplicates(self.bootstrap_b));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(VcrError::Alpha(self.alpha));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(RidgeError::Penalty(self.lambda).into());
        }
        Ok(())
    }
}

/// Concept labels of one probe sample. Oracle labels are kept factored as
/// `Y = U Eᵀ` (normalized descriptors times concept embeddings), so work
/// that is linear in the vocabulary size stays small.
enum Labels<'e> {
    Dense(Array2<f64>),
    Factored { u: Array2<f64>, e: &'e Array2<f64> },
}

impl Labels<'_> {
    /// Unnormalized ridge solutions, `D × K`.
    fn ridge(&self, solver: &RidgeSolver) -> Array2<f64> {
        match self {
            Labels::Dense(y) => solver.solve_many(y.view()),
            // Centering commutes with the right factor: Y_c = U_c Eᵀ.
            Labels::Factored { u, e } => solver.solve_many(u.view()).dot(&e.t()),
        }
    }

    fn column_variances(&self) -> Array1<f64> {
        match self {
            Labels::Dense(y) => y.var_axis(Axis(0), 0.0),
            Labels::Factored { u, e } => {
                let uc = &u.view() - &u.mean_axis(Axis(0)).expect("nonempty probe");
                let cov = uc.t().dot(&uc) / u.nrows() as f64;
                (e.dot(&cov) * *e).sum_axis(Axis(1))
            }
        }
    }
}

/// Concept directions for every vocabulary entry, stored as unit columns
/// (`D × K`); all-zero columns mark concepts with no fitted direction.
fn concept_directions(a: &Array2<f64>, y: &Labels, cfg: &VcrConfig) -> Result<Array2<f64>, VcrError> {
    let solver = RidgeSolver::new(a.view(), cfg.lambda, cfg.center_features)?;
    let mut w = y.ridge(&solver);
    for mut col in w.axis_iter_mut(Axis(1)) {
        let n = col.dot(&col).sqrt();
        if n > 0.0 {
            col /= n;
        }
    }
    Ok(w)
}

/// Everything one probe sample yields: concept labels, activations and
/// the mean task-score gradient.
struct ProbeState<'e> {
    y: Labels<'e>,
    a: Array2<f64>,
    mean_grad: Array1<f64>,
}

fn probe_state<'e>(model: &ToyModel, images: &[&Image], e: &'e Array2<f64>, target: Label, timer: &mut ComponentTimer) -> ProbeState<'e> {
    let y = timer.time(Component::ConceptEmbedding, || {
        let d: Vec<Descriptor> = images.iter().map(|i| image_descriptor(i)).collect();
        Labels::Factored { u: normalized_descriptors(&d).0, e }
    });
    let forwards: Vec<_> = timer.time(Component::Activations, || images.iter().map(|i| model.forward(i)).collect());
    let mut a = Array2::zeros((images.len(), WIDTH_D));
    for (i, f) in forwards.iter().enumerate() {
        a.row_mut(i).assign(f.hook(model.hook_layer));
    }
    let mean_grad = timer.time(Component::DirectionalDerivatives, || {
        let mut g = Array1::zeros(WIDTH_D);
        for f in &forwards {
            g += &model.grad_from_forward(f, target);
        }
        g / images.len() as f64
    });
    ProbeState { y, a, mean_grad }
}

/// ψ for every concept on one probe sample. Since ψ_k = ⟨mean gradient, v_k⟩,
/// the gradient is averaged once and projected onto all directions.
fn psi_from_state(s: &ProbeState, directions: &Array2<f64>, cfg: &VcrConfig, timer: &mut ComponentTimer) -> Vec<f64> {
    timer.time(Component::DirectionalDerivatives, || {
        let mut psi = directions.t().dot(&s.mean_grad);
        if cfg.variance_weighting {
            psi *= &s.y.column_variances();
        }
        psi.to_vec()
    })
}

/// Point estimate of ψ for every vocabulary concept on the full probe.
pub fn point_sensitivities(model: &ToyModel, probe: &[Image], vocab: &ConceptVocabulary, cfg: &VcrConfig) -> Result<Vec<f64>, VcrError> {
    if probe.is_empty() {
        return Err(VcrError::Empty("probe"));
    }
    let mut timer = ComponentTimer::default();
    let refs: Vec<&Image> = probe.iter().collect();
    let e = vocab.embedding_matrix();
    let s = probe_state(model, &refs, &e, cfg.target, &mut timer);
    let dirs = concept_directions(&s.a, &s.y, cfg)?;
    Ok(psi_from_state(&s, &dirs, cfg, &mut timer))
}

/// As [`point_sensitivities`], with the probe's concept labels (`N × K`)
/// supplied by the caller.
pub fn point_sensitivities_with_labels(model: &ToyModel, probe: &[Image], y: &Array2<f64>, cfg: &VcrConfig) -> Result<Vec<f64>, VcrError> {
    if probe.is_empty() {
        return Err(VcrError::Empty("probe"));
    }
    if y.nrows() != probe.len() {
        return Err(RidgeError::Shape { a: probe.len(), y: y.nrows() }.into());
    }
    let forwards: Vec<_> = probe.iter().map(|i| model.forward(i)).collect();
    let mut a = Array2::zeros((probe.len(), WIDTH_D));
    let mut mean_grad = Array1::zeros(WIDTH_D);
    for (i, f) in forwards.iter().enumerate() {
        a.row_mut(i).assign(f.hook(model.hook_layer));
        mean_grad += &model.grad_from_forward(f, cfg.target);
    }
    let s = ProbeState {
        y: Labels::Dense(y.clone()),
        a,
        mean_grad: mean_grad / probe.len() as f64,
    };
    let dirs = concept_directions(&s.a, &s.y, cfg)?;
    Ok(psi_from_state(&s, &dirs, cfg, &mut ComponentTimer::default()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VcrRun {
    pub records: Vec<SensitivityRecord>,
    pub k: usize,
    /// Bonferroni threshold alpha / K.
    pub threshold: f64,
    pub timing: TimingBreakdown,
}

/// Full audit: `B` bootstrap replicates of the probe, each recomputing
/// concept labels, activations, directions, gradients and ψ, followed by a
/// per-concept one-sample t-test and Bonferroni gating. Replicate `b` draws
/// from a stream keyed by `(seed, b)`.
pub fn run_vcr(model: &ToyModel, probe: &[Image], vocab: &ConceptVocabulary, cfg: &VcrConfig) -> Result<VcrRun, VcrError> {
    cfg.validate()?;
    if probe.is_empty() {
        return Err(VcrError::Empty("probe"));
    }
    if vocab.is_empty() {
        return Err(VcrError::Empty("vocabulary"));
    }
    let k = vocab.len();
    let (result, timing) = timing_breakdown(|timer| -> Result<Vec<SensitivityRecord>, VcrError> {
        let e = timer.time(Component::ConceptEmbedding, || vocab.embedding_matrix());
        let fixed = if cfg.refit_per_replicate {
            None
        } else {
            let refs: Vec<&Image> = probe.iter().collect();
            let s = probe_state(model, &refs, &e, cfg.target, timer);
            Some(timer.time(Component::ConceptTraining, || concept_directions(&s.a, &s.y, cfg))?)
        };
        let mut samples = vec![Vec::with_capacity(cfg.bootstrap_b); k];
        for b in 0..cfg.bootstrap_b {
            let mut rng = Stream::keyed(cfg.seed, &[0xB007, b as u64]);
            let images: Vec<&Image> = rng.resample(probe.len(), probe.len()).into_iter().map(|i| &probe[i]).collect();
            let s = probe_state(model, &images, &e, cfg.target, timer);
            let psi = match &fixed {
                Some(d) => psi_from_state(&s, d, cfg, timer),
                None => {
                    let d = timer.time(Component::ConceptTraining, || concept_directions(&s.a, &s.y, cfg))?;
                    psi_from_state(&s, &d, cfg, timer)
                }
            };
            for (col, v) in samples.iter_mut().zip(psi) {
                col.push(v);
            }
        }
        let records = vocab
            .concepts()
            .iter()
            .zip(samples)
            .map(|(c, s)| SensitivityRecord::from_samples(&c.name, s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(bonferroni_rank(records, cfg.alpha, k)?)
    });
    Ok(VcrRun {
        records: result?,
        k,
        threshold: cfg.alpha / k as f64,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{render_feature_image, FeaturePair};

    fn probe(n: usize) -> Vec<Image> {
        (0..n as u64).map(|s| render_feature_image(FeaturePair::RedGreen, s % 2 == 0, s % 3 == 0, s)).collect()
    }

    #[test]
    fn config_validation() {
        let m = ToyModel::init(0);
        let v = ConceptVocabulary::with_size(20);
        let cfg = VcrConfig { bootstrap_b: 1, ..Default::default() };
        assert_eq!(run_vcr(&m, &probe(4), &v, &cfg).unwrap_err(), VcrError::TooFewReplicates(1));
        assert_eq!(run_vcr(&m, &[], &v, &VcrConfig::default()).unwrap_err(), VcrError::Empty("probe"));
    }

    #[test]
    fn zero_head_gives_null_records() {
        let m = ToyModel::init(0);
        let v = ConceptVocabulary::with_size(20);
        let cfg = VcrConfig { bootstrap_b: 3, ..Default::default() };
        let run = run_vcr(&m, &probe(10), &v, &cfg).unwrap();
        assert_eq!(run.records.len(), 20);
        assert!(run.records.iter().all(|r| r.psi_mean == 0.0 && !r.significant && r.p_value == 1.0));
        assert!((run.threshold - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn factored_labels_match_dense() {
        let m = ToyModel::init_with(3, &crate::toy_lmm::ModelConfig { head_init_scale: 0.1, ..Default::default() }).unwrap();
        let v = ConceptVocabulary::with_size(40);
        let images = probe(24);
        let y = crate::concept_oracle::concept_label_matrix(&images, &v).unwrap();
        for variance_weighting in [false, true] {
            let cfg = VcrConfig { variance_weighting, ..Default::default() };
            let f = point_sensitivities(&m, &images, &v, &cfg).unwrap();
            let d = point_sensitivities_with_labels(&m, &images, &y.values, &cfg).unwrap();
            for (a, b) in f.iter().zip(&d) {
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }
}
