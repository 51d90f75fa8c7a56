//! Mini-batch fine-tuning with AdamW.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{target_symbols, Forward, ModelError, ToyModel, Trainable, SYMBOLS};
use crate::rng::Stream;
use crate::synthgen::{Label, LabeledDataset};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 8,
            epochs: 5,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Schedule used by the benchmarks: long enough for the harder shape
    /// pairs to be learned.
    pub fn benchmark() -> Self {
        Self {
            epochs: 150,
            ..Self::default()
        }
    }
}

/// Full-dataset loss and accuracy; epoch 0 is measured before any update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

struct AdamW {
    m: Trainable,
    v: Trainable,
    t: i32,
}

impl AdamW {
    fn new(like: &Trainable) -> Self {
        let z = Trainable::zeros(like.head_w.len());
        Self { m: z.clone(), v: z, t: 0 }
    }

    fn step(&mut self, params: &mut Trainable, grad: &Trainable, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let ps = params.slices_mut();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        let gs = grad.slices();
        for (((p, m), v), g) in ps.into_iter().zip(ms).zip(vs).zip(gs) {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let update = (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.eps);
                p[i] -= cfg.learning_rate * (update + cfg.weight_decay * p[i]);
            }
        }
    }
}

/// Cross-entropy of one example (= −S for its label).
fn loss_of(model: &ToyModel, f: &Forward, label: Label) -> f64 {
    -model.score_from_logits(&f.logits, label)
}

/// Mean-loss parameter gradient over a batch of encoder outputs (one row
/// per example), computed with matrix products.
fn batch_grad(model: &ToyModel, e: &Array2<f64>, labels: &[Label]) -> Trainable {
    let p = &model.params;
    let n = e.nrows() as f64;
    let l = model.seq_len as f64;
    let h1 = (e.dot(&p.w1.t()) + &p.b1).mapv(f64::tanh);
    let h2 = (h1.dot(&p.w2.t()) + &p.b2).mapv(f64::tanh);
    let mut g = Trainable::zeros(model.seq_len);
    let mut dh2 = Array2::<f64>::zeros(h2.raw_dim());
    let targets: Vec<Vec<usize>> = labels.iter().map(|&lab| target_symbols(lab, model.seq_len)).collect();
    for pos in 0..model.seq_len {
        let mut dz = h2.dot(&p.head_w[pos].t()) + &p.head_b[pos];
        for (mut row, t) in dz.axis_iter_mut(Axis(0)).zip(&targets) {
            let m = row[0].max(row[1]);
            let ex = [(row[0] - m).exp(), (row[1] - m).exp()];
            let sum = ex[0] + ex[1];
            for k in 0..SYMBOLS {
                row[k] = (ex[k] / sum - if k == t[pos] { 1.0 } else { 0.0 }) / (l * n);
            }
        }
        g.head_w[pos] = dz.t().dot(&h2);
        g.head_b[pos] = dz.sum_axis(Axis(0));
        dh2 += &dz.dot(&p.head_w[pos]);
    }
    let da2 = dh2 * &h2.mapv(|h| 1.0 - h * h);
    g.w2 = da2.t().dot(&h1);
    g.b2 = da2.sum_axis(Axis(0));
    let da1 = da2.dot(&p.w2) * &h1.mapv(|h| 1.0 - h * h);
    g.w1 = da1.t().dot(e);
    g.b1 = da1.sum_axis(Axis(0));
    g
}

fn evaluate(model: &ToyModel, embeds: &Array2<f64>, labels: &[Label], epoch: usize) -> EpochLog {
    let mut loss = 0.0;
    let mut correct = 0;
    for (e, &label) in embeds.outer_iter().zip(labels) {
        let f = model.forward_embedded(e.to_owned());
        loss += loss_of(model, &f, label);
        let p = ToyModel::probability_from_logits(&f.logits);
        if (p > 0.5) == label.is_positive() {
            correct += 1;
        }
    }
    let n = labels.len() as f64;
    EpochLog {
        epoch,
        mean_loss: loss / n,
        train_accuracy: correct as f64 / n,
    }
}

fn embed_all(model: &ToyModel, data: &LabeledDataset) -> Array2<f64> {
    let mut e = Array2::zeros((data.len(), super::WIDTH_D));
    for (mut row, it) in e.outer_iter_mut().zip(&data.items) {
        row.assign(&model.embed(&it.image));
    }
    e
}

/// Shared loop; with `log_every_epoch` false only epochs 0 and last are
/// evaluated.
fn train(model: &ToyModel, data: &LabeledDataset, cfg: &TrainConfig, log_every_epoch: bool) -> Result<(ToyModel, Vec<EpochLog>), ModelError> {
    if data.is_empty() {
        return Err(ModelError::Empty("training set"));
    }
    let mut model = model.clone();
    let embeds = embed_all(&model, data);
    let labels = data.labels();
    let mut log = vec![evaluate(&model, &embeds, &labels, 0)];
    let mut opt = AdamW::new(&model.params);
    let mut rng = Stream::keyed(cfg.seed, &[0x7A1]);
    let bs = cfg.batch_size.max(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(bs) {
            let e = embeds.select(Axis(0), batch);
            let l: Vec<Label> = batch.iter().map(|&i| labels[i]).collect();
            let grad = batch_grad(&model, &e, &l);
            opt.step(&mut model.params, &grad, cfg);
        }
        if log_every_epoch || epoch == cfg.epochs {
            log.push(evaluate(&model, &embeds, &labels, epoch));
        }
    }
    Ok((model, log))
}

/// Trains blocks and heads; the encoder is never touched. Batch order is a
/// seeded shuffle per epoch. The log has one row per epoch plus epoch 0.
pub fn fine_tune_logged(model: &ToyModel, data: &LabeledDataset, cfg: &TrainConfig) -> Result<(ToyModel, Vec<EpochLog>), ModelError> {
    train(model, data, cfg, true)
}

pub fn fine_tune(model: &ToyModel, data: &LabeledDataset, cfg: &TrainConfig) -> Result<ToyModel, ModelError> {
    train(model, data, cfg, false).map(|(m, _)| m)
}

/// CSV with columns `epoch,mean_loss,train_accuracy`.
pub fn write_training_log(log: &[EpochLog], path: impl AsRef<Path>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for row in log {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parameter gradient of the mean loss, exposed for gradient checks.
pub fn loss_gradient(model: &ToyModel, data: &LabeledDataset) -> Trainable {
    batch_grad(model, &embed_all(model, data), &data.labels())
}

pub fn mean_loss(model: &ToyModel, data: &LabeledDataset) -> f64 {
    data.items.iter().map(|it| loss_of(model, &model.forward(&it.image), it.label)).sum::<f64>() / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{build_balanced_test_set, DatasetConfig, FeaturePair};
    use crate::toy_lmm::ModelConfig;

    fn small_set() -> LabeledDataset {
        let cfg = DatasetConfig {
            n_test: 8,
            ..DatasetConfig::grid(FeaturePair::RedGreen, 0.0, 1)
        };
        build_balanced_test_set(&cfg).unwrap()
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let cfg = ModelConfig {
            seq_len: 2,
            head_init_scale: 0.3,
            ..Default::default()
        };
        let model = ToyModel::init_with(4, &cfg).unwrap();
        let data = small_set();
        let g = loss_gradient(&model, &data);
        let h = 1e-6;
        for (slot, idx) in [(0usize, 5usize), (1, 3), (2, 100), (3, 7), (4, 70), (5, 1), (6, 9), (7, 0)] {
            let mut up = model.clone();
            up.params.slices_mut()[slot][idx] += h;
            let mut down = model.clone();
            down.params.slices_mut()[slot][idx] -= h;
            let fd = (mean_loss(&up, &data) - mean_loss(&down, &data)) / (2.0 * h);
            let an = g.slices()[slot][idx];
            assert!((fd - an).abs() < 1e-7 * (1.0 + an.abs()), "slot {slot}: {fd} vs {an}");
        }
    }

    #[test]
    fn zero_epochs_leave_parameters_unchanged() {
        let m = ToyModel::init(2);
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        let (t, log) = fine_tune_logged(&m, &small_set(), &cfg).unwrap();
        assert_eq!(t, m);
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let mut d = small_set();
        d.items.clear();
        assert_eq!(fine_tune(&ToyModel::init(0), &d, &TrainConfig::default()).unwrap_err(), ModelError::Empty("training set"));
    }
}
