//! Small differentiable multimodal classifier.
//!
//! ```text
//! image ─(14×14 block mean)→ x ∈ R^768 ─(frozen W0)→ e ∈ R^64
//!   h1 = tanh(W1 e + b1)      hook layer 1
//!   h2 = tanh(W2 h1 + b2)     hook layer 2
//!   z_p = H_p h2 + c_p        one 2-symbol head per target position p < L
//! ```
//!
//! A label maps to one symbol per position: positive reads `[0, 1]`,
//! negative reads `[1, 0]`, truncated to `L`.

pub mod checkpoint;
pub mod train;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use train::{fine_tune, fine_tune_logged, write_training_log, EpochLog, TrainConfig};

use crate::image::{Image, HEIGHT, WIDTH};
use crate::rng::Stream;
use crate::synthgen::Label;

pub const GRID: usize = 16;
pub const BLOCK: usize = WIDTH / GRID;
pub const INPUT_DIM: usize = GRID * GRID * 3;
pub const WIDTH_D: usize = 64;
pub const SYMBOLS: usize = 2;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("hook layer must be 1 or 2, got {0}")]
    HookLayer(usize),
    #[error("target length must be 1 or 2, got {0}")]
    SeqLen(usize),
    #[error("finite-difference step must be positive, got {0}")]
    Step(f64),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

/// Options for [`ToyModel::init_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hook_layer: usize,
    pub seq_len: usize,
    /// Half-width of the uniform head initialization; 0 gives a head that
    /// ignores its input until trained.
    pub head_init_scale: f64,
    /// Half-width of the uniform block-weight initialization.
    pub block_init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hook_layer: 2,
            seq_len: 1,
            head_init_scale: 0.0,
            block_init_scale: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(1..=2).contains(&self.hook_layer) {
            return Err(ModelError::HookLayer(self.hook_layer));
        }
        if !(1..=2).contains(&self.seq_len) {
            return Err(ModelError::SeqLen(self.seq_len));
        }
        Ok(())
    }
}

/// Trainable parameters. Kept separate from the frozen encoder so the
/// optimizer can mirror its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Trainable {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub head_w: Vec<Array2<f64>>,
    pub head_b: Vec<Array1<f64>>,
}

impl Trainable {
    pub fn zeros(seq_len: usize) -> Self {
        Self {
            w1: Array2::zeros((WIDTH_D, WIDTH_D)),
            b1: Array1::zeros(WIDTH_D),
            w2: Array2::zeros((WIDTH_D, WIDTH_D)),
            b2: Array1::zeros(WIDTH_D),
            head_w: vec![Array2::zeros((SYMBOLS, WIDTH_D)); seq_len],
            head_b: vec![Array1::zeros(SYMBOLS); seq_len],
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = vec![
            self.w1.as_slice().unwrap(),
            self.b1.as_slice().unwrap(),
            self.w2.as_slice().unwrap(),
            self.b2.as_slice().unwrap(),
        ];
        for (w, b) in self.head_w.iter().zip(&self.head_b) {
            v.push(w.as_slice().unwrap());
            v.push(b.as_slice().unwrap());
        }
        v
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = vec![
            self.w1.as_slice_mut().unwrap(),
            self.b1.as_slice_mut().unwrap(),
            self.w2.as_slice_mut().unwrap(),
            self.b2.as_slice_mut().unwrap(),
        ];
        for (w, b) in self.head_w.iter_mut().zip(self.head_b.iter_mut()) {
            v.push(w.as_slice_mut().unwrap());
            v.push(b.as_slice_mut().unwrap());
        }
        v
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyModel {
    /// Frozen projection, `64 × 768`.
    pub encoder: Array2<f64>,
    pub params: Trainable,
    pub hook_layer: usize,
    pub seq_len: usize,
}

/// Activations of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub input: Array1<f64>,
    pub embed: Array1<f64>,
    pub h1: Array1<f64>,
    pub h2: Array1<f64>,
    /// One logit pair per target position.
    pub logits: Vec<[f64; SYMBOLS]>,
}

impl Forward {
    pub fn hook(&self, layer: usize) -> &Array1<f64> {
        if layer == 1 {
            &self.h1
        } else {
            &self.h2
        }
    }
}

/// 14×14 block means of each channel, scaled to [0, 1], in
/// `(row * 16 + col) * 3 + channel` order.
pub fn downsample(img: &Image) -> Array1<f64> {
    let mut sums = vec![0u32; INPUT_DIM];
    let px = img.pixels();
    for y in 0..HEIGHT {
        let by = y / BLOCK;
        for x in 0..WIDTH {
            let o = (by * GRID + x / BLOCK) * 3;
            let i = (y * WIDTH + x) * 3;
            sums[o] += u32::from(px[i]);
            sums[o + 1] += u32::from(px[i + 1]);
            sums[o + 2] += u32::from(px[i + 2]);
        }
    }
    let scale = 1.0 / (255.0 * (BLOCK * BLOCK) as f64);
    sums.into_iter().map(|s| f64::from(s) * scale).collect()
}

/// Symbol expected at each position for a label.
pub fn target_symbols(label: Label, seq_len: usize) -> Vec<usize> {
    let seq: [usize; 2] = match label {
        Label::Positive => [0, 1],
        Label::Negative => [1, 0],
    };
    seq[..seq_len].to_vec()
}

fn log_softmax(z: &[f64; SYMBOLS]) -> [f64; SYMBOLS] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

fn softmax(z: &[f64; SYMBOLS]) -> [f64; SYMBOLS] {
    let l = log_softmax(z);
    [l[0].exp(), l[1].exp()]
}

fn uniform_matrix(rng: &mut Stream, rows: usize, cols: usize, s: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.uniform(-s, s))
}

impl ToyModel {
    pub fn init(seed: u64) -> Self {
        Self::init_with(seed, &ModelConfig::default()).expect("default config is valid")
    }

    /// Encoder entries are uniform in ±1/√768 and block weights uniform in
    /// ±1/√64; biases start at zero.
    pub fn init_with(seed: u64, cfg: &ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = Stream::keyed(seed, &[0x70F]);
        let encoder = uniform_matrix(&mut rng, WIDTH_D, INPUT_DIM, 1.0 / (INPUT_DIM as f64).sqrt());
        let s = cfg.block_init_scale;
        let mut params = Trainable::zeros(cfg.seq_len);
        params.w1 = uniform_matrix(&mut rng, WIDTH_D, WIDTH_D, s);
        params.w2 = uniform_matrix(&mut rng, WIDTH_D, WIDTH_D, s);
        if cfg.head_init_scale > 0.0 {
            for w in params.head_w.iter_mut() {
                *w = uniform_matrix(&mut rng, SYMBOLS, WIDTH_D, cfg.head_init_scale);
            }
        }
        Ok(Self {
            encoder,
            params,
            hook_layer: cfg.hook_layer,
            seq_len: cfg.seq_len,
        })
    }

    pub fn with_hook_layer(mut self, layer: usize) -> Result<Self, ModelError> {
        if !(1..=2).contains(&layer) {
            return Err(ModelError::HookLayer(layer));
        }
        self.hook_layer = layer;
        Ok(self)
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.len() + self.params.len()
    }

    /// Frozen encoder output for an image.
    pub fn embed(&self, img: &Image) -> Array1<f64> {
        self.encoder.dot(&downsample(img))
    }

    /// Forward pass from a precomputed encoder output.
    pub fn forward_embedded(&self, embed: Array1<f64>) -> Forward {
        let p = &self.params;
        let h1 = (p.w1.dot(&embed) + &p.b1).mapv(f64::tanh);
        let h2 = (p.w2.dot(&h1) + &p.b2).mapv(f64::tanh);
        let logits = self.head_logits(h2.view());
        Forward {
            input: Array1::zeros(0),
            embed,
            h1,
            h2,
            logits,
        }
    }

    pub fn forward(&self, img: &Image) -> Forward {
        let input = downsample(img);
        let mut f = self.forward_embedded(self.encoder.dot(&input));
        f.input = input;
        f
    }

    fn head_logits(&self, h2: ArrayView1<f64>) -> Vec<[f64; SYMBOLS]> {
        self.params
            .head_w
            .iter()
            .zip(&self.params.head_b)
            .map(|(w, b)| {
                let z = w.dot(&h2) + b;
                [z[0], z[1]]
            })
            .collect()
    }

    /// Logits from activations at `layer`, recomputing only what lies above.
    pub fn logits_from_hook(&self, layer: usize, a: ArrayView1<f64>) -> Vec<[f64; SYMBOLS]> {
        if layer == 1 {
            let h2 = (self.params.w2.dot(&a) + &self.params.b2).mapv(f64::tanh);
            self.head_logits(h2.view())
        } else {
            self.head_logits(a)
        }
    }

    /// Length-normalized log-probability of the label's target symbols.
    pub fn score_from_logits(&self, logits: &[[f64; SYMBOLS]], label: Label) -> f64 {
        let t = target_symbols(label, self.seq_len);
        logits.iter().zip(&t).map(|(z, &s)| log_softmax(z)[s]).sum::<f64>() / self.seq_len as f64
    }

    pub fn task_score(&self, img: &Image, label: Label) -> f64 {
        self.score_from_logits(&self.forward(img).logits, label)
    }

    /// Task score for a label given by name.
    pub fn task_score_named(&self, img: &Image, label: &str) -> Result<f64, ModelError> {
        let l: Label = label.parse().map_err(|_| ModelError::UnknownLabel(label.to_string()))?;
        Ok(self.task_score(img, l))
    }

    /// P(positive) from the first position's two logits.
    pub fn probability_from_logits(logits: &[[f64; SYMBOLS]]) -> f64 {
        let pos = target_symbols(Label::Positive, 1)[0];
        softmax(&logits[0])[pos]
    }

    pub fn class_probability(&self, img: &Image) -> f64 {
        Self::probability_from_logits(&self.forward(img).logits)
    }

    /// Hook-layer activations, one row per image in input order.
    pub fn hook_activations(&self, images: &[Image]) -> Result<Array2<f64>, ModelError> {
        if images.is_empty() {
            return Err(ModelError::Empty("image list"));
        }
        let mut a = Array2::zeros((images.len(), WIDTH_D));
        for (i, img) in images.iter().enumerate() {
            a.row_mut(i).assign(self.forward(img).hook(self.hook_layer));
        }
        Ok(a)
    }

    /// ∂S/∂(hook activations) for a completed forward pass.
    pub fn grad_from_forward(&self, f: &Forward, label: Label) -> Array1<f64> {
        let t = target_symbols(label, self.seq_len);
        let l = self.seq_len as f64;
        let mut g2 = Array1::zeros(WIDTH_D);
        for ((w, z), &s) in self.params.head_w.iter().zip(&f.logits).zip(&t) {
            let p = softmax(z);
            for (k, &pk) in p.iter().enumerate() {
                let coef = (if k == s { 1.0 } else { 0.0 } - pk) / l;
                g2.scaled_add(coef, &w.row(k));
            }
        }
        if self.hook_layer == 2 {
            return g2;
        }
        let da2 = &g2 * &f.h2.mapv(|h| 1.0 - h * h);
        self.params.w2.t().dot(&da2)
    }

    pub fn grad_task_score(&self, img: &Image, label: Label) -> Array1<f64> {
        self.grad_from_forward(&self.forward(img), label)
    }

    /// Central differences of S over hook activations with step `h`.
    pub fn finite_difference_gradient(&self, img: &Image, label: Label, h: f64) -> Result<Array1<f64>, ModelError> {
        if !(h > 0.0) {
            return Err(ModelError::Step(h));
        }
        let f = self.forward(img);
        let a = f.hook(self.hook_layer).clone();
        let mut g = Array1::zeros(WIDTH_D);
        let mut probe = a.clone();
        for j in 0..WIDTH_D {
            probe[j] = a[j] + h;
            let up = self.score_from_logits(&self.logits_from_hook(self.hook_layer, probe.view()), label);
            probe[j] = a[j] - h;
            let down = self.score_from_logits(&self.logits_from_hook(self.hook_layer, probe.view()), label);
            probe[j] = a[j];
            g[j] = (up - down) / (2.0 * h);
        }
        Ok(g)
    }

    /// SHA-256 of the encoder bytes, for the frozen-weights contract.
    pub fn encoder_checksum(&self) -> [u8; 32] {
        checkpoint::digest(self.encoder.as_slice().unwrap())
    }

    /// SHA-256 over every parameter.
    pub fn checksum(&self) -> [u8; 32] {
        let mut all: Vec<f64> = self.encoder.iter().copied().collect();
        for s in self.params.slices() {
            all.extend_from_slice(s);
        }
        checkpoint::digest(&all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{render_feature_image, FeaturePair};

    #[test]
    fn uniform_image_downsamples_to_constant() {
        let img = Image::filled([51, 51, 51], false, false, 0);
        assert!(downsample(&img).iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn equal_logits_give_log_half() {
        let m = ToyModel::init(3);
        let img = render_feature_image(FeaturePair::RedGreen, true, false, 1);
        assert!((m.task_score(&img, Label::Positive) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(m.class_probability(&img), 0.5);
        assert!(m.grad_task_score(&img, Label::Positive).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn probability_of_ln3_gap() {
        let p = ToyModel::probability_from_logits(&[[3f64.ln(), 0.0]]);
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn activations_bounded() {
        let m = ToyModel::init(1);
        let f = m.forward(&render_feature_image(FeaturePair::HorizVert, true, true, 2));
        assert!(f.h1.iter().chain(f.h2.iter()).all(|v| v.abs() < 1.0));
    }

    #[test]
    fn bad_configs_rejected() {
        let c = ModelConfig { hook_layer: 3, ..Default::default() };
        assert_eq!(ToyModel::init_with(0, &c).unwrap_err(), ModelError::HookLayer(3));
        let c = ModelConfig { seq_len: 0, ..Default::default() };
        assert_eq!(ToyModel::init_with(0, &c).unwrap_err(), ModelError::SeqLen(0));
        let m = ToyModel::init(0);
        let img = Image::filled([0, 0, 0], false, false, 0);
        assert_eq!(m.finite_difference_gradient(&img, Label::Positive, 0.0).unwrap_err(), ModelError::Step(0.0));
        assert!(m.task_score_named(&img, "maybe").is_err());
    }

    #[test]
    fn seeds_change_checksums() {
        assert_eq!(ToyModel::init(5).checksum(), ToyModel::init(5).checksum());
        assert_ne!(ToyModel::init(5).checksum(), ToyModel::init(6).checksum());
    }
}
