//! Run configuration: one strict JSON document with a section per
//! subcommand. Section seeds are derived from the global seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vcr::evaluation::{AdversarialConfig, DotStudyConfig, GridConfig, NullConfig, ScalingConfig};
use vcr::ranking::VcrConfig;
use vcr::rng::derive_seed;
use vcr::synthgen::{DatasetConfig, DotIntervention, FeaturePair};
use vcr::toy_lmm::{ModelConfig, TrainConfig};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Training set at one correlation level plus the balanced test set.
    Grid,
    /// Shifted training and probe sets.
    Adversarial,
    /// Balanced test set and a dotted copy of it.
    Intervention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub kind: DatasetKind,
    pub pair: FeaturePair,
    pub rho_a: f64,
    /// Defaults to `-rho_a`.
    pub rho_b: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub dots: DotIntervention,
    pub base_seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        let d = DatasetConfig::default();
        Self {
            kind: DatasetKind::Grid,
            pair: d.pair,
            rho_a: d.rho_a,
            rho_b: None,
            n_train: d.n_train,
            n_test: d.n_test,
            dots: DotIntervention::default(),
            base_seed: d.base_seed,
        }
    }
}

impl GenerateConfig {
    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig {
            n_train: self.n_train,
            n_test: self.n_test,
            rho_b: self.rho_b.unwrap_or(-self.rho_a),
            ..DatasetConfig::grid(self.pair, self.rho_a, self.base_seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub model: ModelConfig,
    pub model_seed: u64,
    pub train: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            model_seed: 0,
            train: TrainConfig::benchmark(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub vcr: VcrConfig,
    /// Vocabulary size when no vocabulary file is given.
    pub k: usize,
    /// Plain-text vocabulary, one name per line.
    pub vocabulary: Option<PathBuf>,
    /// Concepts shown in the chart.
    pub top: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            vcr: VcrConfig::default(),
            k: vcr::concept_oracle::DEFAULT_VOCAB_SIZE,
            vocabulary: None,
            top: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Grid,
    Adversarial,
    Dots,
    Null,
    Scaling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub suites: Vec<Suite>,
    pub grid: GridConfig,
    pub adversarial: AdversarialConfig,
    pub dots: DotStudyConfig,
    pub null: NullConfig,
    pub scaling: ScalingConfig,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            suites: vec![Suite::Grid, Suite::Adversarial],
            grid: GridConfig::default(),
            adversarial: AdversarialConfig::default(),
            dots: DotStudyConfig::default(),
            null: NullConfig::default(),
            scaling: ScalingConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub generate: GenerateConfig,
    pub train: TrainSection,
    pub audit: AuditSection,
    pub benchmark: BenchmarkSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Overwrites every section seed with one derived from `seed`.
    pub fn derive_seeds(&mut self) {
        let s = self.seed;
        self.generate.base_seed = derive_seed(s, &[1]);
        self.train.model_seed = derive_seed(s, &[2]);
        self.train.train.seed = derive_seed(s, &[3]);
        self.audit.vcr.seed = derive_seed(s, &[4]);
        let b = &mut self.benchmark;
        b.grid.base_seed = derive_seed(s, &[5]);
        b.adversarial.base_seed = derive_seed(s, &[6]);
        b.dots.base_seed = derive_seed(s, &[7]);
        b.null.base_seed = derive_seed(s, &[8]);
        b.scaling.seed = derive_seed(s, &[9]);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: String| CliError::Config(e);
        self.generate.dataset().validate().map_err(|e| cfg(format!("generate: {e}")))?;
        self.train.model.validate().map_err(|e| cfg(format!("train.model: {e}")))?;
        if self.train.train.epochs == 0 || self.train.train.batch_size == 0 {
            return Err(cfg("train.train: epochs and batch_size must be positive".into()));
        }
        self.audit.vcr.validate().map_err(|e| cfg(format!("audit.vcr: {e}")))?;
        if self.audit.k == 0 {
            return Err(cfg("audit.k must be positive".into()));
        }
        let b = &self.benchmark;
        for (name, v) in [("grid", &b.grid.vcr), ("adversarial", &b.adversarial.vcr)] {
            v.validate().map_err(|e| cfg(format!("benchmark.{name}.vcr: {e}")))?;
        }
        if let Some(&r) = b.grid.rhos.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(cfg(format!("benchmark.grid.rhos: {r} is outside [-1, 1]")));
        }
        if let Some(p) = b.adversarial.pairs.iter().find(|p| p.is_positional()) {
            return Err(cfg(format!("benchmark.adversarial.pairs: {p} is positional")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_json(r#"{"generate": {"rho": 0.5}}"#).unwrap_err().to_string();
        assert!(e.contains("rho"), "{e}");
    }

    #[test]
    fn seeds_follow_the_global_seed() {
        let mut a = RunConfig { seed: 1, ..Default::default() };
        let mut b = RunConfig { seed: 2, ..Default::default() };
        a.derive_seeds();
        b.derive_seeds();
        assert_ne!(a.generate.base_seed, b.generate.base_seed);
        assert_ne!(a.benchmark.grid.base_seed, b.benchmark.grid.base_seed);
        let mut c = RunConfig { seed: 1, ..Default::default() };
        c.derive_seeds();
        assert_eq!(a, c);
    }

    #[test]
    fn out_of_range_rho_is_rejected() {
        let c = RunConfig::from_json(r#"{"generate": {"rho_a": 1.5}}"#).unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("rho_a"), "{e}");
    }
}
