//! Subcommand bodies. Artifacts live under fixed subdirectories of the
//! output directory: `data/`, `model/`, `audit/`, `benchmark/`, `report/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vcr::concept_oracle::ConceptVocabulary;
use vcr::evaluation::{
    grid::{run_grid_conditions, sort_rows},
    run_adversarial_benchmark, run_dot_study, run_null_calibration, run_scaling_study, AdversarialRow, ExperimentRow,
};
use vcr::report::{self, Header};
use vcr::synthgen::{
    build_adversarial_sets_sized, build_balanced_test_set, build_training_set, manifest, FeaturePair, LabeledDataset,
    Provenance,
};
use vcr::toy_lmm::{fine_tune_logged, load_checkpoint, save_checkpoint, write_training_log, ToyModel};

use crate::config::{DatasetKind, RunConfig, Suite};
use crate::CliError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io(path))
}

/// `data/dataset.json`: what `generate` wrote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub kind: DatasetKind,
    pub pair: FeaturePair,
    pub sets: Vec<SetEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetEntry {
    pub name: String,
    pub manifest: String,
    pub provenance: Provenance,
    pub n: usize,
}

impl DatasetIndex {
    fn load(out: &Path) -> Result<Self, CliError> {
        let path = out.join("data").join("dataset.json");
        if !path.exists() {
            return Err(CliError::Missing(format!("{} (run `generate` first)", path.display())));
        }
        report::read_json(&path).map_err(|e| CliError::Io(e.to_string()))
    }

    fn read_set(&self, out: &Path, name: &str) -> Result<LabeledDataset, CliError> {
        let e = self
            .sets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Missing(format!("dataset has no {name:?} set")))?;
        let path = out.join("data").join(&e.manifest);
        if !path.exists() {
            return Err(CliError::Missing(path.display().to_string()));
        }
        manifest::read_dataset(&path, self.pair, e.provenance).map_err(|e| CliError::Io(e.to_string()))
    }
}

fn header(cfg: &RunConfig) -> Result<Header, CliError> {
    Header::new(cfg).map_err(|e| CliError::Config(e.to_string()))
}

fn rep(e: report::ReportError) -> CliError {
    CliError::Io(e.to_string())
}

pub fn generate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let g = &cfg.generate;
    let d = g.dataset();
    let sets: Vec<(&str, LabeledDataset)> = match g.kind {
        DatasetKind::Grid => vec![("train", build_training_set(&d)?), ("test", build_balanced_test_set(&d)?)],
        DatasetKind::Adversarial => {
            let (train, test) = build_adversarial_sets_sized(g.pair, g.base_seed, g.n_train, g.n_test)?;
            vec![("train", train), ("test", test)]
        }
        DatasetKind::Intervention => {
            let test = build_balanced_test_set(&d)?;
            let mut dotted = test.clone();
            dotted.provenance = Provenance::Intervention;
            for (i, it) in dotted.items.iter_mut().enumerate() {
                it.image = g.dots.apply(&it.image, vcr::rng::derive_seed(g.base_seed, &[0xD2, i as u64]))?;
            }
            vec![("test", test), ("dotted", dotted)]
        }
    };
    let dir = out.join("data");
    create_dir(&dir)?;
    let mut index = DatasetIndex { kind: g.kind, pair: g.pair, sets: Vec::new() };
    for (name, set) in &sets {
        let m = manifest::write_dataset(set, &dir, name).map_err(|e| CliError::Io(e.to_string()))?;
        index.sets.push(SetEntry {
            name: name.to_string(),
            manifest: m.file_name().unwrap().to_string_lossy().into_owned(),
            provenance: set.provenance,
            n: set.len(),
        });
        println!("wrote {} images to {}", set.len(), m.display());
    }
    report::write_json(&index, &header(cfg)?, &dir.join("dataset.json")).map_err(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrainSummary {
    initial_loss: f64,
    final_loss: f64,
    final_accuracy: f64,
    parameter_count: usize,
    checkpoint: String,
}

pub fn train(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let index = DatasetIndex::load(out)?;
    let data = index.read_set(out, "train")?;
    let init = ToyModel::init_with(cfg.train.model_seed, &cfg.train.model)?;
    let (model, log) = fine_tune_logged(&init, &data, &cfg.train.train)?;
    let dir = out.join("model");
    create_dir(&dir)?;
    let ckpt = dir.join("checkpoint.bin");
    save_checkpoint(&model, &ckpt).map_err(|e| CliError::Io(e.to_string()))?;
    write_training_log(&log, dir.join("train_log.csv")).map_err(|e| CliError::Io(e.to_string()))?;
    let (first, last) = (log.first().expect("epoch 0 is logged"), log.last().expect("nonempty log"));
    let summary = TrainSummary {
        initial_loss: first.mean_loss,
        final_loss: last.mean_loss,
        final_accuracy: last.train_accuracy,
        parameter_count: model.parameter_count(),
        checkpoint: "checkpoint.bin".into(),
    };
    report::write_json(&summary, &header(cfg)?, &dir.join("train.json")).map_err(rep)?;
    println!("trained {} epochs: loss {:.4} -> {:.4}, accuracy {:.3}", cfg.train.train.epochs, summary.initial_loss, summary.final_loss, summary.final_accuracy);
    Ok(())
}

pub fn audit(cfg: &RunConfig, out: &Path, timing: bool) -> Result<(), CliError> {
    let ckpt = out.join("model").join("checkpoint.bin");
    if !ckpt.exists() {
        return Err(CliError::Missing(format!("{} (run `train` first)", ckpt.display())));
    }
    let model = load_checkpoint(&ckpt).map_err(|e| CliError::Io(e.to_string()))?;
    let probe = DatasetIndex::load(out)?.read_set(out, "test")?.images();
    let a = &cfg.audit;
    let vocab = match &a.vocabulary {
        Some(p) => ConceptVocabulary::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => ConceptVocabulary::with_size(a.k),
    };
    let run = vcr::ranking::run_vcr(&model, &probe, &vocab, &a.vcr)?;
    let dir = out.join("audit");
    report::write_audit(&run, a.vcr.alpha, timing, a.top, &header(cfg)?, &dir).map_err(rep)?;
    let n_sig = run.records.iter().filter(|r| r.significant).count();
    println!("K = {}, threshold {:.3e}, {} significant", run.k, run.threshold, n_sig);
    for r in run.records.iter().take(10) {
        println!("  {:<16} psi {:+.4e}  p {:.2e}{}", r.concept, r.psi_mean, r.p_value, if r.significant { "  *" } else { "" });
    }
    if timing {
        let t = &run.timing;
        println!(
            "timing (s): model setup {:.3}, concept embedding {:.3}, concept training {:.3}, directional derivatives {:.3}, other {:.3}, total {:.3}",
            t.model_setup,
            t.concept_embedding,
            t.concept_training,
            t.directional_derivatives,
            t.other,
            t.total()
        );
    }
    Ok(())
}

/// Written when a benchmark condition fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Progress {
    completed: Vec<String>,
    failed: BTreeMap<String, String>,
}

pub fn benchmark(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let dir = out.join("benchmark");
    create_dir(&dir)?;
    let h = header(cfg)?;
    let b = &cfg.benchmark;
    let mut suites = b.suites.clone();
    suites.sort();
    suites.dedup();
    for suite in suites {
        let t0 = std::time::Instant::now();
        match suite {
            Suite::Grid => {
                let results = run_grid_conditions(&b.grid)?;
                let mut rows = Vec::new();
                let mut progress = Progress { completed: Vec::new(), failed: BTreeMap::new() };
                for (c, r) in results {
                    match r {
                        Ok(rs) => {
                            progress.completed.push(c.label());
                            rows.extend(rs);
                        }
                        Err(e) => {
                            progress.failed.insert(c.label(), e.to_string());
                        }
                    }
                }
                if !progress.failed.is_empty() {
                    report::write_json(&progress, &h, &dir.join("grid_progress.json")).map_err(rep)?;
                    return Err(CliError::Failed(format!("{} grid conditions failed; see grid_progress.json", progress.failed.len())));
                }
                sort_rows(&mut rows);
                let s = report::write_grid(&rows, &h, &dir).map_err(rep)?;
                println!("grid: {} rows, pooled r {:.3}, baseline pooled r {:.3}", s.n_rows, s.pooled_r, s.baseline_pooled_r);
                for (pair, r) in &s.per_pair_r {
                    println!("  {pair:<14} r {r:+.3}");
                }
            }
            Suite::Adversarial => {
                let rows = run_adversarial_benchmark(&b.adversarial)?;
                let s = report::write_adversarial(&rows, &h, &dir).map_err(rep)?;
                println!(
                    "adversarial: VCR reliable {:.3} spurious {:.3}; baseline reliable {:.3} spurious {:.3}",
                    s.vcr.reliable, s.vcr.spurious, s.baseline.reliable, s.baseline.spurious
                );
                println!(
                    "  against designed signs: VCR reliable {:.3} spurious {:.3}; baseline reliable {:.3} spurious {:.3}",
                    s.vcr_designed.reliable, s.vcr_designed.spurious, s.baseline_designed.reliable, s.baseline_designed.spurious
                );
            }
            Suite::Dots => {
                let correlated = run_dot_study(&b.dots)?;
                let uncorrelated = run_dot_study(&b.dots.uncorrelated())?;
                let body = serde_json::json!({ "correlated": correlated, "uncorrelated": uncorrelated });
                report::write_json(&body, &h, &dir.join("dots.json")).map_err(rep)?;
                println!(
                    "dots: correlated mean delta {:+.3}; uncorrelated {:+.3} (clean spread {:.3})",
                    correlated.mean_delta, uncorrelated.mean_delta, uncorrelated.clean_spread
                );
            }
            Suite::Null => {
                let r = run_null_calibration(&b.null)?;
                report::write_json(&r, &h, &dir.join("null.json")).map_err(rep)?;
                println!("null: family-wise rate {:.3} over {} seeds", r.family_wise_rate, r.significant.len());
            }
            Suite::Scaling => {
                let r = run_scaling_study(&b.scaling)?;
                let body = serde_json::json!({ "result": r, "vocab_growth": r.vocab_growth(), "probe_ratio": r.probe_ratio() });
                report::write_json(&body, &h, &dir.join("scaling.json")).map_err(rep)?;
                println!("scaling: total growth {:+.1}% for K x{}, per-image work x{:.2} for 2x probe", 100.0 * r.vocab_growth(), b.scaling.k_large / b.scaling.k_small.max(1), r.probe_ratio());
            }
        }
        eprintln!("{suite:?} finished in {:.1?}", t0.elapsed());
    }
    Ok(())
}

/// Rebuilds summaries and charts from the CSV and JSON results on disk.
pub fn report_cmd(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let bench = out.join("benchmark");
    let dir = out.join("report");
    let h = header(cfg)?;
    let mut found = false;
    let mut lines = vec!["# Results".to_string(), String::new()];
    let grid_csv = bench.join("grid.csv");
    if grid_csv.exists() {
        found = true;
        create_dir(&dir)?;
        let rows: Vec<ExperimentRow> = report::read_csv(&grid_csv).map_err(rep)?;
        let s = report::write_grid(&rows, &h, &dir).map_err(rep)?;
        lines.push(format!("Correlation grid: {} rows, pooled r = {:.3}, baseline pooled r = {:.3}.", s.n_rows, s.pooled_r, s.baseline_pooled_r));
        lines.push(String::new());
        lines.push("| pair | r |".into());
        lines.push("|---|---|".into());
        for (p, r) in &s.per_pair_r {
            lines.push(format!("| {p} | {r:.3} |"));
        }
        lines.push(String::new());
    }
    let adv_csv = bench.join("adversarial.csv");
    if adv_csv.exists() {
        found = true;
        create_dir(&dir)?;
        let rows: Vec<AdversarialRow> = report::read_csv(&adv_csv).map_err(rep)?;
        let s = report::write_adversarial(&rows, &h, &dir).map_err(rep)?;
        lines.push(format!("Adversarial benchmark, {} conditions:", s.n_conditions));
        lines.push(String::new());
        lines.push("| method | reliable | spurious | reliable (designed) | spurious (designed) |".into());
        lines.push("|---|---|---|---|---|".into());
        for (name, m, d) in [("VCR", &s.vcr, &s.vcr_designed), ("baseline", &s.baseline, &s.baseline_designed)] {
            lines.push(format!("| {name} | {:.3} | {:.3} | {:.3} | {:.3} |", m.reliable, m.spurious, d.reliable, d.spurious));
        }
        lines.push(String::new());
    }
    let records = out.join("audit").join("records.json");
    if records.exists() {
        found = true;
        create_dir(&dir)?;
        let a: report::AuditReport = read_body(&records)?;
        let run = vcr::ranking::VcrRun {
            k: a.k,
            threshold: a.threshold,
            timing: a.timing.unwrap_or_default(),
            records: a.records,
        };
        report::write_audit(&run, a.alpha, a.timing.is_some(), cfg.audit.top, &h, &dir.join("audit")).map_err(rep)?;
        lines.push(format!("Audit: K = {}, {} significant at p < {:.3e}.", run.k, a.n_significant, run.threshold));
        lines.push(String::new());
    }
    if !found {
        return Err(CliError::Missing(format!("no results under {} (run `benchmark` or `audit` first)", out.display())));
    }
    report::write_text(&lines.join("\n"), &dir.join("summary.md")).map_err(rep)?;
    println!("{}", lines.join("\n"));
    Ok(())
}

/// Reads a JSON result, ignoring the header fields.
fn read_body<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let mut v: serde_json::Value = report::read_json(path).map_err(rep)?;
    if let Some(m) = v.as_object_mut() {
        for k in ["artifact", "version", "config"] {
            m.remove(k);
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
