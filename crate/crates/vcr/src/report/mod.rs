//! Result files. Every file carries the artifact name, version and the
//! resolved configuration that produced it: CSV as leading `#` lines, JSON
//! as top-level fields, SVG inside `<metadata>`.

pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::evaluation::{AdversarialRow, ExperimentRow};
use crate::ranking::{SensitivityRecord, VcrRun};
use crate::timing::TimingBreakdown;

pub const ARTIFACT: &str = "vcr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("I/O error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("config is not serializable: {0}")]
    Config(serde_json::Error),
}

/// Provenance attached to every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub artifact: String,
    pub version: String,
    pub config: serde_json::Value,
}

impl Header {
    pub fn new(config: &impl Serialize) -> Result<Self, ReportError> {
        Ok(Self {
            artifact: ARTIFACT.to_string(),
            version: VERSION.to_string(),
            config: serde_json::to_value(config).map_err(ReportError::Config)?,
        })
    }

    fn config_line(&self) -> String {
        serde_json::to_string(&self.config).expect("JSON values serialize")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

/// CSV body preceded by `# <artifact> <version>` and `# config: <json>`.
pub fn write_csv<T: Serialize>(rows: &[T], header: &Header, path: &Path) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut buf = format!("# {} {}\n# config: {}\n", header.artifact, header.version, header.config_line()).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(path))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

/// Reads a file written by [`write_csv`], skipping the comment header.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReportError> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err)
}

#[derive(Serialize)]
struct Document<'a, T> {
    #[serde(flatten)]
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object holding the header fields followed by `body`'s fields.
pub fn write_json<T: Serialize>(body: &T, header: &Header, path: &Path) -> Result<(), ReportError> {
    let mut s = serde_json::to_string_pretty(&Document { header, body }).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })?;
    s.push('\n');
    fs::write(path, s).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ReportError> {
    let s = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&s).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })
}

pub fn write_text(text: &str, path: &Path) -> Result<(), ReportError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// One line of the records CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub concept: String,
    pub psi_mean: f64,
    pub psi_std: f64,
    pub t: f64,
    pub p: f64,
    pub significant: bool,
    pub direction: i8,
}

impl From<&SensitivityRecord> for RecordRow {
    fn from(r: &SensitivityRecord) -> Self {
        Self {
            concept: r.concept.clone(),
            psi_mean: r.psi_mean,
            psi_std: r.psi_std,
            t: r.t_stat,
            p: r.p_value,
            significant: r.significant,
            direction: r.direction,
        }
    }
}

/// JSON body of an audit: the Bonferroni setup, all records with their
/// per-replicate samples, and optionally the timing breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub k: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub n_significant: usize,
    pub records: Vec<SensitivityRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<TimingBreakdown>,
}

impl AuditReport {
    pub fn new(run: &VcrRun, alpha: f64, with_timing: bool) -> Self {
        Self {
            k: run.k,
            alpha,
            threshold: run.threshold,
            n_significant: run.records.iter().filter(|r| r.significant).count(),
            records: run.records.clone(),
            timing: with_timing.then_some(run.timing),
        }
    }
}

/// Writes `records.csv`, `records.json` and `top_concepts.svg` into `dir`.
pub fn write_audit(run: &VcrRun, alpha: f64, with_timing: bool, top: usize, header: &Header, dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<RecordRow> = run.records.iter().map(RecordRow::from).collect();
    write_csv(&rows, header, &dir.join("records.csv"))?;
    write_json(&AuditReport::new(run, alpha, with_timing), header, &dir.join("records.json"))?;
    write_text(&svg::top_concepts(&run.records, top, header), &dir.join("top_concepts.svg"))
}

/// Writes the grid rows, summary and ψ-versus-delta scatter into `dir`.
pub fn write_grid(rows: &[ExperimentRow], header: &Header, dir: &Path) -> Result<crate::evaluation::GridSummary, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let summary = crate::evaluation::summarize_grid(rows);
    write_csv(rows, header, &dir.join("grid.csv"))?;
    write_json(&summary, header, &dir.join("grid_summary.json"))?;
    let points: Vec<svg::Point> = rows
        .iter()
        .map(|r| svg::Point {
            x: r.vcr_psi,
            y: r.interventional_delta,
            group: r.pair_id.id().to_string(),
        })
        .collect();
    write_text(&svg::scatter("VCR sensitivity vs interventional effect", "psi", "delta", &points, header), &dir.join("grid_scatter.svg"))?;
    Ok(summary)
}

/// Writes the adversarial rows, summary and concordance bar chart into `dir`.
pub fn write_adversarial(rows: &[AdversarialRow], header: &Header, dir: &Path) -> Result<crate::evaluation::AdversarialSummary, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let summary = crate::evaluation::summarize_adversarial(rows).expect("rows come in matched pairs");
    write_csv(rows, header, &dir.join("adversarial.csv"))?;
    write_json(&summary, header, &dir.join("adversarial_summary.json"))?;
    let bars = vec![
        svg::Bar::new("VCR reliable", summary.vcr.reliable),
        svg::Bar::new("VCR spurious", summary.vcr.spurious),
        svg::Bar::new("baseline reliable", summary.baseline.reliable),
        svg::Bar::new("baseline spurious", summary.baseline.spurious),
    ];
    write_text(&svg::bar_chart("Sign concordance", "fraction", &bars, header), &dir.join("adversarial_concordance.svg"))?;
    Ok(summary)
}
