//! On-disk dataset layout: one PPM per item plus a CSV manifest with columns
//! `index,path,label,has_a,has_b,seed`. Paths are relative to the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FeaturePair, Label, LabeledDataset, LabeledItem, Provenance};
use crate::image::{read_ppm, write_ppm, PpmError};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("I/O error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("image {path}: {source}")]
    Image { path: PathBuf, source: PpmError },
    #[error("manifest row {index}: flags disagree with the image header")]
    FlagMismatch { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub index: usize,
    pub path: String,
    pub label: Label,
    pub has_a: u8,
    pub has_b: u8,
    pub seed: u64,
}

/// Writes `<dir>/<name>/NNNNN.ppm` and `<dir>/<name>.csv`; returns the
/// manifest path.
pub fn write_dataset(data: &LabeledDataset, dir: &Path, name: &str) -> Result<PathBuf, ManifestError> {
    let img_dir = dir.join(name);
    fs::create_dir_all(&img_dir).map_err(|source| ManifestError::Io { path: img_dir.clone(), source })?;
    let manifest = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&manifest).map_err(|source| ManifestError::Csv { path: manifest.clone(), source })?;
    for (index, it) in data.items.iter().enumerate() {
        let rel = format!("{name}/{index:05}.ppm");
        let path = dir.join(&rel);
        write_ppm(&it.image, &path).map_err(|source| ManifestError::Image { path: path.clone(), source })?;
        w.serialize(ManifestRow {
            index,
            path: rel,
            label: it.label,
            has_a: it.image.has_a as u8,
            has_b: it.image.has_b as u8,
            seed: it.image.seed,
        })
        .map_err(|source| ManifestError::Csv { path: manifest.clone(), source })?;
    }
    w.flush().map_err(|source| ManifestError::Io { path: manifest.clone(), source })?;
    Ok(manifest)
}

/// Loads a dataset written by [`write_dataset`]. Pair and provenance are not
/// recorded in the manifest and must be supplied.
pub fn read_dataset(manifest: &Path, pair: FeaturePair, provenance: Provenance) -> Result<LabeledDataset, ManifestError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut r = csv::Reader::from_path(manifest).map_err(|source| ManifestError::Csv { path: manifest.to_path_buf(), source })?;
    let mut items = Vec::new();
    for row in r.deserialize::<ManifestRow>() {
        let row = row.map_err(|source| ManifestError::Csv { path: manifest.to_path_buf(), source })?;
        let path = base.join(&row.path);
        let image = read_ppm(&path).map_err(|source| ManifestError::Image { path, source })?;
        if image.has_a != (row.has_a == 1) || image.has_b != (row.has_b == 1) || image.seed != row.seed {
            return Err(ManifestError::FlagMismatch { index: row.index });
        }
        items.push(LabeledItem { image, label: row.label });
    }
    Ok(LabeledDataset { items, pair, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{build_balanced_test_set, DatasetConfig};

    #[test]
    fn roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig {
            n_test: 8,
            ..DatasetConfig::grid(FeaturePair::OneMany, 0.5, 3)
        };
        let data = build_balanced_test_set(&cfg).unwrap();
        let m = write_dataset(&data, dir.path(), "test").unwrap();
        let text = fs::read_to_string(&m).unwrap();
        assert!(text.starts_with("index,path,label,has_a,has_b,seed\n"));
        let back = read_dataset(&m, FeaturePair::OneMany, Provenance::GridTest).unwrap();
        assert_eq!(back.items, data.items);
    }
}
